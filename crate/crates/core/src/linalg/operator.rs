use std::fmt;
use std::ops::{Add, Mul, Sub};

use super::{is_finite, real, spectral_norm, Matrix, Scalar, Subspace, Vector};
use crate::error::{input, Result};

/// A bounded operator on `C^dim`, stored as a dense square matrix.
///
/// A `0×0` operator only arises from compressing onto the zero subspace.
#[derive(Clone, PartialEq)]
pub struct Operator {
    m: Matrix,
}

impl Operator {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return input(format!("operator must be square, got {}x{}", m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return input("operator dimension must be positive");
        }
        if !m.iter().all(|&z| is_finite(z)) {
            return input("operator entries must be finite");
        }
        Ok(Operator { m })
    }

    /// Wraps a matrix produced by internal arithmetic on finite operators.
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Operator { m }
    }

    pub fn identity(dim: usize) -> Self {
        Operator { m: Matrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator { m: Matrix::zeros(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Scalar) -> Result<Self> {
        Operator::new(Matrix::from_fn(dim, dim, f))
    }

    /// Orthogonal projection onto `s`.
    pub fn projector(s: &Subspace) -> Self {
        let b = s.basis();
        Operator { m: b * b.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Scalar {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Operator { m: self.m.adjoint() }
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        if v.len() != self.dim() {
            return input(format!("vector length {} does not match operator dim {}", v.len(), self.dim()));
        }
        Ok(&self.m * v)
    }

    pub fn scale(&self, s: Scalar) -> Self {
        Operator { m: &self.m * s }
    }

    /// `self - lambda * I`.
    pub fn shifted(&self, lambda: Scalar) -> Self {
        let mut m = self.m.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= lambda;
        }
        Operator { m }
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = Operator::identity(self.dim());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Kronecker product `self ⊗ other`; the left factor indexes the slowest.
    pub fn kron(&self, other: &Operator) -> Self {
        Operator { m: self.m.kronecker(&other.m) }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Spectral (operator 2-) norm.
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.m)
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        &(self * other) - &(other * self)
    }

    /// Strict lower-triangularity with nonzero entries only on the subdiagonal.
    pub fn is_weighted_lower_shift(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j + 1 || self.m[(i, j)] == real(0.0)))
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator({}x{}){}", self.dim(), self.dim(), self.m)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m * &rhs.m }
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m - &rhs.m }
    }
}

/// `ops[0] ⊗ ops[1] ⊗ … ⊗ ops[n-1]` (big-endian: slot 0 varies slowest).
pub fn kron_all(ops: &[Operator]) -> Operator {
    let mut it = ops.iter();
    let first = it.next().expect("kron_all needs at least one operator").clone();
    it.fold(first, |acc, op| acc.kron(op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn jordan(n: usize) -> Operator {
        Operator::from_fn(n, |i, j| if i == j + 1 { real(1.0) } else { real(0.0) }).unwrap()
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(Operator::new(Matrix::zeros(2, 3)).is_err());
        let mut m = Matrix::zeros(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(Operator::new(m).is_err());
        assert!(Operator::new(Matrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn kronecker_slots_commute() {
        let j = jordan(3);
        let i3 = Operator::identity(3);
        let a = j.kron(&i3);
        let b = i3.kron(&j);
        assert_eq!(a.commutator(&b).frobenius_norm(), 0.0);
        // big-endian: (J ⊗ I) e_0⊗e_0 = e_1⊗e_0 = e_3
        let e0 = crate::linalg::unit(9, 0);
        let out = a.apply(&e0).unwrap();
        assert_eq!(out[3], real(1.0));
    }

    #[test]
    fn jordan_is_nilpotent() {
        let j = jordan(4);
        assert_eq!(j.pow(4).frobenius_norm(), 0.0);
        assert!(j.pow(3).frobenius_norm() > 0.0);
        assert!(j.is_weighted_lower_shift());
    }

    #[test]
    fn spectral_norm_of_shift_is_one() {
        assert!((jordan(5).norm() - 1.0).abs() < 1e-14);
        assert!((jordan(5).shifted(real(2.0)).adjoint().dim() == 5));
    }
}
