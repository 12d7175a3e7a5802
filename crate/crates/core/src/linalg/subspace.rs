use nalgebra::linalg::{SymmetricEigen, SVD};

use super::{matrix_from_columns, spectral_norm, Matrix, Operator, Vector, DEFAULT_TOL};
use crate::error::{input, Error, Result};

/// A subspace of `C^ambient_dim` held as an orthonormal basis.
///
/// The zero subspace (`dim() == 0`) is legal everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
    tol: f64,
}

/// Orthonormal basis for the span of `vectors` inside `C^ambient_dim`.
///
/// Pivoted modified Gram-Schmidt with a second orthogonalization pass on
/// every accepted vector. A vector is discarded once its residual after
/// projection falls to `tol * max(1, ‖input‖)`.
pub fn orthonormalize(vectors: &[Vector], ambient_dim: usize, tol: f64) -> Result<Subspace> {
    if let Some(v) = vectors.iter().find(|v| v.len() != ambient_dim) {
        return input(format!("vector of length {} in ambient dimension {}", v.len(), ambient_dim));
    }
    Ok(orthonormalize_columns(&matrix_from_columns(ambient_dim, vectors), tol))
}

pub fn orthonormalize_columns(m: &Matrix, tol: f64) -> Subspace {
    let mut q = Vec::new();
    extend_orthonormal(&mut q, (0..m.ncols()).map(|j| m.column(j).into_owned()).collect(), m.nrows(), tol);
    Subspace { basis: matrix_from_columns(m.nrows(), &q), tol }
}

/// Extends the orthonormal list `q` by the part of `candidates` it does not
/// already span and returns how many vectors were appended.
///
/// Candidates are first orthogonalized against `q` (two passes), then
/// accepted in pivoted order; the drop threshold is `tol * max(1, ‖c‖)`
/// measured on the original candidate.
pub(crate) fn extend_orthonormal(q: &mut Vec<Vector>, candidates: Vec<Vector>, ambient: usize, tol: f64) -> usize {
    let one = nalgebra::Complex::new(1.0, 0.0);
    let thresholds: Vec<f64> = candidates.iter().map(|c| tol * c.norm().max(1.0)).collect();
    let mut work = candidates;
    for w in work.iter_mut() {
        for _ in 0..2 {
            for qi in q.iter() {
                let coef = qi.dotc(w);
                w.axpy(-coef, qi, one);
            }
        }
    }
    let start = q.len();
    let mut remaining: Vec<usize> = (0..work.len()).collect();
    while q.len() < ambient && !remaining.is_empty() {
        remaining.retain(|&j| work[j].norm() > thresholds[j]);
        let mut best: Option<(usize, f64)> = None;
        for (pos, &j) in remaining.iter().enumerate() {
            let r = work[j].norm();
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((pos, r));
            }
        }
        let Some((pos, _)) = best else { break };
        let j = remaining.swap_remove(pos);
        let mut v = work[j].clone();
        // second pass against the vectors accepted in this call
        for qi in &q[start..] {
            let coef = qi.dotc(&v);
            v.axpy(-coef, qi, one);
        }
        let norm = v.norm();
        if norm <= thresholds[j] {
            continue;
        }
        v /= nalgebra::Complex::new(norm, 0.0);
        for &r in &remaining {
            let coef = v.dotc(&work[r]);
            work[r].axpy(-coef, &v, one);
        }
        q.push(v);
    }
    q.len() - start
}

impl Subspace {
    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Subspace { basis: Matrix::zeros(ambient_dim, 0), tol }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Subspace { basis: Matrix::identity(ambient_dim, ambient_dim), tol }
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(ambient_dim: usize, indices: &[usize], tol: f64) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= ambient_dim) {
            return input(format!("coordinate index {i} out of range for dimension {ambient_dim}"));
        }
        let vs: Vec<Vector> = indices.iter().map(|&i| super::unit(ambient_dim, i)).collect();
        orthonormalize(&vs, ambient_dim, tol)
    }

    /// Wraps a basis that is already orthonormal (checked within `10 * tol`).
    pub fn from_orthonormal(basis: Matrix, tol: f64) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis;
        let dev = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| {
                let target = if i == j { 1.0 } else { 0.0 };
                (gram[(i, j)] - nalgebra::Complex::new(target, 0.0)).norm()
            })
            .fold(0.0, f64::max);
        if dev > 10.0 * tol {
            return input(format!("basis is not orthonormal (deviation {dev:e})"));
        }
        Ok(Subspace { basis, tol })
    }

    /// Range of an orthogonal projection, via its Hermitian eigendecomposition.
    pub fn range_of_projection(p: &Operator, tol: f64) -> Self {
        let n = p.dim();
        if n == 0 {
            return Subspace::zero(0, tol);
        }
        let m = p.matrix();
        let herm = (m + m.adjoint()) * nalgebra::Complex::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let mut idx: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let cols: Vec<Vector> = idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        Subspace { basis: matrix_from_columns(n, &cols), tol }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn basis_vectors(&self) -> Vec<Vector> {
        super::columns_of(&self.basis)
    }

    fn check_ambient(&self, n: usize) -> Result<()> {
        if n != self.ambient_dim() {
            return input(format!("dimension mismatch: {} vs ambient {}", n, self.ambient_dim()));
        }
        Ok(())
    }

    /// `basis · (basisᴴ · v)`.
    pub fn project(&self, v: &Vector) -> Result<Vector> {
        self.check_ambient(v.len())?;
        Ok(&self.basis * (self.basis.adjoint() * v))
    }

    pub fn projector(&self) -> Operator {
        Operator::projector(self)
    }

    /// Coordinates of `v` in this basis (`basisᴴ v`).
    pub fn coords(&self, v: &Vector) -> Result<Vector> {
        self.check_ambient(v.len())?;
        Ok(self.basis.adjoint() * v)
    }

    /// Ambient vector with the given coordinates.
    pub fn lift(&self, coords: &Vector) -> Vector {
        &self.basis * coords
    }

    /// Lifts a subspace of `C^dim()` expressed in this basis.
    pub fn lift_subspace(&self, inner: &Subspace) -> Subspace {
        Subspace { basis: &self.basis * &inner.basis, tol: self.tol }
    }

    /// Sine of the largest principal angle from `self` into `sup`:
    /// `‖(I - P_sup) basis‖₂`. Zero iff `self ⊆ sup`.
    pub fn containment_residual(&self, sup: &Subspace) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let r = &self.basis - &sup.basis * (sup.basis.adjoint() * &self.basis);
        spectral_norm(&r)
    }

    /// Largest principal angle in radians; `π/2` when dimensions differ.
    pub fn max_principal_angle(&self, other: &Subspace) -> f64 {
        if self.ambient_dim() != other.ambient_dim() || self.dim() != other.dim() {
            return std::f64::consts::FRAC_PI_2;
        }
        let s = self.containment_residual(other).max(other.containment_residual(self));
        s.min(1.0).asin()
    }

    /// `‖(I - P) T P‖₂`, zero iff the subspace is `T`-invariant.
    pub fn invariance_residual(&self, t: &Operator) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let tb = t.matrix() * &self.basis;
        spectral_norm(&(&tb - &self.basis * (self.basis.adjoint() * &tb)))
    }

    /// `self ⊖ sub`.
    pub fn complement_within(&self, sub: &Subspace) -> Result<Subspace> {
        self.check_ambient(sub.ambient_dim())?;
        let max_residual = sub.max_column_residual(self);
        if max_residual > self.tol {
            return Err(Error::Containment { max_residual });
        }
        let target = self.dim().saturating_sub(sub.dim());
        if target == 0 {
            return Ok(Subspace::zero(self.ambient_dim(), self.tol));
        }
        if sub.dim() == 0 {
            return Ok(self.clone());
        }
        // right singular vectors of (I - P_sub) U for the leading singular values
        let r = &self.basis - &sub.basis * (sub.basis.adjoint() * &self.basis);
        let svd = SVD::new(r, false, true);
        let v_t = svd.v_t.expect("requested v_t");
        let w = v_t.rows(0, target).adjoint();
        let basis = &self.basis * w;
        Ok(Subspace { basis, tol: self.tol })
    }

    /// `C^n ⊖ self`.
    pub fn complement(&self) -> Subspace {
        Subspace::full(self.ambient_dim(), self.tol)
            .complement_within(self)
            .expect("every subspace lies in its ambient space")
    }

    fn max_column_residual(&self, sup: &Subspace) -> f64 {
        let r = &self.basis - &sup.basis * (sup.basis.adjoint() * &self.basis);
        (0..r.ncols()).map(|j| r.column(j).norm()).fold(0.0, f64::max)
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other.ambient_dim())?;
        let mut cols = self.basis_vectors();
        cols.extend(other.basis_vectors());
        orthonormalize(&cols, self.ambient_dim(), self.tol)
    }

    /// `orthonormalize(T · basis)`.
    pub fn image(&self, t: &Operator) -> Result<Subspace> {
        self.check_ambient(t.dim())?;
        Ok(orthonormalize_columns(&(t.matrix() * &self.basis), self.tol))
    }

    /// `basisᴴ · T · basis`, the matrix of `P T|_self` in this basis.
    pub fn compress(&self, t: &Operator) -> Result<Operator> {
        self.check_ambient(t.dim())?;
        Ok(Operator::from_matrix_unchecked(self.basis.adjoint() * t.matrix() * &self.basis))
    }

    /// `self ∩ other`, computed as `self ⊖ closure(P_self · other^⊥)`.
    pub fn intersection(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other.ambient_dim())?;
        let perp = other.complement();
        let img = orthonormalize_columns(&(&self.basis * (self.basis.adjoint() * perp.basis())), self.tol);
        self.complement_within(&img)
    }

    /// `self ⊗ other` in big-endian Kronecker order.
    pub fn kron(&self, other: &Subspace) -> Subspace {
        Subspace { basis: self.basis.kronecker(&other.basis), tol: self.tol }
    }
}

impl Default for Subspace {
    fn default() -> Self {
        Subspace::zero(0, DEFAULT_TOL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real, unit, vector_from_reals};

    const TOL: f64 = 1e-10;

    fn jordan(n: usize) -> Operator {
        Operator::from_fn(n, |i, j| if i == j + 1 { real(1.0) } else { real(0.0) }).unwrap()
    }

    fn close(a: &Vector, b: &Vector) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn collinear_vectors_collapse() {
        let s = orthonormalize(&[vector_from_reals(&[1.0, 0.0]), vector_from_reals(&[2.0, 0.0])], 2, TOL).unwrap();
        assert_eq!(s.dim(), 1);
        assert!((s.basis()[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_input_is_zero_subspace() {
        let s = orthonormalize(&[], 3, TOL).unwrap();
        assert_eq!(s.dim(), 0);
        assert_eq!(s.ambient_dim(), 3);
    }

    #[test]
    fn near_parallel_pair_is_rank_one() {
        // σ₂ of [(1,0) (1,1e-14)] is about 7e-15, far below tol
        let m = Matrix::from_row_slice(2, 2, &[real(1.0), real(1.0), real(0.0), real(1e-14)]);
        let sv = SVD::new(m, false, false).singular_values;
        assert!(sv.min() < 1e-14);
        let s = orthonormalize(&[vector_from_reals(&[1.0, 0.0]), vector_from_reals(&[1.0, 1e-14])], 2, TOL).unwrap();
        assert_eq!(s.dim(), 1);
    }

    #[test]
    fn mismatched_vectors_error() {
        let r = orthonormalize(&[vector_from_reals(&[1.0]), vector_from_reals(&[1.0, 0.0])], 2, TOL);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn projections() {
        let e0 = Subspace::coordinate(2, &[0], TOL).unwrap();
        assert!(close(&e0.project(&vector_from_reals(&[3.0, 4.0])).unwrap(), &vector_from_reals(&[3.0, 0.0])));
        let z = Subspace::zero(2, TOL);
        assert!(close(&z.project(&vector_from_reals(&[3.0, 4.0])).unwrap(), &Vector::zeros(2)));
        let diag = orthonormalize(&[vector_from_reals(&[1.0, 1.0])], 2, TOL).unwrap();
        assert!(close(&diag.project(&vector_from_reals(&[1.0, 0.0])).unwrap(), &vector_from_reals(&[0.5, 0.5])));
        assert!(e0.project(&Vector::zeros(3)).is_err());
    }

    #[test]
    fn complements() {
        let full = Subspace::full(3, TOL);
        let e0 = Subspace::coordinate(3, &[0], TOL).unwrap();
        let c = full.complement_within(&e0).unwrap();
        assert_eq!(c.dim(), 2);
        assert!(c.max_principal_angle(&Subspace::coordinate(3, &[1, 2], TOL).unwrap()) < 1e-12);
        assert_eq!(full.complement_within(&full).unwrap().dim(), 0);

        let plane = Subspace::coordinate(3, &[0, 1], TOL).unwrap();
        let diag = orthonormalize(&[vector_from_reals(&[1.0, 1.0, 0.0])], 3, TOL).unwrap();
        let anti = orthonormalize(&[vector_from_reals(&[1.0, -1.0, 0.0])], 3, TOL).unwrap();
        assert!(plane.complement_within(&diag).unwrap().max_principal_angle(&anti) < 1e-12);
    }

    #[test]
    fn complement_requires_containment() {
        let e0 = Subspace::coordinate(3, &[0], TOL).unwrap();
        let e1 = Subspace::coordinate(3, &[1], TOL).unwrap();
        match e0.complement_within(&e1) {
            Err(Error::Containment { max_residual }) => assert!((max_residual - 1.0).abs() < 1e-12),
            other => panic!("expected containment error, got {other:?}"),
        }
    }

    #[test]
    fn sum_image_compress() {
        let a = Subspace::coordinate(2, &[0], TOL).unwrap();
        let b = Subspace::coordinate(2, &[1], TOL).unwrap();
        assert_eq!(a.sum(&b).unwrap().dim(), 2);

        let j4 = jordan(4);
        let top = Subspace::coordinate(4, &[3], TOL).unwrap();
        assert_eq!(top.image(&j4).unwrap().dim(), 0);

        let tail = Subspace::coordinate(4, &[2, 3], TOL).unwrap();
        let c = tail.compress(&j4).unwrap();
        assert_eq!(c.dim(), 2);
        assert!((c.matrix() - jordan(2).matrix()).norm() < 1e-15);
    }

    #[test]
    fn range_of_projection_counts_rank() {
        let s = orthonormalize(&[vector_from_reals(&[1.0, 1.0, 0.0]), unit(3, 2)], 3, TOL).unwrap();
        let r = Subspace::range_of_projection(&s.projector(), TOL);
        assert_eq!(r.dim(), 2);
        assert!(r.max_principal_angle(&s) < 1e-12);
    }

    #[test]
    fn intersection_of_planes() {
        let a = Subspace::coordinate(3, &[0, 1], TOL).unwrap();
        let b = Subspace::coordinate(3, &[1, 2], TOL).unwrap();
        let i = a.intersection(&b).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.max_principal_angle(&Subspace::coordinate(3, &[1], TOL).unwrap()) < 1e-12);
    }
}
