//! Dense complex linear algebra with a single threaded-through tolerance.
//!
//! All rank decisions in the crate are made by [`orthonormalize`] (pivoted
//! Gram-Schmidt with a second orthogonalization pass) or by the Hermitian
//! eigendecomposition used for ranges of projections. Residuals are
//! reported as spectral norms unless a function says otherwise.

mod operator;
mod spectral;
mod subspace;

pub use operator::{kron_all, Operator};
pub use spectral::{cluster_eigenvalues, cluster_spectrum, eigenvalues, null_vector, rank, spectral_norm, NullVector};
pub use subspace::{orthonormalize, orthonormalize_columns, Subspace};
pub(crate) use subspace::extend_orthonormal;

pub type Scalar = nalgebra::Complex<f64>;
pub type Matrix = nalgebra::DMatrix<Scalar>;
pub type Vector = nalgebra::DVector<Scalar>;

pub const DEFAULT_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Scalar {
    Scalar::new(re, im)
}

pub fn real(re: f64) -> Scalar {
    Scalar::new(re, 0.0)
}

/// Standard basis vector `e_index` of `C^dim`.
pub fn unit(dim: usize, index: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[index] = real(1.0);
    v
}

pub fn vector_from_reals(xs: &[f64]) -> Vector {
    Vector::from_iterator(xs.len(), xs.iter().map(|&x| real(x)))
}

pub fn is_finite(z: Scalar) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub fn columns_of(m: &Matrix) -> Vec<Vector> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

pub fn matrix_from_columns(rows: usize, cols: &[Vector]) -> Matrix {
    let mut m = Matrix::zeros(rows, cols.len());
    for (j, v) in cols.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}
