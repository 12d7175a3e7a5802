use nalgebra::linalg::{Schur, SVD};

use super::{Matrix, Scalar, Vector};

pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

/// Numerical rank: singular values above `tol * max(1, σ_max)`.
pub fn rank(m: &Matrix, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let cut = tol * sv.max().max(1.0);
    sv.iter().filter(|&&s| s > cut).count()
}

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 2000;
const SCHUR_ATTEMPTS: u32 = 4;

/// A fixed unitary depending only on `(n, attempt)`: the `Q` factor of a
/// deterministic pseudo-random matrix.
fn scrambler(n: usize, attempt: u32) -> Matrix {
    let a = Matrix::from_fn(n, n, |i, j| {
        let x = (i * n + j) as f64 + 0.5 + 97.0 * attempt as f64;
        Scalar::new((1.3 * x).sin() + 0.1, (0.7 * x + 0.2).cos())
    });
    a.qr().q()
}

/// Eigenvalues of a square matrix from the diagonal of its complex Schur form.
///
/// The QR iteration stalls on exactly nilpotent Hessenberg matrices such as
/// Jordan blocks, so the matrix is first conjugated by a fixed unitary; the
/// iteration count is capped and a different unitary is tried on failure.
pub fn eigenvalues(m: &Matrix) -> Vec<Scalar> {
    let n = m.nrows();
    match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        _ => {
            for attempt in 0..SCHUR_ATTEMPTS {
                let u = scrambler(n, attempt);
                let conj = u.adjoint() * m * &u;
                if let Some(s) = Schur::try_new(conj, SCHUR_EPS, SCHUR_MAX_ITER) {
                    let (_, t) = s.unpack();
                    return (0..n).map(|i| t[(i, i)]).collect();
                }
            }
            panic!("complex Schur iteration failed to converge on a {n}x{n} matrix");
        }
    }
}

/// Jordan blocks up to this size are recognized by [`cluster_spectrum`].
pub const MAX_CLUSTER_BLOCK: usize = 6;

/// Groups eigenvalues closer than `radius` (single linkage, in input order)
/// and returns the mean of each group.
///
/// Defective eigenvalues scatter by roughly `eps^(1/k)` for a Jordan block of
/// size `k`; the cluster mean recovers them to near machine precision.
pub fn cluster_eigenvalues(vals: &[Scalar], radius: f64) -> Vec<Scalar> {
    let mut groups: Vec<Vec<Scalar>> = Vec::new();
    for &v in vals {
        let hit = groups
            .iter_mut()
            .find(|g| g.iter().any(|&w| (w - v).norm() < radius));
        match hit {
            Some(g) => g.push(v),
            None => groups.push(vec![v]),
        }
    }
    // merge groups that became linked after growth
    let mut merged = true;
    while merged {
        merged = false;
        'outer: for a in 0..groups.len() {
            for b in (a + 1)..groups.len() {
                let linked = groups[a]
                    .iter()
                    .any(|&x| groups[b].iter().any(|&y| (x - y).norm() < radius));
                if linked {
                    let g = groups.remove(b);
                    groups[a].extend(g);
                    merged = true;
                    break 'outer;
                }
            }
        }
    }
    groups
        .iter()
        .map(|g| {
            let n = g.len() as f64;
            let s: Scalar = g.iter().sum();
            let mut mean = s / n;
            // snap signed zeros and round-off so that exact points stay exact
            if mean.re.abs() < 1e-14 {
                mean.re = 0.0;
            }
            if mean.im.abs() < 1e-14 {
                mean.im = 0.0;
            }
            mean
        })
        .collect()
}

/// Distinct eigenvalues of `m`: [`eigenvalues`] clustered at the scatter
/// radius `2 (eps ‖m‖)^(1/k)` of a Jordan block of size
/// `k = min(dim, MAX_CLUSTER_BLOCK)`, and never below `1e-4`. Distinct
/// eigenvalues closer than that radius are merged.
pub fn cluster_spectrum(m: &Matrix) -> Vec<Scalar> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let k = n.min(MAX_CLUSTER_BLOCK) as f64;
    let scale = spectral_norm(m).max(1.0);
    let radius = (2.0 * (f64::EPSILON * scale).powf(1.0 / k) * scale).max(1e-4);
    cluster_eigenvalues(&eigenvalues(m), radius)
}

#[derive(Debug, Clone)]
pub struct NullVector {
    /// Unit vector minimizing `‖(m - λ I) v‖`.
    pub vector: Vector,
    /// Smallest singular value of `m - λ I`.
    pub residual: f64,
    /// Second-smallest minus smallest singular value; large means the null
    /// direction is well separated.
    pub gap: f64,
}

pub fn null_vector(m: &Matrix, lambda: Scalar) -> NullVector {
    let n = m.nrows();
    assert!(n > 0, "null_vector of an empty matrix");
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let svd = SVD::new(shifted, false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let sv = &svd.singular_values;
    let last = n - 1;
    let vector = v_t.row(last).adjoint().into_owned();
    let residual = sv[last];
    let gap = if n >= 2 { sv[last - 1] - sv[last] } else { f64::INFINITY };
    NullVector { vector, residual, gap }
}
