//! Finite models of shift operators on spaces of analytic functions.
//!
//! A [`ShiftModel`] is the `m×m` truncation of multiplication by `z` in the
//! orthonormal monomial basis of a reproducing kernel space. The top weight
//! is dropped, so the matrix is nilpotent and every suffix
//! `span{e_k, …, e_{m-1}}` is exactly invariant, like `z^k H` upstairs.
//!
//! Vanishing at a point `λ ≠ 0` is not preserved by truncation, so zeros off
//! the origin are modelled by a [`QuotientModel`]: multiplication by `z` on
//! `C[z]/(p)` with the monomial (Hardy-like) inner product, where ideals
//! `(q)` with `q | p` are exactly the zero-based invariant subspaces.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::linalg::{orthonormalize, real, Operator, Scalar, Subspace, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Hardy,
    Bergman,
    Dirichlet,
    /// Kernel `(1 - z w̄)^(-α)`; `α = 1` is Hardy, `α = 2` is Bergman.
    WeightedBergman(u32),
    Custom(Vec<f64>),
}

impl SpaceKind {
    /// Subdiagonal weights `w_0, …, w_{m-2}` of the truncated shift.
    ///
    /// `w_k = ‖z^{k+1}‖ / ‖z^k‖`, so that `z · (z^k/‖z^k‖) = w_k · z^{k+1}/‖z^{k+1}‖`.
    pub fn weights(&self, m: usize) -> Result<Vec<f64>> {
        let n = m.saturating_sub(1);
        let w: Vec<f64> = match self {
            SpaceKind::Hardy => vec![1.0; n],
            SpaceKind::Bergman => (0..n).map(|k| ((k + 1) as f64 / (k + 2) as f64).sqrt()).collect(),
            SpaceKind::Dirichlet => (0..n).map(|k| ((k + 2) as f64 / (k + 1) as f64).sqrt()).collect(),
            SpaceKind::WeightedBergman(alpha) => {
                if *alpha < 1 {
                    return input("weighted Bergman parameter must be at least 1");
                }
                // ‖z^k‖² = 1 / binom(k + α - 1, k), so the ratio is (k+1)/(k+α)
                let a = *alpha as f64;
                (0..n).map(|k| ((k + 1) as f64 / (k as f64 + a)).sqrt()).collect()
            }
            SpaceKind::Custom(ws) => {
                if ws.len() < n {
                    return input(format!("custom model needs {} weights, got {}", n, ws.len()));
                }
                if ws.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return input("custom weights must be finite and positive");
                }
                ws[..n].to_vec()
            }
        };
        Ok(w)
    }

    pub fn label(&self) -> String {
        match self {
            SpaceKind::Hardy => "hardy".into(),
            SpaceKind::Bergman => "bergman".into(),
            SpaceKind::Dirichlet => "dirichlet".into(),
            SpaceKind::WeightedBergman(a) => format!("weighted_bergman({a})"),
            SpaceKind::Custom(w) => format!("custom({} weights)", w.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftModel {
    pub kind: SpaceKind,
    pub m: usize,
    pub operator: Operator,
    pub weights: Vec<f64>,
}

pub fn make_shift(kind: SpaceKind, m: usize) -> Result<ShiftModel> {
    if m < 2 {
        return input(format!("truncation dimension must be at least 2, got {m}"));
    }
    let weights = kind.weights(m)?;
    let operator = Operator::from_fn(m, |i, j| if i == j + 1 { real(weights[j]) } else { real(0.0) })?;
    Ok(ShiftModel { kind, m, operator, weights })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelVector {
    pub vector: Vector,
    /// `‖(Tᴴ - λ̄ I) v‖`, nonzero only because of truncation.
    pub defect: f64,
}

/// Truncated normalized kernel function at `λ`: `v_0 = 1`,
/// `v_{k+1} = λ̄ v_k / w_k`, then scaled to unit norm.
pub fn kernel_vector(model: &ShiftModel, lambda: Scalar) -> Result<KernelVector> {
    if lambda.norm() >= 1.0 {
        return input(format!("kernel point must lie in the open disc, |λ| = {}", lambda.norm()));
    }
    let lc = lambda.conj();
    let mut v = Vector::zeros(model.m);
    v[0] = real(1.0);
    for k in 0..model.m - 1 {
        v[k + 1] = v[k] * lc / model.weights[k];
    }
    let norm = v.norm();
    v /= real(norm);
    let defect = (model.operator.adjoint().matrix() * &v - &v * lc).norm();
    Ok(KernelVector { vector: v, defect })
}

/// `Q = span{e_0, …, e_{k-1}}`, co-invariant for the shift; its complement
/// `span{e_k, …}` vanishes to order `k` at the origin.
pub fn prefix_coinvariant(model: &ShiftModel, k: usize, tol: f64) -> Result<Subspace> {
    if k == 0 || k >= model.m {
        return input(format!("prefix length must satisfy 0 < k < {}, got {k}", model.m));
    }
    let idx: Vec<usize> = (0..k).collect();
    let q = Subspace::coordinate(model.m, &idx, tol)?;
    let r = q.invariance_residual(&model.operator.adjoint());
    if r > tol {
        return Err(Error::Model(format!("prefix subspace is not co-invariant (residual {r:e})")));
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    /// `[re, im]`
    pub root: [f64; 2],
    #[serde(default = "one")]
    pub mult: usize,
}

fn one() -> usize {
    1
}

impl Root {
    pub fn new(value: Scalar, mult: usize) -> Self {
        Root { root: [value.re, value.im], mult }
    }

    pub fn value(&self) -> Scalar {
        Scalar::new(self.root[0], self.root[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientModel {
    pub roots: Vec<Root>,
    pub m: usize,
    /// Monic `p`, coefficients from the constant term up.
    pub coeffs: Vec<Scalar>,
    /// Companion matrix of `p`: multiplication by `z` on `1, z, …, z^{m-1}`.
    pub operator: Operator,
}

/// Coefficients (constant term first) of `Π (z - λ_j)^{mult_j}`.
pub fn poly_from_roots(roots: &[Root]) -> Vec<Scalar> {
    let mut p = vec![real(1.0)];
    for r in roots {
        for _ in 0..r.mult {
            let mut next = vec![real(0.0); p.len() + 1];
            for (i, &c) in p.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r.value();
            }
            p = next;
        }
    }
    p
}

/// Horner evaluation of a coefficient vector (constant term first).
pub fn eval_poly(coeffs: &[Scalar], z: Scalar) -> Scalar {
    coeffs.iter().rev().fold(real(0.0), |acc, &c| acc * z + c)
}

pub fn make_quotient(roots: &[Root]) -> Result<QuotientModel> {
    if roots.is_empty() {
        return input("quotient model needs at least one root");
    }
    for r in roots {
        if r.mult == 0 {
            return input("root multiplicity must be positive");
        }
        if r.value().norm().is_nan() || r.value().norm() >= 1.0 {
            return input(format!("root {:?} must lie in the open disc", r.root));
        }
    }
    let coeffs = poly_from_roots(roots);
    let m = coeffs.len() - 1;
    let operator = Operator::from_fn(m, |i, j| {
        if j + 1 == m {
            -coeffs[i]
        } else if i == j + 1 {
            real(1.0)
        } else {
            real(0.0)
        }
    })?;
    Ok(QuotientModel { roots: roots.to_vec(), m, coeffs, operator })
}

const ROOT_MATCH: f64 = 1e-12;

/// Invariant subspace `(q) ⊂ C[z]/(p)`, spanned by `q · z^j` for
/// `j < m - deg q`.
pub fn ideal_subspace(model: &QuotientModel, q_roots: &[Root], tol: f64) -> Result<Subspace> {
    let mut available: Vec<Root> = model.roots.clone();
    for q in q_roots {
        let slot = available
            .iter_mut()
            .find(|p| (p.value() - q.value()).norm() < ROOT_MATCH && p.mult >= q.mult);
        match slot {
            Some(p) => p.mult -= q.mult,
            None => return input(format!("q does not divide p: root {:?} (mult {}) unavailable", q.root, q.mult)),
        }
    }
    let q_coeffs = poly_from_roots(q_roots);
    let deg_q = q_coeffs.len() - 1;
    if deg_q == model.m {
        return input("the ideal must be proper (q ≠ p)");
    }
    let vectors: Vec<Vector> = (0..model.m - deg_q)
        .map(|j| {
            let mut v = Vector::zeros(model.m);
            for (i, &c) in q_coeffs.iter().enumerate() {
                v[i + j] = c;
            }
            v
        })
        .collect();
    let s = orthonormalize(&vectors, model.m, tol)?;
    let r = s.invariance_residual(&model.operator);
    if r > 10.0 * tol {
        return Err(Error::Model(format!("ideal subspace not invariant (residual {r:e})")));
    }
    for q in q_roots {
        for f in s.basis_vectors() {
            let coeffs: Vec<Scalar> = f.iter().copied().collect();
            let val = eval_poly(&coeffs, q.value()).norm();
            if val > 10.0 * tol * f.norm() {
                return Err(Error::Model(format!("ideal member does not vanish at {:?} ({val:e})", q.root)));
            }
        }
    }
    Ok(s)
}
