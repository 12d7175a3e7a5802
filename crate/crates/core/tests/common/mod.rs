//! Independent oracles shared by the integration tests.
//!
//! Nothing here goes through the crate's Krylov or subspace machinery: closures
//! are enumerated word by word and ranks come straight from singular values.

#![allow(dead_code)]

use std::path::PathBuf;

use opmult::linalg::real;
use opmult::model::{ideal_subspace, make_quotient, make_shift, prefix_coinvariant, Root, SpaceKind};
use opmult::tensor::TensorFactor;
use opmult::{Matrix, Operator, Scalar, Subspace, Vector};

/// Relative singular value cutoff of the oracle rank.
pub const ORACLE_RANK_TOL: f64 = 1e-8;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn svd_rank(m: &Matrix) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let cut = ORACLE_RANK_TOL * top.max(1.0);
    sv.iter().filter(|&&s| s > cut).count()
}

/// `Bᴴ A B` for an orthonormal basis `B`.
pub fn compress(op: &Operator, l: &Subspace) -> Matrix {
    l.basis().adjoint() * op.matrix() * l.basis()
}

/// Dimension of the span of every word `A_{i_1} ⋯ A_{i_r} g` with `r ≤ k`,
/// `k` the ambient dimension, enumerated explicitly.
pub fn orbit_rank(ops: &[Matrix], gens: &[Vector]) -> usize {
    let k = gens.first().map_or(0, |g| g.len());
    if k == 0 {
        return 0;
    }
    let mut all: Vec<Vector> = gens.to_vec();
    let mut layer: Vec<Vector> = gens.to_vec();
    for _ in 0..k {
        let next: Vec<Vector> = layer
            .iter()
            .flat_map(|v| ops.iter().map(move |a| a * v))
            .filter(|v| v.norm() > 1e-300)
            .collect();
        if next.is_empty() {
            break;
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    svd_rank(&Matrix::from_columns(&all))
}

/// `k - rank [C_1 - λ_1 | … | C_n - λ_n]`.
pub fn stacked_corank(ops: &[Matrix], lambda: &[Scalar]) -> usize {
    let k = ops[0].nrows();
    let mut stacked = Matrix::zeros(k, k * ops.len());
    for (i, (c, &l)) in ops.iter().zip(lambda).enumerate() {
        let shifted = c - Matrix::identity(k, k) * l;
        stacked.view_mut((0, i * k), (k, k)).copy_from(&shifted);
    }
    k - svd_rank(&stacked)
}

pub fn jordan_pair() -> Operator {
    Operator::from_fn(4, |i, j| if (i, j) == (1, 0) || (i, j) == (3, 2) { real(1.0) } else { real(0.0) }).unwrap()
}

pub fn shift_factor(kind: SpaceKind, m: usize, k: usize) -> TensorFactor {
    let model = make_shift(kind, m).unwrap();
    let q = prefix_coinvariant(&model, k, opmult::DEFAULT_TOL).unwrap();
    TensorFactor::new(model.operator, q).unwrap()
}

pub fn quotient_factor(p_roots: &[(f64, usize)], q_roots: &[(f64, usize)]) -> TensorFactor {
    let roots = |rs: &[(f64, usize)]| rs.iter().map(|&(r, m)| Root::new(real(r), m)).collect::<Vec<_>>();
    let model = make_quotient(&roots(p_roots)).unwrap();
    let q = ideal_subspace(&model, &roots(q_roots), opmult::DEFAULT_TOL).unwrap().complement();
    TensorFactor::new(model.operator, q).unwrap()
}

/// Tensor systems with total dimension at most 8.
pub fn small_systems() -> Vec<(&'static str, Vec<TensorFactor>)> {
    let tol = opmult::DEFAULT_TOL;
    let jj_q = Subspace::coordinate(4, &[0, 2], tol).unwrap();
    vec![
        ("hardy2 x hardy2", vec![shift_factor(SpaceKind::Hardy, 2, 1), shift_factor(SpaceKind::Hardy, 2, 1)]),
        ("hardy2 x hardy4", vec![shift_factor(SpaceKind::Hardy, 2, 1), shift_factor(SpaceKind::Hardy, 4, 2)]),
        ("hardy4 x bergman2", vec![shift_factor(SpaceKind::Hardy, 4, 1), shift_factor(SpaceKind::Bergman, 2, 1)]),
        ("bergman2 x dirichlet3", vec![shift_factor(SpaceKind::Bergman, 2, 1), shift_factor(SpaceKind::Dirichlet, 3, 2)]),
        (
            "hardy2 x bergman2 x dirichlet2",
            vec![
                shift_factor(SpaceKind::Hardy, 2, 1),
                shift_factor(SpaceKind::Bergman, 2, 1),
                shift_factor(SpaceKind::Dirichlet, 2, 1),
            ],
        ),
        (
            "quotient(0.3,-0.5) x hardy4",
            vec![quotient_factor(&[(0.3, 1), (-0.5, 1)], &[(0.3, 1)]), shift_factor(SpaceKind::Hardy, 4, 2)],
        ),
        ("quotient(0.3^2) x hardy4", vec![quotient_factor(&[(0.3, 2)], &[(0.3, 1)]), shift_factor(SpaceKind::Hardy, 4, 2)]),
        (
            "j2+j2 x hardy2",
            vec![TensorFactor::new(jordan_pair(), jj_q).unwrap(), shift_factor(SpaceKind::Hardy, 2, 1)],
        ),
    ]
}
