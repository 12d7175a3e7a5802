mod common;

use opmult::linalg::real;
use opmult::model::{ideal_subspace, make_quotient, make_shift, Root, SpaceKind};
use opmult::multiplicity::{has_gws, wandering_subspace, OperatorTuple};
use opmult::tensor::{build_system, joint_invariant_s};
use opmult::Matrix;

use common::{compress, shift_factor, svd_rank};

/// `‖z^k‖²` from the Taylor coefficients of `(1 - x)^(-α)`: `1 / binom(k + α - 1, k)`.
fn kernel_norm_sq(alpha: u32, k: usize) -> f64 {
    let mut coeff = 1.0;
    for j in 0..k {
        coeff *= (j as f64 + alpha as f64) / (j as f64 + 1.0);
    }
    1.0 / coeff
}

#[test]
fn shift_weights_match_kernel_expansion() {
    for (kind, alpha) in [(SpaceKind::Hardy, 1), (SpaceKind::Bergman, 2), (SpaceKind::WeightedBergman(4), 4)] {
        let model = make_shift(kind, 5).unwrap();
        for (k, w) in model.weights.iter().enumerate() {
            let expected = (kernel_norm_sq(alpha, k + 1) / kernel_norm_sq(alpha, k)).sqrt();
            assert!((w - expected).abs() < 1e-15, "alpha {alpha}, k {k}: {w} vs {expected}");
        }
    }
    let b = make_shift(SpaceKind::Bergman, 3).unwrap();
    assert!((b.weights[0] - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((b.weights[1] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
}

#[test]
fn ideal_at_a_root_is_the_coefficient_line() {
    let model = make_quotient(&[Root::new(real(0.3), 1), Root::new(real(-0.5), 1)]).unwrap();
    let s = ideal_subspace(&model, &[Root::new(real(0.3), 1)], 1e-10).unwrap();
    assert_eq!(s.dim(), 1);
    let v = s.basis().column(0);
    let n = (0.09f64 + 1.0).sqrt();
    let ratio = v[0] / v[1];
    assert!((ratio - real(-0.3)).norm() < 1e-12);
    assert!((v[1].norm() - 1.0 / n).abs() < 1e-12);
}

#[test]
fn hardy_pair_wandering_dimension_is_two() {
    let sys = build_system(
        vec![shift_factor(SpaceKind::Hardy, 4, 2), shift_factor(SpaceKind::Hardy, 4, 2)],
        1e-10,
    )
    .unwrap();
    let s = joint_invariant_s(&sys).unwrap();
    assert_eq!(s.dim(), 12);
    let tuple = sys.tuple();
    // oracle: dim S - rank [T̃_1 B | T̃_2 B] for an orthonormal basis B of the invariant S
    let images: Vec<Matrix> = tuple.ops().iter().map(|t| t.matrix() * s.basis()).collect();
    let mut stacked = Matrix::zeros(16, 24);
    stacked.view_mut((0, 0), (16, 12)).copy_from(&images[0]);
    stacked.view_mut((0, 12), (16, 12)).copy_from(&images[1]);
    assert_eq!(s.dim() - svd_rank(&stacked), 2);
    assert_eq!(wandering_subspace(&tuple, &s).unwrap().dim(), 2);
    assert!(has_gws(&tuple, &s).unwrap());
}

#[test]
fn suffix_subspaces_have_one_dimensional_wandering_space() {
    for kind in [SpaceKind::Hardy, SpaceKind::Bergman, SpaceKind::Dirichlet, SpaceKind::WeightedBergman(3)] {
        for k in 1..5 {
            let f = shift_factor(kind.clone(), 5, k);
            let t = OperatorTuple::single(f.t.clone());
            assert_eq!(wandering_subspace(&t, &f.s).unwrap().dim(), 1);
            assert!(has_gws(&t, &f.s).unwrap());
            let c = compress(&f.t, &f.s);
            assert_eq!(svd_rank(&c), f.s.dim() - 1);
        }
    }
}
