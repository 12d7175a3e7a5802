use proptest::prelude::*;

use opmult::linalg::{c, orthonormalize};
use opmult::multiplicity::{krylov_closure, local_corank, multiplicity, MultiplicityOptions, OperatorTuple};
use opmult::{Operator, Scalar, Subspace, Vector};

const TOL: f64 = 1e-10;

fn entry() -> impl Strategy<Value = Scalar> {
    (-3i32..=3, -3i32..=3).prop_map(|(re, im)| c(re as f64 / 2.0, im as f64 / 2.0))
}

fn matrix(d: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec(prop_oneof![3 => Just(c(0.0, 0.0)), 1 => entry()], d * d)
        .prop_map(move |xs| Operator::from_fn(d, |i, j| xs[i * d + j]).unwrap())
}

fn vectors(d: usize, count: usize) -> impl Strategy<Value = Vec<Vector>> {
    prop::collection::vec(prop::collection::vec(entry(), d), count)
        .prop_map(|vs| vs.into_iter().map(Vector::from_vec).collect())
}

fn case() -> impl Strategy<Value = (Operator, Vec<Vector>)> {
    (2usize..=5).prop_flat_map(|d| (matrix(d), vectors(d, 2)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_invariant_and_contains_generators((t, g) in case()) {
        let a = OperatorTuple::single(t.clone());
        let l = krylov_closure(&a, &g, None, TOL).unwrap();
        prop_assert!(l.invariance_residual(&t) < 1e-8);
        for v in &g {
            prop_assert!((v - l.project(v).unwrap()).norm() < 1e-8 * v.norm().max(1.0));
        }
    }

    #[test]
    fn complement_dimensions_add_up((_, g) in case()) {
        let d = g[0].len();
        let l = orthonormalize(&g, d, TOL).unwrap();
        let perp = l.complement();
        prop_assert_eq!(l.dim() + perp.dim(), d);
        prop_assert!(l.intersection(&perp).unwrap().dim() == 0);
    }

    #[test]
    fn corank_never_exceeds_the_certified_upper_bound((t, g) in case()) {
        let a = OperatorTuple::single(t.clone());
        let l = krylov_closure(&a, &g, None, TOL).unwrap();
        prop_assume!(l.dim() > 0);
        let m = multiplicity(&a, &l, &MultiplicityOptions::default()).unwrap();
        prop_assert!(m.lower <= m.upper);
        prop_assert!(m.upper <= 2);
        prop_assert!(local_corank(&a, &l, &[c(0.25, -0.5)]).unwrap() <= m.upper);
    }

    #[test]
    fn full_space_multiplicity_is_shift_invariant(t in (2usize..=4).prop_flat_map(matrix), re in -2i32..=2) {
        let d = t.dim();
        let a = OperatorTuple::single(t.clone());
        let b = OperatorTuple::single(t.shifted(c(re as f64 / 2.0, 0.0)));
        let full = Subspace::full(d, TOL);
        let ma = multiplicity(&a, &full, &MultiplicityOptions::default()).unwrap();
        let mb = multiplicity(&b, &full, &MultiplicityOptions::default()).unwrap();
        prop_assert_eq!((ma.lower, ma.upper), (mb.lower, mb.upper));
    }
}
