//! Krylov closures and certified multiplicity intervals.
//!
//! The multiplicity of a tuple on `L` is the least number of vectors whose
//! joint orbit spans `L`. It is bracketed from both sides:
//!
//! * lower: for any `λ`, a generating set projects onto the wandering
//!   subspace of the `λ`-shifted compression, so its size is at least the
//!   local corank `dim(L ⊖ Σ (C_i - λ_i) L)`;
//! * upper: `r` random vectors whose closure is `L` witness `mult ≤ r`.
//!
//! The result is certified when the two meet. Every computation happens on
//! the compression `C_i = basisᴴ A_i basis` of the tuple to `L`, which is the
//! restriction when `L` is invariant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::exec::Execution;
use crate::linalg::{
    cluster_spectrum, extend_orthonormal, matrix_from_columns, orthonormalize, real, Operator, Scalar, Subspace,
    Vector,
};
use crate::io::{pairs, pairs_list};

/// An ordered `n`-tuple of operators on a common space. Commutativity is
/// measured, not required.
#[derive(Debug, Clone)]
pub struct OperatorTuple {
    ops: Vec<Operator>,
    commutator_residual: f64,
}

impl OperatorTuple {
    pub fn new(ops: Vec<Operator>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return input("operator tuple must be nonempty");
        };
        let d = first.dim();
        if ops.iter().any(|o| o.dim() != d) {
            return input("all operators in a tuple must share one dimension");
        }
        let mut commutator_residual: f64 = 0.0;
        for i in 0..ops.len() {
            for j in (i + 1)..ops.len() {
                commutator_residual = commutator_residual.max(ops[i].commutator(&ops[j]).norm());
            }
        }
        Ok(OperatorTuple { ops, commutator_residual })
    }

    pub fn single(op: Operator) -> Self {
        OperatorTuple { ops: vec![op], commutator_residual: 0.0 }
    }

    pub fn ops(&self) -> &[Operator] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    /// Largest spectral norm of a pairwise commutator.
    pub fn commutator_residual(&self) -> f64 {
        self.commutator_residual
    }

    /// Matrices of `P_L A_i|_L` in the basis of `L`.
    pub fn compress(&self, l: &Subspace) -> Result<Vec<Operator>> {
        self.ops.iter().map(|a| l.compress(a)).collect()
    }

    pub fn shifted(&self, lambda: &[Scalar]) -> Result<OperatorTuple> {
        check_point(lambda, self.len())?;
        let ops = self.ops.iter().zip(lambda).map(|(a, &l)| a.shifted(l)).collect();
        Ok(OperatorTuple { ops, commutator_residual: self.commutator_residual })
    }
}

fn check_point(lambda: &[Scalar], n: usize) -> Result<()> {
    if lambda.len() != n {
        return input(format!("point has {} coordinates, tuple has {} operators", lambda.len(), n));
    }
    Ok(())
}

fn check_vectors(g: &[Vector], dim: usize) -> Result<()> {
    if let Some(v) = g.iter().find(|v| v.len() != dim) {
        return input(format!("generator of length {} for operators of dimension {}", v.len(), dim));
    }
    Ok(())
}

/// Closure of `gens` under `ops`, all expressed in one coordinate space.
fn closure_coords(ops: &[Operator], gens: Vec<Vector>, dim: usize, tol: f64) -> Subspace {
    let mut q: Vec<Vector> = Vec::new();
    let added = extend_orthonormal(&mut q, gens, dim, tol);
    let mut frontier = 0..added;
    // each round adds at least one vector, so at most `dim` rounds
    while !frontier.is_empty() && q.len() < dim {
        let candidates: Vec<Vector> = frontier
            .clone()
            .flat_map(|f| ops.iter().map(move |a| (f, a)))
            .map(|(f, a)| a.matrix() * &q[f])
            .collect();
        let before = q.len();
        let added = extend_orthonormal(&mut q, candidates, dim, tol);
        frontier = before..before + added;
    }
    Subspace::from_orthonormal(matrix_from_columns(dim, &q), tol).unwrap_or_else(|_| {
        // unreachable in practice; fall back to a fresh pass
        crate::linalg::orthonormalize_columns(&matrix_from_columns(dim, &q), tol)
    })
}

/// Smallest subspace containing `g` and invariant under every operator of
/// `a` (or of its compression to `restrict_to`, with `g` projected there).
pub fn krylov_closure(a: &OperatorTuple, g: &[Vector], restrict_to: Option<&Subspace>, tol: f64) -> Result<Subspace> {
    check_vectors(g, a.dim())?;
    match restrict_to {
        None => Ok(closure_coords(a.ops(), g.to_vec(), a.dim(), tol)),
        Some(l) => {
            if l.ambient_dim() != a.dim() {
                return input("restriction subspace lives in a different ambient space");
            }
            let c = a.compress(l)?;
            let coords = g.iter().map(|v| l.coords(v)).collect::<Result<Vec<_>>>()?;
            let inner = closure_coords(&c, coords, l.dim(), tol);
            Ok(l.lift_subspace(&inner))
        }
    }
}

/// Largest principal angle between `[G]_A` and `[G]_{A - λ}`.
pub fn shifted_closure_angle(a: &OperatorTuple, g: &[Vector], lambda: &[Scalar], tol: f64) -> Result<f64> {
    let plain = krylov_closure(a, g, None, tol)?;
    let shifted = krylov_closure(&a.shifted(lambda)?, g, None, tol)?;
    Ok(plain.max_principal_angle(&shifted))
}

/// Whether the closure is unchanged by shifting the tuple by `λ`, up to a
/// principal angle of `100 * tol`. Always true in exact arithmetic.
pub fn shifted_closure_check(a: &OperatorTuple, g: &[Vector], lambda: &[Scalar], tol: f64) -> Result<bool> {
    Ok(shifted_closure_angle(a, g, lambda, tol)? <= 100.0 * tol)
}

/// `L ⊖ Σ (C_i - λ_i) L` in the coordinates of `L`.
fn wandering_coords(c: &[Operator], lambda: Option<&[Scalar]>, k: usize, tol: f64) -> Subspace {
    let mut images = Vec::with_capacity(c.len() * k);
    for (i, op) in c.iter().enumerate() {
        let op = match lambda {
            Some(l) => op.shifted(l[i]),
            None => op.clone(),
        };
        images.extend((0..k).map(|j| op.matrix().column(j).into_owned()));
    }
    let range = orthonormalize(&images, k, tol).expect("images live in C^k");
    Subspace::full(k, tol).complement_within(&range).expect("range lies in C^k")
}

/// `W_A(L) = L ⊖ Σ (P_L A_i|_L) L`; equals `L ⊖ Σ A_i L` for invariant `L`.
pub fn wandering_subspace(a: &OperatorTuple, l: &Subspace) -> Result<Subspace> {
    let c = a.compress(l)?;
    Ok(l.lift_subspace(&wandering_coords(&c, None, l.dim(), l.tol())))
}

/// Generating wandering subspace property of the compression to `L`.
pub fn has_gws(a: &OperatorTuple, l: &Subspace) -> Result<bool> {
    let c = a.compress(l)?;
    let k = l.dim();
    let w = wandering_coords(&c, None, k, l.tol());
    Ok(closure_coords(&c, w.basis_vectors(), k, l.tol()).dim() == k)
}

/// `dim(L ⊖ Σ (P_L A_i|_L - λ_i) L)`, a lower bound for the multiplicity.
pub fn local_corank(a: &OperatorTuple, l: &Subspace, lambda: &[Scalar]) -> Result<usize> {
    check_point(lambda, a.len())?;
    let c = a.compress(l)?;
    Ok(wandering_coords(&c, Some(lambda), l.dim(), l.tol()).dim())
}

/// splitmix64 finalizer over the seed and the search coordinates.
fn derive_seed(seed: u64, r: usize, trial: usize) -> u64 {
    let mut z = seed
        ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian_unit(rng: &mut ChaCha8Rng, k: usize) -> Vector {
    let mut v = Vector::from_fn(k, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Scalar::new(re, im)
    });
    let n = v.norm();
    v /= real(n);
    v
}

#[derive(Debug, Clone)]
pub struct Witness {
    /// Generators in ambient coordinates.
    pub generators: Vec<Vector>,
    /// Index of the successful trial.
    pub trial: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub trials: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { trials: 64, seed: 42, exec: Execution::default() }
    }
}

/// Randomized search for `r` generators of `L`.
///
/// Trial `t` draws `r` complex-Gaussian unit vectors of `L` from a generator
/// seeded by `(seed, r, t)`, so the first successful trial does not depend on
/// scheduling. A `None` is evidence, not proof, that `r` vectors do not
/// suffice.
pub fn mult_upper(a: &OperatorTuple, l: &Subspace, r: usize, opts: &SearchOptions) -> Result<Option<Witness>> {
    let c = a.compress(l)?;
    let k = l.dim();
    if k == 0 {
        return Ok(Some(Witness { generators: Vec::new(), trial: 0 }));
    }
    if r == 0 {
        return Ok(None);
    }
    let tol = l.tol();
    let attempt = |t: &usize| -> Option<Vec<Vector>> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, r, *t));
        let gens: Vec<Vector> = (0..r).map(|_| gaussian_unit(&mut rng, k)).collect();
        (closure_coords(&c, gens.clone(), k, tol).dim() == k).then_some(gens)
    };
    let chunk = opts.exec.chunk();
    let mut start = 0;
    while start < opts.trials {
        let ids: Vec<usize> = (start..(start + chunk).min(opts.trials)).collect();
        let results = opts.exec.map(&ids, attempt);
        if let Some((t, gens)) = ids.iter().zip(results).find_map(|(t, g)| g.map(|g| (*t, g))) {
            let generators = gens.iter().map(|g| l.lift(g)).collect();
            return Ok(Some(Witness { generators, trial: t }));
        }
        start += chunk;
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityResult {
    pub lower: usize,
    pub upper: usize,
    pub certified: bool,
    #[serde(serialize_with = "pairs_list")]
    pub witness_generators: Vec<Vector>,
    #[serde(serialize_with = "pairs")]
    pub witness_point: Vec<Scalar>,
    pub trials_used: usize,
    pub seed: u64,
    pub commutator_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityOptions {
    pub search: SearchOptions,
    /// Points at which to evaluate the local corank; `None` means
    /// [`default_lambda_samples`].
    pub lambda_samples: Option<Vec<Vec<Scalar>>>,
    pub random_points: usize,
}

impl Default for MultiplicityOptions {
    fn default() -> Self {
        MultiplicityOptions { search: SearchOptions::default(), lambda_samples: None, random_points: 32 }
    }
}

const MAX_EIGEN_COMBINATIONS: usize = 4096;
const SAMPLE_RADIUS: f64 = 0.9;

/// Every point `(μ_1, …, μ_n)` with `μ_i` drawn from `per_slot[i]`, in
/// lexicographic order, stopping after `MAX_EIGEN_COMBINATIONS` points.
pub fn eigen_combinations(per_slot: &[Vec<Scalar>]) -> Vec<Vec<Scalar>> {
    let mut combos: Vec<Vec<Scalar>> = vec![Vec::new()];
    for slot in per_slot {
        let mut next = Vec::new();
        'grow: for prefix in &combos {
            for &ev in slot {
                let mut p = prefix.clone();
                p.push(ev);
                next.push(p);
                if next.len() >= MAX_EIGEN_COMBINATIONS {
                    break 'grow;
                }
            }
        }
        combos = next;
    }
    combos
}

/// `count` uniform points of the polydisc of radius 0.9 in `C^n`.
pub fn polydisc_samples(n: usize, count: usize, seed: u64) -> Vec<Vec<Scalar>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, usize::MAX, 0));
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let rad = SAMPLE_RADIUS * rng.random::<f64>().sqrt();
                    let theta = std::f64::consts::TAU * rng.random::<f64>();
                    Scalar::from_polar(rad, theta)
                })
                .collect()
        })
        .collect()
}

/// The origin, then eigenvalue combinations, then random points, without
/// repeats.
pub fn assemble_samples(n: usize, per_slot: &[Vec<Scalar>], seed: u64, random_points: usize) -> Vec<Vec<Scalar>> {
    let mut samples = vec![vec![real(0.0); n]];
    for p in eigen_combinations(per_slot) {
        if !samples.contains(&p) {
            samples.push(p);
        }
    }
    samples.extend(polydisc_samples(n, random_points, seed));
    samples
}

/// The origin, every combination of (clustered) eigenvalues of the
/// compressed operators, then `random_points` uniform points of the
/// polydisc of radius 0.9.
pub fn default_lambda_samples(a: &OperatorTuple, l: &Subspace, seed: u64, random_points: usize) -> Result<Vec<Vec<Scalar>>> {
    let per_slot: Vec<Vec<Scalar>> = if l.dim() == 0 {
        Vec::new()
    } else {
        a.compress(l)?
            .iter()
            .map(|c| cluster_spectrum(c.matrix()))
            .collect()
    };
    if per_slot.is_empty() {
        let mut samples = vec![vec![real(0.0); a.len()]];
        samples.extend(polydisc_samples(a.len(), random_points, seed));
        return Ok(samples);
    }
    Ok(assemble_samples(a.len(), &per_slot, seed, random_points))
}

/// Certified multiplicity interval of the compression of `a` to `l`.
pub fn multiplicity(a: &OperatorTuple, l: &Subspace, opts: &MultiplicityOptions) -> Result<MultiplicityResult> {
    if l.ambient_dim() != a.dim() {
        return input("subspace and tuple live in different spaces");
    }
    let k = l.dim();
    let n = a.len();
    let seed = opts.search.seed;
    if k == 0 {
        return Ok(MultiplicityResult {
            lower: 0,
            upper: 0,
            certified: true,
            witness_generators: Vec::new(),
            witness_point: vec![real(0.0); n],
            trials_used: 0,
            seed,
            commutator_residual: a.commutator_residual(),
        });
    }
    let samples = match &opts.lambda_samples {
        Some(s) if !s.is_empty() => s.clone(),
        Some(_) => return input("lambda sample list must be nonempty"),
        None => default_lambda_samples(a, l, seed, opts.random_points)?,
    };
    for s in &samples {
        check_point(s, n)?;
    }
    let c = a.compress(l)?;
    let tol = l.tol();
    let coranks = opts
        .search
        .exec
        .map(&samples, |lam| wandering_coords(&c, Some(lam), k, tol).dim());
    // first maximizer in sample order
    let (best, &lower) = coranks
        .iter()
        .enumerate()
        .fold((0, &0usize), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
    let witness_point = samples[best].clone();

    let mut trials_used = 0;
    for r in lower.max(1)..=k {
        if let Some(w) = mult_upper(a, l, r, &opts.search)? {
            trials_used += w.trial + 1;
            return Ok(MultiplicityResult {
                lower,
                upper: r,
                certified: lower == r,
                witness_generators: w.generators,
                witness_point,
                trials_used,
                seed,
                commutator_residual: a.commutator_residual(),
            });
        }
        trials_used += opts.search.trials;
    }
    // k vectors of a basis always generate
    Ok(MultiplicityResult {
        lower,
        upper: k,
        certified: lower == k,
        witness_generators: l.basis_vectors(),
        witness_point,
        trials_used,
        seed,
        commutator_residual: a.commutator_residual(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SemiInvariantReport {
    /// `L_2 ⊆ L_1` residual.
    pub containment_residual: f64,
    /// Largest `‖(I - P) A_i P‖` over `L_1`, `L_2` and all `i`.
    pub invariance_residual: f64,
    pub mult_difference: MultiplicityResult,
    pub mult_outer: MultiplicityResult,
    /// `Some(upper(L) ≤ upper(L_1))` when both are certified.
    pub bound_holds: Option<bool>,
    /// `max ‖(P_L A P_L)^k x - P_L A^k P_{L_1} x‖` over `|k| ≤ 3`.
    pub power_identity_residual: f64,
}

/// Multi-indices `k ∈ Z_+^n` with `|k| ≤ max_degree`.
pub fn multi_indices(n: usize, max_degree: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for d in 0..=left {
            cur.push(d);
            rec(n, left - d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max_degree, &mut Vec::new(), &mut out);
    out
}

/// `A_1^{k_1} ⋯ A_n^{k_n}`.
pub fn monomial(ops: &[Operator], k: &[usize]) -> Operator {
    let mut out = Operator::identity(ops[0].dim());
    for (a, &e) in ops.iter().zip(k) {
        out = &out * &a.pow(e);
    }
    out
}

/// Compression to the semi-invariant difference `L = L_1 ⊖ L_2` versus the
/// restriction to `L_1`.
pub fn semi_invariant_bound_check(
    a: &OperatorTuple,
    l1: &Subspace,
    l2: &Subspace,
    opts: &MultiplicityOptions,
) -> Result<SemiInvariantReport> {
    let tol = l1.tol();
    let containment_residual = l2.containment_residual(l1);
    if containment_residual > tol {
        return Err(Error::Containment { max_residual: containment_residual });
    }
    let invariance_residual = a
        .ops()
        .iter()
        .flat_map(|op| [l1.invariance_residual(op), l2.invariance_residual(op)])
        .fold(0.0, f64::max);
    let l = l1.complement_within(l2)?;
    let mult_difference = multiplicity(a, &l, opts)?;
    let mult_outer = multiplicity(a, l1, opts)?;
    let bound_holds = (mult_difference.certified && mult_outer.certified)
        .then_some(mult_difference.upper <= mult_outer.upper);

    let power_identity_residual = compression_power_residual(a, &l, l1, opts.search.seed);
    Ok(SemiInvariantReport {
        containment_residual,
        invariance_residual,
        mult_difference,
        mult_outer,
        bound_holds,
        power_identity_residual,
    })
}

/// `max ‖(P_L A P_L)^k x - P_L A^k P_{L_1} x‖` over `|k| ≤ 3` and four
/// seeded random unit vectors `x`.
pub fn compression_power_residual(a: &OperatorTuple, l: &Subspace, l1: &Subspace, seed: u64) -> f64 {
    let pl = l.projector();
    let pl1 = l1.projector();
    let compressed: Vec<Operator> = a.ops().iter().map(|op| &(&pl * op) * &pl).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5e11, 3));
    let xs: Vec<Vector> = (0..4).map(|_| gaussian_unit(&mut rng, a.dim())).collect();
    let mut worst: f64 = 0.0;
    for k in multi_indices(a.len(), 3) {
        let lhs = &monomial(&compressed, &k) * &pl;
        let rhs = &(&pl * &monomial(a.ops(), &k)) * &pl1;
        for x in &xs {
            worst = worst.max((lhs.matrix() * x - rhs.matrix() * x).norm());
        }
    }
    worst
}

/// Seeded complex-Gaussian unit vectors of `C^dim`.
pub fn random_unit_vectors(dim: usize, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xc0ffee, count));
    (0..count).map(|_| gaussian_unit(&mut rng, dim)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{unit, Matrix};

    const TOL: f64 = 1e-10;

    fn jordan(n: usize) -> Operator {
        Operator::from_fn(n, |i, j| if i == j + 1 { real(1.0) } else { real(0.0) }).unwrap()
    }

    fn j4() -> OperatorTuple {
        OperatorTuple::single(jordan(4))
    }

    fn pair() -> OperatorTuple {
        let j = jordan(2);
        let i = Operator::identity(2);
        OperatorTuple::new(vec![j.kron(&i), i.kron(&j)]).unwrap()
    }

    #[test]
    fn closures_of_jordan_shift() {
        assert_eq!(krylov_closure(&j4(), &[unit(4, 0)], None, TOL).unwrap().dim(), 4);
        let c = krylov_closure(&j4(), &[unit(4, 2)], None, TOL).unwrap();
        assert!(c.max_principal_angle(&Subspace::coordinate(4, &[2, 3], TOL).unwrap()) < 1e-14);
        assert_eq!(krylov_closure(&j4(), &[], None, TOL).unwrap().dim(), 0);
        assert_eq!(krylov_closure(&pair(), &[unit(4, 0)], None, TOL).unwrap().dim(), 4);
        assert!(krylov_closure(&j4(), &[unit(3, 0)], None, TOL).is_err());
    }

    #[test]
    fn shift_lemma_examples() {
        let a = j4();
        assert!(shifted_closure_check(&a, &[unit(4, 1)], &[real(0.0)], TOL).unwrap());
        assert!(shifted_closure_check(&a, &[unit(4, 0)], &[real(0.7)], TOL).unwrap());
        assert!(shifted_closure_check(&a, &[unit(4, 2)], &[real(0.3)], TOL).unwrap());
        // both closures are span{e2, e3}
        let shifted = krylov_closure(&a.shifted(&[real(0.3)]).unwrap(), &[unit(4, 2)], None, TOL).unwrap();
        assert_eq!(shifted.dim(), 2);
    }

    #[test]
    fn wandering_examples() {
        let tail = Subspace::coordinate(4, &[2, 3], TOL).unwrap();
        let w = wandering_subspace(&j4(), &tail).unwrap();
        assert!(w.max_principal_angle(&Subspace::coordinate(4, &[2], TOL).unwrap()) < 1e-14);
        let zero = OperatorTuple::single(Operator::zeros(4));
        assert_eq!(wandering_subspace(&zero, &tail).unwrap().dim(), 2);
        assert!(has_gws(&j4(), &tail).unwrap());
    }

    #[test]
    fn local_corank_examples() {
        let full = Subspace::full(4, TOL);
        assert_eq!(local_corank(&j4(), &full, &[real(0.0)]).unwrap(), 1);
        assert_eq!(local_corank(&j4(), &full, &[real(5.0)]).unwrap(), 0);
        assert!(local_corank(&j4(), &full, &[real(0.0), real(0.0)]).is_err());
    }

    #[test]
    fn mult_upper_examples() {
        let full = Subspace::full(4, TOL);
        let opts = SearchOptions::default();
        assert!(mult_upper(&j4(), &full, 1, &opts).unwrap().is_some());
        assert!(mult_upper(&j4(), &full, 0, &opts).unwrap().is_none());
    }

    #[test]
    fn jordan_multiplicity_is_one() {
        let r = multiplicity(&j4(), &Subspace::full(4, TOL), &MultiplicityOptions::default()).unwrap();
        assert_eq!((r.lower, r.upper, r.certified), (1, 1, true));
        assert_eq!(r.witness_generators.len(), 1);
    }

    #[test]
    fn non_cyclic_direct_sum_has_multiplicity_two() {
        let j2 = jordan(2);
        let mut m = Matrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(j2.matrix());
        m.view_mut((2, 2), (2, 2)).copy_from(j2.matrix());
        let a = OperatorTuple::single(Operator::new(m).unwrap());
        let r = multiplicity(&a, &Subspace::full(4, TOL), &MultiplicityOptions::default()).unwrap();
        assert_eq!((r.lower, r.upper, r.certified), (2, 2, true));
    }

    #[test]
    fn results_are_reproducible_across_execution_modes() {
        let l = Subspace::full(4, TOL);
        let mut opts = MultiplicityOptions::default();
        opts.search.exec = Execution::Sequential;
        let a = multiplicity(&pair(), &l, &opts).unwrap();
        opts.search.exec = Execution::Parallel;
        let b = multiplicity(&pair(), &l, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn semi_invariant_examples() {
        let full = Subspace::full(4, TOL);
        let zero = Subspace::zero(4, TOL);
        let opts = MultiplicityOptions::default();
        let rep = semi_invariant_bound_check(&j4(), &full, &zero, &opts).unwrap();
        assert_eq!(rep.mult_difference.upper, rep.mult_outer.upper);
        assert!(rep.power_identity_residual < 1e-12);

        let tail = Subspace::coordinate(4, &[2, 3], TOL).unwrap();
        let rep = semi_invariant_bound_check(&j4(), &full, &tail, &opts).unwrap();
        assert_eq!(rep.mult_difference.upper, 1);
        assert_eq!(rep.bound_holds, Some(true));
        assert!(rep.power_identity_residual < 1e-12);

        let head = Subspace::coordinate(4, &[0], TOL).unwrap();
        assert!(matches!(
            semi_invariant_bound_check(&j4(), &tail, &head, &opts),
            Err(Error::Containment { .. })
        ));
    }

    #[test]
    fn multi_index_count() {
        // C(n + d, d)
        assert_eq!(multi_indices(2, 3).len(), 10);
        assert_eq!(multi_indices(3, 3).len(), 20);
    }
}
