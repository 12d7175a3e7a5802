//! Tensor systems `T̃_i = I ⊗ … ⊗ T_i ⊗ … ⊗ I` on `H_1 ⊗ … ⊗ H_n` and
//! the projection architecture around `S = (Q_1 ⊗ … ⊗ Q_n)^⊥`.
//!
//! Kronecker slots are big-endian: slot 0 varies slowest, so the basis
//! vector `e_{a_0} ⊗ … ⊗ e_{a_{n-1}}` has index `Σ a_i · Π_{j>i} m_j`.
//!
//! Every projection built here is a Kronecker product of per-slot factors
//! `P_i = P_{S_i}`, `Q_i = I - P_i` or `I`, described symbolically by
//! [`SlotProduct`] and materialized only on demand.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::pair;
use crate::linalg::{
    cluster_spectrum, kron_all, null_vector, orthonormalize, Matrix, Operator, Scalar, Subspace,
    Vector,
};
use crate::multiplicity::{monomial, multi_indices, wandering_subspace, OperatorTuple};

/// One tensor slot: an operator and a co-invariant subspace `Q`.
#[derive(Debug, Clone)]
pub struct TensorFactor {
    pub t: Operator,
    pub q: Subspace,
    pub s: Subspace,
    /// `P_S`.
    pub p: Operator,
    /// `I - P_S = P_Q`.
    pub qproj: Operator,
    /// `‖(I - P_Q) Tᴴ P_Q‖`.
    pub coinvariance_residual: f64,
}

impl TensorFactor {
    pub fn new(t: Operator, q: Subspace) -> Result<Self> {
        if q.ambient_dim() != t.dim() {
            return Err(Error::Model(format!(
                "co-invariant subspace lives in C^{} but the operator acts on C^{}",
                q.ambient_dim(),
                t.dim()
            )));
        }
        let coinvariance_residual = q.invariance_residual(&t.adjoint());
        if coinvariance_residual > q.tol() {
            return Err(Error::Model(format!(
                "subspace is not invariant under the adjoint (residual {coinvariance_residual:.3e})"
            )));
        }
        let s = q.complement();
        let qproj = q.projector();
        let p = s.projector();
        Ok(TensorFactor { t, q, s, p, qproj, coinvariance_residual })
    }

    pub fn dim(&self) -> usize {
        self.t.dim()
    }

    /// `S_i ⊖ T_i S_i`.
    pub fn wandering(&self) -> Result<Subspace> {
        wandering_subspace(&OperatorTuple::single(self.t.clone()), &self.s)
    }
}

/// Per-slot choice inside a Kronecker product of projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Slot {
    P,
    Q,
    I,
}

/// `⊗_s slot_s`; a product of `n` commuting projections `P̃`, `Q̃`, `Ĩ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlotProduct(pub Vec<Slot>);

impl SlotProduct {
    pub fn identity(n: usize) -> Self {
        SlotProduct(vec![Slot::I; n])
    }

    /// `X_i = P̃_i Q̃_{i+1} ⋯ Q̃_n` (0-based `i`).
    pub fn x(n: usize, i: usize) -> Self {
        SlotProduct(
            (0..n)
                .map(|s| match s.cmp(&i) {
                    std::cmp::Ordering::Less => Slot::I,
                    std::cmp::Ordering::Equal => Slot::P,
                    std::cmp::Ordering::Greater => Slot::Q,
                })
                .collect(),
        )
    }

    /// Left-multiply by `Q̃_s`. Projections in one slot multiply as
    /// `QQ = Q`, `QI = Q` and `QP = 0`; the latter yields `None`.
    pub fn times_q(mut self, s: usize) -> Option<Self> {
        match self.0[s] {
            Slot::P => None,
            _ => {
                self.0[s] = Slot::Q;
                Some(self)
            }
        }
    }

    pub fn times_p(mut self, s: usize) -> Option<Self> {
        match self.0[s] {
            Slot::Q => None,
            _ => {
                self.0[s] = Slot::P;
                Some(self)
            }
        }
    }

    pub fn operator(&self, sys: &TensorSystem) -> Operator {
        let ops: Vec<Operator> = self
            .0
            .iter()
            .zip(&sys.factors)
            .map(|(slot, f)| match slot {
                Slot::P => f.p.clone(),
                Slot::Q => f.qproj.clone(),
                Slot::I => Operator::identity(f.dim()),
            })
            .collect();
        kron_all(&ops)
    }

    /// Range as an exact Kronecker product of per-slot subspaces.
    pub fn range(&self, sys: &TensorSystem) -> Subspace {
        let mut out: Option<Subspace> = None;
        for (slot, f) in self.0.iter().zip(&sys.factors) {
            let part = match slot {
                Slot::P => f.s.clone(),
                Slot::Q => f.q.clone(),
                Slot::I => Subspace::full(f.dim(), sys.tol),
            };
            out = Some(match out {
                None => part,
                Some(acc) => acc.kron(&part),
            });
        }
        out.expect("systems have at least two slots")
    }

    pub fn rank(&self, sys: &TensorSystem) -> usize {
        self.0
            .iter()
            .zip(&sys.factors)
            .map(|(slot, f)| match slot {
                Slot::P => f.s.dim(),
                Slot::Q => f.q.dim(),
                Slot::I => f.dim(),
            })
            .product()
    }
}

#[derive(Debug, Clone)]
pub struct TensorSystem {
    pub factors: Vec<TensorFactor>,
    pub dims: Vec<usize>,
    /// `N = Π m_i`.
    pub total_dim: usize,
    pub t_tilde: Vec<Operator>,
    pub p_tilde: Vec<Operator>,
    pub q_tilde: Vec<Operator>,
    /// Largest `‖[T̃_p, T̃_q]‖` and `‖[T̃_pᴴ, T̃_q]‖` over `p ≠ q`.
    pub double_commute_residual: f64,
    /// Largest `‖[P̃_i, P̃_j]‖`.
    pub projection_commute_residual: f64,
    pub tol: f64,
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` in `slot`.
pub fn embed(dims: &[usize], slot: usize, op: &Operator) -> Operator {
    let ops: Vec<Operator> = dims
        .iter()
        .enumerate()
        .map(|(s, &d)| if s == slot { op.clone() } else { Operator::identity(d) })
        .collect();
    kron_all(&ops)
}

pub fn build_system(factors: Vec<TensorFactor>, tol: f64) -> Result<TensorSystem> {
    if factors.len() < 2 {
        return Err(Error::Model("a tensor system needs at least two factors".into()));
    }
    let dims: Vec<usize> = factors.iter().map(TensorFactor::dim).collect();
    let total_dim = dims.iter().product();
    let t_tilde: Vec<Operator> = factors.iter().enumerate().map(|(i, f)| embed(&dims, i, &f.t)).collect();
    let p_tilde: Vec<Operator> = factors.iter().enumerate().map(|(i, f)| embed(&dims, i, &f.p)).collect();
    let q_tilde: Vec<Operator> = factors.iter().enumerate().map(|(i, f)| embed(&dims, i, &f.qproj)).collect();
    let mut double_commute_residual: f64 = 0.0;
    let mut projection_commute_residual: f64 = 0.0;
    for p in 0..factors.len() {
        for q in 0..factors.len() {
            if p == q {
                continue;
            }
            double_commute_residual = double_commute_residual
                .max(t_tilde[p].commutator(&t_tilde[q]).norm())
                .max(t_tilde[p].adjoint().commutator(&t_tilde[q]).norm());
            projection_commute_residual = projection_commute_residual.max(p_tilde[p].commutator(&p_tilde[q]).norm());
        }
    }
    Ok(TensorSystem {
        factors,
        dims,
        total_dim,
        t_tilde,
        p_tilde,
        q_tilde,
        double_commute_residual,
        projection_commute_residual,
        tol,
    })
}

impl TensorSystem {
    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn tuple(&self) -> OperatorTuple {
        OperatorTuple::new(self.t_tilde.clone()).expect("slots share the total dimension")
    }
}

/// `S` by both routes together with their agreement.
#[derive(Debug, Clone)]
pub struct JointInvariant {
    /// Range of `I - Π (I - P̃_i)`.
    pub from_projections: Subspace,
    /// `(Q_1 ⊗ … ⊗ Q_n)^⊥`.
    pub from_kronecker: Subspace,
    pub route_angle: f64,
    /// `‖(I - Π(I - P̃_i)) - Σ_i P̃_i Π_{j>i}(I - P̃_j)‖`.
    pub expansion_residual: f64,
    /// Largest `‖(I - P_S) T̃_i P_S‖`.
    pub invariance_residual: f64,
}

pub fn joint_invariant_routes(sys: &TensorSystem) -> JointInvariant {
    let n = sys.n();
    let id = Operator::identity(sys.total_dim);
    let prod_q = sys.q_tilde.iter().skip(1).fold(sys.q_tilde[0].clone(), |acc, q| &acc * q);
    let p_s = &id - &prod_q;
    let from_projections = Subspace::range_of_projection(&p_s, sys.tol);

    let q_all = SlotProduct(vec![Slot::Q; n]).range(sys);
    let from_kronecker = q_all.complement();

    let mut expansion = Operator::zeros(sys.total_dim);
    for i in 0..n {
        let term = ((i + 1)..n).fold(sys.p_tilde[i].clone(), |acc, j| &acc * &sys.q_tilde[j]);
        expansion = &expansion + &term;
    }
    let expansion_residual = (&p_s - &expansion).norm();
    let invariance_residual = sys
        .t_tilde
        .iter()
        .map(|t| from_kronecker.invariance_residual(t))
        .fold(0.0, f64::max);
    JointInvariant {
        route_angle: from_projections.max_principal_angle(&from_kronecker),
        from_projections,
        from_kronecker,
        expansion_residual,
        invariance_residual,
    }
}

/// `S`, cross-checked between the projection and Kronecker routes.
pub fn joint_invariant_s(sys: &TensorSystem) -> Result<Subspace> {
    let j = joint_invariant_routes(sys);
    if j.route_angle > sys.tol {
        return Err(Error::InternalConsistency {
            check: "joint_invariant_s".into(),
            index: 0,
            residual: j.route_angle,
        });
    }
    Ok(j.from_kronecker)
}

#[derive(Debug, Clone, Serialize)]
pub struct XReport {
    pub ranks: Vec<usize>,
    /// Largest `‖X_i² - X_i‖` and `‖X_i - X_iᴴ‖`.
    pub idempotence_residual: f64,
    /// Largest `‖X_p X_q‖`, `p ≠ q`.
    pub orthogonality_residual: f64,
    /// `‖Σ X_i - P_S‖`.
    pub sum_residual: f64,
    pub trace: f64,
}

pub fn x_projections(sys: &TensorSystem) -> Vec<Operator> {
    (0..sys.n()).map(|i| SlotProduct::x(sys.n(), i).operator(sys)).collect()
}

pub fn x_report(sys: &TensorSystem, xs: &[Operator], s: &Subspace) -> XReport {
    let n = xs.len();
    let mut idempotence_residual: f64 = 0.0;
    let mut orthogonality_residual: f64 = 0.0;
    for p in 0..n {
        idempotence_residual = idempotence_residual
            .max((&(&xs[p] * &xs[p]) - &xs[p]).norm())
            .max((&xs[p] - &xs[p].adjoint()).norm());
        for q in 0..n {
            if p != q {
                orthogonality_residual = orthogonality_residual.max((&xs[p] * &xs[q]).norm());
            }
        }
    }
    let sum = xs.iter().skip(1).fold(xs[0].clone(), |acc, x| &acc + x);
    let trace = sum.matrix().trace().re;
    XReport {
        ranks: (0..n).map(|i| SlotProduct::x(n, i).rank(sys)).collect(),
        idempotence_residual,
        orthogonality_residual,
        sum_residual: (&sum - &s.projector()).norm(),
        trace,
    }
}

/// The nested spaces `S ⊇ F_1 ⊇ … ⊇ F_{n-1} = F`.
#[derive(Debug, Clone)]
pub struct ChainDecomposition {
    pub x: Vec<Operator>,
    pub s: Subspace,
    /// `F_1, …, F_{n-1}`.
    pub f_chain: Vec<Subspace>,
    pub f: Subspace,
    /// Summands of `P_{F_i}`, one list per chain level.
    pub summands: Vec<Vec<SlotProduct>>,
    /// `M_j = P̃_j Π_{k≠j} Q̃_k`, the summands of `P_F`.
    pub m_summands: Vec<Operator>,
    /// `‖P_{F_i} - Σ_j M_j‖` per level.
    pub summand_sum_residuals: Vec<f64>,
    /// Containment residuals of `F_1 ⊆ S` and `F_i ⊆ F_{i-1}`.
    pub containment_residuals: Vec<f64>,
    /// Largest principal angle between `F_{i-1} ⊖ F_i` and its closed form
    /// (`ran(P̃_{n-1}P̃_n)` for `i = 1`).
    pub difference_residuals: Vec<f64>,
}

impl ChainDecomposition {
    /// `S, F_1, …, F_{n-1}`.
    pub fn levels(&self) -> Vec<&Subspace> {
        std::iter::once(&self.s).chain(self.f_chain.iter()).collect()
    }
}

/// Summand `j` of `P_{F_i}` (both 0-based, `i` in `0..n-1` for `F_{i+1}`):
/// `(Π_{t < min(j, i)} Q̃_t) X_j`, with an extra `Q̃_{n-2}` when `j` is last.
pub fn chain_summand(n: usize, level: usize, j: usize) -> SlotProduct {
    let mut sp = SlotProduct::x(n, j);
    for t in 0..j.min(level) {
        sp = sp.times_q(t).expect("X_j carries the identity before slot j");
    }
    if j == n - 1 {
        sp = sp.times_q(n - 2).expect("X_n carries Q or I in slot n-1");
    }
    sp
}

fn sum_ranges(sys: &TensorSystem, parts: &[Subspace]) -> Subspace {
    let vecs: Vec<Vector> = parts.iter().flat_map(Subspace::basis_vectors).collect();
    orthonormalize(&vecs, sys.total_dim, sys.tol).expect("ranges share the ambient space")
}

fn sum_ops(sys: &TensorSystem, ops: &[Operator]) -> Operator {
    ops.iter().fold(Operator::zeros(sys.total_dim), |acc, o| &acc + o)
}

fn consistency(check: &str, index: usize, residual: f64) -> Error {
    Error::InternalConsistency { check: check.into(), index, residual }
}

pub fn f_chain(sys: &TensorSystem) -> Result<ChainDecomposition> {
    let n = sys.n();
    let tol = sys.tol;
    let s = joint_invariant_s(sys)?;
    let x = x_projections(sys);
    let summands: Vec<Vec<SlotProduct>> =
        (0..n - 1).map(|level| (0..n).map(|j| chain_summand(n, level, j)).collect()).collect();
    let mut f_chain = Vec::with_capacity(n - 1);
    let mut summand_sum_residuals = Vec::with_capacity(n - 1);
    for parts in &summands {
        let ranges: Vec<Subspace> = parts.iter().map(|sp| sp.range(sys)).collect();
        let f_i = sum_ranges(sys, &ranges);
        let ops: Vec<Operator> = parts.iter().map(|sp| sp.operator(sys)).collect();
        summand_sum_residuals.push((&f_i.projector() - &sum_ops(sys, &ops)).norm());
        f_chain.push(f_i);
    }

    let mut containment_residuals = Vec::with_capacity(n - 1);
    let mut difference_residuals = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let outer = if i == 0 { &s } else { &f_chain[i - 1] };
        let inner = &f_chain[i];
        let r = inner.containment_residual(outer);
        containment_residuals.push(r);
        if r > tol {
            return Err(consistency("chain_containment", i + 1, r));
        }
        let diff = outer.complement_within(inner)?;
        let closed_form = if i == 0 {
            let mut sp = SlotProduct::identity(n);
            sp = sp.times_p(n - 2).and_then(|sp| sp.times_p(n - 1)).expect("identity slots");
            sp.range(sys)
        } else {
            // A (X_i ⊕ … ⊕ X_{n-2} ⊕ Q̃_{n-2} X_{n-1}) in 0-based slots, A = Π_{t<i-1} Q̃_t P̃_{i-1}
            let parts: Vec<Subspace> = (i..n)
                .filter_map(|j| {
                    let mut sp = SlotProduct::x(n, j);
                    if j == n - 1 {
                        sp = sp.times_q(n - 2)?;
                    }
                    for t in 0..i - 1 {
                        sp = sp.times_q(t)?;
                    }
                    sp.times_p(i - 1).map(|sp| sp.range(sys))
                })
                .collect();
            sum_ranges(sys, &parts)
        };
        difference_residuals.push(diff.max_principal_angle(&closed_form));
    }

    let f = f_chain.last().expect("n >= 2 gives one level").clone();
    let m_summands = (0..n)
        .map(|j| {
            let mut sp = SlotProduct::identity(n).times_p(j).expect("identity slot");
            for k in (0..n).filter(|&k| k != j) {
                sp = sp.times_q(k).expect("identity slot");
            }
            sp.operator(sys)
        })
        .collect();
    Ok(ChainDecomposition {
        x,
        s,
        f_chain,
        f,
        summands,
        m_summands,
        summand_sum_residuals,
        containment_residuals,
        difference_residuals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    /// Per consecutive pair `(F_{i-1}, F_i)`, `F_0 = S`: largest
    /// `‖(P_{F_{i-1}} T̃_s P_{F_{i-1}}) P_D - P_D T̃_s P_D‖`, `D = F_{i-1} ⊖ F_i`.
    pub semi_invariance: Vec<f64>,
    /// Per level `S, F_1, …`: largest commutator of the compressed tuple.
    pub commutativity: Vec<f64>,
    /// Per chain level: largest `‖M_j T̃_s M_k‖`, `j ≠ k`. Zero on `F`; on
    /// intermediate levels of systems with `n ≥ 3` it is generally not,
    /// e.g. `M_3 T̃_3 M_1 = P ⊗ Q ⊗ P T Q` on `F_1`.
    pub block_orthogonality: Vec<f64>,
    /// Per chain level: largest `‖P_F T̃_s P_F - Σ_j M_j T̃_s M_j‖`.
    pub block_diagonal: Vec<f64>,
    /// `max ‖(P_F T̃ P_F)^k x - Σ_i M_i T̃^k M_i x‖` over `|k| ≤ 3`.
    pub power_preservation: f64,
}

impl StructureReport {
    /// Largest residual among the identities that hold on every system:
    /// semi-invariance and commutativity at all levels, block structure
    /// on the final level `F`, and power preservation.
    pub fn max_residual(&self) -> f64 {
        let last = |v: &Vec<f64>| v.last().copied().unwrap_or(0.0);
        self.semi_invariance
            .iter()
            .chain(&self.commutativity)
            .copied()
            .chain([last(&self.block_orthogonality), last(&self.block_diagonal), self.power_preservation])
            .fold(0.0, f64::max)
    }
}

fn compressed_commutator(t: &[Operator], l: &Subspace) -> f64 {
    let c: Vec<Matrix> = t.iter().map(|op| l.basis().adjoint() * op.matrix() * l.basis()).collect();
    let mut worst: f64 = 0.0;
    for a in 0..c.len() {
        for b in (a + 1)..c.len() {
            let d = &c[a] * &c[b] - &c[b] * &c[a];
            worst = worst.max(crate::linalg::spectral_norm(&d));
        }
    }
    worst
}

/// Deterministic unit probes for identities checked on vectors.
pub fn probe_vectors(dim: usize, count: usize) -> Vec<Vector> {
    (0..count)
        .map(|k| {
            let v = Vector::from_fn(dim, |i, _| {
                let x = (i as f64 + 1.0) * (k as f64 + 1.7);
                Scalar::new(x.sin(), (0.37 * x).cos())
            });
            let n = v.norm();
            v / Scalar::new(n, 0.0)
        })
        .collect()
}

pub fn verify_compression_structure(sys: &TensorSystem, chain: &ChainDecomposition, exec: Execution) -> Result<StructureReport> {
    let n = sys.n();
    let levels = chain.levels();
    let t = &sys.t_tilde;

    let pairs: Vec<usize> = (1..levels.len()).collect();
    let semi_invariance = exec
        .map(&pairs, |&i| -> Result<f64> {
            let outer = levels[i - 1];
            let d = outer.complement_within(levels[i])?;
            let po = outer.projector();
            let pd = d.projector();
            Ok(t.iter()
                .map(|ts| {
                    let lhs = &(&(&po * ts) * &po) * &pd;
                    let rhs = &(&pd * ts) * &pd;
                    (&lhs - &rhs).norm()
                })
                .fold(0.0, f64::max))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let level_ids: Vec<usize> = (0..levels.len()).collect();
    let commutativity = exec.map(&level_ids, |&i| compressed_commutator(t, levels[i]));

    let chain_ids: Vec<usize> = (0..chain.summands.len()).collect();
    let blocks = exec.map(&chain_ids, |&i| {
        let ms: Vec<Operator> = chain.summands[i].iter().map(|sp| sp.operator(sys)).collect();
        let pf = chain.f_chain[i].projector();
        let mut orth: f64 = 0.0;
        let mut diag: f64 = 0.0;
        for ts in t {
            let mut block_sum = Operator::zeros(sys.total_dim);
            for (j, mj) in ms.iter().enumerate() {
                let mj_t = mj * ts;
                for (k, mk) in ms.iter().enumerate() {
                    let prod = &mj_t * mk;
                    if j == k {
                        block_sum = &block_sum + &prod;
                    } else {
                        orth = orth.max(prod.norm());
                    }
                }
            }
            diag = diag.max((&(&(&pf * ts) * &pf) - &block_sum).norm());
        }
        (orth, diag)
    });
    let (block_orthogonality, block_diagonal) = blocks.into_iter().unzip();

    let pf = chain.f.projector();
    let compressed: Vec<Operator> = t.iter().map(|ts| &(&pf * ts) * &pf).collect();
    let probes = probe_vectors(sys.total_dim, 3);
    let ks = multi_indices(n, 3);
    let per_k = exec.map(&ks, |k| {
        let lhs = &monomial(&compressed, k) * &pf;
        let tk = monomial(t, k);
        let rhs = chain
            .m_summands
            .iter()
            .fold(Operator::zeros(sys.total_dim), |acc, m| &acc + &(&(m * &tk) * m));
        probes
            .iter()
            .map(|x| (lhs.matrix() * x - rhs.matrix() * x).norm())
            .fold(0.0, f64::max)
    });
    let power_preservation = per_k.into_iter().fold(0.0, f64::max);

    Ok(StructureReport { semi_invariance, commutativity, block_orthogonality, block_diagonal, power_preservation })
}

/// An eigenpair `Tᴴ v = conj(α) v` with `v ∈ Q`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenChoice {
    /// `α`; the eigenvalue of the adjoint is its conjugate.
    #[serde(serialize_with = "ser_pair")]
    pub alpha: Scalar,
    #[serde(skip)]
    pub vector: Vector,
    pub residual: f64,
    pub gap: f64,
}

fn ser_pair<S: serde::Serializer>(z: &Scalar, s: S) -> std::result::Result<S::Ok, S::Error> {
    pair(z).serialize(s)
}

/// Eigenpairs of the compression of `Tᴴ` to `Q`, best separated first
/// (ties broken by smallest modulus).
pub fn eigen_candidates(factor: &TensorFactor) -> Result<Vec<EigenChoice>> {
    let q = &factor.q;
    if q.dim() == 0 {
        return Err(Error::Eigen { factor: usize::MAX, residual: f64::INFINITY, tol: q.tol() });
    }
    let tstar = factor.t.adjoint();
    let c = q.compress(&tstar)?;
    let mut out: Vec<EigenChoice> = cluster_spectrum(c.matrix())
        .into_iter()
        .map(|mu| {
            let nv = null_vector(c.matrix(), mu);
            let v = q.lift(&nv.vector);
            let residual = (tstar.matrix() * &v - &v * mu).norm();
            EigenChoice { alpha: mu.conj(), vector: v, residual, gap: nv.gap }
        })
        .collect();
    out.sort_by(|a, b| {
        b.gap
            .partial_cmp(&a.gap)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.alpha.norm().partial_cmp(&b.alpha.norm()).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(out)
}

pub fn choose_eigen(factor: &TensorFactor, index: usize) -> Result<EigenChoice> {
    let tol = factor.q.tol();
    let best = eigen_candidates(factor)
        .map_err(|_| Error::Eigen { factor: index, residual: f64::INFINITY, tol })?
        .into_iter()
        .next()
        .expect("a nonzero Q has an eigenvalue");
    if best.residual > tol {
        return Err(Error::Eigen { factor: index, residual: best.residual, tol });
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct EDecomposition {
    pub e_list: Vec<Subspace>,
    pub e: Subspace,
    /// `dim(S_i ⊖ T_i S_i)`.
    pub wandering_dims: Vec<usize>,
    pub containment_in_f: f64,
    /// Largest `‖P_{E_i}(M_i T̃_j M_i - λ_j M_i)‖` with `λ_i = 0` and
    /// `λ_j = α_j` otherwise.
    pub annihilation_residual: f64,
    /// Largest `‖P_{E_i} P_{E_j}‖`, `i ≠ j`.
    pub orthogonality_residual: f64,
}

/// `E_i = (S_i ⊖ T_i S_i) ⊗ (⊗_{j≠i} C v_j)`, placed in slot order.
pub fn wandering_e(sys: &TensorSystem, chain: &ChainDecomposition, choices: &[EigenChoice]) -> Result<EDecomposition> {
    let n = sys.n();
    let tol = sys.tol;
    if choices.len() != n {
        return Err(Error::Input(format!("{} eigenpairs for {n} factors", choices.len())));
    }
    for (i, ch) in choices.iter().enumerate() {
        let f = &sys.factors[i];
        let residual = (f.t.adjoint().matrix() * &ch.vector - &ch.vector * ch.alpha.conj()).norm();
        let outside = (&ch.vector - f.q.project(&ch.vector)?).norm();
        if residual.max(outside) > tol {
            return Err(Error::Eigen { factor: i, residual: residual.max(outside), tol });
        }
    }
    let lines: Vec<Subspace> = choices
        .iter()
        .map(|ch| orthonormalize(std::slice::from_ref(&ch.vector), ch.vector.len(), tol))
        .collect::<Result<_>>()?;
    let wanderings: Vec<Subspace> = sys.factors.iter().map(TensorFactor::wandering).collect::<Result<_>>()?;
    let e_list: Vec<Subspace> = (0..n)
        .map(|i| {
            (1..n).fold(if i == 0 { wanderings[0].clone() } else { lines[0].clone() }, |acc, j| {
                acc.kron(if j == i { &wanderings[j] } else { &lines[j] })
            })
        })
        .collect();
    let e = sum_ranges(sys, &e_list);
    let mut annihilation_residual: f64 = 0.0;
    let mut orthogonality_residual: f64 = 0.0;
    for i in 0..n {
        let pe = e_list[i].projector();
        let m = &chain.m_summands[i];
        for (j, t) in sys.t_tilde.iter().enumerate() {
            let lambda = if j == i { Scalar::new(0.0, 0.0) } else { choices[j].alpha };
            let shifted = &(&(m * t) * m) - &m.scale(lambda);
            annihilation_residual = annihilation_residual.max((&pe * &shifted).norm());
        }
        for other in &e_list[i + 1..] {
            orthogonality_residual = orthogonality_residual.max((&pe * &other.projector()).norm());
        }
    }
    Ok(EDecomposition {
        containment_in_f: e.containment_residual(&chain.f),
        e_list,
        e,
        wandering_dims: wanderings.iter().map(Subspace::dim).collect(),
        annihilation_residual,
        orthogonality_residual,
    })
}

/// Permutation matrix sending slot order `0..n` to `perm`: the image of
/// `e_{a_0} ⊗ … ⊗ e_{a_{n-1}}` is `e_{a_{perm[0]}} ⊗ … ⊗ e_{a_{perm[n-1]}}`.
pub fn slot_permutation(dims: &[usize], perm: &[usize]) -> Result<Operator> {
    let n = dims.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Input("slot permutation is not a permutation".into()));
        }
    }
    if perm.len() != n {
        return Err(Error::Input("slot permutation has the wrong length".into()));
    }
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut m = Matrix::zeros(total, total);
    let mut digits = vec![0usize; n];
    for idx in 0..total {
        let mut r = idx;
        for s in (0..n).rev() {
            digits[s] = r % dims[s];
            r /= dims[s];
        }
        let target = perm.iter().zip(&new_dims).fold(0, |acc, (&p, &d)| acc * d + digits[p]);
        m[(target, idx)] = Scalar::new(1.0, 0.0);
    }
    Operator::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_shift, prefix_coinvariant, SpaceKind};

    const TOL: f64 = 1e-10;

    fn shift_factor(kind: SpaceKind, m: usize, k: usize) -> TensorFactor {
        let model = make_shift(kind, m).unwrap();
        let q = prefix_coinvariant(&model, k, TOL).unwrap();
        TensorFactor::new(model.operator, q).unwrap()
    }

    fn hardy_2x2() -> TensorSystem {
        build_system(vec![shift_factor(SpaceKind::Hardy, 4, 2), shift_factor(SpaceKind::Hardy, 4, 2)], TOL).unwrap()
    }

    fn mixed_3() -> TensorSystem {
        build_system(
            vec![
                shift_factor(SpaceKind::Hardy, 3, 1),
                shift_factor(SpaceKind::Bergman, 3, 1),
                shift_factor(SpaceKind::Dirichlet, 3, 1),
            ],
            TOL,
        )
        .unwrap()
    }

    #[test]
    fn kronecker_placement() {
        let sys = build_system(vec![shift_factor(SpaceKind::Hardy, 2, 1), shift_factor(SpaceKind::Hardy, 2, 1)], TOL)
            .unwrap();
        let j = make_shift(SpaceKind::Hardy, 2).unwrap().operator;
        let i = Operator::identity(2);
        assert_eq!(sys.t_tilde[0], j.kron(&i));
        assert_eq!(sys.t_tilde[1], i.kron(&j));
        assert_eq!(sys.double_commute_residual, 0.0);
        assert_eq!(mixed_3().total_dim, 27);
    }

    #[test]
    fn rejects_non_coinvariant() {
        let j = make_shift(SpaceKind::Hardy, 3).unwrap().operator;
        let q = Subspace::coordinate(3, &[1], TOL).unwrap();
        assert!(matches!(TensorFactor::new(j, q), Err(Error::Model(_))));
    }

    #[test]
    fn joint_invariant_dims() {
        let sys = hardy_2x2();
        let routes = joint_invariant_routes(&sys);
        assert_eq!(routes.from_kronecker.dim(), 12);
        assert!(routes.route_angle < 1e-12);
        assert!(routes.expansion_residual < 1e-12);
        assert!(routes.invariance_residual < 1e-12);

        let j = make_shift(SpaceKind::Hardy, 3).unwrap().operator;
        let full = TensorFactor::new(j.clone(), Subspace::full(3, TOL)).unwrap();
        let sys = build_system(vec![full.clone(), full], TOL).unwrap();
        assert_eq!(joint_invariant_s(&sys).unwrap().dim(), 0);
    }

    #[test]
    fn x_projection_ranks() {
        let sys = hardy_2x2();
        let s = joint_invariant_s(&sys).unwrap();
        let xs = x_projections(&sys);
        let rep = x_report(&sys, &xs, &s);
        assert_eq!(rep.ranks, vec![4, 8]);
        assert_eq!(rep.orthogonality_residual, 0.0);
        assert!((rep.trace - 12.0).abs() < 1e-12);
        assert!(rep.sum_residual < 1e-12);
    }

    #[test]
    fn chain_dimensions() {
        let chain = f_chain(&hardy_2x2()).unwrap();
        assert_eq!(chain.f_chain.len(), 1);
        assert_eq!(chain.f.dim(), 8);
        assert!(chain.containment_residuals[0] < 1e-12);
        assert!(chain.difference_residuals[0] < 1e-12);

        let chain = f_chain(&mixed_3()).unwrap();
        assert_eq!(chain.f_chain.len(), 2);
        assert_eq!(chain.f.dim(), 6);
        assert!(chain.containment_residuals.iter().all(|&r| r < 1e-12));
        assert!(chain.difference_residuals.iter().all(|&r| r < 1e-12));
        assert!(chain.summand_sum_residuals.iter().all(|&r| r < 1e-12));
    }

    #[test]
    fn summands_follow_closed_form() {
        use Slot::*;
        // n = 3: F_1 = X_1 ⊕ X_2 ⊕ Q̃_2 X_3, F_2 = X_1 ⊕ Q̃_1 X_2 ⊕ Q̃_1 Q̃_2 X_3
        assert_eq!(chain_summand(3, 0, 0).0, vec![P, Q, Q]);
        assert_eq!(chain_summand(3, 0, 1).0, vec![I, P, Q]);
        assert_eq!(chain_summand(3, 0, 2).0, vec![I, Q, P]);
        assert_eq!(chain_summand(3, 1, 1).0, vec![Q, P, Q]);
        assert_eq!(chain_summand(3, 1, 2).0, vec![Q, Q, P]);
        assert_eq!(chain_summand(2, 0, 1).0, vec![Q, P]);
    }

    #[test]
    fn structure_residuals_vanish() {
        for sys in [hardy_2x2(), mixed_3()] {
            let chain = f_chain(&sys).unwrap();
            let rep = verify_compression_structure(&sys, &chain, Execution::Sequential).unwrap();
            assert!(rep.max_residual() < 1e-10, "{rep:?}");
        }
    }

    #[test]
    fn block_orthogonality_fails_below_the_final_level() {
        let sys = mixed_3();
        let chain = f_chain(&sys).unwrap();
        let rep = verify_compression_structure(&sys, &chain, Execution::Sequential).unwrap();
        // ‖P T Q‖ for the Dirichlet factor is its first weight √2
        assert!((rep.block_orthogonality[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(rep.commutativity[1] < 1e-12);
    }

    #[test]
    fn degenerate_slot_is_well_formed() {
        let j = make_shift(SpaceKind::Hardy, 3).unwrap().operator;
        let zero = TensorFactor::new(j, Subspace::zero(3, TOL)).unwrap();
        let sys = build_system(vec![zero, shift_factor(SpaceKind::Hardy, 3, 1)], TOL).unwrap();
        let chain = f_chain(&sys).unwrap();
        assert_eq!(chain.s.dim(), 9);
        assert_eq!(chain.f.dim(), 3);
        let rep = verify_compression_structure(&sys, &chain, Execution::Sequential).unwrap();
        assert!(rep.max_residual() < 1e-10);
    }

    #[test]
    fn e_decomposition_hardy() {
        let sys = hardy_2x2();
        let chain = f_chain(&sys).unwrap();
        let choices: Vec<EigenChoice> =
            sys.factors.iter().enumerate().map(|(i, f)| choose_eigen(f, i).unwrap()).collect();
        for ch in &choices {
            assert!(ch.alpha.norm() < 1e-12);
        }
        let e = wandering_e(&sys, &chain, &choices).unwrap();
        assert_eq!(e.e.dim(), 2);
        assert_eq!(e.wandering_dims, vec![1, 1]);
        assert!(e.containment_in_f < 1e-12);
        assert!(e.annihilation_residual < 1e-12);
    }

    #[test]
    fn slot_permutation_round_trip() {
        let a = shift_factor(SpaceKind::Hardy, 3, 1);
        let b = shift_factor(SpaceKind::Bergman, 4, 2);
        let c = shift_factor(SpaceKind::Dirichlet, 2, 1);
        let abc = build_system(vec![a.clone(), b.clone(), c.clone()], TOL).unwrap();
        let perm = [2, 0, 1];
        let cab = build_system(vec![c, a, b], TOL).unwrap();
        let p = slot_permutation(&abc.dims, &perm).unwrap();
        for (slot, &src) in perm.iter().enumerate() {
            let moved = &(&p * &abc.t_tilde[src]) * &p.adjoint();
            assert!((&moved - &cab.t_tilde[slot]).norm() < 1e-14);
        }
        let s1 = joint_invariant_s(&abc).unwrap();
        let s2 = joint_invariant_s(&cab).unwrap();
        let moved = s1.image(&p).unwrap();
        assert!(moved.max_principal_angle(&s2) < 1e-12);
        let back = moved.image(&p.adjoint()).unwrap();
        assert!(back.max_principal_angle(&s1) < 1e-12);
    }
}
