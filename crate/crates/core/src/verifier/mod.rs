//! Scenario runner: builds the factors, checks the hypotheses of the
//! additive formula, runs every structural identity on the tensor system
//! and compares `mult(S)` with `Σ dim(S_i ⊖ T_i S_i)`.
//!
//! Equality is asserted only when every factor is cyclic, has the
//! generating wandering subspace property on `S_i`, and `T_iᴴ|_{Q_i}` has
//! an eigenvector. Otherwise the formula is downgraded to the inequality
//! `mult(S) ≥ mult(P_F T̃|_F)`, which needs no hypotheses.

pub mod report;
pub mod scenario;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde_json::json;

pub use report::{Dimensions, FactorHypotheses, Hypotheses, Multiplicities, Report, Status, Verdict};
pub use scenario::{resolve_factor, Check, CoinvariantSpec, FactorSpec, ModelSpec, ResolvedFactor, Scenario};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{cluster_spectrum, Scalar, Subspace};
use crate::multiplicity::{
    assemble_samples, compression_power_residual, has_gws, krylov_closure, multiplicity, random_unit_vectors,
    shifted_closure_angle, wandering_subspace, MultiplicityOptions, MultiplicityResult, OperatorTuple, SearchOptions,
};
use crate::tensor::{
    build_system, choose_eigen, f_chain, joint_invariant_routes, verify_compression_structure, wandering_e, x_report,
    ChainDecomposition, JointInvariant, SlotProduct, StructureReport, TensorFactor, TensorSystem,
};

/// Identity residuals pass at `RESIDUAL_FACTOR * tol`.
pub const RESIDUAL_FACTOR: f64 = 10.0;
/// Principal-angle threshold of the shift lemma, in units of `tol`.
pub const ANGLE_FACTOR: f64 = 100.0;
const RANDOM_POINTS: usize = 32;
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Directory against which relative matrix paths are resolved.
    pub base_dir: PathBuf,
    pub exec: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { base_dir: PathBuf::from("."), exec: Execution::default() }
    }
}

fn config(i: usize, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("factor {i}: {msg}")),
        other => Error::Config(format!("factor {i}: {other}")),
    }
}

/// Residual table and its verdict against `limit`.
struct Residuals {
    map: BTreeMap<String, f64>,
    limit: f64,
}

impl Residuals {
    fn new(limit: f64) -> Self {
        Residuals { map: BTreeMap::new(), limit }
    }

    fn add(&mut self, name: impl Into<String>, r: f64) {
        self.map.insert(name.into(), r);
    }

    fn add_all(&mut self, prefix: &str, rs: &[f64]) {
        for (i, &r) in rs.iter().enumerate() {
            self.add(format!("{prefix}[{i}]"), r);
        }
    }

    fn worst(&self) -> (Option<&String>, f64) {
        self.map
            .iter()
            .fold((None, 0.0), |(k, w), (name, &r)| if r > w || r.is_nan() { (Some(name), r) } else { (k, w) })
    }

    fn verdict(self, what: &str) -> Verdict {
        let (name, worst) = self.worst();
        let ok = worst <= self.limit;
        let summary = match (ok, name) {
            (true, _) => format!("{what}: max residual {worst:.2e} <= {:.1e}", self.limit),
            (false, Some(n)) => format!("{what}: {n} = {worst:.2e} exceeds {:.1e}", self.limit),
            (false, None) => format!("{what}: residual not finite"),
        };
        let mut v = Verdict::new(if ok { Status::Pass } else { Status::Fail }, summary);
        v.residuals = self.map;
        v
    }
}

fn interval(m: &MultiplicityResult) -> String {
    if m.certified {
        m.upper.to_string()
    } else {
        format!("[{}, {}]", m.lower, m.upper)
    }
}

/// Status of `a ≥ b` for two multiplicity intervals.
fn at_least(a: &MultiplicityResult, b: &MultiplicityResult) -> Status {
    if a.lower >= b.upper {
        Status::Pass
    } else if a.upper < b.lower {
        Status::Fail
    } else {
        Status::Uncertified
    }
}

fn chain_error(e: &Error) -> Verdict {
    Verdict::new(Status::Fail, format!("chain construction failed: {e}"))
}

struct Pipeline<'a> {
    scenario: &'a Scenario,
    sys: TensorSystem,
    tuple: OperatorTuple,
    routes: JointInvariant,
    chain: std::result::Result<ChainDecomposition, Error>,
    structure: Option<std::result::Result<StructureReport, Error>>,
    hyp: Hypotheses,
    mults: Multiplicities,
    wandering_dims: Vec<usize>,
}

impl Pipeline<'_> {
    fn tol(&self) -> f64 {
        self.scenario.tol
    }

    fn limit(&self) -> f64 {
        RESIDUAL_FACTOR * self.tol()
    }

    fn projection_identities(&self) -> Verdict {
        let mut r = Residuals::new(self.limit());
        r.add("route_angle", self.routes.route_angle);
        r.add("projection_expansion", self.routes.expansion_residual);
        r.add("s_invariance", self.routes.invariance_residual);
        r.add("projection_commutators", self.sys.projection_commute_residual);
        let s = &self.routes.from_kronecker;
        let xs = match &self.chain {
            Ok(c) => c.x.clone(),
            Err(_) => crate::tensor::x_projections(&self.sys),
        };
        let xr = x_report(&self.sys, &xs, s);
        r.add("x_idempotence", xr.idempotence_residual);
        r.add("x_orthogonality", xr.orthogonality_residual);
        r.add("x_sum_minus_p_s", xr.sum_residual);
        r.add("x_trace_minus_dim_s", (xr.trace - s.dim() as f64).abs());
        if let Ok(c) = &self.chain {
            r.add_all("f_summand_sum", &c.summand_sum_residuals);
        }
        let mut v = r.verdict("projection identities");
        v.details = json!({ "x_ranks": xr.ranks, "dim_s": s.dim() });
        v
    }

    fn chain_check(&self) -> Verdict {
        let c = match &self.chain {
            Ok(c) => c,
            Err(e) => return chain_error(e),
        };
        let mut r = Residuals::new(self.limit());
        r.add_all("containment", &c.containment_residuals);
        r.add_all("difference_closed_form", &c.difference_residuals);
        let mut v = r.verdict("S ⊇ F_1 ⊇ … ⊇ F");
        let dims: Vec<usize> = c.levels().iter().map(|l| l.dim()).collect();
        let n = self.sys.n();
        let f_rank: usize = (0..n)
            .map(|j| {
                let mut sp = SlotProduct::identity(n).times_p(j).expect("identity slot");
                for k in (0..n).filter(|&k| k != j) {
                    sp = sp.times_q(k).expect("identity slot");
                }
                sp.rank(&self.sys)
            })
            .sum();
        let nonincreasing = dims.windows(2).all(|w| w[0] >= w[1]);
        if !nonincreasing || c.f.dim() != f_rank {
            v.status = Status::Fail;
            v.summary = format!("dimensions {dims:?} with dim F {} against rank sum {f_rank}", c.f.dim());
        }
        v.details = json!({ "dims": dims, "f_rank_sum": f_rank });
        v
    }

    fn semi_invariance(&self) -> Verdict {
        let (c, structure) = match (&self.chain, &self.structure) {
            (Ok(c), Some(Ok(s))) => (c, s),
            (Err(e), _) => return chain_error(e),
            (_, Some(Err(e))) => return Verdict::new(Status::Fail, format!("structure check failed: {e}")),
            (_, None) => unreachable!("structure runs whenever the chain exists"),
        };
        let mut r = Residuals::new(self.limit());
        r.add_all("semi_invariance", &structure.semi_invariance);
        let n = self.sys.n();
        let pp = SlotProduct::identity(n)
            .times_p(n - 2)
            .and_then(|sp| sp.times_p(n - 1))
            .expect("identity slots")
            .range(&self.sys);
        r.add(
            "compression_powers_s_minus_pp",
            compression_power_residual(&self.tuple, &c.f_chain[0], &c.s, self.scenario.seed),
        );
        r.add("pp_invariance", self.tuple.ops().iter().map(|t| pp.invariance_residual(t)).fold(0.0, f64::max));
        let mut v = r.verdict("semi-invariance");

        // mult(S) ≥ mult(F_1) ≥ … ≥ mult(F)
        let mut ladder = vec![&self.mults.s];
        ladder.extend(self.mults.chain.iter());
        let steps: Vec<Status> = ladder.windows(2).map(|w| at_least(w[0], w[1])).collect();
        let ladder_status = steps.iter().fold(Status::Pass, |a, &b| a.and(b));
        let labels: Vec<String> = ladder.iter().map(|m| interval(m)).collect();
        v.status = v.status.and(ladder_status);
        v.summary = format!("{}; mult chain {}", v.summary, labels.join(" >= "));
        v.details = json!({ "mult_chain": labels, "steps": steps });
        v
    }

    fn commutativity(&self) -> Verdict {
        let mut r = Residuals::new(self.limit());
        r.add("double_commutators", self.sys.double_commute_residual);
        let mut details = json!(null);
        match &self.structure {
            Some(Ok(s)) => {
                r.add_all("compressed_commutator", &s.commutativity);
                r.add("f_block_orthogonality", *s.block_orthogonality.last().unwrap_or(&0.0));
                r.add("f_block_diagonal", *s.block_diagonal.last().unwrap_or(&0.0));
                r.add("f_power_preservation", s.power_preservation);
                let k = s.block_orthogonality.len().saturating_sub(1);
                details = json!({
                    "intermediate_block_orthogonality": &s.block_orthogonality[..k],
                    "intermediate_block_diagonal": &s.block_diagonal[..k],
                });
            }
            Some(Err(e)) => return Verdict::new(Status::Fail, format!("structure check failed: {e}")),
            None => {
                if let Err(e) = &self.chain {
                    return chain_error(e);
                }
            }
        }
        let mut v = r.verdict("commutativity");
        v.details = details;
        v
    }

    fn shift_lemma(&self) -> Result<Verdict> {
        let tol = self.tol();
        let n = self.sys.n();
        let big_n = self.sys.total_dim;
        let angle_limit = ANGLE_FACTOR * tol;
        let g = random_unit_vectors(big_n, 2, self.scenario.seed);
        let alphas: Option<Vec<Scalar>> =
            self.hyp.factors.iter().map(|f| f.point_spectrum.as_ref().map(|e| e.alpha)).collect();
        let mut points: Vec<Vec<Scalar>> = Vec::new();
        if let Some(a) = &alphas {
            points.push(a.clone());
        }
        points.extend(crate::multiplicity::polydisc_samples(n, 2, self.scenario.seed ^ 0x5151));

        let mut angles = Residuals::new(angle_limit);
        for (k, lam) in points.iter().enumerate() {
            angles.add(format!("full_tuple[{k}]"), shifted_closure_angle(&self.tuple, &g, lam, tol)?);
            if let Ok(c) = &self.chain {
                if c.f.dim() > 0 {
                    let plain = krylov_closure(&self.tuple, &g, Some(&c.f), tol)?;
                    let shifted = krylov_closure(&self.tuple.shifted(lam)?, &g, Some(&c.f), tol)?;
                    angles.add(format!("f_compression[{k}]"), plain.max_principal_angle(&shifted));
                }
            }
        }
        let mut v = angles.verdict("closure unchanged by shifts");
        let mut details = serde_json::Map::new();
        match (&self.chain, &alphas) {
            (Ok(c), Some(_)) => {
                let choices: Vec<_> =
                    self.hyp.factors.iter().map(|f| f.point_spectrum.clone().expect("checked above")).collect();
                let e = wandering_e(&self.sys, c, &choices)?;
                let mut r = Residuals::new(self.limit());
                r.add("e_annihilation", e.annihilation_residual);
                r.add("e_in_f", e.containment_in_f);
                r.add("e_orthogonality", e.orthogonality_residual);
                let dim_ok = e.e.dim() == e.wandering_dims.iter().sum::<usize>();
                let ev = r.verdict("E");
                v.status = v.status.and(ev.status).and(if dim_ok { Status::Pass } else { Status::Fail });
                v.summary = format!("{}; {}; dim E = {}", v.summary, ev.summary, e.e.dim());
                v.residuals.extend(ev.residuals);
                details.insert("dim_e".into(), json!(e.e.dim()));
                details.insert("e_dims".into(), json!(e.e_list.iter().map(Subspace::dim).collect::<Vec<_>>()));
            }
            _ => {
                details.insert("e_skipped".into(), json!("no eigenpair for some factor or no chain"));
            }
        }
        v.details = serde_json::Value::Object(details);
        Ok(v)
    }

    fn gws(&self) -> Result<Verdict> {
        let mut rows = Vec::new();
        let mut status = Status::Pass;
        let mut consider = |label: String, gws: bool, wdim: usize, m: &MultiplicityResult| {
            let consistent = !(gws && m.certified) || m.upper == wdim;
            if !consistent {
                status = Status::Fail;
            }
            rows.push(json!({
                "space": label, "gws": gws, "wandering_dim": wdim, "mult": interval(m), "consistent": consistent,
            }));
        };
        let s = &self.routes.from_kronecker;
        consider("S".into(), has_gws(&self.tuple, s)?, wandering_subspace(&self.tuple, s)?.dim(), &self.mults.s);
        if let Ok(c) = &self.chain {
            for (i, (f, m)) in c.f_chain.iter().zip(&self.mults.chain).enumerate() {
                consider(
                    format!("F_{}", i + 1),
                    has_gws(&self.tuple, f)?,
                    wandering_subspace(&self.tuple, f)?.dim(),
                    m,
                );
            }
        }
        for (i, (h, m)) in self.hyp.factors.iter().zip(&self.mults.factors).enumerate() {
            consider(format!("S_{}", i + 1), h.gws, h.wandering_dim, m);
        }
        let summary = if status == Status::Pass {
            "mult equals wandering dimension wherever GWS holds and mult is certified".to_string()
        } else {
            "GWS space with certified mult different from its wandering dimension".to_string()
        };
        let mut v = Verdict::new(status, summary);
        v.details = json!(rows);
        Ok(v)
    }

    fn inequality(&self) -> Verdict {
        let Some(mf) = self.mults.chain.last() else {
            return match &self.chain {
                Err(e) => chain_error(e),
                Ok(_) => unreachable!("n >= 2 gives a chain level"),
            };
        };
        let ms = &self.mults.s;
        let status = at_least(ms, mf);
        let sum = self.wandering_dims.iter().sum::<usize>();
        let mut v = Verdict::new(
            status,
            format!("mult(S) = {} >= {} = mult(P_F T|_F); equality not asserted", interval(ms), interval(mf)),
        );
        v.details = json!({
            "mode": "inequality",
            "mult_s": [ms.lower, ms.upper],
            "mult_f": [mf.lower, mf.upper],
            "wandering_sum": sum,
            "failed_hypotheses": self.hyp.failed,
        });
        v
    }

    fn additive(&self) -> Verdict {
        if !self.hyp.all_hold {
            let mut v = self.inequality();
            v.summary = format!("downgraded ({}): {}", self.hyp.failed.join("; "), v.summary);
            return v;
        }
        let ms = &self.mults.s;
        let sum: usize = self.wandering_dims.iter().sum();
        let status = if ms.certified {
            if ms.upper == sum {
                Status::Pass
            } else {
                Status::Fail
            }
        } else if ms.lower > sum || ms.upper < sum {
            Status::Fail
        } else {
            Status::Uncertified
        };
        let terms: Vec<String> = self.wandering_dims.iter().map(usize::to_string).collect();
        let rel = if status == Status::Pass { "=" } else { "vs" };
        let mut v = Verdict::new(status, format!("mult(S) = {} {rel} {} = {sum}", interval(ms), terms.join(" + ")));
        v.details = json!({
            "mode": "equality",
            "mult_s": [ms.lower, ms.upper],
            "certified": ms.certified,
            "wandering_dims": self.wandering_dims,
            "wandering_sum": sum,
        });
        v
    }
}

/// Points for the local corank of the tensor tuple: the origin, every
/// combination of (clustered) eigenvalues of the factors, and random points.
pub fn tensor_samples(sys: &TensorSystem, seed: u64) -> Vec<Vec<Scalar>> {
    let per_slot: Vec<Vec<Scalar>> = sys
        .factors
        .iter()
        .map(|f| cluster_spectrum(f.t.matrix()))
        .collect();
    assemble_samples(sys.n(), &per_slot, seed, RANDOM_POINTS)
}

pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<Report> {
    s.validate()?;
    let start = Instant::now();
    let tol = s.tol;
    let search = SearchOptions { trials: s.trials, seed: s.seed, exec: opts.exec };
    let mopts = |samples: Option<Vec<Vec<Scalar>>>| MultiplicityOptions {
        search,
        lambda_samples: samples,
        random_points: RANDOM_POINTS,
    };

    let mut labels = Vec::new();
    let mut factors = Vec::new();
    for (i, spec) in s.factors.iter().enumerate() {
        let r = resolve_factor(spec, &opts.base_dir, tol).map_err(|e| config(i, e))?;
        labels.push(r.label);
        factors.push(TensorFactor::new(r.t, r.q).map_err(|e| config(i, e))?);
    }

    let mut fh = Vec::new();
    let mut failed = Vec::new();
    let mut factor_mults = Vec::new();
    for (i, (f, label)) in factors.iter().zip(&labels).enumerate() {
        let tup = OperatorTuple::single(f.t.clone());
        let ambient = multiplicity(&tup, &Subspace::full(f.dim(), tol), &mopts(None))?;
        let cyclic = ambient.certified && ambient.upper == 1;
        if !cyclic {
            failed.push(format!("factor {}: T is not cyclic (mult {})", i + 1, interval(&ambient)));
        }
        let gws = has_gws(&tup, &f.s)?;
        if !gws {
            failed.push(format!("factor {}: T|S lacks the generating wandering subspace property", i + 1));
        }
        let point_spectrum = choose_eigen(f, i).ok();
        if point_spectrum.is_none() {
            failed.push(format!("factor {}: no eigenvector of T*|Q within tolerance", i + 1));
        }
        factor_mults.push(multiplicity(&tup, &f.s, &mopts(None))?);
        fh.push(FactorHypotheses {
            label: label.clone(),
            dim: f.dim(),
            q_dim: f.q.dim(),
            ambient_multiplicity: ambient,
            cyclic,
            wandering_dim: f.wandering()?.dim(),
            gws,
            point_spectrum,
            coinvariance_residual: f.coinvariance_residual,
        });
    }
    let wandering_dims: Vec<usize> = fh.iter().map(|h| h.wandering_dim).collect();
    let hyp = Hypotheses { factors: fh, all_hold: failed.is_empty(), failed };

    let sys = build_system(factors, tol)?;
    let tuple = sys.tuple();
    let routes = joint_invariant_routes(&sys);
    let chain = f_chain(&sys);
    let structure = chain.as_ref().ok().map(|c| verify_compression_structure(&sys, c, opts.exec));

    let samples = tensor_samples(&sys, s.seed);
    let ms = multiplicity(&tuple, &routes.from_kronecker, &mopts(Some(samples.clone())))?;
    let chain_mults = match &chain {
        Ok(c) => c
            .f_chain
            .iter()
            .map(|f| multiplicity(&tuple, f, &mopts(Some(samples.clone()))))
            .collect::<Result<Vec<_>>>()?,
        Err(_) => Vec::new(),
    };
    let dimensions = Dimensions {
        factors: sys.dims.clone(),
        total: sys.total_dim,
        s: routes.from_kronecker.dim(),
        chain: chain.as_ref().map(|c| c.f_chain.iter().map(Subspace::dim).collect()).unwrap_or_default(),
    };
    let p = Pipeline {
        scenario: s,
        sys,
        tuple,
        routes,
        chain,
        structure,
        hyp,
        mults: Multiplicities { s: ms, chain: chain_mults, factors: factor_mults },
        wandering_dims,
    };

    let mut verdicts = BTreeMap::new();
    for &check in &s.checks {
        let v = match check {
            Check::ProjectionIdentities => p.projection_identities(),
            Check::Chain => p.chain_check(),
            Check::SemiInvariance => p.semi_invariance(),
            Check::Commutativity => p.commutativity(),
            Check::ShiftLemma => p.shift_lemma()?,
            Check::Gws => p.gws()?,
            Check::AdditiveFormula => p.additive(),
            Check::InequalityOnly => p.inequality(),
        };
        verdicts.insert(check.name().to_string(), v);
    }
    let passed = verdicts.values().all(|v| v.status == Status::Pass);
    Ok(Report {
        scenario: s.clone(),
        tol,
        trials: s.trials,
        seed: s.seed,
        wandering_sum: p.wandering_dims.iter().sum(),
        hypotheses: p.hyp,
        dimensions,
        multiplicities: p.mults,
        verdicts,
        passed,
        wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
