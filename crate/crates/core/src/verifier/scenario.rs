//! Declarative scenario files.
//!
//! ```json
//! {
//!   "name": "hardy-2x2",
//!   "factors": [
//!     {"model": {"shift": {"kind": "hardy", "m": 4}}, "coinvariant": {"prefix": {"k": 2}}},
//!     {"model": {"quotient": {"p_roots": [{"root": [0.3, 0]}, {"root": [-0.5, 0]}]}},
//!      "coinvariant": {"ideal": {"q_roots": [{"root": [0.3, 0]}]}}},
//!     {"model": {"matrix": {"file": "j2j2.txt"}}, "coinvariant": {"basis": {"file": "q.txt"}}}
//!   ],
//!   "tol": 1e-10, "trials": 64, "seed": 42,
//!   "checks": ["chain", "additive_formula"]
//! }
//! ```
//!
//! `tol`, `trials`, `seed` and `checks` are optional. Matrix files use the
//! format of [`crate::io`] and are resolved relative to the scenario file.
//! A `basis` file lists the spanning vectors of `Q` as columns.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::load_matrix;
use crate::linalg::{orthonormalize_columns, Operator, Subspace, DEFAULT_TOL};
use crate::model::{ideal_subspace, make_quotient, make_shift, prefix_coinvariant, Root, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    ProjectionIdentities,
    Chain,
    SemiInvariance,
    Commutativity,
    ShiftLemma,
    Gws,
    AdditiveFormula,
    InequalityOnly,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::ProjectionIdentities,
        Check::Chain,
        Check::SemiInvariance,
        Check::Commutativity,
        Check::ShiftLemma,
        Check::Gws,
        Check::AdditiveFormula,
        Check::InequalityOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::ProjectionIdentities => "projection_identities",
            Check::Chain => "chain",
            Check::SemiInvariance => "semi_invariance",
            Check::Commutativity => "commutativity",
            Check::ShiftLemma => "shift_lemma",
            Check::Gws => "gws",
            Check::AdditiveFormula => "additive_formula",
            Check::InequalityOnly => "inequality_only",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Shift { kind: SpaceKind, m: usize },
    Quotient { p_roots: Vec<Root> },
    Matrix { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoinvariantSpec {
    Prefix { k: usize },
    Ideal { q_roots: Vec<Root> },
    Basis { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub model: ModelSpec,
    pub coinvariant: CoinvariantSpec,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_trials() -> usize {
    64
}

fn default_seed() -> u64 {
    42
}

fn all_checks() -> BTreeSet<Check> {
    Check::ALL.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub factors: Vec<FactorSpec>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "all_checks")]
    pub checks: BTreeSet<Check>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(format!("bad scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.len() < 2 {
            return Err(Error::Config(format!("scenario `{}` needs at least two factors", self.name)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config("tol must be a positive number".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        Ok(())
    }
}

/// A factor spec turned into an operator and a co-invariant subspace.
#[derive(Debug, Clone)]
pub struct ResolvedFactor {
    pub label: String,
    pub t: Operator,
    pub q: Subspace,
}

fn resolve_path(base: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        base.join(file)
    }
}

pub fn resolve_model(spec: &ModelSpec, base: &Path) -> Result<(String, Operator)> {
    match spec {
        ModelSpec::Shift { kind, m } => {
            let model = make_shift(kind.clone(), *m)?;
            Ok((format!("{}[{m}]", kind.label()), model.operator))
        }
        ModelSpec::Quotient { p_roots } => {
            let model = make_quotient(p_roots)?;
            Ok((format!("quotient[{}]", model.m), model.operator))
        }
        ModelSpec::Matrix { file } => {
            let path = resolve_path(base, file);
            let t = Operator::new(load_matrix(&path)?)?;
            Ok((format!("matrix[{}]", path.display()), t))
        }
    }
}

pub fn resolve_factor(spec: &FactorSpec, base: &Path, tol: f64) -> Result<ResolvedFactor> {
    let (label, t) = resolve_model(&spec.model, base)?;
    let q = match (&spec.coinvariant, &spec.model) {
        (CoinvariantSpec::Prefix { k }, ModelSpec::Shift { kind, m }) => {
            prefix_coinvariant(&make_shift(kind.clone(), *m)?, *k, tol)?
        }
        (CoinvariantSpec::Prefix { .. }, _) => {
            return Err(Error::Config("prefix co-invariant subspaces need a shift model".into()))
        }
        (CoinvariantSpec::Ideal { q_roots }, ModelSpec::Quotient { p_roots }) => {
            ideal_subspace(&make_quotient(p_roots)?, q_roots, tol)?.complement()
        }
        (CoinvariantSpec::Ideal { .. }, _) => {
            return Err(Error::Config("ideal co-invariant subspaces need a quotient model".into()))
        }
        (CoinvariantSpec::Basis { file }, _) => {
            let m = load_matrix(&resolve_path(base, file))?;
            if m.nrows() != t.dim() {
                return Err(Error::Config(format!(
                    "basis file has {} rows but the operator acts on C^{}",
                    m.nrows(),
                    t.dim()
                )));
            }
            orthonormalize_columns(&m, tol)
        }
    };
    Ok(ResolvedFactor { label, t, q })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"{
          "name": "x",
          "factors": [
            {"model": {"shift": {"kind": "hardy", "m": 4}}, "coinvariant": {"prefix": {"k": 2}}},
            {"model": {"shift": {"kind": {"weighted_bergman": 3}, "m": 3}}, "coinvariant": {"prefix": {"k": 1}}},
            {"model": {"quotient": {"p_roots": [{"root": [0.3, 0]}, {"root": [-0.5, 0], "mult": 2}]}},
             "coinvariant": {"ideal": {"q_roots": [{"root": [0.3, 0]}]}}}
          ],
          "checks": ["chain", "additive_formula"]
        }"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.tol, 1e-10);
        assert_eq!(s.trials, 64);
        assert_eq!(s.seed, 42);
        assert_eq!(s.checks.len(), 2);
        let f = resolve_factor(&s.factors[2], Path::new("."), s.tol).unwrap();
        assert_eq!(f.t.dim(), 3);
        assert_eq!(f.q.dim(), 1);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(Scenario::from_json("{"), Err(Error::Config(_))));
        let one = r#"{"name":"x","factors":[{"model":{"shift":{"kind":"hardy","m":4}},"coinvariant":{"prefix":{"k":2}}}]}"#;
        assert!(matches!(Scenario::from_json(one), Err(Error::Config(_))));
        let spec = FactorSpec {
            model: ModelSpec::Quotient { p_roots: vec![Root::new(crate::linalg::real(0.1), 1)] },
            coinvariant: CoinvariantSpec::Prefix { k: 1 },
        };
        assert!(matches!(resolve_factor(&spec, Path::new("."), 1e-10), Err(Error::Config(_))));
        let missing = FactorSpec {
            model: ModelSpec::Matrix { file: "does-not-exist.txt".into() },
            coinvariant: CoinvariantSpec::Prefix { k: 1 },
        };
        assert!(matches!(resolve_factor(&missing, Path::new("."), 1e-10), Err(Error::Config(_))));
    }
}
