use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::scenario::Scenario;
use crate::multiplicity::MultiplicityResult;
use crate::tensor::EigenChoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Uncertified,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Uncertified => "UNCERTIFIED",
        }
    }

    /// Combined status: any failure fails, then any uncertainty.
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Uncertified, _) | (_, Status::Uncertified) => Status::Uncertified,
            _ => Status::Pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub summary: String,
    pub residuals: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl Verdict {
    pub fn new(status: Status, summary: impl Into<String>) -> Self {
        Verdict { status, summary: summary.into(), residuals: BTreeMap::new(), details: serde_json::Value::Null }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorHypotheses {
    pub label: String,
    pub dim: usize,
    pub q_dim: usize,
    /// `mult_{T_i}(H_i)`; the hypothesis is that it equals 1.
    pub ambient_multiplicity: MultiplicityResult,
    pub cyclic: bool,
    pub wandering_dim: usize,
    pub gws: bool,
    /// Chosen eigenpair of `T_iᴴ|_{Q_i}`, absent when none passes the
    /// residual test.
    pub point_spectrum: Option<EigenChoice>,
    pub coinvariance_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypotheses {
    pub factors: Vec<FactorHypotheses>,
    pub all_hold: bool,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dimensions {
    pub factors: Vec<usize>,
    pub total: usize,
    pub s: usize,
    /// `F_1, …, F_{n-1}`; empty when the chain could not be built.
    pub chain: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Multiplicities {
    pub s: MultiplicityResult,
    /// Compressions to `F_1, …, F_{n-1}`; the last is `F`.
    pub chain: Vec<MultiplicityResult>,
    /// `T_i|_{S_i}`.
    pub factors: Vec<MultiplicityResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: Scenario,
    pub tol: f64,
    pub trials: usize,
    pub seed: u64,
    pub hypotheses: Hypotheses,
    pub dimensions: Dimensions,
    pub multiplicities: Multiplicities,
    /// `Σ dim(S_i ⊖ T_i S_i)`.
    pub wandering_sum: usize,
    pub verdicts: BTreeMap<String, Verdict>,
    pub passed: bool,
    pub wall_clock_ms: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// The JSON report with the wall-clock field zeroed, for comparisons.
    pub fn to_json_without_clock(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_ms = 0.0;
        r.to_json()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} (seed {}, tol {:e})", self.scenario.name, self.seed, self.tol);
        let m = &self.multiplicities.s;
        let _ = writeln!(
            out,
            "  mult(S) in [{}, {}]{}, sum of wandering dims {}",
            m.lower,
            m.upper,
            if m.certified { " certified" } else { "" },
            self.wandering_sum
        );
        if !self.hypotheses.all_hold {
            let _ = writeln!(out, "  failed hypotheses: {}", self.hypotheses.failed.join("; "));
        }
        for (name, v) in &self.verdicts {
            let _ = writeln!(out, "  {name}: {} {}", v.status.label(), v.summary);
        }
        let _ = writeln!(out, "  {} in {:.1} ms", if self.passed { "PASS" } else { "FAIL" }, self.wall_clock_ms);
        out
    }
}
