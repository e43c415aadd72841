//! Report types shared by the certifiers and the CLI.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::json::{tuple_to_json, MatrixJson};
use crate::linalg::{CMatrix, OperatorTuple};

/// Serialized offending inputs of a failed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub dim: usize,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtest: Option<String>,
    pub inputs: BTreeMap<String, Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl Witness {
    pub fn new(trial: usize, dim: usize, margin: f64) -> Self {
        Self {
            trial,
            dim,
            margin,
            subtest: None,
            inputs: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn tuple(mut self, name: &str, t: &OperatorTuple) -> Self {
        self.inputs.insert(name.to_string(), tuple_to_json(t));
        self
    }

    pub fn matrix(mut self, name: &str, m: &CMatrix) -> Self {
        self.inputs.insert(name.to_string(), vec![MatrixJson::from(m)]);
        self
    }

    pub fn param(mut self, name: &str, v: f64) -> Self {
        self.params.insert(name.to_string(), v);
        self
    }

    pub fn subtest(mut self, tag: &str) -> Self {
        self.subtest = Some(tag.to_string());
        self
    }

    pub fn input_tuple(&self, name: &str) -> crate::Result<OperatorTuple> {
        let items = self
            .inputs
            .get(name)
            .ok_or_else(|| crate::Error::Config(format!("witness has no input `{name}`")))?;
        crate::json::tuple_from_json(items)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Monotone,
    Concave,
    DerivativeCp,
    ReIndependent,
    Affine,
    HypographConvex,
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("claim serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Sampling found no counterexample. This is evidence, not a proof.
    NoViolationFound,
    Violated,
}

/// Outcome of a sampling certifier.
///
/// `outcome == Violated` exactly when a witness is present, which happens
/// exactly when `worst_margin < −tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub claim: Claim,
    pub spec: String,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub outcome: Outcome,
    pub worst_margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub_reports: Vec<CertificateReport>,
    /// Per-trial margins, kept for CSV export only.
    #[serde(skip)]
    pub margins: Vec<f64>,
}

impl CertificateReport {
    pub fn violated(&self) -> bool {
        self.outcome == Outcome::Violated
    }

    pub fn passed(&self) -> bool {
        !self.violated()
    }

    /// Folds a sub-report in: the parent is violated if either is.
    pub fn absorb(&mut self, sub: CertificateReport) {
        if sub.worst_margin < self.worst_margin {
            self.worst_margin = sub.worst_margin;
        }
        if sub.violated() && !self.violated() {
            self.outcome = Outcome::Violated;
            self.witness = sub.witness.clone();
        }
        self.sub_reports.push(sub);
    }

    pub fn margins_csv(&self) -> String {
        let mut out = String::from("trial,margin\n");
        for (i, m) in self.margins.iter().enumerate() {
            out.push_str(&format!("{i},{m:e}\n"));
        }
        out
    }
}

/// Accumulates per-trial margins and the first violation.
#[derive(Debug)]
pub struct Tally {
    claim: Claim,
    spec: String,
    dims: Vec<usize>,
    seed: u64,
    tol: f64,
    trials: usize,
    worst: f64,
    witness: Option<Witness>,
    margins: Vec<f64>,
    metrics: BTreeMap<String, f64>,
    notes: Vec<String>,
}

impl Tally {
    pub fn new(claim: Claim, spec: &str, dims: &[usize], seed: u64, tol: f64) -> Self {
        Self {
            claim,
            spec: spec.to_string(),
            dims: dims.to_vec(),
            seed,
            tol,
            trials: 0,
            worst: f64::INFINITY,
            witness: None,
            margins: Vec::new(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn is_violated(&self) -> bool {
        self.witness.is_some()
    }

    /// Records one trial; `witness` is only built for the first violation.
    pub fn record(&mut self, margin: f64, witness: impl FnOnce() -> Witness) {
        self.trials += 1;
        self.margins.push(margin);
        if margin < self.worst {
            self.worst = margin;
        }
        if margin < -self.tol && self.witness.is_none() {
            self.witness = Some(witness());
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn metric_max(&mut self, name: &str, value: f64) {
        let slot = self.metrics.entry(name.to_string()).or_insert(value);
        if value > *slot {
            *slot = value;
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn finish(self) -> CertificateReport {
        let worst_margin = if self.trials == 0 { 0.0 } else { self.worst };
        let outcome = if self.witness.is_some() {
            Outcome::Violated
        } else {
            Outcome::NoViolationFound
        };
        CertificateReport {
            claim: self.claim,
            spec: self.spec,
            dims: self.dims,
            trials: self.trials,
            seed: self.seed,
            tol: self.tol,
            outcome,
            worst_margin,
            witness: self.witness,
            metrics: self.metrics,
            notes: self.notes,
            sub_reports: Vec::new(),
            margins: self.margins,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_keeps_first_violation() {
        let mut t = Tally::new(Claim::Monotone, "f", &[1], 3, 1e-8);
        t.record(0.5, || unreachable!());
        t.record(-0.25, || Witness::new(1, 1, -0.25));
        t.record(-1.0, || Witness::new(2, 1, -1.0));
        let r = t.finish();
        assert!(r.violated());
        assert_eq!(r.witness.as_ref().unwrap().trial, 1);
        assert_eq!(r.worst_margin, -1.0);
        assert_eq!(r.trials, 3);
        assert!(r.margins_csv().starts_with("trial,margin\n0,5e-1\n"));
    }

    #[test]
    fn margins_within_tolerance_pass() {
        let mut t = Tally::new(Claim::Concave, "f", &[1], 3, 1e-8);
        t.record(-1e-10, || unreachable!());
        let r = t.finish();
        assert!(r.passed());
        assert!(r.witness.is_none());
        assert!(r.worst_margin >= -r.tol);
    }

    #[test]
    fn claims_serialize_in_snake_case() {
        assert_eq!(Claim::DerivativeCp.to_string(), "derivative_cp");
        let s = serde_json::to_string(&Outcome::NoViolationFound).unwrap();
        assert_eq!(s, "\"no_violation_found\"");
    }
}
