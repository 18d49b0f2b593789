//! Verification reports shared by every checker.
//!
//! A report is a sequence of named sweeps. Each sweep records how many tuples it
//! visited, the largest residual it saw, and the first witness tuple that broke
//! the law. The report's own status and witness are those of the first failing
//! sweep in execution order, so identical inputs always produce identical reports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    AxiomFail,
    StructuralFail,
}

/// How thoroughly a sweep covered its law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coverage {
    Exhaustive,
    BasisExhaustive,
    Sampled,
    /// Holds trivially in the finite discrete model.
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub tuple: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub axiom: String,
    pub coverage: Coverage,
    pub checked: usize,
    pub max_residual: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub subject: String,
    pub status: Status,
    pub axiom: Option<String>,
    pub witness: Option<Witness>,
    pub checks: Vec<CheckSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(subject: impl Into<String>) -> Self {
        Report {
            subject: subject.into(),
            status: Status::Pass,
            axiom: None,
            witness: None,
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn absorb(&mut self, sweep: Sweep) {
        let summary = sweep.finish();
        if !summary.passed && self.status == Status::Pass {
            self.status = Status::AxiomFail;
            self.axiom = Some(summary.axiom.clone());
            self.witness = summary.witness.clone();
        }
        self.checks.push(summary);
    }

    /// Malformed input: tables undefined where they must be defined, shapes off.
    pub fn structural(&mut self, axiom: impl Into<String>, tuple: Vec<usize>, detail: impl Into<String>) {
        let axiom = axiom.into();
        let witness = Witness { tuple, detail: detail.into() };
        if self.status != Status::StructuralFail {
            self.status = Status::StructuralFail;
            self.axiom = Some(axiom.clone());
            self.witness = Some(witness.clone());
        }
        self.checks.push(CheckSummary {
            axiom,
            coverage: Coverage::Exhaustive,
            checked: 0,
            max_residual: f64::INFINITY,
            passed: false,
            witness: Some(witness),
        });
    }

    pub fn vacuous(&mut self, axiom: impl Into<String>, note: &str) {
        let axiom = axiom.into();
        self.notes.push(format!("{axiom}: {note}"));
        self.checks.push(CheckSummary {
            axiom,
            coverage: Coverage::Vacuous,
            checked: 0,
            max_residual: 0.0,
            passed: true,
            witness: None,
        });
    }

    /// Folds a sub-report in, prefixing its axiom labels.
    pub fn merge(&mut self, prefix: &str, other: Report) {
        let label = |a: &str| {
            if prefix.is_empty() {
                a.to_string()
            } else {
                format!("{prefix}/{a}")
            }
        };
        if self.status == Status::Pass && other.status != Status::Pass {
            self.status = other.status;
            self.axiom = other.axiom.as_deref().map(label);
            self.witness = other.witness.clone();
        } else if other.status == Status::StructuralFail && self.status == Status::AxiomFail {
            self.status = Status::StructuralFail;
            self.axiom = other.axiom.as_deref().map(label);
            self.witness = other.witness.clone();
        }
        for mut c in other.checks {
            c.axiom = label(&c.axiom);
            self.checks.push(c);
        }
        self.notes.extend(other.notes);
    }

    pub fn check(&self, axiom: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.coverage != Coverage::Vacuous && c.max_residual.is_finite())
            .map(|c| c.max_residual)
            .fold(0.0, f64::max)
    }

    pub fn failed_axioms(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.axiom.as_str()).collect()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::AxiomFail => "FAIL",
            Status::StructuralFail => "STRUCTURAL FAIL",
        };
        writeln!(f, "{}: {}", self.subject, status)?;
        if let (Some(axiom), Some(w)) = (&self.axiom, &self.witness) {
            writeln!(f, "  first failure: {axiom} at {:?} ({})", w.tuple, w.detail)?;
        }
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(
                f,
                "  [{mark}] {:<28} {:>9} tuples  max residual {:.3e}  ({:?})",
                c.axiom, c.checked, c.max_residual, c.coverage
            )?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

/// One law checked over many tuples.
#[derive(Debug)]
pub struct Sweep {
    axiom: String,
    coverage: Coverage,
    checked: usize,
    max_residual: f64,
    witness: Option<Witness>,
}

impl Sweep {
    pub fn new(axiom: impl Into<String>, coverage: Coverage) -> Self {
        Sweep {
            axiom: axiom.into(),
            coverage,
            checked: 0,
            max_residual: 0.0,
            witness: None,
        }
    }

    pub fn tick(&mut self) {
        self.checked += 1;
    }

    pub fn failed(&self) -> bool {
        self.witness.is_some()
    }

    /// Records a boolean outcome; only the first failure keeps its witness.
    pub fn expect(&mut self, ok: bool, tuple: impl FnOnce() -> Vec<usize>, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.witness.is_none() {
            self.witness = Some(Witness { tuple: tuple(), detail: detail() });
        }
    }

    /// Records a residual against its (already scaled) threshold.
    pub fn residual(&mut self, r: f64, threshold: f64, tuple: impl FnOnce() -> Vec<usize>) {
        self.checked += 1;
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > self.max_residual {
            self.max_residual = r;
        }
        if r > threshold && self.witness.is_none() {
            self.witness = Some(Witness {
                tuple: tuple(),
                detail: format!("residual {r:.3e} exceeds {threshold:.3e}"),
            });
        }
    }

    /// Appends a sweep over later tuples of the same law.
    pub fn merge(&mut self, other: Sweep) {
        self.checked += other.checked;
        if other.max_residual > self.max_residual {
            self.max_residual = other.max_residual;
        }
        if self.witness.is_none() {
            self.witness = other.witness;
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn finish(self) -> CheckSummary {
        CheckSummary {
            passed: self.witness.is_none(),
            axiom: self.axiom,
            coverage: self.coverage,
            checked: self.checked,
            max_residual: self.max_residual,
            witness: self.witness,
        }
    }
}

/// Runs one sweep per item in parallel and merges them in item order, so the first
/// witness is the same as in a sequential run.
pub fn par_sweep<I, F>(axiom: &str, coverage: Coverage, items: &[I], f: F) -> Sweep
where
    I: Sync,
    F: Fn(&I, &mut Sweep) + Sync,
{
    let parts: Vec<Sweep> = items
        .par_iter()
        .map(|item| {
            let mut s = Sweep::new(axiom, coverage);
            f(item, &mut s);
            s
        })
        .collect();
    let mut out = Sweep::new(axiom, coverage);
    for p in parts {
        out.merge(p);
    }
    out
}
