//! Confusion counts and classification metrics for a theory.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::Result;
use crate::theory::DefaultTheory;

/// Metrics with a zero denominator are reported as 0 and listed in
/// `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub clause_count: usize,
    /// Induction wall time in seconds, filled in by the caller.
    pub time_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

fn ratio(num: usize, den: usize, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0 {
        undefined.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize, clause_count: usize) -> Self {
        let mut undefined = Vec::new();
        let precision = ratio(tp, tp + fp, "precision", &mut undefined);
        let recall = ratio(tp, tp + fn_, "recall", &mut undefined);
        let accuracy = ratio(tp + tn, tp + fp + tn + fn_, "accuracy", &mut undefined);
        // 2PR/(P+R) simplified to integers so it is exact
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_, "f1", &mut undefined);
        Metrics {
            precision,
            recall,
            accuracy,
            f1,
            tp,
            fp,
            tn,
            fn_,
            clause_count,
            time_s: 0.0,
            undefined,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14}{:>10}", "metric", "value")?;
        for (name, v) in [
            ("precision", self.precision),
            ("recall", self.recall),
            ("accuracy", self.accuracy),
            ("f1", self.f1),
        ] {
            let mark = if self.undefined.iter().any(|u| u == name) {
                " (undefined)"
            } else {
                ""
            };
            writeln!(f, "{name:<14}{v:>10.4}{mark}")?;
        }
        for (name, v) in [
            ("tp", self.tp),
            ("fp", self.fp),
            ("tn", self.tn),
            ("fn", self.fn_),
            ("clauses", self.clause_count),
        ] {
            writeln!(f, "{name:<14}{v:>10}")?;
        }
        write!(f, "{:<14}{:>10.3}", "time_s", self.time_s)
    }
}

pub fn confusion(theory: &DefaultTheory, data: &Dataset) -> Result<(usize, usize, usize, usize)> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for e in &data.examples {
        match (theory.classify(&e.bits)?, e.label) {
            (Label::Positive, Label::Positive) => tp += 1,
            (Label::Positive, Label::Negative) => fp += 1,
            (Label::Negative, Label::Negative) => tn += 1,
            (Label::Negative, Label::Positive) => fn_ += 1,
        }
    }
    Ok((tp, fp, tn, fn_))
}

pub fn evaluate(theory: &DefaultTheory, data: &Dataset) -> Result<Metrics> {
    let (tp, fp, tn, fn_) = confusion(theory, data)?;
    Ok(Metrics::from_counts(tp, fp, tn, fn_, theory.clause_count()))
}
