//! Confusion counts, F1 and per-sequence summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::SoftPredicate;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `2TP / (2TP + FP + FN)`, or 0 when the denominator vanishes.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }
}

pub fn confusion(pred_labels: &[bool], truth: &[bool]) -> Result<Confusion> {
    if pred_labels.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "prediction length {} does not match label length {}",
            pred_labels.len(),
            truth.len()
        )));
    }
    let mut c = Confusion::default();
    for (&p, &y) in pred_labels.iter().zip(truth) {
        match (y, p) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceStats {
    pub mean_f1: f64,
    pub min_f1: f64,
    /// Unweighted `sum_t ||a_t - a_{t-1}||^2`.
    pub a_energy: f64,
    /// Unweighted `sum_t ||mu_t - mu_{t-1}||^2`.
    pub mu_energy: f64,
}

impl SequenceStats {
    pub fn smoothness_energy(&self) -> f64 {
        self.a_energy + self.mu_energy
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sequence_stats(f1s: &[f64], soft: &[SoftPredicate]) -> Result<SequenceStats> {
    if f1s.is_empty() {
        return Err(Error::InvalidInput("sequence statistics need at least one step".into()));
    }
    if f1s.len() != soft.len() {
        return Err(Error::InvalidInput(format!(
            "{} F1 values for {} soft predicates",
            f1s.len(),
            soft.len()
        )));
    }
    let mean_f1 = f1s.iter().sum::<f64>() / f1s.len() as f64;
    let min_f1 = f1s.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut a_energy, mut mu_energy) = (0.0, 0.0);
    for w in soft.windows(2) {
        a_energy += sq_dist(&w[1].a, &w[0].a);
        mu_energy += sq_dist(&w[1].mu, &w[0].mu);
    }
    Ok(SequenceStats {
        mean_f1,
        min_f1,
        a_energy,
        mu_energy,
    })
}
