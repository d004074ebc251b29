//! Metrics for the partitioning, equivalence-learning and reactivity tasks.

mod equivalence;
pub mod io;

pub use equivalence::{equivalence_curve, equivalence_pairs, f1_trend, rewritability_predictions};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markov::{GraphError, RewriteTable, SolveError};
use crate::session::Hypothesis;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no predictions to score")]
    Empty,
    #[error("precision-recall curve needs at least one positive label")]
    NoPositives,
    #[error("score {0} is not finite")]
    NonFinite(f64),
    #[error("reactivity needs at least 2 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("baseline F1 is zero")]
    ZeroBaseline,
    #[error("`{0}` is both a positive and a negative rewrite")]
    Overlap(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl From<GraphError> for EvalError {
    fn from(e: GraphError) -> Self {
        EvalError::Solve(SolveError::Graph(e))
    }
}

/// A request with its known good and bad rewrites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub request: Hypothesis,
    #[serde(default)]
    pub positives: BTreeSet<Hypothesis>,
    #[serde(default)]
    pub negatives: BTreeSet<Hypothesis>,
}

impl EvalRecord {
    pub fn new(
        request: Hypothesis,
        positives: BTreeSet<Hypothesis>,
        negatives: BTreeSet<Hypothesis>,
    ) -> Result<Self, EvalError> {
        let record = Self {
            request,
            positives,
            negatives,
        };
        record.validate()?;
        Ok(record)
    }

    /// Rewritable iff some positive rewrite exists.
    pub fn label(&self) -> bool {
        !self.positives.is_empty()
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        match self.positives.intersection(&self.negatives).next() {
            Some(h) => Err(EvalError::Overlap(h.to_string())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Undefined precision or recall is 0.
pub fn partition_metrics(predictions: &[bool], labels: &[bool]) -> Result<PartitionMetrics, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(PartitionMetrics {
        precision,
        recall,
        accuracy: ratio(tp + tn, predictions.len()),
        f1: f1_score(precision, recall),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    /// Pairs scoring at or above this are predicted positive.
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

impl PrPoint {
    pub fn f1(&self) -> f64 {
        f1_score(self.precision, self.recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// One point per distinct score, highest threshold first.
    pub points: Vec<PrPoint>,
    /// Trapezoidal area over recall, starting from recall 0 at the precision
    /// of the first point.
    pub area: f64,
}

impl PrCurve {
    /// The point with the highest F1; ties keep the higher threshold.
    pub fn best_f1(&self) -> PrPoint {
        let mut best = self.points[0];
        for p in &self.points[1..] {
            if p.f1() > best.f1() {
                best = *p;
            }
        }
        best
    }
}

pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<PrCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(&s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite(s));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points: Vec<PrPoint> = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, positives),
        });
    }

    let mut area = 0.0;
    let (mut prev_r, mut prev_p) = (0.0, points[0].precision);
    for p in &points {
        area += (p.recall - prev_r) * (p.precision + prev_p) / 2.0;
        prev_r = p.recall;
        prev_p = p.precision;
    }
    Ok(PrCurve { points, area })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reactivity {
    /// Per request, in the order given.
    pub rates: Vec<(Hypothesis, f64)>,
    /// Counts of rates in ten equal bins over `[0, 1]`; 1 falls in the last.
    pub histogram: [usize; 10],
}

/// Fraction of day-over-day transitions in which a request's top rewrite
/// changed. Gaining or losing a rewrite counts as a change.
pub fn reactivity_rate(tables: &[RewriteTable], requests: &[Hypothesis]) -> Result<Reactivity, EvalError> {
    if tables.len() < 2 {
        return Err(EvalError::TooFewSnapshots(tables.len()));
    }
    let transitions = (tables.len() - 1) as f64;
    let mut histogram = [0usize; 10];
    let rates = requests
        .iter()
        .map(|h| {
            let changes = tables.windows(2).filter(|w| w[0].get(h) != w[1].get(h)).count();
            let rate = changes as f64 / transitions;
            histogram[((rate * 10.0) as usize).min(9)] += 1;
            (h.clone(), rate)
        })
        .collect();
    Ok(Reactivity { rates, histogram })
}

/// `F1(t) / F1(0) - 1` for each entry.
pub fn relative_f1_change(f1: &[f64]) -> Result<Vec<f64>, EvalError> {
    let Some(&base) = f1.first() else {
        return Err(EvalError::Empty);
    };
    if base == 0.0 {
        return Err(EvalError::ZeroBaseline);
    }
    Ok(f1.iter().map(|&f| f / base - 1.0).collect())
}
