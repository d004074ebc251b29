use super::{pr_curve, EvalError, EvalRecord, PrCurve};
use crate::markov::{MarkovGraph, SolverConfig, SourceScores};
use crate::Scalar;

/// `Φ∞` of every labelled `(request, rewrite)` pair, positives labelled `true`.
///
/// A pair whose request or rewrite is not a state of the graph scores 0.
pub fn equivalence_pairs<T: Scalar>(
    graph: &MarkovGraph<T>,
    records: &[EvalRecord],
    config: &SolverConfig,
) -> Result<(Vec<f64>, Vec<bool>), EvalError> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        record.validate()?;
        let row = match graph.space().index_of(&record.request) {
            Some(source) => Some(SourceScores::compute(graph, source, config)?),
            None => None,
        };
        let labelled = record
            .positives
            .iter()
            .map(|h| (h, true))
            .chain(record.negatives.iter().map(|h| (h, false)));
        for (rewrite, label) in labelled {
            let score = match (&row, graph.space().index_of(rewrite)) {
                (Some(row), Some(target)) => row.phi[target].to_f64_lossy(),
                _ => 0.0,
            };
            scores.push(score);
            labels.push(label);
        }
    }
    Ok((scores, labels))
}

pub fn equivalence_curve<T: Scalar>(
    graph: &MarkovGraph<T>,
    records: &[EvalRecord],
    config: &SolverConfig,
) -> Result<PrCurve, EvalError> {
    let (scores, labels) = equivalence_pairs(graph, records, config)?;
    pr_curve(&scores, &labels)
}

/// Rewritability prediction per record; requests unknown to the graph are
/// predicted not rewritable.
pub fn rewritability_predictions<T: Scalar>(
    graph: &MarkovGraph<T>,
    records: &[EvalRecord],
    config: &SolverConfig,
) -> Result<Vec<bool>, EvalError> {
    records
        .iter()
        .map(|r| match graph.space().index_of(&r.request) {
            Some(source) => Ok(SourceScores::compute(graph, source, config)?.rewritable()),
            None => Ok(false),
        })
        .collect()
}

/// Relative change of the best-threshold equivalence F1 against the first
/// snapshot.
pub fn f1_trend<T: Scalar>(
    snapshots: &[MarkovGraph<T>],
    records: &[EvalRecord],
    config: &SolverConfig,
) -> Result<Vec<f64>, EvalError> {
    let f1: Vec<f64> = snapshots
        .iter()
        .map(|g| Ok(equivalence_curve(g, records, config)?.best_f1().f1()))
        .collect::<Result<_, EvalError>>()?;
    super::relative_f1_change(&f1)
}
