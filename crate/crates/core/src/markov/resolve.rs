use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::{fundamental_row, MarkovGraph, SolveError, SolverConfig};
use crate::session::Hypothesis;
use crate::Scalar;

/// Direct transitions a rewrite target needs from its source by default.
pub const DEFAULT_MIN_REWRITE_SUPPORT: u64 = 2;

const SUPPORT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewriteCandidate<T> {
    pub source: usize,
    pub target: usize,
    /// `Φ∞` of the target as seen from the source.
    pub score: T,
}

/// One fundamental row together with the `Φ∞` score of every transient state.
///
/// `phi[j] = P(s⁺ | h_j) · N[i, j]`: the probability that a walk from `i`
/// is absorbed into `s⁺` directly from `h_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceScores<T> {
    pub source: usize,
    pub visits: Vec<T>,
    pub phi: Vec<T>,
}

impl<T: Scalar> SourceScores<T> {
    pub fn compute(
        graph: &MarkovGraph<T>,
        source: usize,
        config: &SolverConfig,
    ) -> Result<Self, SolveError> {
        let visits = fundamental_row(graph, source, config)?;
        let phi = visits
            .iter()
            .enumerate()
            .map(|(j, &n)| graph.success_probability(j) * n)
            .collect();
        Ok(Self {
            source,
            visits,
            phi,
        })
    }

    /// `ŷ = 1` iff some state strictly beats the source; ties keep the source.
    pub fn rewritable(&self) -> bool {
        let own = self.phi[self.source];
        self.phi.iter().any(|&score| score > own)
    }

    /// Reachable states with direct support `≥ min_support` that strictly beat
    /// the source, best first; equal scores fall back to state index.
    ///
    /// Support is λ-weighted, so an edge the superposition suppresses does not
    /// count as evidence. It is compared with a `1e-9` slack for λ rounding.
    pub fn candidates(
        &self,
        graph: &MarkovGraph<T>,
        k: usize,
        min_support: u64,
    ) -> Vec<RewriteCandidate<T>> {
        let own = self.phi[self.source];
        let mut out: Vec<RewriteCandidate<T>> = self
            .phi
            .iter()
            .enumerate()
            .filter(|&(t, &score)| {
                t != self.source
                    && self.visits[t] > T::zero()
                    && score > own
                    && graph.support(self.source, t) + SUPPORT_SLACK >= min_support as f64
            })
            .map(|(target, &score)| RewriteCandidate {
                source: self.source,
                target,
                score,
            })
            .collect();
        out.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.target.cmp(&b.target))
        });
        out.truncate(k);
        out
    }
}

pub fn phi_infinity<T: Scalar>(
    graph: &MarkovGraph<T>,
    source: usize,
    target: usize,
    config: &SolverConfig,
) -> Result<T, SolveError> {
    graph.require_transient(target)?;
    let visits = fundamental_row(graph, source, config)?;
    Ok(graph.success_probability(target) * visits[target])
}

/// `Φ_k`: like [`phi_infinity`] but counting only walks of at most `hops`
/// transient steps, i.e. `P(s⁺ | h_j) · (Σ_{n ≤ hops} Qⁿ)[i, j]`.
pub fn phi_within<T: Scalar>(
    graph: &MarkovGraph<T>,
    source: usize,
    target: usize,
    hops: usize,
) -> Result<T, SolveError> {
    graph.require_transient(source)?;
    graph.require_transient(target)?;
    let n = graph.state_count();
    let mut power = vec![T::zero(); n];
    power[source] = T::one();
    let mut total = power[target];
    for _ in 0..hops {
        let mut next = vec![T::zero(); n];
        for (k, &mass) in power.iter().enumerate() {
            if mass == T::zero() {
                continue;
            }
            for &(j, q) in graph.transient_row(k) {
                next[j] = next[j] + mass * q;
            }
        }
        power = next;
        total = total + power[target];
    }
    Ok(graph.success_probability(target) * total)
}

pub fn predict_rewritability<T: Scalar>(
    graph: &MarkovGraph<T>,
    source: usize,
    config: &SolverConfig,
) -> Result<bool, SolveError> {
    Ok(SourceScores::compute(graph, source, config)?.rewritable())
}

pub fn top_rewrites<T: Scalar>(
    graph: &MarkovGraph<T>,
    source: usize,
    k: usize,
    min_support: u64,
    config: &SolverConfig,
) -> Result<Vec<RewriteCandidate<T>>, SolveError> {
    Ok(SourceScores::compute(graph, source, config)?.candidates(graph, k, min_support))
}

/// Best rewrite per source hypothesis; sources without one are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteTable(BTreeMap<Hypothesis, Hypothesis>);

impl RewriteTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source: Hypothesis, target: Hypothesis) {
        self.0.insert(source, target);
    }

    pub fn get(&self, source: &Hypothesis) -> Option<&Hypothesis> {
        self.0.get(source)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Hypothesis, &Hypothesis)> {
        self.0.iter()
    }

    /// SHA-256 over `source\ttarget\n` lines in source order, hex encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (source, target) in &self.0 {
            hasher.update(format!("{source}\t{target}\n").as_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

impl FromIterator<(Hypothesis, Hypothesis)> for RewriteTable {
    fn from_iter<I: IntoIterator<Item = (Hypothesis, Hypothesis)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Resolves every transient state's top rewrite.
pub fn rewrite_table<T: Scalar>(
    graph: &MarkovGraph<T>,
    min_support: u64,
    config: &SolverConfig,
) -> Result<RewriteTable, SolveError> {
    let mut table = RewriteTable::new();
    for source in 0..graph.state_count() {
        let scores = SourceScores::compute(graph, source, config)?;
        if let Some(best) = scores.candidates(graph, 1, min_support).first() {
            let space = graph.space();
            table.insert(
                space.hypothesis(source).expect("transient").clone(),
                space.hypothesis(best.target).expect("transient").clone(),
            );
        }
    }
    Ok(table)
}
