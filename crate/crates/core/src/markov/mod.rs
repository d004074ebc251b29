//! Absorbing Markov chain over NLU hypotheses.
//!
//! Transient states are interned hypotheses; two absorbing states, success
//! `s⁺` and failure `s⁻`, sit right after them in vertex index space. The
//! transition matrix is kept in source-major sparse rows: the `Q` block as
//! `(target, probability)` lists and the `S` block as a `[s⁺, s⁻]` pair.

mod build;
mod resolve;
pub mod snapshot;
mod solve;

pub(crate) use build::{surviving_states, validate_sessions};
pub use build::{build_graph, session_chain, BuildConfig, ChainMode, DEFAULT_MIN_STATE_SUPPORT};
pub use resolve::{
    phi_infinity, phi_within, predict_rewritability, rewrite_table, top_rewrites, RewriteCandidate,
    RewriteTable, SourceScores, DEFAULT_MIN_REWRITE_SUPPORT,
};
pub use solve::{fundamental_row, SolveError, SolverConfig, DEFAULT_EPS, DEFAULT_MAX_ITERATIONS};

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::meta::{EdgeMeta, MetaSection};
use crate::session::Hypothesis;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("no sessions to build a graph from")]
    Empty,
    #[error("session {index} has no outcome")]
    MissingOutcome { index: usize },
    #[error("session {index} has no turns")]
    EmptySession { index: usize },
    #[error("edge ({src}, {dst}) is outside a state space of {states} transient states")]
    EdgeOutOfRange { src: usize, dst: usize, states: usize },
    #[error("meta record for ({src}, {dst}) has no matching count")]
    OrphanMeta { src: usize, dst: usize },
    #[error("state {0} is not a transient state")]
    NotTransient(usize),
    #[error("unknown hypothesis `{0}`")]
    UnknownHypothesis(String),
    #[error("invalid meta record for ({src}, {dst}): {reason}")]
    InvalidMeta {
        src: usize,
        dst: usize,
        reason: String,
    },
}

/// A graph vertex before interning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Transient(Hypothesis),
    Success,
    Failure,
}

/// Bijective interner from hypotheses to dense transient indices.
///
/// Indices follow hypothesis order, so a state space is independent of the
/// order states were observed in. `len()` is the success index and
/// `len() + 1` the failure index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateSpace {
    states: Vec<Hypothesis>,
    index: HashMap<Hypothesis, usize>,
}

impl StateSpace {
    pub fn new<I: IntoIterator<Item = Hypothesis>>(hypotheses: I) -> Self {
        let sorted: BTreeSet<Hypothesis> = hypotheses.into_iter().collect();
        let states: Vec<Hypothesis> = sorted.into_iter().collect();
        let index = states
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), i))
            .collect();
        Self { states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn success(&self) -> usize {
        self.states.len()
    }

    pub fn failure(&self) -> usize {
        self.states.len() + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.states.len() + 2
    }

    pub fn is_transient(&self, index: usize) -> bool {
        index < self.states.len()
    }

    pub fn index_of(&self, hypothesis: &Hypothesis) -> Option<usize> {
        self.index.get(hypothesis).copied()
    }

    pub fn hypothesis(&self, index: usize) -> Option<&Hypothesis> {
        self.states.get(index)
    }

    pub fn vertex_index(&self, vertex: &Vertex) -> Option<usize> {
        match vertex {
            Vertex::Transient(h) => self.index_of(h),
            Vertex::Success => Some(self.success()),
            Vertex::Failure => Some(self.failure()),
        }
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.states
    }
}

/// Sparse co-occurrence counts keyed by `(source, target)` vertex index.
pub type EdgeCounts = BTreeMap<(usize, usize), u64>;

#[derive(Debug, Clone, PartialEq)]
struct Row<T> {
    transient: Vec<(usize, T)>,
    success: T,
    failure: T,
}

/// Absorbing chain with its count matrix and normalized transition blocks.
///
/// Immutable once built; resolution only reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovGraph<T> {
    space: StateSpace,
    counts: EdgeCounts,
    meta: Option<MetaSection>,
    rows: Vec<Row<T>>,
    incoming: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> MarkovGraph<T> {
    /// Normalizes `counts` (optionally λ-weighted by `meta`) into `[Q | S]`.
    ///
    /// A source whose weighted outgoing mass is zero, or which cannot reach an
    /// absorbing state through positive-probability edges, sends all of its
    /// mass to `s⁻`.
    pub fn from_counts(
        space: StateSpace,
        mut counts: EdgeCounts,
        meta: Option<MetaSection>,
    ) -> Result<Self, GraphError> {
        let n = space.len();
        counts.retain(|_, count| *count > 0);
        for &(src, dst) in counts.keys() {
            if src >= n || dst >= n + 2 {
                return Err(GraphError::EdgeOutOfRange { src, dst, states: n });
            }
        }
        let meta = meta.filter(|m| !m.is_empty());
        if let Some(meta) = &meta {
            for (&(src, dst), record) in meta {
                if !counts.contains_key(&(src, dst)) {
                    return Err(GraphError::OrphanMeta { src, dst });
                }
                record
                    .validate()
                    .map_err(|reason| GraphError::InvalidMeta { src, dst, reason })?;
            }
        }

        let mut weighted: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (&(src, dst), &count) in &counts {
            let weight = match meta.as_ref().and_then(|m| m.get(&(src, dst))) {
                Some(record) => record.lambda::<T>() * T::from_count(count),
                None => T::from_count(count),
            };
            weighted[src].push((dst, weight));
        }

        let mut rows: Vec<Row<T>> = weighted
            .into_iter()
            .map(|edges| normalize_row(n, edges))
            .collect();
        route_closed_classes(&mut rows);

        let mut incoming = vec![Vec::new(); n];
        for (src, row) in rows.iter().enumerate() {
            for &(dst, p) in &row.transient {
                incoming[dst].push((src, p));
            }
        }
        Ok(Self {
            space,
            counts,
            meta,
            rows,
            incoming,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn counts(&self) -> &EdgeCounts {
        &self.counts
    }

    pub fn meta(&self) -> Option<&MetaSection> {
        self.meta.as_ref()
    }

    pub fn edge_meta(&self, src: usize, dst: usize) -> Option<&EdgeMeta> {
        self.meta.as_ref()?.get(&(src, dst))
    }

    pub fn state_count(&self) -> usize {
        self.space.len()
    }

    pub fn count(&self, src: usize, dst: usize) -> u64 {
        self.counts.get(&(src, dst)).copied().unwrap_or(0)
    }

    /// Count scaled by the edge's `λ`; the plain count when the edge has no
    /// meta record.
    pub fn support(&self, src: usize, dst: usize) -> f64 {
        let count = self.count(src, dst) as f64;
        match self.edge_meta(src, dst) {
            Some(meta) => meta.lambda::<f64>() * count,
            None => count,
        }
    }

    /// `q(i, j)` for transient `i`, `j`.
    pub fn transition(&self, src: usize, dst: usize) -> T {
        self.rows
            .get(src)
            .and_then(|row| {
                row.transient
                    .binary_search_by_key(&dst, |&(j, _)| j)
                    .ok()
                    .map(|pos| row.transient[pos].1)
            })
            .unwrap_or_else(T::zero)
    }

    /// Immediate absorption probability into `s⁺`: `P(s⁺ | h_j)`.
    pub fn success_probability(&self, state: usize) -> T {
        self.rows.get(state).map_or_else(T::zero, |r| r.success)
    }

    pub fn failure_probability(&self, state: usize) -> T {
        self.rows.get(state).map_or_else(T::zero, |r| r.failure)
    }

    /// Positive-probability `Q` entries of a transient row, ordered by target.
    pub fn transient_row(&self, state: usize) -> &[(usize, T)] {
        self.rows.get(state).map_or(&[], |r| &r.transient)
    }

    pub(crate) fn incoming(&self, state: usize) -> &[(usize, T)] {
        &self.incoming[state]
    }

    /// Largest deviation of any transient row of `[Q | S]` from unit mass.
    pub fn max_row_deviation(&self) -> T {
        self.rows
            .iter()
            .map(|row| {
                let mass = row
                    .transient
                    .iter()
                    .fold(row.success + row.failure, |acc, &(_, p)| acc + p);
                (mass - T::one()).abs()
            })
            .fold(T::zero(), T::max)
    }

    pub fn require_transient(&self, state: usize) -> Result<(), GraphError> {
        if self.space.is_transient(state) {
            Ok(())
        } else {
            Err(GraphError::NotTransient(state))
        }
    }

    pub fn index_of(&self, hypothesis: &Hypothesis) -> Result<usize, GraphError> {
        self.space
            .index_of(hypothesis)
            .ok_or_else(|| GraphError::UnknownHypothesis(hypothesis.to_string()))
    }
}

fn normalize_row<T: Scalar>(n: usize, edges: Vec<(usize, T)>) -> Row<T> {
    let total = edges.iter().fold(T::zero(), |acc, &(_, w)| acc + w);
    if total <= T::zero() {
        return Row {
            transient: Vec::new(),
            success: T::zero(),
            failure: T::one(),
        };
    }
    let mut row = Row {
        transient: Vec::with_capacity(edges.len()),
        success: T::zero(),
        failure: T::zero(),
    };
    for (dst, weight) in edges {
        if weight <= T::zero() {
            continue;
        }
        let p = weight / total;
        if dst < n {
            row.transient.push((dst, p));
        } else if dst == n {
            row.success = p;
        } else {
            row.failure = p;
        }
    }
    row
}

/// Rewires transient states that cannot reach absorption to `s⁻`.
fn route_closed_classes<T: Scalar>(rows: &mut [Row<T>]) {
    let n = rows.len();
    let mut predecessors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (src, row) in rows.iter().enumerate() {
        for &(dst, _) in &row.transient {
            predecessors[dst].push(src);
        }
    }
    let mut absorbing = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (state, row) in rows.iter().enumerate() {
        if row.success > T::zero() || row.failure > T::zero() {
            absorbing[state] = true;
            queue.push_back(state);
        }
    }
    while let Some(state) = queue.pop_front() {
        for &pred in &predecessors[state] {
            if !absorbing[pred] {
                absorbing[pred] = true;
                queue.push_back(pred);
            }
        }
    }
    for (state, reaches) in absorbing.into_iter().enumerate() {
        if !reaches {
            rows[state] = Row {
                transient: Vec::new(),
                success: T::zero(),
                failure: T::one(),
            };
        }
    }
}
