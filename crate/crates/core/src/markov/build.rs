use std::collections::BTreeMap;

use super::{EdgeCounts, GraphError, MarkovGraph, StateSpace, Vertex};
use crate::session::{Hypothesis, Outcome, Session, TurnKind};
use crate::Scalar;

pub const DEFAULT_MIN_STATE_SUPPORT: u64 = 2;

/// How system rewrites in the logs enter the interaction chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainMode {
    /// Rewrite turns are skipped, as if no rewrite had happened.
    Discounting,
    /// Rewrite turns are spliced into the chain as ordinary states.
    Unrolling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildConfig {
    pub mode: ChainMode,
    /// States observed fewer times than this are pruned before normalization.
    pub min_state_support: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            mode: ChainMode::Discounting,
            min_state_support: DEFAULT_MIN_STATE_SUPPORT,
        }
    }
}

/// Vertex sequence of one session, terminated by its absorbing outcome.
pub fn session_chain(session: &Session, mode: ChainMode) -> Option<Vec<Vertex>> {
    let outcome = session.outcome?;
    let mut chain: Vec<Vertex> = session
        .turns
        .iter()
        .filter(|turn| mode == ChainMode::Unrolling || turn.kind != TurnKind::Rewrite)
        .map(|turn| Vertex::Transient(turn.hypothesis.clone()))
        .collect();
    chain.push(match outcome {
        Outcome::Success => Vertex::Success,
        Outcome::Failure => Vertex::Failure,
    });
    Some(chain)
}

/// Keeps hypotheses with at least `min_support` occurrences.
pub(crate) fn surviving_states<'a, I>(occurrences: I, min_support: u64) -> StateSpace
where
    I: IntoIterator<Item = &'a Hypothesis>,
{
    let mut support: BTreeMap<&Hypothesis, u64> = BTreeMap::new();
    for h in occurrences {
        *support.entry(h).or_default() += 1;
    }
    StateSpace::new(
        support
            .into_iter()
            .filter(|&(_, count)| count >= min_support)
            .map(|(h, _)| h.clone()),
    )
}

pub(crate) fn validate_sessions(sessions: &[Session]) -> Result<(), GraphError> {
    if sessions.is_empty() {
        return Err(GraphError::Empty);
    }
    for (index, session) in sessions.iter().enumerate() {
        if session.turns.is_empty() {
            return Err(GraphError::EmptySession { index });
        }
        if session.outcome.is_none() {
            return Err(GraphError::MissingOutcome { index });
        }
    }
    Ok(())
}

/// Builds the baseline absorbing chain: the union of all session chains.
///
/// Counts tally every consecutive vertex pair, including the final
/// `(state, absorbing)` pair. Indices depend only on the multiset of chains,
/// never on session order.
pub fn build_graph<T: Scalar>(
    sessions: &[Session],
    config: &BuildConfig,
) -> Result<MarkovGraph<T>, GraphError> {
    validate_sessions(sessions)?;
    let chains: Vec<Vec<Vertex>> = sessions
        .iter()
        .map(|s| session_chain(s, config.mode).expect("validated outcome"))
        .collect();

    let space = surviving_states(
        chains.iter().flatten().filter_map(|v| match v {
            Vertex::Transient(h) => Some(h),
            _ => None,
        }),
        config.min_state_support,
    );

    let mut counts = EdgeCounts::new();
    for chain in &chains {
        for pair in chain.windows(2) {
            if let (Some(src), Some(dst)) =
                (space.vertex_index(&pair[0]), space.vertex_index(&pair[1]))
            {
                *counts.entry((src, dst)).or_default() += 1;
            }
        }
    }
    MarkovGraph::from_counts(space, counts, None)
}
