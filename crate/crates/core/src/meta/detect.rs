use std::collections::BTreeMap;

use super::{EdgeRoleRatios, MetaError};
use crate::markov::{session_chain, ChainMode, EdgeCounts, StateSpace, Vertex};
use crate::markov::{surviving_states, validate_sessions};
use crate::session::{Hypothesis, Session, TurnKind};

/// How often an edge of the superposition graph played each role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoleCounts {
    pub viability: u64,
    pub succeeding: u64,
    pub discounting: u64,
    pub plain: u64,
}

impl RoleCounts {
    pub fn total(&self) -> u64 {
        self.viability + self.succeeding + self.discounting + self.plain
    }

    pub fn in_triplet(&self) -> bool {
        self.viability + self.succeeding + self.discounting > 0
    }

    pub fn ratios(&self) -> EdgeRoleRatios {
        let total = self.total() as f64;
        if total == 0.0 {
            return EdgeRoleRatios::PLAIN;
        }
        EdgeRoleRatios {
            viability: self.viability as f64 / total,
            succeeding: self.succeeding as f64 / total,
            discounting: self.discounting as f64 / total,
            plain: self.plain as f64 / total,
        }
    }
}

/// One `(user turn, rewrite, successor)` occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct MstOccurrence {
    pub session: usize,
    /// Position of the rewrite turn; the rewritten turn sits right before it
    /// and a transient successor right after it.
    pub rewrite_turn: usize,
    pub source: Hypothesis,
    pub rewrite: Hypothesis,
    pub successor: Vertex,
}

impl MstOccurrence {
    pub fn source_turn(&self) -> usize {
        self.rewrite_turn - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MstDetection {
    pub space: StateSpace,
    /// Co-occurrence counts over the superposition graph: every unrolled
    /// transition plus one discounting edge per triplet.
    pub counts: EdgeCounts,
    pub roles: BTreeMap<(usize, usize), RoleCounts>,
    pub occurrences: Vec<MstOccurrence>,
}

#[derive(Clone, Copy)]
enum Role {
    Viability,
    Succeeding,
    Discounting,
    Plain,
}

/// Finds every triplet and tallies per-edge role counts.
///
/// States seen fewer than `min_state_support` times in the unrolled chains
/// are pruned together with their edges; occurrences are kept regardless.
pub fn detect_msts(sessions: &[Session], min_state_support: u64) -> Result<MstDetection, MetaError> {
    validate_sessions(sessions)?;
    let chains: Vec<Vec<Vertex>> = sessions
        .iter()
        .map(|s| session_chain(s, ChainMode::Unrolling).expect("validated outcome"))
        .collect();
    let space = surviving_states(
        chains.iter().flatten().filter_map(|v| match v {
            Vertex::Transient(h) => Some(h),
            _ => None,
        }),
        min_state_support,
    );

    let mut edges: Vec<(&Vertex, &Vertex, Role)> = Vec::new();
    let mut occurrences = Vec::new();
    for (index, (session, chain)) in sessions.iter().zip(&chains).enumerate() {
        let mut roles = vec![Role::Plain; chain.len() - 1];
        for (r, turn) in session.turns.iter().enumerate() {
            if turn.kind != TurnKind::Rewrite {
                continue;
            }
            if r == 0 || session.turns[r - 1].kind == TurnKind::Rewrite {
                return Err(MetaError::DanglingRewrite {
                    session: index,
                    turn: r,
                });
            }
            roles[r - 1] = Role::Viability;
            roles[r] = Role::Succeeding;
            edges.push((&chain[r - 1], &chain[r + 1], Role::Discounting));
            occurrences.push(MstOccurrence {
                session: index,
                rewrite_turn: r,
                source: session.turns[r - 1].hypothesis.clone(),
                rewrite: turn.hypothesis.clone(),
                successor: chain[r + 1].clone(),
            });
        }
        edges.extend(
            chain
                .windows(2)
                .zip(roles)
                .map(|(pair, role)| (&pair[0], &pair[1], role)),
        );
    }

    let mut counts = EdgeCounts::new();
    let mut role_counts: BTreeMap<(usize, usize), RoleCounts> = BTreeMap::new();
    for (src, dst, role) in edges {
        let (Some(s), Some(d)) = (space.vertex_index(src), space.vertex_index(dst)) else {
            continue;
        };
        *counts.entry((s, d)).or_default() += 1;
        let entry = role_counts.entry((s, d)).or_default();
        match role {
            Role::Viability => entry.viability += 1,
            Role::Succeeding => entry.succeeding += 1,
            Role::Discounting => entry.discounting += 1,
            Role::Plain => entry.plain += 1,
        }
    }
    Ok(MstDetection {
        space,
        counts,
        roles: role_counts,
        occurrences,
    })
}
