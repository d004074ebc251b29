//! Interaction logs: hypotheses, turns, sessions and their absorbing outcomes.

mod hypothesis;
pub mod io;
mod outcome;
mod segment;

pub use hypothesis::{normalize_slot_value, parse_hypothesis, Hypothesis, HypothesisError};
pub use outcome::{
    assign_outcome, is_near_duplicate, normalize_utterance, HeuristicScorer, InterjectionLexicon,
    IqScorer, RecordedIqScorer, RecordedOrHeuristic, ScoreError, NEAR_DUPLICATE_RATIO,
};
pub use segment::{segment_sessions, SegmentError, DEFAULT_MAX_GAP_SECS};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnKind {
    /// Spoken by the customer.
    User,
    /// Substituted by the system for the preceding turn.
    Rewrite,
    /// Generated when abridging a multi-turn dialog.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub utterance: String,
    pub hypothesis: Hypothesis,
    pub timestamp: i64,
    pub kind: TurnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iq: Option<f64>,
}

impl Turn {
    pub fn new(
        utterance: impl Into<String>,
        hypothesis: Hypothesis,
        timestamp: i64,
        kind: TurnKind,
    ) -> Self {
        Self {
            utterance: utterance.into(),
            hypothesis,
            timestamp,
            kind,
            iq: None,
        }
    }

    pub fn with_iq(mut self, iq: f64) -> Self {
        self.iq = Some(iq);
        self
    }

    pub fn user(utterance: impl Into<String>, hypothesis: Hypothesis, timestamp: i64) -> Self {
        Self::new(utterance, hypothesis, timestamp, TurnKind::User)
    }

    pub fn rewrite(utterance: impl Into<String>, hypothesis: Hypothesis, timestamp: i64) -> Self {
        Self::new(utterance, hypothesis, timestamp, TurnKind::Rewrite)
    }
}

/// Absorbing outcome of a session: `s⁺` or `s⁻`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub customer_id: String,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

impl Session {
    pub fn new(customer_id: impl Into<String>, turns: Vec<Turn>) -> Self {
        Self {
            customer_id: customer_id.into(),
            turns,
            outcome: None,
        }
    }

    pub fn with_outcome(mut self, outcome: Outcome) -> Self {
        self.outcome = Some(outcome);
        self
    }

    pub fn terminal(&self) -> Option<&Turn> {
        self.turns.last()
    }

    pub fn has_rewrites(&self) -> bool {
        self.turns.iter().any(|t| t.kind == TurnKind::Rewrite)
    }
}

/// One line of an interaction log: a turn tagged with its customer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub customer_id: String,
    #[serde(flatten)]
    pub turn: Turn,
}
