use std::collections::BTreeSet;

use thiserror::Error;

use super::{Outcome, Session};
use crate::text::levenshtein_ratio;

/// Grapheme Levenshtein ratio at or above which two utterances count as a
/// rephrase of each other.
pub const NEAR_DUPLICATE_RATIO: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("turn {index} is out of range for a session of {len} turns")]
    OutOfRange { index: usize, len: usize },
    #[error("turn {index} carries no interaction-quality score")]
    Missing { index: usize },
    #[error("interaction-quality score {value} for turn {index} is outside [0, 1]")]
    OutOfBounds { index: usize, value: f64 },
    #[error("session has no turns")]
    EmptySession,
    #[error("threshold {0} is outside [0, 1]")]
    BadThreshold(f64),
}

/// Interaction-quality scorer for a turn in context of its session.
pub trait IqScorer {
    fn score(&self, session: &Session, index: usize) -> Result<f64, ScoreError>;
}

impl<S: IqScorer + ?Sized> IqScorer for &S {
    fn score(&self, session: &Session, index: usize) -> Result<f64, ScoreError> {
        (**self).score(session, index)
    }
}

fn turn_at(session: &Session, index: usize) -> Result<&super::Turn, ScoreError> {
    session.turns.get(index).ok_or(ScoreError::OutOfRange {
        index,
        len: session.turns.len(),
    })
}

/// Uses the `iq` recorded on the turn.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecordedIqScorer;

impl IqScorer for RecordedIqScorer {
    fn score(&self, session: &Session, index: usize) -> Result<f64, ScoreError> {
        let turn = turn_at(session, index)?;
        match turn.iq {
            Some(value) if (0.0..=1.0).contains(&value) => Ok(value),
            Some(value) => Err(ScoreError::OutOfBounds { index, value }),
            None => Err(ScoreError::Missing { index }),
        }
    }
}

/// Lower-cases, drops punctuation other than apostrophes and collapses
/// whitespace.
pub fn normalize_utterance(text: &str) -> String {
    let cleaned: String = text
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '\'' || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect();
    cleaned
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn is_near_duplicate(a: &str, b: &str) -> bool {
    levenshtein_ratio(&normalize_utterance(a), &normalize_utterance(b)) >= NEAR_DUPLICATE_RATIO
}

/// Per-language set of abrupt-end utterances such as "stop" or "no".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterjectionLexicon {
    words: BTreeSet<String>,
}

impl InterjectionLexicon {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words
                .into_iter()
                .map(|w| normalize_utterance(w.as_ref()))
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    pub fn english() -> Self {
        Self::new([
            "stop",
            "no",
            "cancel",
            "never mind",
            "nevermind",
            "shut up",
            "quiet",
        ])
    }

    /// One entry per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(|line| line.split('#').next().unwrap_or_default().trim())
                .filter(|line| !line.is_empty()),
        )
    }

    pub fn is_interjection(&self, utterance: &str) -> bool {
        self.words.contains(&normalize_utterance(utterance))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

impl Default for InterjectionLexicon {
    fn default() -> Self {
        Self::english()
    }
}

/// Marks a turn defective when it is itself an interjection or when the next
/// turn is an interjection or a near-duplicate rephrase.
#[derive(Debug, Clone, Default)]
pub struct HeuristicScorer {
    pub lexicon: InterjectionLexicon,
}

impl HeuristicScorer {
    pub fn new(lexicon: InterjectionLexicon) -> Self {
        Self { lexicon }
    }
}

impl IqScorer for HeuristicScorer {
    fn score(&self, session: &Session, index: usize) -> Result<f64, ScoreError> {
        let turn = turn_at(session, index)?;
        if self.lexicon.is_interjection(&turn.utterance) {
            return Ok(0.0);
        }
        let defective = session.turns.get(index + 1).is_some_and(|next| {
            self.lexicon.is_interjection(&next.utterance)
                || is_near_duplicate(&turn.utterance, &next.utterance)
        });
        Ok(if defective { 0.0 } else { 1.0 })
    }
}

/// Recorded scores where present, heuristic otherwise.
#[derive(Debug, Clone, Default)]
pub struct RecordedOrHeuristic {
    pub heuristic: HeuristicScorer,
}

impl RecordedOrHeuristic {
    pub fn new(lexicon: InterjectionLexicon) -> Self {
        Self {
            heuristic: HeuristicScorer::new(lexicon),
        }
    }
}

impl IqScorer for RecordedOrHeuristic {
    fn score(&self, session: &Session, index: usize) -> Result<f64, ScoreError> {
        match RecordedIqScorer.score(session, index) {
            Err(ScoreError::Missing { .. }) => self.heuristic.score(session, index),
            other => other,
        }
    }
}

/// Labels the session with its absorbing outcome from the terminal turn.
pub fn assign_outcome(
    mut session: Session,
    scorer: &dyn IqScorer,
    threshold: f64,
    lexicon: &InterjectionLexicon,
) -> Result<Session, ScoreError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ScoreError::BadThreshold(threshold));
    }
    let last = session.turns.len().checked_sub(1).ok_or(ScoreError::EmptySession)?;
    let outcome = if lexicon.is_interjection(&session.turns[last].utterance) {
        Outcome::Failure
    } else if scorer.score(&session, last)? >= threshold {
        Outcome::Success
    } else {
        Outcome::Failure
    };
    session.outcome = Some(outcome);
    Ok(session)
}
