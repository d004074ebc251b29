//! Utterance templates and the DAGs used to abridge clarification dialogs
//! into one synthetic turn.

mod abridge;
mod dag;
mod generate;
pub mod io;

pub use abridge::{abridge_dialog, is_clarification, AbridgeConfig, DagStore};
pub use dag::{build_dags, DagNode, TemplateDag};
pub use generate::{generate_synthetic, ArticleRule, ArticleRules, Synthesis, MAX_PATHS};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MIN_SAMPLES: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("entity spans [{}, {}) and [{}, {}) overlap", .first.0, .first.1, .second.0, .second.1)]
    SpanConflict {
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("entity span [{start}, {end}) does not align with token boundaries")]
    SpanMisaligned { start: usize, end: usize },
    #[error("entity span [{start}, {end}) is outside an utterance of {len} bytes")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("{tags} POS tags for {tokens} tokens")]
    TagCount { tags: usize, tokens: usize },
    #[error("placeholder with an empty entity type")]
    EmptyEntityType,
    #[error("template has no tokens")]
    EmptyTemplate,
    #[error("no candidate templates")]
    NoCandidates,
    #[error("template `{0}` has no confidence samples")]
    NoSamples(String),
    #[error("confidence sample {0} outside [0, 1]")]
    BadSample(f64),
    #[error("templates mix ({0}) and ({1})")]
    MixedGroup(String, String),
    #[error("dialog has no outcome")]
    MissingOutcome,
    #[error("invalid DAG: {0}")]
    InvalidDag(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Token {
    Literal(String),
    /// Entity type, e.g. `SongName`.
    Placeholder(String),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Literal(s) => f.write_str(s),
            Token::Placeholder(t) => write!(f, "<{t}>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub tokens: Vec<Token>,
    pub intent: String,
    pub language: String,
    #[serde(default)]
    pub confidence_samples: Vec<f64>,
}

impl Template {
    pub fn new(
        tokens: Vec<Token>,
        intent: impl Into<String>,
        language: impl Into<String>,
    ) -> Result<Self, TemplateError> {
        let t = Self {
            tokens,
            intent: intent.into(),
            language: language.into(),
            confidence_samples: Vec::new(),
        };
        t.validate()?;
        Ok(t)
    }

    /// Parses whitespace-separated tokens where `<Type>` is a placeholder.
    pub fn parse(
        form: &str,
        intent: impl Into<String>,
        language: impl Into<String>,
    ) -> Result<Self, TemplateError> {
        let tokens = form
            .split_whitespace()
            .map(|w| match w.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
                Some(t) => Token::Placeholder(t.to_string()),
                None => Token::Literal(w.to_string()),
            })
            .collect();
        Self::new(tokens, intent, language)
    }

    pub fn with_samples(mut self, samples: Vec<f64>) -> Self {
        self.confidence_samples = samples;
        self
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.tokens.is_empty() {
            return Err(TemplateError::EmptyTemplate);
        }
        if self
            .tokens
            .iter()
            .any(|t| matches!(t, Token::Placeholder(p) if p.is_empty()))
        {
            return Err(TemplateError::EmptyEntityType);
        }
        if let Some(&z) = self.confidence_samples.iter().find(|z| !(0.0..=1.0).contains(*z)) {
            return Err(TemplateError::BadSample(z));
        }
        Ok(())
    }

    /// Space-joined token form, e.g. `play <SongName> by <ArtistName>`.
    pub fn form(&self) -> String {
        self.tokens
            .iter()
            .map(Token::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn mean_confidence(&self) -> Option<f64> {
        if self.confidence_samples.is_empty() {
            None
        } else {
            Some(self.confidence_samples.iter().sum::<f64>() / self.confidence_samples.len() as f64)
        }
    }

    /// Entity types in order of first appearance.
    pub fn entity_types(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.tokens {
            if let Token::Placeholder(p) = t {
                if !out.contains(&p.as_str()) {
                    out.push(p);
                }
            }
        }
        out
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.form())
    }
}

/// Entity mention as a half-open byte range of the utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, entity_type: impl Into<String>) -> Self {
        Self {
            start,
            end,
            entity_type: entity_type.into(),
        }
    }
}

/// POS tag marking tokens dropped from templates.
pub const PUNCTUATION_TAG: &str = "PUNCT";

/// Replaces each entity span with a placeholder and keeps the remaining
/// whitespace tokens as literals.
///
/// `pos_tags` is either empty or one tag per whitespace token; tokens tagged
/// [`PUNCTUATION_TAG`] are dropped.
pub fn extract_template(
    utterance: &str,
    spans: &[EntitySpan],
    pos_tags: &[String],
    intent: &str,
    language: &str,
) -> Result<Template, TemplateError> {
    let words: Vec<(usize, usize, &str)> = utterance
        .split_whitespace()
        .map(|w| {
            let start = w.as_ptr() as usize - utterance.as_ptr() as usize;
            (start, start + w.len(), w)
        })
        .collect();
    if !pos_tags.is_empty() && pos_tags.len() != words.len() {
        return Err(TemplateError::TagCount {
            tags: pos_tags.len(),
            tokens: words.len(),
        });
    }

    let mut sorted: Vec<&EntitySpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for s in &sorted {
        if s.end > utterance.len() || s.start >= s.end {
            return Err(TemplateError::SpanOutOfRange {
                start: s.start,
                end: s.end,
                len: utterance.len(),
            });
        }
        if s.entity_type.is_empty() {
            return Err(TemplateError::EmptyEntityType);
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(TemplateError::SpanConflict {
                first: (pair[0].start, pair[0].end),
                second: (pair[1].start, pair[1].end),
            });
        }
    }

    let mut tokens = Vec::new();
    let mut spans = sorted.into_iter().peekable();
    let mut i = 0;
    while i < words.len() {
        let (start, _, word) = words[i];
        if let Some(span) = spans.peek().filter(|s| s.start < words[i].1) {
            if span.start != start {
                return Err(TemplateError::SpanMisaligned {
                    start: span.start,
                    end: span.end,
                });
            }
            let mut j = i;
            while j < words.len() && words[j].1 < span.end {
                j += 1;
            }
            if j == words.len() || words[j].1 != span.end {
                return Err(TemplateError::SpanMisaligned {
                    start: span.start,
                    end: span.end,
                });
            }
            tokens.push(Token::Placeholder(span.entity_type.clone()));
            spans.next();
            i = j + 1;
            continue;
        }
        if pos_tags.get(i).map(String::as_str) != Some(PUNCTUATION_TAG) {
            tokens.push(Token::Literal(word.to_lowercase()));
        }
        i += 1;
    }
    Template::new(tokens, intent, language)
}

/// The candidate with the highest mean confidence.
///
/// Candidates with at least `min_samples` samples are preferred; when none
/// has that many, all are considered. Ties go to the larger sample count,
/// then to the lexicographically smaller token form.
pub fn select_optimal_template(
    candidates: &[Template],
    min_samples: usize,
) -> Result<&Template, TemplateError> {
    if candidates.is_empty() {
        return Err(TemplateError::NoCandidates);
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for t in candidates {
        t.validate()?;
        let mean = t
            .mean_confidence()
            .ok_or_else(|| TemplateError::NoSamples(t.form()))?;
        scored.push((t, mean, t.form()));
    }
    let supported = scored.iter().any(|(t, ..)| t.confidence_samples.len() >= min_samples);
    scored
        .iter()
        .filter(|(t, ..)| !supported || t.confidence_samples.len() >= min_samples)
        .max_by(|a, b| {
            mean_order(a.1, b.1)
                .then(a.0.confidence_samples.len().cmp(&b.0.confidence_samples.len()))
                .then(b.2.cmp(&a.2))
        })
        .map(|(t, ..)| *t)
        .ok_or(TemplateError::NoCandidates)
}

/// Means closer than summation noise count as equal.
fn mean_order(a: f64, b: f64) -> std::cmp::Ordering {
    if (a - b).abs() <= 1e-12 {
        std::cmp::Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}
