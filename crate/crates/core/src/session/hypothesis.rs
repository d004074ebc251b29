use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HypothesisError {
    #[error("empty hypothesis text")]
    Empty,
    #[error("hypothesis `{0}` needs at least a domain and an intent segment")]
    MissingIntent(String),
    #[error("empty {field} in hypothesis `{text}`")]
    EmptyField { field: &'static str, text: String },
    #[error("slot segment `{0}` has no `:` separator")]
    SlotWithoutColon(String),
    #[error("slot segment `{0}` has an empty slot name")]
    EmptySlotName(String),
    #[error("duplicate slot name `{0}`")]
    DuplicateSlot(String),
    #[error("slot value `{0}` contains a reserved character")]
    ReservedCharacter(String),
}

/// An NLU interpretation: domain, intent and a slot map.
///
/// The canonical text form is `Domain|Intent|Slot:value|...` with slots sorted
/// by name and values lower-cased with collapsed whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hypothesis {
    domain: String,
    intent: String,
    slots: BTreeMap<String, String>,
}

/// Lower-cases and collapses internal whitespace runs to single spaces.
pub fn normalize_slot_value(value: &str) -> String {
    value
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl Hypothesis {
    pub fn new(domain: impl Into<String>, intent: impl Into<String>) -> Self {
        Self {
            domain: domain.into(),
            intent: intent.into(),
            slots: BTreeMap::new(),
        }
    }

    /// Adds a slot, normalizing its value. Panics are avoided: reserved
    /// characters are rejected with an error.
    pub fn with_slot(
        mut self,
        name: impl Into<String>,
        value: &str,
    ) -> Result<Self, HypothesisError> {
        let name = name.into();
        let value = normalize_slot_value(value);
        if value.contains('|') || value.contains('\t') {
            return Err(HypothesisError::ReservedCharacter(value));
        }
        if self.slots.insert(name.clone(), value).is_some() {
            return Err(HypothesisError::DuplicateSlot(name));
        }
        Ok(self)
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn intent(&self) -> &str {
        &self.intent
    }

    pub fn slots(&self) -> &BTreeMap<String, String> {
        &self.slots
    }

    pub fn slot(&self, name: &str) -> Option<&str> {
        self.slots.get(name).map(String::as_str)
    }

    /// Same domain and intent, different slot map.
    pub fn with_slots(&self, slots: BTreeMap<String, String>) -> Self {
        Self {
            domain: self.domain.clone(),
            intent: self.intent.clone(),
            slots: slots
                .into_iter()
                .map(|(k, v)| (k, normalize_slot_value(&v)))
                .collect(),
        }
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

pub fn parse_hypothesis(text: &str) -> Result<Hypothesis, HypothesisError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(HypothesisError::Empty);
    }
    let mut segments = text.split('|');
    let domain = segments.next().unwrap_or_default().trim();
    let intent = match segments.next() {
        Some(intent) => intent.trim(),
        None => return Err(HypothesisError::MissingIntent(text.to_string())),
    };
    if domain.is_empty() {
        return Err(HypothesisError::EmptyField {
            field: "domain",
            text: text.to_string(),
        });
    }
    if intent.is_empty() {
        return Err(HypothesisError::EmptyField {
            field: "intent",
            text: text.to_string(),
        });
    }
    let mut hypothesis = Hypothesis::new(domain, intent);
    for segment in segments {
        let (name, value) = segment
            .split_once(':')
            .ok_or_else(|| HypothesisError::SlotWithoutColon(segment.to_string()))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(HypothesisError::EmptySlotName(segment.to_string()));
        }
        hypothesis = hypothesis.with_slot(name, value)?;
    }
    Ok(hypothesis)
}

impl FromStr for Hypothesis {
    type Err = HypothesisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_hypothesis(s)
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.domain, self.intent)?;
        for (name, value) in &self.slots {
            write!(f, "|{name}:{value}")?;
        }
        Ok(())
    }
}

impl Serialize for Hypothesis {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Hypothesis {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_hypothesis(&text).map_err(serde::de::Error::custom)
    }
}
