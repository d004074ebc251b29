use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::eval::EvalRecord;
use crate::session::Hypothesis;

/// What a customer says and what the NLU hears.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phrase {
    pub text: String,
    pub hypothesis: Hypothesis,
}

impl Phrase {
    pub fn new(text: impl Into<String>, hypothesis: Hypothesis) -> Self {
        Self {
            text: text.into(),
            hypothesis,
        }
    }
}

/// One customer goal.
///
/// Openers whose hypothesis is not in `successful` are misrecognitions: the
/// goal is spoken but heard as something that does not serve it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentIntent {
    pub name: String,
    /// Relative share of sessions.
    pub traffic: f64,
    /// First utterances with relative weights.
    pub openers: Vec<(Phrase, f64)>,
    /// Follow-up utterances with relative weights.
    pub rephrases: Vec<(Phrase, f64)>,
    pub successful: BTreeSet<Hypothesis>,
}

/// A rewrite applied by a system other than the deployed chain, active on
/// days `first_day..=last_day` unless the deployed table already rewrites
/// the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalRewrite {
    pub source: Hypothesis,
    pub target: Phrase,
    pub first_day: usize,
    pub last_day: usize,
}

pub const DEFAULT_REPHRASE_AFTER_DEFECT: f64 = 0.7;
pub const DEFAULT_REPHRASE_AFTER_SUCCESS: f64 = 0.05;
pub const DEFAULT_MAX_TURNS: usize = 4;
pub const DEFAULT_CUSTOMERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub intents: Vec<LatentIntent>,
    pub external: Vec<ExternalRewrite>,
    pub rephrase_after_defect: f64,
    pub rephrase_after_success: f64,
    /// Probability that the oracle reports the wrong quality for a turn.
    pub label_noise: f64,
    /// Customer turns per session, rewrites not counted.
    pub max_turns: usize,
    /// Size of the customer population `c0000..`.
    pub customers: usize,
}

impl WorldModel {
    pub fn new(intents: Vec<LatentIntent>) -> Self {
        Self {
            intents,
            external: Vec::new(),
            rephrase_after_defect: DEFAULT_REPHRASE_AFTER_DEFECT,
            rephrase_after_success: DEFAULT_REPHRASE_AFTER_SUCCESS,
            label_noise: 0.0,
            max_turns: DEFAULT_MAX_TURNS,
            customers: DEFAULT_CUSTOMERS,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidWorld(msg));
        let probability = |p: f64| (0.0..=1.0).contains(&p);
        let weight = |w: f64| w.is_finite() && w > 0.0;
        for (name, p) in [
            ("rephrase_after_defect", self.rephrase_after_defect),
            ("rephrase_after_success", self.rephrase_after_success),
            ("label_noise", self.label_noise),
        ] {
            if !probability(p) {
                return bad(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        if self.intents.is_empty() {
            return bad("no latent intents".into());
        }
        if self.max_turns == 0 || self.customers == 0 {
            return bad("max_turns and customers must be positive".into());
        }
        for intent in &self.intents {
            if !weight(intent.traffic) {
                return bad(format!("intent {}: traffic {} is not positive", intent.name, intent.traffic));
            }
            if intent.openers.is_empty() {
                return bad(format!("intent {} has no openers", intent.name));
            }
            if intent
                .openers
                .iter()
                .chain(&intent.rephrases)
                .any(|&(_, w)| !weight(w))
            {
                return bad(format!("intent {} has a non-positive phrase weight", intent.name));
            }
            if intent.successful.is_empty() {
                return bad(format!("intent {} has no successful hypothesis", intent.name));
            }
        }
        for e in &self.external {
            if e.first_day > e.last_day {
                return bad(format!("external rewrite of {} ends before it starts", e.source));
            }
        }
        Ok(())
    }

    /// Text used when the system rewrites to `hypothesis`: the first phrase
    /// in the world carrying it, or its canonical form.
    pub fn surface(&self, hypothesis: &Hypothesis) -> String {
        self.intents
            .iter()
            .flat_map(|i| i.openers.iter().chain(&i.rephrases).map(|(p, _)| p))
            .chain(self.external.iter().map(|e| &e.target))
            .find(|p| &p.hypothesis == hypothesis)
            .map_or_else(|| hypothesis.to_string(), |p| p.text.clone())
    }

    pub fn external_rewrite(&self, source: &Hypothesis, day: usize) -> Option<&Phrase> {
        self.external
            .iter()
            .find(|e| &e.source == source && (e.first_day..=e.last_day).contains(&day))
            .map(|e| &e.target)
    }

    /// 1 when the hypothesis serves the intent, else 0, flipped with
    /// probability `label_noise`.
    pub fn iq<R: Rng + ?Sized>(&self, intent: usize, hypothesis: &Hypothesis, rng: &mut R) -> f64 {
        let truth = self.intents[intent].successful.contains(hypothesis);
        let flip = self.label_noise > 0.0 && rng.random::<f64>() < self.label_noise;
        if truth != flip {
            1.0
        } else {
            0.0
        }
    }

    pub(crate) fn samplers(&self) -> Result<Samplers, SimError> {
        let weights = |phrases: &[(Phrase, f64)]| {
            if phrases.is_empty() {
                Ok(None)
            } else {
                WeightedIndex::new(phrases.iter().map(|(_, w)| *w))
                    .map(Some)
                    .map_err(|e| SimError::InvalidWorld(e.to_string()))
            }
        };
        Ok(Samplers {
            intents: WeightedIndex::new(self.intents.iter().map(|i| i.traffic))
                .map_err(|e| SimError::InvalidWorld(e.to_string()))?,
            openers: self
                .intents
                .iter()
                .map(|i| weights(&i.openers).map(|w| w.expect("validated non-empty")))
                .collect::<Result<_, _>>()?,
            rephrases: self
                .intents
                .iter()
                .map(|i| weights(&i.rephrases))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Labelled requests from the oracle, one per distinct opener.
    ///
    /// A misrecognized opener has the intent's successful hypotheses as
    /// positives. Negatives are the defective rephrases of the intent and any
    /// external rewrite target of the opener.
    pub fn eval_set(&self) -> Vec<EvalRecord> {
        let mut records: BTreeMap<Hypothesis, (BTreeSet<Hypothesis>, BTreeSet<Hypothesis>)> = BTreeMap::new();
        for intent in &self.intents {
            let phrases: BTreeSet<&Hypothesis> = intent
                .openers
                .iter()
                .chain(&intent.rephrases)
                .map(|(p, _)| &p.hypothesis)
                .collect();
            for (opener, _) in &intent.openers {
                let request = &opener.hypothesis;
                let entry = records.entry(request.clone()).or_default();
                if !intent.successful.contains(request) {
                    for &h in &phrases {
                        if intent.successful.contains(h) {
                            entry.0.insert(h.clone());
                        } else if h != request {
                            entry.1.insert(h.clone());
                        }
                    }
                }
                for e in self.external.iter().filter(|e| &e.source == request) {
                    if !intent.successful.contains(&e.target.hypothesis) {
                        entry.1.insert(e.target.hypothesis.clone());
                    }
                }
            }
        }
        records
            .into_iter()
            .map(|(request, (positives, mut negatives))| {
                negatives.retain(|h| !positives.contains(h));
                EvalRecord {
                    request,
                    positives,
                    negatives,
                }
            })
            .collect()
    }
}

pub(crate) struct Samplers {
    pub intents: WeightedIndex<f64>,
    pub openers: Vec<WeightedIndex<f64>>,
    pub rephrases: Vec<Option<WeightedIndex<f64>>>,
}

impl Samplers {
    pub fn intent<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.intents.sample(rng)
    }
}
