use std::collections::BTreeMap;

use super::{
    build_dags, generate_synthetic, select_optimal_template, ArticleRules, Synthesis, Template, TemplateDag,
    TemplateError, DEFAULT_MIN_SAMPLES,
};
use crate::session::{parse_hypothesis, Hypothesis, InterjectionLexicon, Outcome, Session, Turn, TurnKind};

/// DAGs keyed by `(intent, language)`. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DagStore {
    dags: BTreeMap<(String, String), Vec<TemplateDag>>,
}

impl DagStore {
    /// Keeps the optimal template per `(intent, language, entity set)` and
    /// builds DAGs per `(intent, language)`.
    pub fn from_templates(templates: &[Template], min_samples: usize) -> Result<Self, TemplateError> {
        let mut groups: BTreeMap<(String, String, Vec<String>), Vec<Template>> = BTreeMap::new();
        for t in templates {
            let mut types: Vec<String> = t.entity_types().into_iter().map(str::to_string).collect();
            types.sort();
            groups
                .entry((t.intent.clone(), t.language.clone(), types))
                .or_default()
                .push(t.clone());
        }
        let mut optimal: BTreeMap<(String, String), Vec<Template>> = BTreeMap::new();
        for ((intent, language, _), candidates) in &groups {
            let best = select_optimal_template(candidates, min_samples)?;
            optimal
                .entry((intent.clone(), language.clone()))
                .or_default()
                .push(best.clone());
        }
        let mut dags = BTreeMap::new();
        for (key, group) in optimal {
            dags.insert(key, build_dags(&group)?);
        }
        Ok(Self { dags })
    }

    pub fn from_dags(dags: Vec<TemplateDag>) -> Result<Self, TemplateError> {
        let mut store = Self::default();
        for dag in dags {
            dag.validate()?;
            store
                .dags
                .entry((dag.intent.clone(), dag.language.clone()))
                .or_default()
                .push(dag);
        }
        Ok(store)
    }

    pub fn get(&self, intent: &str, language: &str) -> &[TemplateDag] {
        self.dags
            .get(&(intent.to_string(), language.to_string()))
            .map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TemplateDag> {
        self.dags.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.dags.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for AbridgeConfig {
    fn default() -> Self {
        Self {
            language: "en".into(),
            lexicon: InterjectionLexicon::english(),
            interjection: "stop".into(),
            interjection_hypothesis: parse_hypothesis("Home|StopIntent").expect("valid literal"),
            articles: ArticleRules::english(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbridgeConfig {
    pub language: String,
    pub lexicon: InterjectionLexicon,
    /// Utterance appended when a failed dialog did not end in one.
    pub interjection: String,
    pub interjection_hypothesis: Hypothesis,
    pub articles: ArticleRules,
}

/// Customer turns after the first that stay on its domain and intent,
/// optionally closed by an interjection. Dialogs with rewrites never qualify.
pub fn is_clarification(dialog: &Session, lexicon: &InterjectionLexicon) -> bool {
    let [first, rest @ ..] = dialog.turns.as_slice() else {
        return false;
    };
    if rest.is_empty() || dialog.turns.iter().any(|t| t.kind != TurnKind::User) {
        return false;
    }
    let content = match rest.split_last() {
        Some((last, init)) if lexicon.is_interjection(&last.utterance) => init,
        _ => rest,
    };
    !content.is_empty()
        && content.iter().all(|t| {
            t.hypothesis.domain() == first.hypothesis.domain() && t.hypothesis.intent() == first.hypothesis.intent()
        })
}

/// Compresses a clarification dialog into its first turn plus at most one
/// closing turn. Other dialogs are returned unchanged.
pub fn abridge_dialog(dialog: &Session, store: &DagStore, config: &AbridgeConfig) -> Result<Session, TemplateError> {
    if dialog.turns.len() < 2 {
        return Ok(dialog.clone());
    }
    let outcome = dialog.outcome.ok_or(TemplateError::MissingOutcome)?;
    if !is_clarification(dialog, &config.lexicon) {
        return Ok(dialog.clone());
    }
    let first = dialog.turns[0].clone();
    let last = dialog.turns.last().expect("at least two turns");
    let mut out = Session::new(dialog.customer_id.clone(), vec![first.clone()]);

    if outcome == Outcome::Failure || config.lexicon.is_interjection(&last.utterance) {
        let closing = if config.lexicon.is_interjection(&last.utterance) {
            last.clone()
        } else {
            Turn::user(
                config.interjection.clone(),
                config.interjection_hypothesis.clone(),
                last.timestamp,
            )
        };
        out.turns.push(closing);
        return Ok(out.with_outcome(Outcome::Failure));
    }

    let mut entities = BTreeMap::new();
    for t in &dialog.turns {
        for (k, v) in t.hypothesis.slots() {
            entities.insert(k.clone(), v.clone());
        }
    }
    let dags = store.get(first.hypothesis.intent(), &config.language);
    if let Synthesis::Text(text) = generate_synthetic(&entities, dags, &config.articles) {
        let mut turn = Turn::new(
            text,
            first.hypothesis.with_slots(entities),
            last.timestamp,
            TurnKind::Synthetic,
        );
        turn.iq = last.iq;
        out.turns.push(turn);
    }
    Ok(out.with_outcome(Outcome::Success))
}

impl DagStore {
    /// Builds with the default minimum sample support.
    pub fn from_default_templates(templates: &[Template]) -> Result<Self, TemplateError> {
        Self::from_templates(templates, DEFAULT_MIN_SAMPLES)
    }
}
