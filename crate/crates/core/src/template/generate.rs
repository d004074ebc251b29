use std::collections::{BTreeMap, BTreeSet};

use super::{TemplateDag, Token};

/// Upper bound on enumerated paths per DAG.
pub const MAX_PATHS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Synthesis {
    Text(String),
    /// No path could be fully instantiated from the entities.
    Fallback,
}

/// An article with a distinct form before vowel-initial words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleRule {
    pub before_consonant: String,
    pub before_vowel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArticleRules {
    rules: Vec<ArticleRule>,
}

impl ArticleRules {
    pub fn new(rules: Vec<ArticleRule>) -> Self {
        Self { rules }
    }

    /// `a` / `an`.
    pub fn english() -> Self {
        Self::new(vec![ArticleRule {
            before_consonant: "a".into(),
            before_vowel: "an".into(),
        }])
    }

    /// Shipped rules by language code; unknown languages get none.
    pub fn for_language(language: &str) -> Self {
        match language {
            "en" => Self::english(),
            _ => Self::default(),
        }
    }

    /// Rewrites literal articles to agree with the following word.
    fn apply(&self, words: &mut [(String, bool)]) {
        for i in 0..words.len().saturating_sub(1) {
            let (word, literal) = &words[i];
            if !literal {
                continue;
            }
            let Some(rule) = self.rules.iter().find(|r| {
                word.eq_ignore_ascii_case(&r.before_consonant) || word.eq_ignore_ascii_case(&r.before_vowel)
            }) else {
                continue;
            };
            let vowel = words[i + 1]
                .0
                .chars()
                .next()
                .is_some_and(|c| "aeiouAEIOU".contains(c));
            words[i].0 = if vowel {
                rule.before_vowel.clone()
            } else {
                rule.before_consonant.clone()
            };
        }
    }
}

fn enumerate_paths(dag: &TemplateDag) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>)> = dag.entries.iter().rev().map(|&e| (e, vec![e])).collect();
    while let Some((node, path)) = stack.pop() {
        if out.len() >= MAX_PATHS {
            break;
        }
        if dag.exits.contains(&node) {
            out.push(path.clone());
        }
        let next: Vec<usize> = dag.successors(node).collect();
        for &s in next.iter().rev() {
            let mut p = path.clone();
            p.push(s);
            stack.push((s, p));
        }
    }
    out
}

/// Fills the path whose placeholders overlap the entities the most.
///
/// Every placeholder on a candidate path must have a value. Ties prefer
/// paths that spell an original template, then the smaller text.
pub fn generate_synthetic(
    entities: &BTreeMap<String, String>,
    dags: &[TemplateDag],
    articles: &ArticleRules,
) -> Synthesis {
    let mut best: Option<(usize, bool, String)> = None;
    for dag in dags {
        for path in enumerate_paths(dag) {
            let mut types = BTreeSet::new();
            let mut words = Vec::with_capacity(path.len());
            let mut complete = true;
            for &node in &path {
                match &dag.nodes[node].token {
                    Token::Literal(w) => words.push((w.clone(), true)),
                    Token::Placeholder(t) => match entities.get(t) {
                        Some(v) => {
                            types.insert(t.as_str());
                            words.push((v.clone(), false));
                        }
                        None => {
                            complete = false;
                            break;
                        }
                    },
                }
            }
            if !complete || types.is_empty() {
                continue;
            }
            articles.apply(&mut words);
            let text = words.into_iter().map(|(w, _)| w).collect::<Vec<_>>().join(" ");
            let original = dag.paths.contains(&path);
            let candidate = (types.len(), original, text);
            let better = match &best {
                None => true,
                Some((o, orig, t)) => (candidate.0, candidate.1, std::cmp::Reverse(&candidate.2)) > (*o, *orig, std::cmp::Reverse(t)),
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    best.map_or(Synthesis::Fallback, |(_, _, text)| Synthesis::Text(text))
}
