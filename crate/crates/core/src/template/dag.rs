use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Template, TemplateError, Token};

/// A token together with how many equal tokens precede it in its template,
/// so a repeated word does not fold a chain onto itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DagNode {
    pub token: Token,
    pub occurrence: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateDag {
    pub intent: String,
    pub language: String,
    pub nodes: Vec<DagNode>,
    /// Sorted, unique `(from, to)` node index pairs.
    pub edges: Vec<(usize, usize)>,
    pub entries: Vec<usize>,
    pub exits: Vec<usize>,
    /// Node sequences of the templates this DAG was built from.
    pub paths: Vec<Vec<usize>>,
}

impl TemplateDag {
    pub fn successors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.edges.partition_point(|&(a, _)| a < node);
        self.edges[start..]
            .iter()
            .take_while(move |&&(a, _)| a == node)
            .map(|&(_, b)| b)
    }

    /// Kahn's algorithm; `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for &(_, b) in &self.edges {
            indegree[b] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(node) = ready.pop_first() {
            order.push(node);
            for next in self.successors(node) {
                indegree[next] -= 1;
                if indegree[next] == 0 {
                    ready.insert(next);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn path_tokens(&self, path: &[usize]) -> Vec<&Token> {
        path.iter().map(|&i| &self.nodes[i].token).collect()
    }

    /// Whether some entry→exit path spells exactly `tokens`.
    pub fn realizes(&self, tokens: &[Token]) -> bool {
        let Some(first) = tokens.first() else {
            return false;
        };
        let mut frontier: Vec<usize> = self
            .entries
            .iter()
            .copied()
            .filter(|&e| &self.nodes[e].token == first)
            .collect();
        for token in &tokens[1..] {
            let next: BTreeSet<usize> = frontier
                .iter()
                .flat_map(|&n| self.successors(n))
                .filter(|&s| &self.nodes[s].token == token)
                .collect();
            frontier = next.into_iter().collect();
        }
        frontier.iter().any(|n| self.exits.contains(n))
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        let n = self.nodes.len();
        let bad = |msg: String| Err(TemplateError::InvalidDag(msg));
        if self.edges.iter().any(|&(a, b)| a >= n || b >= n) {
            return bad("edge endpoint out of range".into());
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return bad("edges are not sorted and unique".into());
        }
        if self.entries.iter().chain(&self.exits).any(|&i| i >= n) {
            return bad("entry or exit out of range".into());
        }
        if self.topological_order().is_none() {
            return bad("graph has a cycle".into());
        }
        for path in &self.paths {
            let (Some(first), Some(last)) = (path.first(), path.last()) else {
                return bad("empty template path".into());
            };
            if !self.entries.contains(first) || !self.exits.contains(last) {
                return bad("template path does not run from an entry to an exit".into());
            }
            if path
                .windows(2)
                .any(|w| self.edges.binary_search(&(w[0], w[1])).is_err())
            {
                return bad("template path uses a missing edge".into());
            }
        }
        let on_path: BTreeSet<usize> = self.paths.iter().flatten().copied().collect();
        if on_path.len() != n {
            return bad("node outside every template path".into());
        }
        Ok(())
    }
}

fn chain(template: &Template) -> Vec<DagNode> {
    let mut seen: BTreeMap<&Token, usize> = BTreeMap::new();
    template
        .tokens
        .iter()
        .map(|token| {
            let occurrence = seen.entry(token).or_default();
            let node = DagNode {
                token: token.clone(),
                occurrence: *occurrence,
            };
            *occurrence += 1;
            node
        })
        .collect()
}

/// Back edges of a depth-first search from the chain heads in node order,
/// successors visited in node order.
fn back_edges(chains: &[Vec<DagNode>]) -> BTreeSet<(DagNode, DagNode)> {
    let mut adjacency: BTreeMap<&DagNode, BTreeSet<&DagNode>> = BTreeMap::new();
    for c in chains {
        for node in c {
            adjacency.entry(node).or_default();
        }
        for w in c.windows(2) {
            adjacency.entry(&w[0]).or_default().insert(&w[1]);
        }
    }
    let entries: BTreeSet<&DagNode> = chains.iter().filter_map(|c| c.first()).collect();

    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Unseen,
        Open,
        Done,
    }
    let mut state: BTreeMap<&DagNode, State> = adjacency.keys().map(|&k| (k, State::Unseen)).collect();
    let mut removed = BTreeSet::new();
    let roots = entries.iter().copied().chain(adjacency.keys().copied());
    for root in roots.collect::<Vec<_>>() {
        if state[root] != State::Unseen {
            continue;
        }
        state.insert(root, State::Open);
        let mut stack: Vec<(&DagNode, Vec<&DagNode>)> =
            vec![(root, adjacency[root].iter().rev().copied().collect())];
        while let Some((node, pending)) = stack.last_mut() {
            let node = *node;
            match pending.pop() {
                Some(next) => match state[next] {
                    State::Unseen => {
                        state.insert(next, State::Open);
                        stack.push((next, adjacency[next].iter().rev().copied().collect()));
                    }
                    State::Open => {
                        removed.insert((node.clone(), next.clone()));
                    }
                    State::Done => {}
                },
                None => {
                    state.insert(node, State::Done);
                    stack.pop();
                }
            }
        }
    }
    removed
}

fn assemble(intent: &str, language: &str, chains: &[&Vec<DagNode>]) -> TemplateDag {
    let nodes: Vec<DagNode> = chains
        .iter()
        .flat_map(|c| c.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |n: &DagNode| nodes.binary_search(n).expect("node collected above");
    let paths: Vec<Vec<usize>> = chains
        .iter()
        .map(|c| c.iter().map(index).collect())
        .collect();
    let edges: BTreeSet<(usize, usize)> = paths
        .iter()
        .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
        .collect();
    let entries: BTreeSet<usize> = paths.iter().map(|p| p[0]).collect();
    let exits: BTreeSet<usize> = paths.iter().map(|p| p[p.len() - 1]).collect();
    TemplateDag {
        intent: intent.to_string(),
        language: language.to_string(),
        nodes,
        edges: edges.into_iter().collect(),
        entries: entries.into_iter().collect(),
        exits: exits.into_iter().collect(),
        paths,
    }
}

/// Unifies the templates' token chains into one graph and factorizes it into
/// acyclic pieces.
///
/// Each round drops the back edges found by a deterministic depth-first
/// search; templates whose chains survive intact form one DAG and the rest go
/// into the next round. Every template stays a path of exactly one DAG.
pub fn build_dags(templates: &[Template]) -> Result<Vec<TemplateDag>, TemplateError> {
    let Some(first) = templates.first() else {
        return Ok(Vec::new());
    };
    for t in templates {
        t.validate()?;
        if t.intent != first.intent || t.language != first.language {
            return Err(TemplateError::MixedGroup(
                format!("{}, {}", first.intent, first.language),
                format!("{}, {}", t.intent, t.language),
            ));
        }
    }
    let mut remaining: Vec<Vec<DagNode>> = templates
        .iter()
        .map(chain)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut dags = Vec::new();
    while !remaining.is_empty() {
        let removed = back_edges(&remaining);
        let (mut intact, mut broken): (Vec<Vec<DagNode>>, Vec<Vec<DagNode>>) =
            remaining.into_iter().partition(|c| {
                c.windows(2)
                    .all(|w| !removed.contains(&(w[0].clone(), w[1].clone())))
            });
        if intact.is_empty() {
            intact.push(broken.remove(0));
        }
        dags.push(assemble(&first.intent, &first.language, &intact.iter().collect::<Vec<_>>()));
        remaining = broken;
    }
    Ok(dags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(form: &str) -> Template {
        Template::parse(form, "PlayMusicIntent", "en").unwrap()
    }

    /// Every entry→exit token sequence, by exhaustive search.
    fn all_paths(dag: &TemplateDag) -> BTreeSet<String> {
        fn walk(dag: &TemplateDag, node: usize, prefix: &mut Vec<usize>, out: &mut BTreeSet<String>) {
            prefix.push(node);
            if dag.exits.contains(&node) {
                out.insert(dag.path_tokens(prefix).iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" "));
            }
            for next in dag.successors(node).collect::<Vec<_>>() {
                walk(dag, next, prefix, out);
            }
            prefix.pop();
        }
        let mut out = BTreeSet::new();
        for &e in &dag.entries {
            walk(dag, e, &mut Vec::new(), &mut out);
        }
        out
    }

    #[test]
    fn shared_prefix_with_optional_branch() {
        let dags = build_dags(&[t("play <Song>"), t("play <Song> by <Artist>")]).unwrap();
        assert_eq!(dags.len(), 1);
        let dag = &dags[0];
        assert_eq!(dag.nodes.len(), 4);
        assert_eq!(dag.entries.len(), 1);
        assert_eq!(dag.exits.len(), 2);
        assert_eq!(
            all_paths(dag),
            BTreeSet::from(["play <Song>".to_string(), "play <Song> by <Artist>".to_string()])
        );
        dag.validate().unwrap();
    }

    #[test]
    fn single_template_is_a_chain() {
        let dags = build_dags(&[t("play the song <Song> by <Artist> the")]).unwrap();
        assert_eq!(dags.len(), 1);
        let dag = &dags[0];
        assert_eq!(dag.nodes.len(), 7);
        assert_eq!(dag.edges.len(), 6);
        assert!(dag.topological_order().is_some());
    }

    #[test]
    fn unification_cycle_is_broken() {
        let templates = [t("<A> x <B>"), t("<B> x <A>")];
        let dags = build_dags(&templates).unwrap();
        assert_eq!(dags.len(), 2);
        for dag in &dags {
            dag.validate().unwrap();
        }
        for tpl in &templates {
            assert!(dags.iter().any(|d| d.realizes(&tpl.tokens)));
        }
    }

    #[test]
    fn empty_input_and_mixed_groups() {
        assert!(build_dags(&[]).unwrap().is_empty());
        let other = Template::parse("stop", "StopIntent", "en").unwrap();
        assert!(matches!(
            build_dags(&[t("play <Song>"), other]),
            Err(TemplateError::MixedGroup(..))
        ));
    }

    fn template_strategy() -> impl Strategy<Value = Vec<Template>> {
        let token = prop_oneof![
            prop::sample::select(vec!["play", "by", "the", "to", "a"]).prop_map(|w| w.to_string()),
            prop::sample::select(vec!["<Song>", "<Artist>", "<Room>"]).prop_map(|w| w.to_string()),
        ];
        prop::collection::vec(prop::collection::vec(token, 1..7), 1..8).prop_map(|forms| {
            forms
                .into_iter()
                .map(|f| t(&f.join(" ")))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn acyclic_and_covering(templates in template_strategy()) {
            let dags = build_dags(&templates).unwrap();
            for dag in &dags {
                prop_assert!(dag.topological_order().is_some());
                prop_assert!(dag.validate().is_ok());
            }
            for tpl in &templates {
                prop_assert!(dags.iter().any(|d| d.realizes(&tpl.tokens)));
            }
        }
    }
}
