use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::alpha::{entity_changes, select_alpha_with, AlphaConfig, PopulationCounts, TierStats};
use super::detect::{detect_msts, MstDetection};
use super::weights::{mst_weights, relevance_rho};
use super::{AlphaTier, EdgeMeta, EdgeParams, MetaError, MetaSection};
use crate::markov::{EdgeCounts, GraphError, MarkovGraph, StateSpace, Vertex, DEFAULT_MIN_STATE_SUPPORT};
use crate::session::{Hypothesis, IqScorer, Session, TurnKind};
use crate::Scalar;

pub const DEFAULT_IQ_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfAwareConfig {
    pub min_state_support: u64,
    /// A turn counts as a success when its IQ is at least this.
    pub iq_threshold: f64,
    pub alpha: AlphaConfig,
}

impl Default for SelfAwareConfig {
    fn default() -> Self {
        Self {
            min_state_support: DEFAULT_MIN_STATE_SUPPORT,
            iq_threshold: DEFAULT_IQ_THRESHOLD,
            alpha: AlphaConfig::default(),
        }
    }
}

/// Normalizes `λ ∘ C` row by row.
///
/// The column-stochastic form `(λ ∘ C)ᵀ D⁻¹` and the stored source-major
/// `D⁻¹ (λ ∘ C)` are transposes of each other.
pub fn build_superposition<T: Scalar>(
    space: StateSpace,
    counts: EdgeCounts,
    meta: MetaSection,
) -> Result<MarkovGraph<T>, GraphError> {
    MarkovGraph::from_counts(space, counts, Some(meta))
}

#[derive(Default)]
struct Populations<'a> {
    untouched: HashMap<&'a Hypothesis, PopulationCounts>,
    untouched_by_customer: HashMap<(&'a Hypothesis, &'a str), PopulationCounts>,
    rewritten: HashMap<(&'a Hypothesis, &'a Hypothesis), PopulationCounts>,
    rewritten_by_customer: HashMap<(&'a Hypothesis, &'a Hypothesis, &'a str), PopulationCounts>,
    categories: HashMap<(&'a Hypothesis, &'a Hypothesis), Vec<String>>,
    entity: BTreeMap<String, TierStats>,
}

impl<'a> Populations<'a> {
    fn gather<S: IqScorer + ?Sized>(
        sessions: &'a [Session],
        detection: &'a MstDetection,
        scorer: &S,
        threshold: f64,
    ) -> Result<Self, MetaError> {
        let mut p = Populations::default();
        for session in sessions {
            let customer = session.customer_id.as_str();
            for (t, turn) in session.turns.iter().enumerate() {
                if turn.kind == TurnKind::Rewrite {
                    continue;
                }
                let rewritten = session
                    .turns
                    .get(t + 1)
                    .is_some_and(|next| next.kind == TurnKind::Rewrite);
                if rewritten {
                    continue;
                }
                let success = scorer.score(session, t)? >= threshold;
                let h = &turn.hypothesis;
                p.untouched.entry(h).or_default().record(success);
                p.untouched_by_customer
                    .entry((h, customer))
                    .or_default()
                    .record(success);
            }
        }

        let mut sources_by_category: BTreeMap<String, BTreeSet<&Hypothesis>> = BTreeMap::new();
        for occ in &detection.occurrences {
            let session = &sessions[occ.session];
            let success = scorer.score(session, occ.rewrite_turn)? >= threshold;
            let key = (&occ.source, &occ.rewrite);
            p.rewritten.entry(key).or_default().record(success);
            p.rewritten_by_customer
                .entry((&occ.source, &occ.rewrite, session.customer_id.as_str()))
                .or_default()
                .record(success);
            let categories = p
                .categories
                .entry(key)
                .or_insert_with(|| entity_changes(&occ.source, &occ.rewrite));
            for category in categories.iter() {
                p.entity
                    .entry(category.clone())
                    .or_default()
                    .rewritten
                    .record(success);
                sources_by_category
                    .entry(category.clone())
                    .or_default()
                    .insert(&occ.source);
            }
        }
        for (category, sources) in sources_by_category {
            let stats = p.entity.entry(category).or_default();
            for source in sources {
                if let Some(counts) = p.untouched.get(source) {
                    stats.untouched.merge(counts);
                }
            }
        }
        Ok(p)
    }

    fn tiers(&self, source: &'a Hypothesis, rewrite: &'a Hypothesis, customer: &'a str) -> [TierStats; 2] {
        let get = |m: Option<&PopulationCounts>| m.copied().unwrap_or_default();
        [
            TierStats {
                untouched: get(self.untouched_by_customer.get(&(source, customer))),
                rewritten: get(self.rewritten_by_customer.get(&(source, rewrite, customer))),
            },
            TierStats {
                untouched: get(self.untouched.get(source)),
                rewritten: get(self.rewritten.get(&(source, rewrite))),
            },
        ]
    }

    fn entity_stats(&self, source: &'a Hypothesis, rewrite: &'a Hypothesis) -> Vec<TierStats> {
        self.categories
            .get(&(source, rewrite))
            .map(|cats| cats.iter().map(|c| self.entity[c]).collect())
            .unwrap_or_default()
    }
}

#[derive(Default)]
struct EdgeAccumulator {
    alpha: (f64, u64),
    beta: (f64, u64),
    gamma: (f64, u64),
    tiers: BTreeMap<AlphaTier, u64>,
}

fn mean((sum, n): (f64, u64)) -> f64 {
    if n == 0 {
        1.0
    } else {
        (sum / n as f64).clamp(0.0, 1.0)
    }
}

/// Builds the self-aware chain from sessions that carry rewrite turns.
///
/// Each triplet occurrence gets a viability weight `α` from the first
/// supported tier (customer, global, entity), a relevance `ρ` between the
/// rewrite and its successor (zero when the successor is absorbing), and
/// `(β, γ)` from them. Edge parameters are means over the occurrences that
/// used the edge in that role; an edge's tier is its majority tier.
pub fn build_self_aware<T: Scalar, S: IqScorer + ?Sized>(
    sessions: &[Session],
    config: &SelfAwareConfig,
    scorer: &S,
) -> Result<MarkovGraph<T>, MetaError> {
    let detection = detect_msts(sessions, config.min_state_support)?;
    let populations = Populations::gather(sessions, &detection, scorer, config.iq_threshold)?;

    let mut cache: HashMap<TierStats, f64> = HashMap::new();
    let mut superiority = |stats: &TierStats| -> Result<f64, MetaError> {
        if let Some(&v) = cache.get(stats) {
            return Ok(v);
        }
        let v = stats.superiority(config.alpha.quad_eps)?;
        cache.insert(*stats, v);
        Ok(v)
    };
    let mut choices: HashMap<(&Hypothesis, &Hypothesis, &str), (f64, AlphaTier)> = HashMap::new();
    let mut accumulators: BTreeMap<(usize, usize), EdgeAccumulator> = BTreeMap::new();
    let space = &detection.space;

    for occ in &detection.occurrences {
        let session = &sessions[occ.session];
        let customer = session.customer_id.as_str();
        let key = (&occ.source, &occ.rewrite, customer);
        let (alpha, tier) = match choices.get(&key) {
            Some(&c) => c,
            None => {
                let [by_customer, global] = populations.tiers(&occ.source, &occ.rewrite, customer);
                let entity = populations.entity_stats(&occ.source, &occ.rewrite);
                let choice = select_alpha_with(
                    Some(&by_customer),
                    Some(&global),
                    &entity,
                    &config.alpha,
                    &mut superiority,
                )?;
                let alpha = choice.alpha.clamp(0.0, 1.0);
                choices.insert(key, (alpha, choice.tier));
                (alpha, choice.tier)
            }
        };
        let rho = match &occ.successor {
            Vertex::Transient(_) => relevance_rho(
                &session.turns[occ.rewrite_turn].utterance,
                &session.turns[occ.rewrite_turn + 1].utterance,
            ),
            _ => 0.0,
        };
        let (beta, gamma) = mst_weights(alpha, rho);

        let source = space.index_of(&occ.source);
        let rewrite = space.index_of(&occ.rewrite);
        let successor = space.vertex_index(&occ.successor);
        if let (Some(i), Some(k)) = (source, rewrite) {
            let acc = accumulators.entry((i, k)).or_default();
            acc.alpha.0 += alpha;
            acc.alpha.1 += 1;
            *acc.tiers.entry(tier).or_default() += 1;
        }
        if let (Some(k), Some(j)) = (rewrite, successor) {
            let acc = accumulators.entry((k, j)).or_default();
            acc.beta.0 += beta;
            acc.beta.1 += 1;
        }
        if let (Some(i), Some(j)) = (source, successor) {
            let acc = accumulators.entry((i, j)).or_default();
            acc.gamma.0 += gamma;
            acc.gamma.1 += 1;
        }
    }

    let meta: MetaSection = detection
        .roles
        .iter()
        .filter(|(_, roles)| roles.in_triplet())
        .map(|(&edge, roles)| {
            let acc = accumulators.remove(&edge).unwrap_or_default();
            // Highest count wins; ties go to the more specific tier.
            let tier = acc
                .tiers
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&t, _)| t);
            let meta = EdgeMeta {
                roles: roles.ratios(),
                params: EdgeParams {
                    alpha: mean(acc.alpha),
                    beta: mean(acc.beta),
                    gamma: mean(acc.gamma),
                },
                tier,
            };
            (edge, meta)
        })
        .collect();
    Ok(build_superposition(detection.space, detection.counts, meta)?)
}
