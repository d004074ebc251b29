use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::world::Samplers;
use super::{SimError, WorldModel};
use crate::eval::{equivalence_curve, partition_metrics, rewritability_predictions, EvalRecord, PartitionMetrics};
use crate::markov::{
    rewrite_table, snapshot, MarkovGraph, RewriteTable, SolverConfig, DEFAULT_MIN_REWRITE_SUPPORT,
    DEFAULT_MIN_STATE_SUPPORT,
};
use crate::meta::{AlphaConfig, DEFAULT_IQ_THRESHOLD};
use crate::session::{Hypothesis, Outcome, RecordedIqScorer, Session, Turn, TurnKind};
use crate::train::{train, TrainConfig, TrainMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub mode: TrainMode,
    pub days: usize,
    pub sessions_per_day: usize,
    pub seed: u64,
    pub min_state_support: u64,
    pub min_rewrite_support: u64,
    pub iq_threshold: f64,
    pub alpha: AlphaConfig,
    pub solver: SolverConfig,
}

impl SimulationConfig {
    pub fn new(mode: TrainMode, days: usize, sessions_per_day: usize, seed: u64) -> Self {
        Self {
            mode,
            days,
            sessions_per_day,
            seed,
            min_state_support: DEFAULT_MIN_STATE_SUPPORT,
            min_rewrite_support: DEFAULT_MIN_REWRITE_SUPPORT,
            iq_threshold: DEFAULT_IQ_THRESHOLD,
            alpha: AlphaConfig::default(),
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.days == 0 || self.sessions_per_day == 0 {
            return Err(SimError::InvalidConfig(
                "days and sessions_per_day must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.iq_threshold) {
            return Err(SimError::InvalidConfig(format!(
                "iq_threshold {} is outside [0, 1]",
                self.iq_threshold
            )));
        }
        Ok(())
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            mode: self.mode,
            min_state_support: self.min_state_support,
            iq_threshold: self.iq_threshold,
            alpha: self.alpha,
        }
    }
}

/// Generator for day `day`: the seed's ChaCha8 stream number `day`.
pub fn day_rng(seed: u64, day: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(day as u64);
    rng
}

const SECONDS_PER_DAY: i64 = 86_400;

/// One day of traffic against the deployed table.
///
/// Each session picks a customer, an intent and an opener. A turn whose
/// hypothesis the deployed table (or else an active external rewrite) maps
/// elsewhere is followed by a Rewrite turn. After each served turn the
/// customer rephrases with the world's defect or success probability. The
/// outcome is the oracle quality of the last served turn.
pub fn simulate_day<R: Rng + ?Sized>(
    world: &WorldModel,
    deployed: &RewriteTable,
    day: usize,
    sessions: usize,
    rng: &mut R,
) -> Result<Vec<Session>, SimError> {
    world.validate()?;
    let samplers = world.samplers()?;
    Ok((0..sessions)
        .map(|k| one_session(world, &samplers, deployed, day, k, rng))
        .collect())
}

fn one_session<R: Rng + ?Sized>(
    world: &WorldModel,
    samplers: &Samplers,
    deployed: &RewriteTable,
    day: usize,
    index: usize,
    rng: &mut R,
) -> Session {
    let customer = format!("c{:04}", rng.random_range(0..world.customers));
    let intent = samplers.intent(rng);
    let spec = &world.intents[intent];
    let mut phrase = &spec.openers[samplers.openers[intent].sample(rng)].0;
    let start = day as i64 * SECONDS_PER_DAY + index as i64 * 60;
    let mut turns = Vec::new();
    let mut served = false;
    for step in 0..world.max_turns {
        let ts = start + turns.len() as i64;
        let heard = &phrase.hypothesis;
        turns.push(Turn::user(phrase.text.clone(), heard.clone(), ts).with_iq(world.iq(intent, heard, rng)));
        let rewrite = match deployed.get(heard) {
            Some(target) => Some((world.surface(target), target.clone())),
            None if day > 0 => world
                .external_rewrite(heard, day)
                .map(|p| (p.text.clone(), p.hypothesis.clone())),
            None => None,
        };
        if let Some((text, target)) = rewrite {
            let iq = world.iq(intent, &target, rng);
            turns.push(Turn::new(text, target, ts, TurnKind::Rewrite).with_iq(iq));
        }
        served = turns.last().and_then(|t| t.iq).unwrap_or(0.0) >= 0.5;
        if step + 1 == world.max_turns {
            break;
        }
        let Some(rephrases) = &samplers.rephrases[intent] else {
            break;
        };
        let p = if served {
            world.rephrase_after_success
        } else {
            world.rephrase_after_defect
        };
        if rng.random::<f64>() >= p {
            break;
        }
        phrase = &spec.rephrases[rephrases.sample(rng)].0;
    }
    let outcome = if served { Outcome::Success } else { Outcome::Failure };
    Session::new(customer, turns).with_outcome(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayMetrics {
    /// Rewritability prediction against the oracle labels.
    pub partition: Option<PartitionMetrics>,
    /// Area under the equivalence precision-recall curve; absent when the
    /// world has no positive pair.
    pub pr_auc: Option<f64>,
    pub best_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub day: usize,
    /// Trained on the logs of days `0..=day`.
    pub graph: MarkovGraph<f64>,
    /// Deployed on day `day + 1`.
    pub table: RewriteTable,
    /// Sessions generated on this day.
    pub sessions: usize,
    pub failures: usize,
    pub metrics: DayMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub config: SimulationConfig,
    pub days: Vec<DayRecord>,
    pub sessions: Vec<Session>,
}

impl SimulationRun {
    pub fn tables(&self) -> Vec<RewriteTable> {
        self.days.iter().map(|d| d.table.clone()).collect()
    }

    /// Day-over-day changes of `state`'s top rewrite over the whole run.
    pub fn count_flips(&self, state: &Hypothesis) -> Result<usize, SimError> {
        if !self.days.iter().any(|d| d.graph.space().index_of(state).is_some()) {
            return Err(SimError::UnknownState(state.to_string()));
        }
        count_flips(&self.tables(), state)
    }

    /// Days whose table maps `source` to `target`.
    pub fn days_with_rewrite(&self, source: &Hypothesis, target: &Hypothesis) -> usize {
        self.days.iter().filter(|d| d.table.get(source) == Some(target)).count()
    }

    /// Failed sessions per session over the last `days` days.
    pub fn defect_rate(&self, days: usize) -> f64 {
        let tail = &self.days[self.days.len().saturating_sub(days)..];
        let sessions: usize = tail.iter().map(|d| d.sessions).sum();
        let failures: usize = tail.iter().map(|d| d.failures).sum();
        if sessions == 0 {
            0.0
        } else {
            failures as f64 / sessions as f64
        }
    }
}

/// Days on which `state`'s top rewrite, or its absence, differs from the
/// previous day.
pub fn count_flips(tables: &[RewriteTable], state: &Hypothesis) -> Result<usize, SimError> {
    if tables.is_empty() {
        return Err(SimError::EmptySeries);
    }
    Ok(tables.windows(2).filter(|w| w[0].get(state) != w[1].get(state)).count())
}

fn day_metrics(graph: &MarkovGraph<f64>, records: &[EvalRecord], solver: &SolverConfig) -> Result<DayMetrics, SimError> {
    if records.is_empty() {
        return Ok(DayMetrics {
            partition: None,
            pr_auc: None,
            best_f1: None,
        });
    }
    let predictions = rewritability_predictions(graph, records, solver)?;
    let labels: Vec<bool> = records.iter().map(EvalRecord::label).collect();
    let partition = Some(partition_metrics(&predictions, &labels)?);
    let (pr_auc, best_f1) = if labels.iter().any(|&y| y) {
        let curve = equivalence_curve(graph, records, solver)?;
        (Some(curve.area), Some(curve.best_f1().f1()))
    } else {
        (None, None)
    };
    Ok(DayMetrics {
        partition,
        pr_auc,
        best_f1,
    })
}

/// Day 0 serves rewrite-free bootstrap traffic. Every day then retrains from
/// scratch on all sessions so far and deploys the resulting table the next
/// day.
pub fn run_loop(world: &WorldModel, config: &SimulationConfig) -> Result<SimulationRun, SimError> {
    world.validate()?;
    config.validate()?;
    let records = world.eval_set();
    let mut sessions: Vec<Session> = Vec::new();
    let mut deployed = RewriteTable::new();
    let mut days = Vec::with_capacity(config.days);
    for day in 0..config.days {
        let mut rng = day_rng(config.seed, day);
        let today = simulate_day(world, &deployed, day, config.sessions_per_day, &mut rng)?;
        let failures = today
            .iter()
            .filter(|s| s.outcome == Some(Outcome::Failure))
            .count();
        sessions.extend(today);
        let graph: MarkovGraph<f64> = train(&sessions, &config.train_config(), &RecordedIqScorer)?;
        let table = rewrite_table(&graph, config.min_rewrite_support, &config.solver)?;
        let metrics = day_metrics(&graph, &records, &config.solver)?;
        deployed = table.clone();
        days.push(DayRecord {
            day,
            graph,
            table,
            sessions: config.sessions_per_day,
            failures,
            metrics,
        });
    }
    Ok(SimulationRun {
        config: *config,
        days,
        sessions,
    })
}

impl DayRecord {
    /// SHA-256 of the graph snapshot text, hex encoded.
    pub fn graph_digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(snapshot::write_graph(&self.graph).as_bytes()))
    }
}
