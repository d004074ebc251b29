//! One entry point for the three ways of building a chain from logs that
//! contain rewrites.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::markov::{build_graph, BuildConfig, ChainMode, GraphError, MarkovGraph, DEFAULT_MIN_STATE_SUPPORT};
use crate::meta::{build_self_aware, AlphaConfig, MetaError, SelfAwareConfig, DEFAULT_IQ_THRESHOLD};
use crate::session::{IqScorer, Session};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrainMode {
    /// Rewrite turns are skipped.
    Discounting,
    /// Rewrite turns become chain states.
    Unrolling,
    /// Superposition of both, weighted by measured rewrite quality.
    SelfAware,
}

impl TrainMode {
    pub const ALL: [TrainMode; 3] = [TrainMode::Discounting, TrainMode::Unrolling, TrainMode::SelfAware];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Discounting => "discounting",
            TrainMode::Unrolling => "unrolling",
            TrainMode::SelfAware => "selfaware",
        }
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainMode {
    type Err = String;

    /// `baseline` names the plain chain, which ignores rewrites.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" | "discounting" => Ok(TrainMode::Discounting),
            "unrolling" => Ok(TrainMode::Unrolling),
            "selfaware" => Ok(TrainMode::SelfAware),
            other => Err(format!(
                "unknown mode `{other}` (expected baseline, discounting, unrolling or selfaware)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub min_state_support: u64,
    /// Only used by [`TrainMode::SelfAware`].
    pub iq_threshold: f64,
    pub alpha: AlphaConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::Discounting,
            min_state_support: DEFAULT_MIN_STATE_SUPPORT,
            iq_threshold: DEFAULT_IQ_THRESHOLD,
            alpha: AlphaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Meta(#[from] MetaError),
}

pub fn train<T: Scalar, S: IqScorer + ?Sized>(
    sessions: &[Session],
    config: &TrainConfig,
    scorer: &S,
) -> Result<MarkovGraph<T>, TrainError> {
    let chain = |mode| BuildConfig {
        mode,
        min_state_support: config.min_state_support,
    };
    Ok(match config.mode {
        TrainMode::Discounting => build_graph(sessions, &chain(ChainMode::Discounting))?,
        TrainMode::Unrolling => build_graph(sessions, &chain(ChainMode::Unrolling))?,
        TrainMode::SelfAware => build_self_aware(
            sessions,
            &SelfAwareConfig {
                min_state_support: config.min_state_support,
                iq_threshold: config.iq_threshold,
                alpha: config.alpha,
            },
            scorer,
        )?,
    })
}
