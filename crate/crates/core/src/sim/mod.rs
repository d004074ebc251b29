//! Closed-loop deployment: synthetic customers talk to the deployed rewrite
//! table, the chain is retrained every day on all logs so far and the new
//! table is deployed the next day.
//!
//! Randomness is a pure function of the seed. Day `d` draws from its own
//! ChaCha stream (`seed`, stream `d`), so a day's sessions depend only on the
//! seed, the day and the table deployed that day.

mod log;
mod run;
mod scenario;
mod world;

pub use log::{read_simlog, write_csv, write_simlog, SimlogRecord};
pub use run::{count_flips, day_rng, run_loop, simulate_day, DayMetrics, DayRecord, SimulationConfig, SimulationRun};
pub use scenario::{benchmark, music, scenario_type1, scenario_type2, BenchmarkShape, Scenario};
pub use world::{
    ExternalRewrite, LatentIntent, Phrase, WorldModel, DEFAULT_CUSTOMERS, DEFAULT_MAX_TURNS,
    DEFAULT_REPHRASE_AFTER_DEFECT, DEFAULT_REPHRASE_AFTER_SUCCESS,
};

use thiserror::Error;

use crate::eval::EvalError;
use crate::markov::SolveError;
use crate::train::TrainError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("state `{0}` appears in no snapshot")]
    UnknownState(String),
    #[error("empty snapshot series")]
    EmptySeries,
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
