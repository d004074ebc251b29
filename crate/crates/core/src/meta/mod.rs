//! Meta-state triplets and the superposition chain.
//!
//! A user turn `i` rewritten to `k` and followed by `j` (a turn or an
//! absorbing outcome) contributes a viability edge `(i, k)`, a succeeding
//! edge `(k, j)` and a discounting edge `(i, j)`. Each edge is weighted by
//! `λ = α·J_viability + β·J_succeeding + γ·J_discounting + J_plain`, where the
//! `J` terms are the edge's role frequencies and `α`, `β`, `γ` come from
//! the rewrite's measured quality.

mod alpha;
mod beta;
mod detect;
mod superpose;
mod weights;
mod wilson;

pub use alpha::{
    alpha_entity, entity_changes, select_alpha, AlphaChoice, AlphaConfig, PopulationCounts,
    TierStats, DEFAULT_CONFIDENCE, DEFAULT_ETA, UNCHANGED_CATEGORY,
};
pub use beta::{beta_superiority, BetaEvidence, DEFAULT_QUAD_EPS};
pub use detect::{detect_msts, MstDetection, MstOccurrence, RoleCounts};
pub use superpose::{build_self_aware, build_superposition, SelfAwareConfig, DEFAULT_IQ_THRESHOLD};
pub use weights::{mst_weights, relevance_rho, relevance_rho_with};
pub use wilson::{wilson_interval, wilson_width, z_for_confidence};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::markov::GraphError;
use crate::session::ScoreError;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetaError {
    #[error("session {session}: rewrite turn {turn} has no preceding user turn")]
    DanglingRewrite { session: usize, turn: usize },
    #[error("pseudo-counts must be positive and finite, got ({a}, {b})")]
    BadEvidence { a: f64, b: f64 },
    #[error("non-finite value during {0}")]
    NonFinite(&'static str),
    #[error("{successes} successes out of {n} trials")]
    BadCount { successes: u64, n: u64 },
    #[error("confidence must lie in (0, 1), got {0}")]
    BadConfidence(f64),
    #[error("no entity superiority values")]
    NoEntityValues,
    #[error("entity superiority {0} outside [0, 1]")]
    EntityOutOfRange(f64),
    #[error("no alpha tier is available")]
    NoTier,
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which statistic a viability weight was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlphaTier {
    Customer,
    Global,
    Entity,
}

impl AlphaTier {
    pub fn as_str(self) -> &'static str {
        match self {
            AlphaTier::Customer => "customer",
            AlphaTier::Global => "global",
            AlphaTier::Entity => "entity",
        }
    }
}

impl fmt::Display for AlphaTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlphaTier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "customer" => Ok(AlphaTier::Customer),
            "global" => Ok(AlphaTier::Global),
            "entity" => Ok(AlphaTier::Entity),
            other => Err(format!("unknown alpha tier `{other}`")),
        }
    }
}

/// Role frequencies of one edge; the four ratios sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRoleRatios {
    pub viability: f64,
    pub succeeding: f64,
    pub discounting: f64,
    pub plain: f64,
}

impl EdgeRoleRatios {
    /// An edge that never takes part in a triplet.
    pub const PLAIN: Self = Self {
        viability: 0.0,
        succeeding: 0.0,
        discounting: 0.0,
        plain: 1.0,
    };

    pub fn sum(&self) -> f64 {
        self.viability + self.succeeding + self.discounting + self.plain
    }
}

/// Per-edge weights. Only the entries matching a role with nonzero ratio
/// affect `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EdgeParams {
    pub const NEUTRAL: Self = Self {
        alpha: 1.0,
        beta: 1.0,
        gamma: 1.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMeta {
    pub roles: EdgeRoleRatios,
    pub params: EdgeParams,
    /// Majority tier of the viability weight; `None` for edges never used as
    /// a viability edge.
    pub tier: Option<AlphaTier>,
}

impl EdgeMeta {
    pub fn lambda<T: Scalar>(&self) -> T {
        let r = &self.roles;
        let p = &self.params;
        T::from_f64_lossy(
            p.alpha * r.viability + p.beta * r.succeeding + p.gamma * r.discounting + r.plain,
        )
    }

    pub fn validate(&self) -> Result<(), String> {
        let values = [
            ("viability ratio", self.roles.viability),
            ("succeeding ratio", self.roles.succeeding),
            ("discounting ratio", self.roles.discounting),
            ("plain ratio", self.roles.plain),
            ("alpha", self.params.alpha),
            ("beta", self.params.beta),
            ("gamma", self.params.gamma),
        ];
        for (name, v) in values {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} {v} outside [0, 1]"));
            }
        }
        let sum = self.roles.sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("role ratios sum to {sum}"));
        }
        Ok(())
    }
}

/// Meta records keyed by `(source, target)` vertex index.
pub type MetaSection = BTreeMap<(usize, usize), EdgeMeta>;
