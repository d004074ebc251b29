use super::beta::{beta_superiority, BetaEvidence, DEFAULT_QUAD_EPS};
use super::wilson::wilson_width;
use super::{AlphaTier, MetaError};
use crate::session::Hypothesis;

pub const DEFAULT_ETA: f64 = 0.588;
pub const DEFAULT_CONFIDENCE: f64 = 0.89;
/// Entity category for rewrites that keep every slot as is.
pub const UNCHANGED_CATEGORY: &str = "unchanged";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaConfig {
    /// Maximum Wilson width a population may have for its tier to be used.
    pub eta: f64,
    pub confidence: f64,
    pub quad_eps: f64,
    /// Doubles the entity fallback so it spans `[0, 1]` like the other tiers.
    pub rescale_entity: bool,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            confidence: DEFAULT_CONFIDENCE,
            quad_eps: DEFAULT_QUAD_EPS,
            rescale_entity: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct PopulationCounts {
    pub successes: u64,
    pub trials: u64,
}

impl PopulationCounts {
    pub fn record(&mut self, success: bool) {
        self.trials += 1;
        if success {
            self.successes += 1;
        }
    }

    pub fn merge(&mut self, other: &PopulationCounts) {
        self.successes += other.successes;
        self.trials += other.trials;
    }

    pub fn evidence(&self) -> BetaEvidence {
        BetaEvidence::uniform(self.successes, self.trials - self.successes)
    }
}

/// Success counts of a source when left alone and when rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct TierStats {
    pub untouched: PopulationCounts,
    pub rewritten: PopulationCounts,
}

impl TierStats {
    /// Both populations have Wilson width below `eta`.
    pub fn is_supported(&self, config: &AlphaConfig) -> Result<bool, MetaError> {
        for p in [self.untouched, self.rewritten] {
            if wilson_width(p.successes, p.trials, config.confidence)? >= config.eta {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `P(p_rewritten > p_untouched)`.
    pub fn superiority(&self, quad_eps: f64) -> Result<f64, MetaError> {
        beta_superiority(self.untouched.evidence(), self.rewritten.evidence(), quad_eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaChoice {
    pub alpha: f64,
    pub tier: AlphaTier,
}

/// Largest deviation of any per-entity superiority from one half.
pub fn alpha_entity(values: &[f64]) -> Result<f64, MetaError> {
    if values.is_empty() {
        return Err(MetaError::NoEntityValues);
    }
    values.iter().try_fold(0.0f64, |acc, &v| {
        if (0.0..=1.0).contains(&v) {
            Ok(acc.max((v - 0.5).abs()))
        } else {
            Err(MetaError::EntityOutOfRange(v))
        }
    })
}

/// First supported tier among customer, then global; the entity fallback
/// otherwise.
pub fn select_alpha(
    customer: Option<&TierStats>,
    global: Option<&TierStats>,
    entity: &[TierStats],
    config: &AlphaConfig,
) -> Result<AlphaChoice, MetaError> {
    select_alpha_with(customer, global, entity, config, &mut |s| s.superiority(config.quad_eps))
}

/// [`select_alpha`] with a caller-provided superiority evaluator, so repeated
/// count tuples can be served from a cache.
pub(crate) fn select_alpha_with<F>(
    customer: Option<&TierStats>,
    global: Option<&TierStats>,
    entity: &[TierStats],
    config: &AlphaConfig,
    superiority: &mut F,
) -> Result<AlphaChoice, MetaError>
where
    F: FnMut(&TierStats) -> Result<f64, MetaError>,
{
    for (tier, stats) in [(AlphaTier::Customer, customer), (AlphaTier::Global, global)] {
        if let Some(stats) = stats {
            if stats.is_supported(config)? {
                return Ok(AlphaChoice {
                    alpha: superiority(stats)?,
                    tier,
                });
            }
        }
    }
    if entity.is_empty() {
        return Err(MetaError::NoTier);
    }
    let values = entity
        .iter()
        .map(superiority)
        .collect::<Result<Vec<_>, _>>()?;
    let mut alpha = alpha_entity(&values)?;
    if config.rescale_entity {
        alpha *= 2.0;
    }
    Ok(AlphaChoice {
        alpha,
        tier: AlphaTier::Entity,
    })
}

/// Slot-level change categories between a source and its rewrite, e.g.
/// `ArtistName:added` or `SongName:changed`.
pub fn entity_changes(source: &Hypothesis, rewrite: &Hypothesis) -> Vec<String> {
    let mut out = Vec::new();
    for (name, value) in source.slots() {
        match rewrite.slot(name) {
            None => out.push(format!("{name}:removed")),
            Some(v) if v != value => out.push(format!("{name}:changed")),
            Some(_) => {}
        }
    }
    for name in rewrite.slots().keys() {
        if source.slot(name).is_none() {
            out.push(format!("{name}:added"));
        }
    }
    if out.is_empty() {
        out.push(UNCHANGED_CATEGORY.to_string());
    }
    out.sort();
    out
}
