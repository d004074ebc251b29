use crate::session::normalize_utterance;
use crate::text::{levenshtein_ratio, ConsonantSkeleton, PhoneticKey};

/// Mean of the grapheme and phonetic-key Levenshtein ratios.
pub fn relevance_rho(rewrite: &str, followup: &str) -> f64 {
    relevance_rho_with(rewrite, followup, &ConsonantSkeleton)
}

pub fn relevance_rho_with<P: PhoneticKey + ?Sized>(rewrite: &str, followup: &str, phonetic: &P) -> f64 {
    let (a, b) = (normalize_utterance(rewrite), normalize_utterance(followup));
    let grapheme = levenshtein_ratio(&a, &b);
    let phoneme = levenshtein_ratio(&phonetic.key(&a), &phonetic.key(&b));
    0.5 * (grapheme + phoneme)
}

/// `(β, γ) = (α^ρ, 1 − α·β)` with `0⁰ = 1`.
pub fn mst_weights(alpha: f64, rho: f64) -> (f64, f64) {
    let beta = if rho == 0.0 { 1.0 } else { alpha.powf(rho) };
    (beta, 1.0 - alpha * beta)
}
