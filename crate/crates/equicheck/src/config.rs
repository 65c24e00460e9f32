use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Tolerances and enumeration caps shared across the engine.
///
/// All information quantities are computed exactly; the epsilons below only
/// decide when two exact floating-point results count as equal. Caps bound
/// the exhaustive sweeps so that every check stays at desk scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Tolerance (nats) for mutual-information equalities such as
    /// `I(Y;C) = I(Y;X)` and `I(Y;X|C) = 0`.
    pub eps_nats: f64,
    /// Total-variation tolerance under which two distributions commute.
    pub tv_tol: f64,
    /// Maximum allowed deviation of a probability row from summing to 1.
    /// Rows off by more are rejected, not silently fixed.
    pub row_sum_tol: f64,
    /// Tie tolerance when comparing alignment divergences.
    pub tie_tol: f64,
    /// Maximum number of sentences for full concept enumeration.
    pub concept_enum_cap: usize,
    /// Maximum size of the translated sentence set when enumerating
    /// candidate translations.
    pub translation_domain_cap: usize,
    /// Maximum number of target sentences when enumerating translations.
    pub translation_target_cap: usize,
    /// Maximum assignment-space size for any exhaustive sweep.
    pub sweep_cap: usize,
    /// A box is sparse when `|parents| / K <= sparsity_ratio_max`.
    pub sparsity_ratio_max: f64,
    /// Maximum number of counterexamples retained in a report. The total
    /// count stays exact even when the list is truncated.
    pub counterexample_cap: usize,
    /// Largest concept count for which alignment search is exhaustive;
    /// above it a greedy search with restarts is used.
    pub exhaustive_match_max: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            eps_nats: 1e-9,
            tv_tol: 1e-9,
            row_sum_tol: 1e-9,
            tie_tol: 1e-12,
            concept_enum_cap: 20,
            translation_domain_cap: 6,
            translation_target_cap: 8,
            sweep_cap: 1 << 22,
            sparsity_ratio_max: 0.5,
            counterexample_cap: 100,
            exhaustive_match_max: 8,
        }
    }
}

impl EngineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
