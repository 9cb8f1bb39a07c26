use serde::{Deserialize, Serialize};

use crate::llm::PromptStyle;
use crate::logic::DEFAULT_GROUNDING_DEPTH;
use crate::sat::SatLimits;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{field} = {value} is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
}

/// Switches for the ablation variants. All on is the full algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// Consult the self-consistency vote each iteration.
    pub self_consistency: bool,
    /// Accepted-clause cap when the vote is disabled.
    pub max_proposals: usize,
    pub commonsense_scoring: bool,
    pub relevance_scoring: bool,
    /// Order antecedents by backbone score; otherwise draw pairs at random
    /// from all problem literals.
    pub backbone_guided: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation {
            self_consistency: true,
            max_proposals: 100,
            commonsense_scoring: true,
            relevance_scoring: true,
            backbone_guided: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Chain-of-thought samples per vote.
    pub k: usize,
    /// Initial vote threshold.
    pub gamma0: f64,
    /// Threshold decrease per accepted clause.
    pub alpha: f64,
    /// Both clause scores must exceed this.
    pub tau: f64,
    /// Hard cap on chain-of-thought requests for one problem.
    pub max_cot: Option<usize>,
    /// Generation requests per antecedent.
    pub max_candidates_per_pair: usize,
    pub seed: u64,
    /// Overrides the problem's own prompt style.
    pub prompt_style: Option<PromptStyle>,
    pub sat: SatLimits,
    pub grounding_depth: usize,
    pub ablation: Ablation,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            k: 5,
            gamma0: 1.0,
            alpha: 0.1,
            tau: 0.3,
            max_cot: None,
            max_candidates_per_pair: 3,
            seed: 0,
            prompt_style: None,
            sat: SatLimits::default(),
            grounding_depth: DEFAULT_GROUNDING_DEPTH,
            ablation: Ablation::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |field, value: f64| {
            if value > 0.0 && value <= 1.0 {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    field,
                    value,
                    range: "(0, 1]",
                })
            }
        };
        unit("gamma0", self.gamma0)?;
        unit("alpha", self.alpha)?;
        unit("tau", self.tau)?;
        let positive = |field, value: usize| {
            if value >= 1 {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    field,
                    value: value as f64,
                    range: ">= 1",
                })
            }
        };
        positive("k", self.k)?;
        positive("max_candidates_per_pair", self.max_candidates_per_pair)?;
        Ok(())
    }

    /// Threshold after `accepted` clauses, rounded so repeated decrements
    /// land exactly on multiples of `alpha`.
    pub fn gamma_after(&self, accepted: usize) -> f64 {
        let g = self.gamma0 - accepted as f64 * self.alpha;
        (g * 1e9).round() / 1e9
    }
}
