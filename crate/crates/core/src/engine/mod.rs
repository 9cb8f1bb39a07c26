//! The ARGOS loop: decide with SAT when the backbone allows it, otherwise
//! consult a self-consistency vote against an annealed threshold and abduce
//! one more commonsense clause.

mod config;
mod search;
mod solve;
pub mod trace;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use config::{Ablation, ConfigError, EngineConfig};
pub use search::{
    find_new_commonsense, pair_order, ranked, score_literal, targets, CommonsenseClause, LiteralScore, SearchEnv,
    SearchState,
};
pub use solve::solve;
pub use trace::{Event, FilterReason, Trace, TraceEvent};

use crate::llm::{BackendError, SolveVote};
use crate::logic::LogicError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecidedBy {
    Sat,
    SelfConsistency,
    /// Search exhausted, threshold annealed to zero, budget hit, or the
    /// premises became inconsistent.
    Fallback,
}

impl fmt::Display for DecidedBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecidedBy::Sat => "sat",
            DecidedBy::SelfConsistency => "self-consistency",
            DecidedBy::Fallback => "fallback",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub verdict: bool,
    pub decided_by: DecidedBy,
    pub confidence: f64,
    /// Accepted clauses in acceptance order.
    pub commonsense: Vec<CommonsenseClause>,
    /// Number of accepted clauses.
    pub iterations: usize,
    pub cot_calls: usize,
    /// The premises plus commonsense became contradictory.
    pub inconsistent: bool,
    /// Some SAT call ran out of conflicts.
    pub budget_exhausted: bool,
    pub last_vote: Option<SolveVote>,
    /// Backend failure that cut the run short.
    pub error: Option<String>,
    pub trace: Trace,
}

impl fmt::Display for SolveResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.commonsense.len();
        write!(
            f,
            "{} ({}, {} clause{})",
            if self.verdict { "True" } else { "False" },
            self.decided_by,
            n,
            if n == 1 { "" } else { "s" }
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("no vote completed: {0}")]
    Backend(#[from] BackendError),
}
