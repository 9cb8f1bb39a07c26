//! Line-delimited JSON event log.
//!
//! Every record carries `iter` (clauses accepted so far), `cot` (chain-of-
//! thought requests issued so far) and an `event` tag:
//!
//! | event          | fields |
//! |----------------|--------|
//! | `sat`          | `conclusion`, `backbone_size`, `budget_exhausted` |
//! | `vote`         | `answer`, `vote_fraction`, `weighted_confidence`, `degenerate`, `gamma` |
//! | `candidate`    | `clause`, `commonsense`, `relevance`, `accepted` |
//! | `filtered`     | `clause`, `reason` |
//! | `accepted`     | `clause` |
//! | `gamma`        | `gamma` |
//! | `warning`      | `message` |
//! | `inconsistent` | — |
//! | `result`       | `verdict`, `decided_by`, `confidence`, `clauses` |

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::DecidedBy;
use crate::sat::SatConclusion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Sat {
        conclusion: SatConclusion,
        backbone_size: usize,
        budget_exhausted: bool,
    },
    Vote {
        answer: bool,
        vote_fraction: f64,
        weighted_confidence: f64,
        degenerate: bool,
        gamma: f64,
    },
    Candidate {
        clause: String,
        commonsense: f64,
        relevance: f64,
        accepted: bool,
    },
    Filtered {
        clause: String,
        reason: FilterReason,
    },
    Accepted {
        clause: String,
    },
    Gamma {
        gamma: f64,
    },
    Warning {
        message: String,
    },
    Inconsistent,
    Result {
        verdict: bool,
        decided_by: DecidedBy,
        confidence: f64,
        clauses: usize,
    },
}

/// Why a generated candidate was never scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    /// The consequent is already entailed.
    InBackbone,
    /// The consequent repeats or contradicts an antecedent literal.
    Vacuous,
    AlreadyAccepted,
    RejectedBefore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub iter: usize,
    pub cot: usize,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn push(&mut self, iter: usize, cot: usize, event: Event) {
        self.events.push(TraceEvent { iter, cot, event });
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    pub fn read_from(r: impl BufRead) -> io::Result<Trace> {
        let mut events = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e = serde_json::from_str(&line)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1)))?;
            events.push(e);
        }
        Ok(Trace { events })
    }
}
