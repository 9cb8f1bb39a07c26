//! Language-model subroutines behind a backend trait: chain-of-thought
//! solving, consequent generation, and commonsense/relevance scoring.

mod oracle;
pub mod prompt;
mod vote;
mod wire;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::logic::{parse_formula, Entity, Formula, Implication, Literal, Predicate, Signature};

pub use oracle::{OracleBackend, OracleConfig, OracleKb, Rule, UnknownPolicy};
pub use prompt::Exemplar;
pub use vote::{extract_answer, vote, CotSample, SolveVote};
pub use wire::{GenerationBudget, WireBackend, WireConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    /// Contradiction-style commonsense scoring, one-entity generation blanks.
    #[default]
    General,
    /// Truth-style scoring, two-entity generation blanks.
    Kinship,
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptStyle::General => "general",
            PromptStyle::Kinship => "kinship",
        })
    }
}

/// What a generation request asks the model to fill in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Entity(Entity),
    Pair(Entity, Entity),
}

impl Target {
    pub fn args(&self) -> Vec<&Entity> {
        match self {
            Target::Entity(e) => vec![e],
            Target::Pair(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Entity(e) => write!(f, "{e}"),
            Target::Pair(a, b) => write!(f, "{a}, {b}"),
        }
    }
}

/// Problem state shown to the model.
#[derive(Debug, Clone, Copy)]
pub struct Context<'a> {
    /// Premises as written, for prompts.
    pub premises: &'a [Formula],
    /// The same premises grounded over the current universe.
    pub ground_premises: &'a [Formula],
    pub commonsense: &'a [Implication],
    pub query: &'a Formula,
    pub style: PromptStyle,
    pub exemplars: &'a [Exemplar],
}

impl<'a> Context<'a> {
    pub fn new(
        premises: &'a [Formula],
        ground_premises: &'a [Formula],
        commonsense: &'a [Implication],
        query: &'a Formula,
        style: PromptStyle,
    ) -> Self {
        Context {
            premises,
            ground_premises,
            commonsense,
            query,
            style,
            exemplars: &[],
        }
    }

    pub fn with_exemplars(mut self, exemplars: &'a [Exemplar]) -> Self {
        self.exemplars = exemplars;
        self
    }

    /// Predicates of the premises and commonsense clauses.
    pub fn predicates(&self) -> BTreeSet<Predicate> {
        let mut out: BTreeSet<Predicate> = self.premises.iter().flat_map(Formula::predicates).collect();
        for c in self.commonsense {
            for l in c.antecedent.iter().chain([&c.consequent]) {
                out.insert(l.atom.predicate());
            }
        }
        out
    }

    /// Entities mentioned by the grounded premises or the commonsense clauses.
    pub fn entities(&self) -> BTreeSet<Entity> {
        let mut out: BTreeSet<Entity> = self.ground_premises.iter().flat_map(Formula::entities).collect();
        for c in self.commonsense {
            out.extend(c.entities());
        }
        out
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::default();
        for p in self.predicates() {
            let _ = sig.check(&p.name, p.arity, 0);
        }
        for p in self.query.predicates() {
            let _ = sig.check(&p.name, p.arity, 0);
        }
        sig
    }
}

/// Log-probabilities of the `Yes` and `No` tokens at the scored position;
/// `None` when the token is not among the returned candidates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct YesNo {
    pub yes: Option<f64>,
    pub no: Option<f64>,
}

impl YesNo {
    pub fn decided(yes: bool) -> Self {
        if yes {
            YesNo {
                yes: Some(0.0),
                no: None,
            }
        } else {
            YesNo {
                yes: None,
                no: Some(0.0),
            }
        }
    }

    /// Two-token softmax `P[Yes]`; `None` when neither token was returned.
    pub fn p_yes(&self) -> Option<f64> {
        let yes = self.yes.unwrap_or(f64::NEG_INFINITY);
        let no = self.no.unwrap_or(f64::NEG_INFINITY);
        if yes == f64::NEG_INFINITY && no == f64::NEG_INFINITY {
            return None;
        }
        let m = yes.max(no);
        let (ey, en) = ((yes - m).exp(), (no - m).exp());
        Some(ey / (ey + en))
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend transport failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed backend response: {0}")]
    Protocol(String),
}

/// The four model calls ARGOS relies on. Implementations must be usable from
/// several threads at once.
pub trait LlmBackend: Send + Sync {
    /// `k` independent chain-of-thought samples for the query.
    fn sample_cot(&self, ctx: &Context<'_>, k: usize) -> Result<Vec<CotSample>, BackendError>;

    /// Raw completion proposing a consequent for `antecedent -> ___(target)`.
    fn generate(
        &self,
        ctx: &Context<'_>,
        antecedent: &[Literal],
        target: &Target,
    ) -> Result<Option<String>, BackendError>;

    /// Yes/No logprobs for the commonsense question in the given style.
    fn commonsense_logprobs(&self, clause: &Implication, style: PromptStyle) -> Result<YesNo, BackendError>;

    /// Yes/No logprobs for the contextual-relevance question.
    fn relevance_logprobs(&self, ctx: &Context<'_>, clause: &Implication) -> Result<YesNo, BackendError>;
}

/// Running count of chain-of-thought requests.
#[derive(Debug, Default)]
pub struct CotCounter(AtomicUsize);

impl CotCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, n: usize) -> usize {
        self.0.fetch_add(n, Ordering::SeqCst) + n
    }

    pub fn get(&self) -> usize {
        self.0.load(Ordering::SeqCst)
    }
}

pub fn llm_solve(
    backend: &dyn LlmBackend,
    ctx: &Context<'_>,
    k: usize,
    counter: &CotCounter,
) -> Result<SolveVote, BackendError> {
    counter.add(k);
    let samples = backend.sample_cot(ctx, k)?;
    Ok(vote(samples))
}

/// Interpret a generation completion for `target`: either a full literal, or
/// a bare (possibly negated) predicate name to be applied to the target.
pub fn parse_generated(text: &str, target: &Target, signature: &Signature) -> Option<Literal> {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty())?;
    let line = line.trim_end_matches(['.', ',', ';']).trim();
    let formula = parse_formula(line).ok()?;
    let literal = match formula.as_literal() {
        Some(l) if !l.atom.args.is_empty() => l,
        Some(l) => {
            let args: Vec<Entity> = target.args().into_iter().cloned().collect();
            Literal {
                atom: crate::logic::Atom::new(l.atom.predicate.clone(), args),
                positive: l.positive,
            }
        }
        None => return None,
    };
    match signature.arity(&literal.atom.predicate) {
        Some(n) if n != literal.atom.args.len() => None,
        _ => Some(literal),
    }
}

/// One generation call per target; unparseable or ill-typed completions are
/// dropped and duplicates removed, keeping first-seen order.
pub fn llm_generate(
    backend: &dyn LlmBackend,
    ctx: &Context<'_>,
    antecedent: &[Literal],
    targets: &[Target],
) -> Result<Vec<(Target, Literal)>, BackendError> {
    let signature = ctx.signature();
    let mut out: Vec<(Target, Literal)> = Vec::new();
    for t in targets {
        if let Some(text) = backend.generate(ctx, antecedent, t)? {
            if let Some(l) = parse_generated(&text, t, &signature) {
                if !out.iter().any(|(_, seen)| *seen == l) {
                    out.push((t.clone(), l));
                }
            }
        }
    }
    Ok(out)
}

/// A probability, or a warning when the backend returned neither token.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub value: f64,
    pub warning: Option<String>,
}

fn score_from(p: Option<f64>, what: &str) -> Score {
    match p {
        Some(value) => Score { value, warning: None },
        None => Score {
            value: 0.0,
            warning: Some(format!("{what}: neither Yes nor No among returned tokens")),
        },
    }
}

/// `P[No]` to "seems contradictory?" in the general style, `P[Yes]` to
/// "seems true?" in the kinship style.
pub fn llm_commonsense_score(
    backend: &dyn LlmBackend,
    clause: &Implication,
    style: PromptStyle,
) -> Result<Score, BackendError> {
    let yn = backend.commonsense_logprobs(clause, style)?;
    let p = yn.p_yes().map(|y| match style {
        PromptStyle::General => 1.0 - y,
        PromptStyle::Kinship => y,
    });
    Ok(score_from(p, "commonsense score"))
}

pub fn llm_relevance_score(
    backend: &dyn LlmBackend,
    ctx: &Context<'_>,
    clause: &Implication,
) -> Result<Score, BackendError> {
    let yn = backend.relevance_logprobs(ctx, clause)?;
    Ok(score_from(yn.p_yes(), "relevance score"))
}
