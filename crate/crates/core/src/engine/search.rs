//! Backbone-guided search for the next commonsense clause.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::trace::{Event, FilterReason, Trace};
use super::EngineConfig;
use crate::llm::{
    llm_commonsense_score, llm_generate, llm_relevance_score, BackendError, Context, CotCounter, LlmBackend,
    PromptStyle, Target,
};
use crate::logic::{related, Entity, Implication, Literal};
use crate::sat::Backbone;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonsenseClause {
    pub antecedent: Vec<String>,
    pub consequent: String,
    pub commonsense_score: f64,
    pub relevance_score: f64,
    /// Number of clauses accepted before this one.
    pub iteration: usize,
    #[serde(skip)]
    pub implication: Option<Implication>,
}

impl CommonsenseClause {
    pub fn new(implication: Implication, commonsense_score: f64, relevance_score: f64, iteration: usize) -> Self {
        CommonsenseClause {
            antecedent: implication.antecedent.iter().map(ToString::to_string).collect(),
            consequent: implication.consequent.to_string(),
            commonsense_score,
            relevance_score,
            iteration,
            implication: Some(implication),
        }
    }

    pub fn text(&self) -> String {
        match &self.implication {
            Some(i) => i.to_string(),
            None if self.antecedent.is_empty() => self.consequent.clone(),
            None => format!("{} -> {}", self.antecedent.join(" & "), self.consequent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralScore {
    pub literal: Literal,
    pub score: usize,
}

/// Number of backbone literals sharing an entity with `l`, `l` included.
pub fn score_literal(l: &Literal, backbone: &Backbone) -> LiteralScore {
    let score = backbone.literals.iter().filter(|b| related(l, b)).count();
    LiteralScore {
        literal: l.clone(),
        score,
    }
}

/// Literals by descending score, ties broken by their printed form.
pub fn ranked(backbone: &Backbone) -> Vec<LiteralScore> {
    let mut scored: Vec<(LiteralScore, String)> = backbone
        .literals
        .iter()
        .map(|l| (score_literal(l, backbone), l.to_string()))
        .collect();
    scored.sort_by(|(a, at), (b, bt)| b.score.cmp(&a.score).then_with(|| at.cmp(bt)));
    scored.into_iter().map(|(s, _)| s).collect()
}

/// Antecedents in search order: every ordered pair of ranked literals
/// (`L1 = L2` standing for the single literal), then the empty antecedent.
pub fn pair_order(backbone: &Backbone) -> Vec<Vec<Literal>> {
    let lits: Vec<Literal> = ranked(backbone).into_iter().map(|s| s.literal).collect();
    product(&lits)
}

fn product(lits: &[Literal]) -> Vec<Vec<Literal>> {
    let mut out = Vec::with_capacity(lits.len() * lits.len() + 1);
    for a in lits {
        for b in lits {
            if a == b {
                out.push(vec![a.clone()]);
            } else {
                out.push(vec![a.clone(), b.clone()]);
            }
        }
    }
    out.push(Vec::new());
    out
}

fn distinct_entities<'a>(lits: impl IntoIterator<Item = &'a Literal>) -> Vec<Entity> {
    let mut out: Vec<Entity> = Vec::new();
    for l in lits {
        for e in l.entities() {
            if !out.contains(e) {
                out.push(e.clone());
            }
        }
    }
    out
}

/// Generation targets for an antecedent, capped at `cap`.
///
/// One-entity blanks take the antecedent's entities in order of appearance.
/// Two-entity blanks take ordered pairs, pairs not already related by a
/// single antecedent literal first. The empty antecedent borrows the
/// query's entities.
pub fn targets(antecedent: &[Literal], query: &[Literal], style: PromptStyle, cap: usize) -> Vec<Target> {
    let source: Vec<&Literal> = if antecedent.is_empty() {
        query.iter().collect()
    } else {
        antecedent.iter().collect()
    };
    let entities = distinct_entities(source.iter().copied());
    let mut out: Vec<Target> = match style {
        PromptStyle::General => entities.into_iter().map(Target::Entity).collect(),
        PromptStyle::Kinship => {
            let together = |a: &Entity, b: &Entity| {
                source
                    .iter()
                    .any(|l| l.atom.args.contains(a) && l.atom.args.contains(b))
            };
            let mut fresh = Vec::new();
            let mut known = Vec::new();
            for a in &entities {
                for b in &entities {
                    if a == b {
                        continue;
                    }
                    let t = Target::Pair(a.clone(), b.clone());
                    if together(a, b) {
                        known.push(t);
                    } else {
                        fresh.push(t);
                    }
                }
            }
            fresh.extend(known);
            fresh
        }
    };
    out.truncate(cap);
    out
}

/// Memory carried across iterations of one solve.
#[derive(Debug, Default)]
pub struct SearchState {
    accepted: HashSet<(BTreeSet<Literal>, Literal)>,
    rejected: HashSet<(BTreeSet<Literal>, Literal)>,
}

impl SearchState {
    pub fn record_accepted(&mut self, clause: &Implication) {
        self.accepted.insert(clause.key());
    }
}

pub struct SearchEnv<'a> {
    pub ctx: Context<'a>,
    pub backbone: &'a Backbone,
    /// Literal form of the query, used for empty-antecedent targets.
    pub query_literals: &'a [Literal],
    /// Antecedent pool when the backbone ordering is ablated.
    pub all_literals: &'a [Literal],
    pub config: &'a EngineConfig,
    pub backend: &'a dyn LlmBackend,
    pub iteration: usize,
    pub cot: &'a CotCounter,
}

/// First admissible candidate, in antecedent order, whose commonsense and
/// relevance scores both exceed `tau`.
pub fn find_new_commonsense(
    env: &SearchEnv<'_>,
    state: &mut SearchState,
    trace: &mut Trace,
) -> Result<Option<CommonsenseClause>, BackendError> {
    let cfg = env.config;
    let order = if cfg.ablation.backbone_guided {
        pair_order(env.backbone)
    } else {
        let mut all = product(env.all_literals);
        all.shuffle(&mut rng_for(cfg.seed, &format!("pairs|{}", env.iteration)));
        all
    };
    let style = env.ctx.style;
    let mut visited: HashSet<BTreeSet<Literal>> = HashSet::new();
    let log = |trace: &mut Trace, event| trace.push(env.iteration, env.cot.get(), event);

    for antecedent in order {
        if !visited.insert(antecedent.iter().cloned().collect()) {
            continue;
        }
        let ts = targets(&antecedent, env.query_literals, style, cfg.max_candidates_per_pair);
        if ts.is_empty() {
            continue;
        }
        for (_, consequent) in llm_generate(env.backend, &env.ctx, &antecedent, &ts)? {
            let clause = Implication::new(antecedent.clone(), consequent);
            let key = clause.key();
            let filtered = if env.backbone.contains(&clause.consequent) {
                Some(FilterReason::InBackbone)
            } else if antecedent
                .iter()
                .any(|a| *a == clause.consequent || a.is_complement_of(&clause.consequent))
            {
                Some(FilterReason::Vacuous)
            } else if state.accepted.contains(&key) {
                Some(FilterReason::AlreadyAccepted)
            } else if state.rejected.contains(&key) {
                Some(FilterReason::RejectedBefore)
            } else {
                None
            };
            if let Some(reason) = filtered {
                log(
                    trace,
                    Event::Filtered {
                        clause: clause.to_string(),
                        reason,
                    },
                );
                continue;
            }

            let mut commonsense = 1.0;
            if cfg.ablation.commonsense_scoring {
                let s = llm_commonsense_score(env.backend, &clause, style)?;
                if let Some(message) = s.warning {
                    log(trace, Event::Warning { message });
                }
                commonsense = s.value;
            }
            let mut relevance = 1.0;
            if cfg.ablation.relevance_scoring {
                let s = llm_relevance_score(env.backend, &env.ctx, &clause)?;
                if let Some(message) = s.warning {
                    log(trace, Event::Warning { message });
                }
                relevance = s.value;
            }
            let accepted = commonsense > cfg.tau && relevance > cfg.tau;
            log(
                trace,
                Event::Candidate {
                    clause: clause.to_string(),
                    commonsense,
                    relevance,
                    accepted,
                },
            );
            if accepted {
                return Ok(Some(CommonsenseClause::new(
                    clause,
                    commonsense,
                    relevance,
                    env.iteration,
                )));
            }
            state.rejected.insert(key);
        }
    }
    Ok(None)
}
