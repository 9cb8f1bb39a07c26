use std::collections::BTreeSet;

use super::search::{find_new_commonsense, CommonsenseClause, SearchEnv, SearchState};
use super::trace::{Event, Trace};
use super::{DecidedBy, EngineConfig, EngineError, SolveResult};
use crate::harness::Problem;
use crate::llm::{llm_solve, BackendError, Context, CotCounter, LlmBackend, SolveVote};
use crate::logic::{ground_all, Entity, Formula, Implication, Literal, LogicError};
use crate::sat::{sat_solve, SatConclusion};

fn ground_over(fs: &[Formula], universe: &BTreeSet<Entity>, depth: usize) -> Result<Vec<Formula>, LogicError> {
    if fs.iter().all(Formula::is_quantifier_free) {
        return Ok(fs.to_vec());
    }
    ground_all(fs, universe, depth)
}

fn literals_of(f: &Formula) -> Vec<Literal> {
    match f.as_literal() {
        Some(l) => vec![l],
        None => f.ground_atoms().into_iter().map(Literal::pos).collect(),
    }
}

/// How the loop stopped without a SAT or vote decision.
enum Stop {
    Exhausted,
    Backend(BackendError),
}

struct Run<'a> {
    problem: &'a Problem,
    config: &'a EngineConfig,
    backend: &'a dyn LlmBackend,
    universe: BTreeSet<Entity>,
    ground_premises: Vec<Formula>,
    query: Formula,
    commonsense: Vec<Implication>,
    clauses: Vec<CommonsenseClause>,
    cot: CotCounter,
    trace: Trace,
    last_vote: Option<SolveVote>,
    inconsistent: bool,
    budget_exhausted: bool,
}

impl<'a> Run<'a> {
    fn new(problem: &'a Problem, config: &'a EngineConfig, backend: &'a dyn LlmBackend) -> Result<Self, LogicError> {
        let universe = problem.universe();
        let ground_premises = ground_over(&problem.premises, &universe, config.grounding_depth)?;
        let query = ground_over(std::slice::from_ref(&problem.query), &universe, config.grounding_depth)?
            .pop()
            .expect("one query in, one out");
        Ok(Run {
            problem,
            config,
            backend,
            universe,
            ground_premises,
            query,
            commonsense: Vec::new(),
            clauses: Vec::new(),
            cot: CotCounter::new(),
            trace: Trace::default(),
            last_vote: None,
            inconsistent: false,
            budget_exhausted: false,
        })
    }

    fn iter(&self) -> usize {
        self.clauses.len()
    }

    fn log(&mut self, event: Event) {
        let (iter, cot) = (self.iter(), self.cot.get());
        self.trace.push(iter, cot, event);
    }

    fn ctx(&self) -> Context<'_> {
        Context::new(
            &self.problem.premises,
            &self.ground_premises,
            &self.commonsense,
            &self.query,
            self.config.prompt_style.unwrap_or(self.problem.style),
        )
        .with_exemplars(&self.problem.exemplars)
    }

    /// Whether one more vote fits under `max_cot`.
    fn vote_allowed(&self) -> bool {
        self.config
            .max_cot
            .is_none_or(|cap| self.cot.get() + self.config.k <= cap)
    }

    fn vote(&mut self, gamma: f64) -> Result<SolveVote, BackendError> {
        let v = llm_solve(self.backend, &self.ctx(), self.config.k, &self.cot)?;
        self.log(Event::Vote {
            answer: v.answer,
            vote_fraction: v.vote_fraction,
            weighted_confidence: v.weighted_confidence,
            degenerate: v.degenerate,
            gamma,
        });
        self.last_vote = Some(v.clone());
        Ok(v)
    }

    /// Re-expand quantified premises if the new clause names new entities.
    fn admit(&mut self, clause: &Implication) -> Result<(), LogicError> {
        let before = self.universe.len();
        self.universe.extend(clause.entities());
        if self.universe.len() != before {
            self.ground_premises = ground_over(&self.problem.premises, &self.universe, self.config.grounding_depth)?;
            self.query = ground_over(
                std::slice::from_ref(&self.problem.query),
                &self.universe,
                self.config.grounding_depth,
            )?
            .pop()
            .expect("one query in, one out");
        }
        Ok(())
    }

    fn finish(mut self, verdict: bool, decided_by: DecidedBy, confidence: f64, error: Option<String>) -> SolveResult {
        self.log(Event::Result {
            verdict,
            decided_by,
            confidence,
            clauses: self.clauses.len(),
        });
        SolveResult {
            verdict,
            decided_by,
            confidence,
            iterations: self.clauses.len(),
            commonsense: self.clauses,
            cot_calls: self.cot.get(),
            inconsistent: self.inconsistent,
            budget_exhausted: self.budget_exhausted,
            last_vote: self.last_vote,
            error,
            trace: self.trace,
        }
    }

    /// Best guess once the loop gives up: the last vote, else the degenerate
    /// vote's answer (False, confidence 0).
    fn fallback(self, stop: Stop) -> Result<SolveResult, EngineError> {
        let error = match stop {
            Stop::Exhausted => None,
            Stop::Backend(e) => {
                if self.last_vote.is_none() && self.config.ablation.self_consistency {
                    return Err(e.into());
                }
                Some(e.to_string())
            }
        };
        let mut run = self;
        if let Some(message) = &error {
            run.log(Event::Warning {
                message: message.clone(),
            });
        }
        match run.last_vote.clone() {
            Some(v) => Ok(run.finish(v.answer, DecidedBy::Fallback, v.vote_fraction, error)),
            None => Ok(run.finish(false, DecidedBy::Fallback, 0.0, error)),
        }
    }
}

/// Run ARGOS on one problem.
pub fn solve(problem: &Problem, config: &EngineConfig, backend: &dyn LlmBackend) -> Result<SolveResult, EngineError> {
    config.validate()?;
    let mut run = Run::new(problem, config, backend)?;
    let mut state = SearchState::default();
    let all_literals: Vec<Literal> = if config.ablation.backbone_guided {
        Vec::new()
    } else {
        let mut atoms = BTreeSet::new();
        for f in run.ground_premises.iter().chain([&run.query]) {
            atoms.extend(f.ground_atoms());
        }
        atoms
            .into_iter()
            .flat_map(|a| [Literal::pos(a.clone()), Literal::neg(a)])
            .collect()
    };
    let sc = config.ablation.self_consistency;
    let mut gamma = config.gamma0;

    loop {
        let report = sat_solve(&run.ground_premises, &run.commonsense, &run.query, &config.sat)?;
        run.budget_exhausted |= report.budget_exhausted;
        run.log(Event::Sat {
            conclusion: report.conclusion,
            backbone_size: report.backbone.len(),
            budget_exhausted: report.budget_exhausted,
        });
        if let Some(verdict) = report.conclusion.verdict() {
            return Ok(run.finish(verdict, DecidedBy::Sat, 1.0, None));
        }
        if report.conclusion == SatConclusion::InconsistentPremises {
            run.inconsistent = true;
            run.log(Event::Inconsistent);
            if sc && run.vote_allowed() {
                if let Err(e) = run.vote(gamma) {
                    return run.fallback(Stop::Backend(e));
                }
            }
            return run.fallback(Stop::Exhausted);
        }

        if sc {
            if !run.vote_allowed() {
                return run.fallback(Stop::Exhausted);
            }
            match run.vote(gamma) {
                Ok(v) if v.vote_fraction > gamma => {
                    return Ok(run.finish(v.answer, DecidedBy::SelfConsistency, v.vote_fraction, None));
                }
                Ok(_) => {}
                Err(e) => return run.fallback(Stop::Backend(e)),
            }
        } else if run.clauses.len() >= config.ablation.max_proposals {
            return run.fallback(Stop::Exhausted);
        }

        let query_literals = literals_of(&run.query);
        let mut trace = std::mem::take(&mut run.trace);
        let found = {
            let env = SearchEnv {
                ctx: run.ctx(),
                backbone: &report.backbone,
                query_literals: &query_literals,
                all_literals: &all_literals,
                config,
                backend,
                iteration: run.iter(),
                cot: &run.cot,
            };
            find_new_commonsense(&env, &mut state, &mut trace)
        };
        run.trace = trace;
        let clause = match found {
            Ok(Some(c)) => c,
            Ok(None) => return run.fallback(Stop::Exhausted),
            Err(e) => return run.fallback(Stop::Backend(e)),
        };
        let implication = clause
            .implication
            .clone()
            .expect("fresh clause carries its implication");
        run.log(Event::Accepted {
            clause: implication.to_string(),
        });
        state.record_accepted(&implication);
        run.admit(&implication)?;
        run.commonsense.push(implication);
        run.clauses.push(clause);
        if sc {
            gamma = config.gamma_after(run.clauses.len());
            run.log(Event::Gamma { gamma });
            if gamma <= 0.0 {
                return run.fallback(Stop::Exhausted);
            }
        }
    }
}
