//! Satisfiability, entailment and backbone extraction over ground formulas.

mod backbone;
mod solver;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::{Atom, ClauseSet, ClauseSetBuilder, Formula, Implication, Literal, LogicError};

pub use backbone::{compute_backbone, fingerprint, Backbone};
pub use solver::{BudgetExhausted, Lit, Solver, Var};

pub const DEFAULT_CONFLICT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SatLimits {
    /// Conflicts allowed per solver call before giving up.
    pub conflict_budget: u64,
}

impl Default for SatLimits {
    fn default() -> Self {
        SatLimits {
            conflict_budget: DEFAULT_CONFLICT_BUDGET,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("conflict budget exhausted after {conflicts} conflicts")]
    BudgetExhausted { conflicts: u64 },
    #[error("clause set is unsatisfiable")]
    Unsatisfiable,
    #[error(transparent)]
    Logic(#[from] LogicError),
}

impl From<BudgetExhausted> for SatError {
    fn from(e: BudgetExhausted) -> Self {
        SatError::BudgetExhausted { conflicts: e.conflicts }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatOutcome {
    /// Assignment over the non-auxiliary variables; present iff satisfiable.
    pub model: Option<BTreeMap<Atom, bool>>,
}

impl SatOutcome {
    pub fn is_sat(&self) -> bool {
        self.model.is_some()
    }
}

/// Satisfiability of `cs` under literal assumptions. Assumptions on atoms
/// the clause set never mentions are unconstrained and ignored.
pub fn check_sat(cs: &ClauseSet, assumptions: &[Literal], limits: &SatLimits) -> Result<SatOutcome, SatError> {
    let mut solver = backbone::load(cs, limits);
    let lits: Vec<Lit> = assumptions.iter().filter_map(|l| cs.lit(l)).collect();
    let sat = solver.solve(&lits)?;
    let model = sat.then(|| {
        cs.atom_vars()
            .map(|(v, a)| (a.clone(), solver.model_value(v)))
            .collect()
    });
    Ok(SatOutcome { model })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SatConclusion {
    EntailsQuery,
    EntailsNegation,
    Unknown,
    InconsistentPremises,
}

impl SatConclusion {
    pub fn is_decided(self) -> bool {
        matches!(self, SatConclusion::EntailsQuery | SatConclusion::EntailsNegation)
    }

    pub fn verdict(self) -> Option<bool> {
        match self {
            SatConclusion::EntailsQuery => Some(true),
            SatConclusion::EntailsNegation => Some(false),
            _ => None,
        }
    }
}

impl fmt::Display for SatConclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SatConclusion::EntailsQuery => "entails_query",
            SatConclusion::EntailsNegation => "entails_negation",
            SatConclusion::Unknown => "unknown",
            SatConclusion::InconsistentPremises => "inconsistent_premises",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatReport {
    pub conclusion: SatConclusion,
    /// Empty when the premises are inconsistent or the budget ran out.
    pub backbone: Backbone,
    pub budget_exhausted: bool,
}

fn encode_problem(premises: &[Formula], commonsense: &[Implication]) -> Result<ClauseSetBuilder, LogicError> {
    let mut b = ClauseSetBuilder::new();
    for p in premises {
        b.add_formula(p)?;
    }
    for c in commonsense {
        b.add_literal_clause(&c.clause());
    }
    Ok(b)
}

/// Decide whether ground `premises` plus `commonsense` entail `query` or its
/// negation, and compute their backbone.
pub fn sat_solve(
    premises: &[Formula],
    commonsense: &[Implication],
    query: &Formula,
    limits: &SatLimits,
) -> Result<SatReport, LogicError> {
    let mut b = encode_problem(premises, commonsense)?;
    let q = b.encode(query)?;
    let cs = b.finish();
    let mut solver = backbone::load(&cs, limits);

    let exhausted = SatReport {
        conclusion: SatConclusion::Unknown,
        backbone: Backbone::default(),
        budget_exhausted: true,
    };
    let run = |solver: &mut Solver| -> Result<SatReport, SatError> {
        if !solver.solve(&[])? {
            return Ok(SatReport {
                conclusion: SatConclusion::InconsistentPremises,
                backbone: Backbone::default(),
                budget_exhausted: false,
            });
        }
        let conclusion = if !solver.solve(&[!q])? {
            SatConclusion::EntailsQuery
        } else if !solver.solve(&[q])? {
            SatConclusion::EntailsNegation
        } else {
            SatConclusion::Unknown
        };
        let literals = backbone::backbone_of(solver, &cs)?;
        Ok(SatReport {
            conclusion,
            backbone: Backbone {
                literals,
                origin: fingerprint(&cs),
            },
            budget_exhausted: false,
        })
    };
    match run(&mut solver) {
        Ok(report) => Ok(report),
        Err(SatError::BudgetExhausted { .. }) => Ok(exhausted),
        Err(SatError::Logic(e)) => Err(e),
        Err(SatError::Unsatisfiable) => unreachable!("satisfiability checked first"),
    }
}

/// Whether the premises and commonsense clauses are jointly satisfiable.
pub fn consistent(premises: &[Formula], commonsense: &[Implication], limits: &SatLimits) -> Result<bool, SatError> {
    let cs = encode_problem(premises, commonsense)?.finish();
    Ok(check_sat(&cs, &[], limits)?.is_sat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_literal};

    fn fs(texts: &[&str]) -> Vec<Formula> {
        texts.iter().map(|t| parse_formula(t).unwrap()).collect()
    }

    fn imp(text: &str) -> Implication {
        let (lhs, rhs) = text.split_once("->").unwrap();
        let antecedent = lhs
            .split('&')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_literal(s).unwrap())
            .collect();
        Implication::new(antecedent, parse_literal(rhs.trim()).unwrap())
    }

    fn solve(premises: &[&str], cs: &[&str], q: &str) -> SatReport {
        let cs: Vec<Implication> = cs.iter().map(|t| imp(t)).collect();
        sat_solve(&fs(premises), &cs, &parse_formula(q).unwrap(), &SatLimits::default()).unwrap()
    }

    #[test]
    fn modus_ponens() {
        let r = solve(&["A", "A -> B"], &[], "B");
        assert_eq!(r.conclusion, SatConclusion::EntailsQuery);
        assert!(r.backbone.contains(&parse_literal("B").unwrap()));
    }

    #[test]
    fn disjunction_is_undecided_with_empty_backbone() {
        let r = solve(&["A | B"], &[], "A");
        assert_eq!(r.conclusion, SatConclusion::Unknown);
        assert!(r.backbone.is_empty());
    }

    #[test]
    fn winter_fox_with_three_clauses() {
        let r = solve(
            &[
                "turns_white(fox, winter)",
                "lives_in(fox, arctic)",
                "shines_on(sun, arctic)",
                "blends_with(white, snow)",
            ],
            &[
                "turns_white(fox, winter) -> reflects(fox, sun)",
                "reflects(fox, sun) -> ~absorbs(fox, sun)",
                "~absorbs(fox, sun) & turns_white(fox, winter) -> ~absorbs(white, sun)",
            ],
            "absorbs(white, sun)",
        );
        assert_eq!(r.conclusion, SatConclusion::EntailsNegation);
        assert!(r.backbone.contains(&parse_literal("~absorbs(white, sun)").unwrap()));
    }

    #[test]
    fn inconsistent_premises() {
        let r = solve(&["A"], &["A -> B", "B -> ~A"], "C");
        assert_eq!(r.conclusion, SatConclusion::InconsistentPremises);
        assert!(r.backbone.is_empty());
    }

    #[test]
    fn consistency_checks() {
        let lim = SatLimits::default();
        assert!(consistent(&fs(&["A"]), &[imp("A -> B")], &lim).unwrap());
        assert!(!consistent(&fs(&["A"]), &[imp("A -> B"), imp("B -> ~A")], &lim).unwrap());
        assert!(consistent(&[], &[], &lim).unwrap());
    }

    #[test]
    fn zero_antecedent_clause_is_a_fact() {
        let r = solve(&["A | B"], &["-> ~A"], "B");
        assert_eq!(r.conclusion, SatConclusion::EntailsQuery);
    }

    #[test]
    fn budget_exhaustion_degrades_to_unknown() {
        let mut premises = Vec::new();
        for i in 0..6 {
            premises.push(
                (0..5)
                    .map(|j| format!("p({i}, {j})").replace("(", "(e").replace(", ", ", h"))
                    .collect::<Vec<_>>()
                    .join(" | "),
            );
        }
        for j in 0..5 {
            for a in 0..6 {
                for b in a + 1..6 {
                    premises.push(format!("~p(e{a}, h{j}) | ~p(e{b}, h{j})"));
                }
            }
        }
        let refs: Vec<&str> = premises.iter().map(String::as_str).collect();
        let r = sat_solve(
            &fs(&refs),
            &[],
            &parse_formula("q").unwrap(),
            &SatLimits { conflict_budget: 2 },
        )
        .unwrap();
        assert_eq!(r.conclusion, SatConclusion::Unknown);
        assert!(r.budget_exhausted);
        assert!(r.backbone.is_empty());
    }
}
