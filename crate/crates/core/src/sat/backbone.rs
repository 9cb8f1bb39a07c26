use std::collections::BTreeSet;
use std::hash::{DefaultHasher, Hash, Hasher};

use super::solver::{Lit, Solver};
use super::{SatError, SatLimits};
use crate::logic::{ClauseSet, Literal};

/// Literals entailed by a satisfiable clause set, over its non-auxiliary
/// variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Backbone {
    pub literals: BTreeSet<Literal>,
    /// Fingerprint of the clause set the backbone was computed from.
    pub origin: u64,
}

impl Backbone {
    pub fn contains(&self, l: &Literal) -> bool {
        self.literals.contains(l)
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }
}

pub fn fingerprint(cs: &ClauseSet) -> u64 {
    let mut h = DefaultHasher::new();
    cs.clauses().hash(&mut h);
    for (v, atom) in cs.atom_vars() {
        v.hash(&mut h);
        atom.hash(&mut h);
    }
    h.finish()
}

pub(crate) fn load(cs: &ClauseSet, limits: &SatLimits) -> Solver {
    let mut solver = Solver::new(limits.conflict_budget);
    solver.ensure_vars(cs.num_vars());
    for clause in cs.clauses() {
        if !solver.add_clause(clause) {
            break;
        }
    }
    solver
}

/// Backbone over `solver`'s current clause database, which must encode `cs`.
/// Every confirmed backbone literal is added as a unit clause.
pub(crate) fn backbone_of(solver: &mut Solver, cs: &ClauseSet) -> Result<BTreeSet<Literal>, SatError> {
    if !solver.solve(&[]).map_err(SatError::from)? {
        return Err(SatError::Unsatisfiable);
    }
    let mut candidates: Vec<Option<Lit>> = cs
        .atom_vars()
        .map(|(v, _)| Some(Lit::new(v, !solver.model_value(v))))
        .collect();
    let mut found = BTreeSet::new();
    for i in 0..candidates.len() {
        let Some(c) = candidates[i] else { continue };
        if solver.solve(&[!c])? {
            for slot in candidates[i + 1..].iter_mut() {
                if let Some(l) = *slot {
                    if solver.model_value(l.var()) == l.is_neg() {
                        *slot = None;
                    }
                }
            }
        } else {
            solver.add_clause(&[c]);
            found.insert(cs.literal(c).expect("candidate is a problem variable"));
        }
    }
    Ok(found)
}

pub fn compute_backbone(cs: &ClauseSet, limits: &SatLimits) -> Result<Backbone, SatError> {
    let mut solver = load(cs, limits);
    Ok(Backbone {
        literals: backbone_of(&mut solver, cs)?,
        origin: fingerprint(cs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_literal, to_clause_set, Formula};

    fn set(texts: &[&str]) -> ClauseSet {
        let fs: Vec<Formula> = texts.iter().map(|t| parse_formula(t).unwrap()).collect();
        to_clause_set(&fs).unwrap()
    }

    fn lits(texts: &[&str]) -> BTreeSet<Literal> {
        texts.iter().map(|t| parse_literal(t).unwrap()).collect()
    }

    #[test]
    fn unit_clause() {
        let cs = set(&["a", "b | ~b"]);
        let bb = compute_backbone(&cs, &SatLimits::default()).unwrap();
        assert_eq!(bb.literals, lits(&["a"]));
    }

    #[test]
    fn resolvent_is_forced() {
        let cs = set(&["a | b", "~a | b"]);
        let bb = compute_backbone(&cs, &SatLimits::default()).unwrap();
        assert_eq!(bb.literals, lits(&["b"]));
    }

    #[test]
    fn auxiliary_variables_never_appear() {
        let cs = set(&["(a & b) | (a & c)"]);
        assert!(!cs.aux_vars().is_empty());
        let bb = compute_backbone(&cs, &SatLimits::default()).unwrap();
        assert_eq!(bb.literals, lits(&["a"]));
    }

    #[test]
    fn unsatisfiable_input_is_an_error() {
        let cs = set(&["a", "~a"]);
        assert_eq!(
            compute_backbone(&cs, &SatLimits::default()),
            Err(SatError::Unsatisfiable)
        );
    }
}
