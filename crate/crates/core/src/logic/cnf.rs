use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use super::{Atom, Formula, Literal, LogicError};
use crate::sat::{Lit, Var};

/// Clause form of a set of ground formulas.
///
/// Variables are indexed from 0; every non-auxiliary variable maps to exactly
/// one ground atom. Auxiliary variables name Tseitin subformulas and carry no
/// atom.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClauseSet {
    clauses: Vec<Vec<Lit>>,
    atoms: Vec<Option<Atom>>,
    index: HashMap<Atom, Var>,
}

impl ClauseSet {
    pub fn num_vars(&self) -> usize {
        self.atoms.len()
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn atom(&self, var: Var) -> Option<&Atom> {
        self.atoms.get(var.index()).and_then(Option::as_ref)
    }

    pub fn var(&self, atom: &Atom) -> Option<Var> {
        self.index.get(atom).copied()
    }

    pub fn is_aux(&self, var: Var) -> bool {
        self.atom(var).is_none()
    }

    pub fn aux_vars(&self) -> BTreeSet<Var> {
        (0..self.atoms.len())
            .map(Var::new)
            .filter(|v| self.is_aux(*v))
            .collect()
    }

    /// Non-auxiliary variables in index order.
    pub fn atom_vars(&self) -> impl Iterator<Item = (Var, &Atom)> {
        self.atoms
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.as_ref().map(|a| (Var::new(i), a)))
    }

    pub fn lit(&self, literal: &Literal) -> Option<Lit> {
        self.var(&literal.atom).map(|v| Lit::new(v, !literal.positive))
    }

    pub fn literal(&self, lit: Lit) -> Option<Literal> {
        self.atom(lit.var()).map(|a| Literal {
            atom: a.clone(),
            positive: !lit.is_neg(),
        })
    }

    /// DIMACS CNF with 1-indexed variables; atom names go in `c` comment lines.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        for (v, atom) in self.atom_vars() {
            let _ = writeln!(out, "c {} {}", v.index() + 1, atom);
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars(), self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(out, "{} ", lit.to_dimacs());
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Incremental Tseitin encoder.
#[derive(Debug, Default)]
pub struct ClauseSetBuilder {
    cs: ClauseSet,
    cache: HashMap<Formula, Lit>,
}

impl ClauseSetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var_for(&mut self, atom: &Atom) -> Var {
        if let Some(v) = self.cs.index.get(atom) {
            return *v;
        }
        let v = Var::new(self.cs.atoms.len());
        self.cs.atoms.push(Some(atom.clone()));
        self.cs.index.insert(atom.clone(), v);
        v
    }

    fn fresh_aux(&mut self) -> Var {
        let v = Var::new(self.cs.atoms.len());
        self.cs.atoms.push(None);
        v
    }

    pub fn lit_for(&mut self, literal: &Literal) -> Lit {
        Lit::new(self.var_for(&literal.atom), !literal.positive)
    }

    pub fn add_clause(&mut self, lits: impl IntoIterator<Item = Lit>) {
        let mut clause: Vec<Lit> = lits.into_iter().collect();
        clause.sort_unstable();
        clause.dedup();
        if clause.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        self.cs.clauses.push(clause);
    }

    pub fn add_literal_clause(&mut self, literals: &[Literal]) {
        let lits: Vec<Lit> = literals.iter().map(|l| self.lit_for(l)).collect();
        self.add_clause(lits);
    }

    /// Assert a ground, quantifier-free formula.
    pub fn add_formula(&mut self, f: &Formula) -> Result<(), LogicError> {
        if !f.is_ground() {
            return Err(LogicError::NotGround(f.to_string()));
        }
        self.assert_top(f);
        Ok(())
    }

    /// Literal equivalent to `f` in every model, defined through auxiliary
    /// variables where needed.
    pub fn encode(&mut self, f: &Formula) -> Result<Lit, LogicError> {
        if !f.is_ground() {
            return Err(LogicError::NotGround(f.to_string()));
        }
        Ok(self.define(f))
    }

    pub fn finish(self) -> ClauseSet {
        self.cs
    }

    pub fn clause_set(&self) -> &ClauseSet {
        &self.cs
    }

    fn assert_top(&mut self, f: &Formula) {
        match f {
            Formula::And(a, b) => {
                self.assert_top(a);
                self.assert_top(b);
            }
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Not(g) => self.assert_top(g),
                Formula::Or(a, b) => {
                    self.assert_top(&Formula::not((**a).clone()));
                    self.assert_top(&Formula::not((**b).clone()));
                }
                Formula::Implies(a, b) => {
                    self.assert_top(a);
                    self.assert_top(&Formula::not((**b).clone()));
                }
                _ => self.assert_clause(f),
            },
            Formula::Iff(a, b) => {
                let x = self.define(a);
                let y = self.define(b);
                self.add_clause([!x, y]);
                self.add_clause([x, !y]);
            }
            _ => self.assert_clause(f),
        }
    }

    fn assert_clause(&mut self, f: &Formula) {
        let mut disjuncts = Vec::new();
        collect_disjuncts(f, false, &mut disjuncts);
        let lits: Vec<Lit> = disjuncts
            .into_iter()
            .map(|(g, negated)| {
                let l = self.define(g);
                if negated {
                    !l
                } else {
                    l
                }
            })
            .collect();
        self.add_clause(lits);
    }

    fn define(&mut self, f: &Formula) -> Lit {
        if let Some(atom) = f.as_ground_atom() {
            return Lit::new(self.var_for(&atom), false);
        }
        if let Formula::Not(inner) = f {
            return !self.define(inner);
        }
        if let Some(l) = self.cache.get(f) {
            return *l;
        }
        let lit = match f {
            Formula::And(..) => {
                let mut parts = Vec::new();
                flatten_and(f, &mut parts);
                let lits: Vec<Lit> = parts.into_iter().map(|g| self.define(g)).collect();
                let z = Lit::new(self.fresh_aux(), false);
                for &l in &lits {
                    self.add_clause([!z, l]);
                }
                self.add_clause(lits.iter().map(|&l| !l).chain([z]));
                z
            }
            Formula::Or(..) | Formula::Implies(..) => {
                let mut parts = Vec::new();
                collect_disjuncts(f, false, &mut parts);
                let lits: Vec<Lit> = parts
                    .into_iter()
                    .map(|(g, neg)| {
                        let l = self.define(g);
                        if neg {
                            !l
                        } else {
                            l
                        }
                    })
                    .collect();
                let z = Lit::new(self.fresh_aux(), false);
                for &l in &lits {
                    self.add_clause([!l, z]);
                }
                self.add_clause(lits.iter().copied().chain([!z]));
                z
            }
            Formula::Iff(a, b) => {
                let x = self.define(a);
                let y = self.define(b);
                let z = Lit::new(self.fresh_aux(), false);
                self.add_clause([!z, !x, y]);
                self.add_clause([!z, x, !y]);
                self.add_clause([z, x, y]);
                self.add_clause([z, !x, !y]);
                z
            }
            Formula::Atom { .. } | Formula::Not(_) | Formula::Forall(..) | Formula::Exists(..) => {
                unreachable!("handled above or rejected by is_ground")
            }
        };
        self.cache.insert(f.clone(), lit);
        lit
    }
}

fn flatten_and<'f>(f: &'f Formula, out: &mut Vec<&'f Formula>) {
    match f {
        Formula::And(a, b) => {
            flatten_and(a, out);
            flatten_and(b, out);
        }
        other => out.push(other),
    }
}

/// Disjuncts of `f` (or of `~f` when `negated`), each paired with a flag
/// saying whether it appears negated.
fn collect_disjuncts<'f>(f: &'f Formula, negated: bool, out: &mut Vec<(&'f Formula, bool)>) {
    match (f, negated) {
        (Formula::Or(a, b), false) => {
            collect_disjuncts(a, false, out);
            collect_disjuncts(b, false, out);
        }
        (Formula::Implies(a, b), false) => {
            collect_disjuncts(a, true, out);
            collect_disjuncts(b, false, out);
        }
        (Formula::And(a, b), true) => {
            collect_disjuncts(a, true, out);
            collect_disjuncts(b, true, out);
        }
        (Formula::Not(g), n) => collect_disjuncts(g, !n, out),
        (other, n) => out.push((other, n)),
    }
}

/// Equisatisfiable clause set for ground, quantifier-free formulas.
pub fn to_clause_set(fs: &[Formula]) -> Result<ClauseSet, LogicError> {
    let mut b = ClauseSetBuilder::new();
    for f in fs {
        b.add_formula(f)?;
    }
    Ok(b.finish())
}
