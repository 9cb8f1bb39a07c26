//! Random instance generators and brute-force reference answers shared by
//! the property tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use argos::logic::{Atom, ClauseSet, ClauseSetBuilder, Entity, Formula, Implication, Literal, Term};
use rand::Rng;

pub fn var_atom(i: usize) -> Atom {
    Atom::new::<_, Entity>(format!("p{i}"), [])
}

pub fn lit(i: usize, positive: bool) -> Literal {
    Literal {
        atom: var_atom(i),
        positive,
    }
}

/// Random 3-CNF over `n` variables: `m` clauses of three distinct variables.
pub fn random_3cnf(rng: &mut impl Rng, n: usize, m: usize) -> Vec<Vec<Literal>> {
    (0..m)
        .map(|_| {
            let mut vars: Vec<usize> = Vec::new();
            while vars.len() < 3.min(n) {
                let v = rng.random_range(0..n);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            vars.into_iter().map(|v| lit(v, rng.random_bool(0.5))).collect()
        })
        .collect()
}

pub fn clause_set(clauses: &[Vec<Literal>]) -> ClauseSet {
    let mut b = ClauseSetBuilder::new();
    for c in clauses {
        b.add_literal_clause(c);
    }
    b.finish()
}

fn holds(clause: &[Literal], model: &BTreeMap<Atom, bool>) -> bool {
    clause.iter().any(|l| model[&l.atom] == l.positive)
}

/// Every model of `clauses` over exactly the atoms they mention.
pub fn models(clauses: &[Vec<Literal>]) -> Vec<BTreeMap<Atom, bool>> {
    let atoms: Vec<Atom> = clauses
        .iter()
        .flatten()
        .map(|l| l.atom.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(atoms.len() <= 20, "brute force limited to 20 atoms");
    (0u32..1 << atoms.len())
        .map(|bits| {
            atoms
                .iter()
                .enumerate()
                .map(|(i, a)| (a.clone(), bits >> i & 1 == 1))
                .collect::<BTreeMap<_, _>>()
        })
        .filter(|m| clauses.iter().all(|c| holds(c, m)))
        .collect()
}

/// Literals true in every model; `None` when there is no model.
pub fn brute_backbone(clauses: &[Vec<Literal>]) -> Option<BTreeSet<Literal>> {
    let ms = models(clauses);
    let first = ms.first()?;
    Some(
        first
            .iter()
            .filter(|(a, v)| ms.iter().all(|m| m[*a] == **v))
            .map(|(a, v)| Literal {
                atom: a.clone(),
                positive: *v,
            })
            .collect(),
    )
}

/// Whether `clauses` entail `query`, its negation, or neither; `None` when
/// unsatisfiable.
pub fn brute_verdict(clauses: &[Vec<Literal>], query: &Literal) -> Option<Option<bool>> {
    let mut all = clauses.to_vec();
    all.push(vec![query.clone(), query.negate()]);
    let ms = models(&all);
    if ms.is_empty() {
        return None;
    }
    let t = ms.iter().filter(|m| m[&query.atom] == query.positive).count();
    Some(match t {
        t if t == ms.len() => Some(true),
        0 => Some(false),
        _ => None,
    })
}

/// Random implication with 0–2 antecedent literals over `n` variables.
pub fn random_implication(rng: &mut impl Rng, n: usize) -> Implication {
    let arity = rng.random_range(0..=2);
    let antecedent = (0..arity)
        .map(|_| lit(rng.random_range(0..n), rng.random_bool(0.5)))
        .collect();
    Implication::new(antecedent, lit(rng.random_range(0..n), rng.random_bool(0.5)))
}

pub fn entities(n: usize) -> BTreeSet<Entity> {
    ["a", "b", "c"][..n].iter().map(|e| Entity::new(*e)).collect()
}

/// Random closed first-order formula over predicates `r/0`, `p/1`, `q/2`.
pub struct FormulaGen<'r, R> {
    rng: &'r mut R,
    universe: Vec<Entity>,
    quantifiers_left: usize,
    atoms: usize,
    fresh: usize,
}

impl<'r, R: Rng> FormulaGen<'r, R> {
    pub fn new(rng: &'r mut R, universe: &BTreeSet<Entity>, quantifiers: usize, atoms: usize) -> Self {
        FormulaGen {
            rng,
            universe: universe.iter().cloned().collect(),
            quantifiers_left: quantifiers,
            atoms,
            fresh: 0,
        }
    }

    pub fn generate(&mut self) -> Formula {
        let budget = self.atoms;
        self.formula(&mut Vec::new(), budget)
    }

    fn term(&mut self, bound: &[String]) -> Term {
        if !bound.is_empty() && self.rng.random_bool(0.7) {
            Term::Var(bound[self.rng.random_range(0..bound.len())].clone())
        } else {
            Term::Entity(self.universe[self.rng.random_range(0..self.universe.len())].clone())
        }
    }

    fn atom(&mut self, bound: &[String]) -> Formula {
        match self.rng.random_range(0..3) {
            0 => Formula::Atom {
                predicate: "r".into(),
                args: vec![],
            },
            1 => Formula::Atom {
                predicate: "p".into(),
                args: vec![self.term(bound)],
            },
            _ => Formula::Atom {
                predicate: "q".into(),
                args: vec![self.term(bound), self.term(bound)],
            },
        }
    }

    /// A formula with at most `budget` atom occurrences.
    fn formula(&mut self, bound: &mut Vec<String>, budget: usize) -> Formula {
        let choice = self.rng.random_range(0..10);
        match choice {
            0..=1 if self.quantifiers_left > 0 => {
                self.quantifiers_left -= 1;
                let v = format!("x{}", self.fresh);
                self.fresh += 1;
                bound.push(v.clone());
                let body = self.formula(bound, budget);
                bound.pop();
                if choice == 0 {
                    Formula::Forall(v, Box::new(body))
                } else {
                    Formula::Exists(v, Box::new(body))
                }
            }
            2 if budget > 1 => Formula::not(self.formula(bound, budget)),
            3..=8 if budget > 1 => {
                let left = self.rng.random_range(1..budget);
                let a = self.formula(bound, left);
                let b = self.formula(bound, budget - left);
                match choice {
                    3 | 4 => Formula::and(a, b),
                    5 | 6 => Formula::or(a, b),
                    7 => Formula::implies(a, b),
                    _ => Formula::iff(a, b),
                }
            }
            _ => self.atom(bound),
        }
    }
}

/// Every ground atom over `r/0`, `p/1`, `q/2` and the universe.
pub fn atom_space(universe: &BTreeSet<Entity>) -> Vec<Atom> {
    let mut out = vec![Atom::new::<_, Entity>("r", [])];
    for a in universe {
        out.push(Atom::new("p", [a.clone()]));
        for b in universe {
            out.push(Atom::new("q", [a.clone(), b.clone()]));
        }
    }
    out
}

/// Tarskian evaluation with quantifiers ranging over `universe`.
pub fn eval_fo(
    f: &Formula,
    universe: &BTreeSet<Entity>,
    interp: &HashMap<Atom, bool>,
    env: &mut Vec<(String, Entity)>,
) -> bool {
    let resolve = |t: &Term, env: &[(String, Entity)]| match t {
        Term::Entity(e) => e.clone(),
        Term::Var(v) => env
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .expect("closed formula")
            .1
            .clone(),
    };
    match f {
        Formula::Atom { predicate, args } => {
            let atom = Atom::new(predicate.clone(), args.iter().map(|t| resolve(t, env)));
            interp[&atom]
        }
        Formula::Not(a) => !eval_fo(a, universe, interp, env),
        Formula::And(a, b) => eval_fo(a, universe, interp, env) && eval_fo(b, universe, interp, env),
        Formula::Or(a, b) => eval_fo(a, universe, interp, env) || eval_fo(b, universe, interp, env),
        Formula::Implies(a, b) => !eval_fo(a, universe, interp, env) || eval_fo(b, universe, interp, env),
        Formula::Iff(a, b) => eval_fo(a, universe, interp, env) == eval_fo(b, universe, interp, env),
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let forall = matches!(f, Formula::Forall(..));
            let mut acc = forall;
            for e in universe {
                env.push((v.clone(), e.clone()));
                let r = eval_fo(body, universe, interp, env);
                env.pop();
                if r != forall {
                    acc = !forall;
                    break;
                }
            }
            acc
        }
    }
}

/// Whether some interpretation over the universe satisfies `f`.
pub fn brute_satisfiable(f: &Formula, universe: &BTreeSet<Entity>) -> bool {
    let atoms = atom_space(universe);
    (0u32..1 << atoms.len()).any(|bits| {
        let interp: HashMap<Atom, bool> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), bits >> i & 1 == 1))
            .collect();
        eval_fo(f, universe, &interp, &mut Vec::new())
    })
}

/// Number of quantifiers and atom occurrences in `f`.
pub fn shape(f: &Formula) -> (usize, usize) {
    match f {
        Formula::Atom { .. } => (0, 1),
        Formula::Not(a) => shape(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            let (qa, aa) = shape(a);
            let (qb, ab) = shape(b);
            (qa + qb, aa + ab)
        }
        Formula::Forall(_, b) | Formula::Exists(_, b) => {
            let (q, a) = shape(b);
            (q + 1, a)
        }
    }
}
