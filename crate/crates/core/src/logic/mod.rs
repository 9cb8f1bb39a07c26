//! Formulas, ground literals, grounding over a finite entity universe and
//! the equisatisfiable clause form consumed by the SAT layer.

mod cnf;
mod ground;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use cnf::{to_clause_set, ClauseSet, ClauseSetBuilder};
pub use ground::{ground, ground_all, DEFAULT_GROUNDING_DEPTH};
pub use parse::{parse_formula, parse_literal, Parser, Signature};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("predicate `{predicate}` used with arity {found}, expected {expected} (byte {position})")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
        position: usize,
    },
    #[error("undeclared entity `{entity}` at byte {position}")]
    UndeclaredEntity { entity: String, position: usize },
    #[error("cannot ground over an empty universe")]
    EmptyUniverse,
    #[error("quantifier nesting depth exceeds limit {limit}")]
    DepthLimit { limit: usize },
    #[error("variable `{0}` is not bound by any quantifier")]
    UnboundVariable(String),
    #[error("formula is not ground: {0}")]
    NotGround(String),
}

/// A constant such as `Alice` or `fox`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Entity(String);

impl Entity {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Entity {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
}

/// A ground predicate instance, e.g. `MotherOf(Alice, Bob)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Entity>,
}

impl Atom {
    pub fn new<I, E>(predicate: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = E>,
        E: Into<Entity>,
    {
        Self {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn predicate(&self) -> Predicate {
        Predicate {
            name: self.predicate.clone(),
            arity: self.args.len(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(a.as_str())?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A signed ground atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Self { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Self { atom, positive: false }
    }

    pub fn negate(&self) -> Self {
        Self {
            atom: self.atom.clone(),
            positive: !self.positive,
        }
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.atom.args.iter()
    }

    pub fn is_complement_of(&self, other: &Literal) -> bool {
        self.atom == other.atom && self.positive != other.positive
    }

    pub fn to_formula(&self) -> Formula {
        let atom = Formula::Atom {
            predicate: self.atom.predicate.clone(),
            args: self.atom.args.iter().cloned().map(Term::Entity).collect(),
        };
        if self.positive {
            atom
        } else {
            Formula::Not(Box::new(atom))
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("~")?;
        }
        self.atom.fmt(f)
    }
}

/// Two ground literals are related when they mention a common entity.
pub fn related(l1: &Literal, l2: &Literal) -> bool {
    l1.entities().any(|e| l2.atom.args.contains(e))
}

pub fn negate(l: &Literal) -> Literal {
    l.negate()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Entity(Entity),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { predicate: String, args: Vec<Term> },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn atom(atom: &Atom) -> Self {
        Formula::Atom {
            predicate: atom.predicate.clone(),
            args: atom.args.iter().cloned().map(Term::Entity).collect(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `None` for an empty input.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        parts.into_iter().reduce(Formula::and)
    }

    pub fn disjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        parts.into_iter().reduce(Formula::or)
    }

    /// The ground atom of an atom node, if every argument is an entity.
    pub fn as_ground_atom(&self) -> Option<Atom> {
        match self {
            Formula::Atom { predicate, args } => {
                let args = args
                    .iter()
                    .map(|t| match t {
                        Term::Entity(e) => Some(e.clone()),
                        Term::Var(_) => None,
                    })
                    .collect::<Option<Vec<_>>>()?;
                Some(Atom {
                    predicate: predicate.clone(),
                    args,
                })
            }
            _ => None,
        }
    }

    /// Literal view of `A` or `~A` for a ground atom `A`.
    pub fn as_literal(&self) -> Option<Literal> {
        match self {
            Formula::Not(inner) => inner.as_ground_atom().map(Literal::neg),
            other => other.as_ground_atom().map(Literal::pos),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atom { .. } => true,
            Formula::Not(a) => a.is_quantifier_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Forall(..) | Formula::Exists(..) => false,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Formula::Atom { args, .. } => args.iter().all(|t| matches!(t, Term::Entity(_))),
            Formula::Not(a) => a.is_ground(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.is_ground() && b.is_ground()
            }
            Formula::Forall(..) | Formula::Exists(..) => false,
        }
    }

    /// Entity constants mentioned anywhere in the formula.
    pub fn entities(&self) -> BTreeSet<Entity> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |_, args| {
            for t in args {
                if let Term::Entity(e) = t {
                    out.insert(e.clone());
                }
            }
        });
        out
    }

    pub fn predicates(&self) -> BTreeSet<Predicate> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |name, args| {
            out.insert(Predicate {
                name: name.to_owned(),
                arity: args.len(),
            });
        });
        out
    }

    /// Ground atoms occurring in a ground formula.
    pub fn ground_atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |name, args| {
            let ground: Option<Vec<Entity>> = args
                .iter()
                .map(|t| match t {
                    Term::Entity(e) => Some(e.clone()),
                    Term::Var(_) => None,
                })
                .collect();
            if let Some(args) = ground {
                out.insert(Atom {
                    predicate: name.to_owned(),
                    args,
                });
            }
        });
        out
    }

    fn visit_atoms(&self, f: &mut impl FnMut(&str, &[Term])) {
        match self {
            Formula::Atom { predicate, args } => f(predicate, args),
            Formula::Not(a) | Formula::Forall(_, a) | Formula::Exists(_, a) => a.visit_atoms(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
        }
    }

    /// Truth value of a ground, quantifier-free formula under `assignment`.
    pub fn eval(&self, assignment: &impl Fn(&Atom) -> bool) -> Result<bool, LogicError> {
        Ok(match self {
            Formula::Atom { .. } => {
                let atom = self
                    .as_ground_atom()
                    .ok_or_else(|| LogicError::NotGround(self.to_string()))?;
                assignment(&atom)
            }
            Formula::Not(a) => !a.eval(assignment)?,
            Formula::And(a, b) => a.eval(assignment)? && b.eval(assignment)?,
            Formula::Or(a, b) => a.eval(assignment)? || b.eval(assignment)?,
            Formula::Implies(a, b) => !a.eval(assignment)? || b.eval(assignment)?,
            Formula::Iff(a, b) => a.eval(assignment)? == b.eval(assignment)?,
            Formula::Forall(..) | Formula::Exists(..) => return Err(LogicError::NotGround(self.to_string())),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            _ => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        let paren = prec < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Formula::Atom { predicate, args } => {
                f.write_str(predicate)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, t) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        match t {
                            Term::Var(v) => f.write_str(v)?,
                            Term::Entity(e) => f.write_str(e.as_str())?,
                        }
                    }
                    f.write_str(")")?;
                }
            }
            Formula::Not(a) => {
                f.write_str("~")?;
                a.write_prec(f, 5)?;
            }
            Formula::And(a, b) => write_binary(f, a, " & ", b, prec, true)?,
            Formula::Or(a, b) => write_binary(f, a, " | ", b, prec, true)?,
            Formula::Iff(a, b) => write_binary(f, a, " <-> ", b, prec, true)?,
            Formula::Implies(a, b) => write_binary(f, a, " -> ", b, prec, false)?,
            Formula::Forall(v, body) => {
                write!(f, "forall {v} (")?;
                body.write_prec(f, 0)?;
                f.write_str(")")?;
            }
            Formula::Exists(v, body) => {
                write!(f, "exists {v} (")?;
                body.write_prec(f, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn write_binary(
    f: &mut fmt::Formatter<'_>,
    a: &Formula,
    op: &str,
    b: &Formula,
    prec: u8,
    left_assoc: bool,
) -> fmt::Result {
    let (lmin, rmin) = if left_assoc { (prec, prec + 1) } else { (prec + 1, prec) };
    a.write_prec(f, lmin)?;
    f.write_str(op)?;
    b.write_prec(f, rmin)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

/// A ground Horn-style implication `L1 & L2 -> L` with 0 to 2 antecedent literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Implication {
    pub antecedent: Vec<Literal>,
    pub consequent: Literal,
}

impl Implication {
    pub fn new(antecedent: Vec<Literal>, consequent: Literal) -> Self {
        Self { antecedent, consequent }
    }

    pub fn to_formula(&self) -> Formula {
        match Formula::conjunction(self.antecedent.iter().map(Literal::to_formula)) {
            Some(lhs) => Formula::implies(lhs, self.consequent.to_formula()),
            None => self.consequent.to_formula(),
        }
    }

    /// Clause form: `~L1 | ~L2 | L`.
    pub fn clause(&self) -> Vec<Literal> {
        self.antecedent
            .iter()
            .map(Literal::negate)
            .chain(std::iter::once(self.consequent.clone()))
            .collect()
    }

    pub fn entities(&self) -> BTreeSet<Entity> {
        self.antecedent
            .iter()
            .chain(std::iter::once(&self.consequent))
            .flat_map(|l| l.entities().cloned())
            .collect()
    }

    /// Identity used for duplicate detection: antecedent as a set plus consequent.
    pub fn key(&self) -> (BTreeSet<Literal>, Literal) {
        (self.antecedent.iter().cloned().collect(), self.consequent.clone())
    }
}

impl fmt::Display for Implication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_formula().fmt(f)
    }
}
