use std::collections::{BTreeSet, HashMap};

use super::{Entity, Formula, LogicError, Term};

pub const DEFAULT_GROUNDING_DEPTH: usize = 8;

/// Expand quantifiers over a finite universe: `forall x F(x)` becomes
/// `F(e1) & F(e2) & ...` and `exists x F(x)` becomes `F(e1) | F(e2) | ...`,
/// in universe order.
pub fn ground(f: &Formula, universe: &BTreeSet<Entity>, max_depth: usize) -> Result<Formula, LogicError> {
    if universe.is_empty() {
        return Err(LogicError::EmptyUniverse);
    }
    let mut env = HashMap::new();
    expand(f, universe, max_depth, 0, &mut env)
}

pub fn ground_all(fs: &[Formula], universe: &BTreeSet<Entity>, max_depth: usize) -> Result<Vec<Formula>, LogicError> {
    fs.iter().map(|f| ground(f, universe, max_depth)).collect()
}

fn expand(
    f: &Formula,
    universe: &BTreeSet<Entity>,
    max_depth: usize,
    depth: usize,
    env: &mut HashMap<String, Vec<Entity>>,
) -> Result<Formula, LogicError> {
    let rec = |g: &Formula, env: &mut HashMap<String, Vec<Entity>>| expand(g, universe, max_depth, depth, env);
    Ok(match f {
        Formula::Atom { predicate, args } => Formula::Atom {
            predicate: predicate.clone(),
            args: args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => env
                        .get(v)
                        .and_then(|stack| stack.last())
                        .cloned()
                        .map(Term::Entity)
                        .ok_or_else(|| LogicError::UnboundVariable(v.clone())),
                    Term::Entity(e) => Ok(Term::Entity(e.clone())),
                })
                .collect::<Result<_, _>>()?,
        },
        Formula::Not(a) => Formula::not(rec(a, env)?),
        Formula::And(a, b) => Formula::and(rec(a, env)?, rec(b, env)?),
        Formula::Or(a, b) => Formula::or(rec(a, env)?, rec(b, env)?),
        Formula::Implies(a, b) => Formula::implies(rec(a, env)?, rec(b, env)?),
        Formula::Iff(a, b) => Formula::iff(rec(a, env)?, rec(b, env)?),
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            if depth + 1 > max_depth {
                return Err(LogicError::DepthLimit { limit: max_depth });
            }
            let mut parts = Vec::with_capacity(universe.len());
            for e in universe {
                env.entry(v.clone()).or_default().push(e.clone());
                let part = expand(body, universe, max_depth, depth + 1, env);
                env.get_mut(v).map(Vec::pop);
                parts.push(part?);
            }
            let combined = if matches!(f, Formula::Forall(..)) {
                Formula::conjunction(parts)
            } else {
                Formula::disjunction(parts)
            };
            combined.expect("universe is non-empty")
        }
    })
}
