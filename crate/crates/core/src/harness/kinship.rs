//! Synthetic family-relation problems in the style of CLUTRR.
//!
//! `rel(x, y)` reads "x is the rel of y". A story is a chain
//! `r1(p0, p1), r2(p1, p2), ...` whose composition names the relation
//! between `p0` and the last person. The composition rules are withheld
//! from the problem and live in the oracle's knowledge base instead.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::Problem;
use crate::llm::{Exemplar, OracleKb, PromptStyle};
use crate::logic::{ground_all, parse_formula, Entity, Formula, DEFAULT_GROUNDING_DEPTH};
use crate::sat::{sat_solve, SatConclusion, SatLimits};
use crate::seed::rng_for;

pub const RELATIONS: [&str; 12] = [
    "mother",
    "father",
    "son",
    "daughter",
    "brother",
    "sister",
    "grandmother",
    "grandfather",
    "grandson",
    "granddaughter",
    "aunt",
    "uncle",
];

const NAMES: [&str; 40] = [
    "Alice", "Bob", "Carol", "Dave", "Erin", "Frank", "Grace", "Heidi", "Ivan", "Judy", "Karl", "Laura", "Mallory",
    "Nina", "Oscar", "Peggy", "Quinn", "Rupert", "Sybil", "Trent", "Ursula", "Victor", "Wendy", "Xavier", "Yvonne",
    "Zach", "Amber", "Bruce", "Clara", "Derek", "Elena", "Felix", "Gina", "Hugo", "Iris", "Jonah", "Kira", "Leo",
    "Maya", "Noah",
];

/// `(r1, r2, r)`: `r1(x, y) & r2(y, z) -> r(x, z)`.
///
/// Only compositions that hold in every family (full siblings assumed)
/// are listed; the gender of the result always follows `x`, which `r1`
/// fixes.
pub fn compositions() -> Vec<(&'static str, &'static str, &'static str)> {
    let mut out = Vec::new();
    let female = |r: &str| {
        matches!(
            r,
            "mother" | "daughter" | "sister" | "grandmother" | "granddaughter" | "aunt"
        )
    };
    let pick = |r1: &str, f: &'static str, m: &'static str| if female(r1) { f } else { m };
    let parents = ["mother", "father"];
    let children = ["son", "daughter"];
    let siblings = ["brother", "sister"];
    let grandparents = ["grandmother", "grandfather"];
    let grandchildren = ["grandson", "granddaughter"];
    let auncles = ["aunt", "uncle"];
    for r1 in parents {
        for r2 in siblings {
            out.push((r1, r2, r1));
        }
        for r2 in parents {
            out.push((r1, r2, pick(r1, "grandmother", "grandfather")));
        }
    }
    for r1 in siblings {
        for r2 in parents {
            out.push((r1, r2, pick(r1, "aunt", "uncle")));
        }
        for r2 in children {
            out.push((r1, r2, pick(r1, "daughter", "son")));
        }
        for r2 in siblings {
            out.push((r1, r2, r1));
        }
        for r2 in grandchildren {
            out.push((r1, r2, pick(r1, "granddaughter", "grandson")));
        }
    }
    for r1 in children {
        for r2 in children {
            out.push((r1, r2, pick(r1, "granddaughter", "grandson")));
        }
    }
    for r1 in grandparents.into_iter().chain(auncles) {
        for r2 in siblings {
            out.push((r1, r2, r1));
        }
    }
    out
}

pub fn compose(r1: &str, r2: &str) -> Option<&'static str> {
    compositions()
        .into_iter()
        .find(|(a, b, _)| *a == r1 && *b == r2)
        .map(|(_, _, r)| r)
}

pub fn rule_texts() -> Vec<String> {
    compositions()
        .into_iter()
        .map(|(r1, r2, r)| format!("forall x forall y forall z ({r1}(x, y) & {r2}(y, z) -> {r}(x, z))"))
        .collect()
}

pub fn rules() -> Vec<Formula> {
    rule_texts()
        .iter()
        .map(|t| parse_formula(t).expect("composition rules parse"))
        .collect()
}

/// An ordered pair stands in at most one relation.
pub fn exclusivity() -> Vec<Formula> {
    (0..RELATIONS.len() - 1)
        .map(|i| {
            let rest: Vec<String> = RELATIONS[i + 1..].iter().map(|r| format!("~{r}(x, y)")).collect();
            parse_formula(&format!(
                "forall x forall y ({}(x, y) -> {})",
                RELATIONS[i],
                rest.join(" & ")
            ))
            .expect("exclusivity axioms parse")
        })
        .collect()
}

pub fn kb() -> OracleKb {
    OracleKb::from_formulas(&rules()).expect("composition table is consistent")
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("chain depth must be at least 2, got {0}")]
    Depth(usize),
    #[error("chain depth {0} needs more names than the generator has")]
    TooDeep(usize),
    #[error("could not build a valid problem after {0} attempts")]
    Exhausted(usize),
}

const MAX_ATTEMPTS: usize = 1000;

/// A chain of `depth` relations whose left-to-right composition is defined.
fn chain(rng: &mut impl Rng, depth: usize) -> Option<(Vec<&'static str>, &'static str)> {
    let table = compositions();
    let mut rels = vec![*RELATIONS.choose(rng)?];
    let mut acc = rels[0];
    while rels.len() < depth {
        let next: Vec<(&str, &str)> = table
            .iter()
            .filter(|(a, _, _)| *a == acc)
            .map(|(_, b, r)| (*b, *r))
            .collect();
        let (b, r) = *next.choose(rng)?;
        rels.push(b);
        acc = r;
    }
    Some((rels, acc))
}

fn sentence(rel: &str, a: &str, b: &str) -> String {
    format!("{a} is the {rel} of {b}.")
}

/// `count` problems with chain depth drawn from `2..=chain_depth`, labels
/// exactly balanced, plus the oracle holding every composition rule.
pub fn generate_kinship(count: usize, chain_depth: usize, seed: u64) -> Result<(Vec<Problem>, OracleKb), GenError> {
    generate_kinship_between(count, 2, chain_depth, seed)
}

/// Like [`generate_kinship`], with chain depth drawn from `min_depth..=chain_depth`.
pub fn generate_kinship_between(
    count: usize,
    min_depth: usize,
    chain_depth: usize,
    seed: u64,
) -> Result<(Vec<Problem>, OracleKb), GenError> {
    if min_depth < 2 {
        return Err(GenError::Depth(min_depth));
    }
    if chain_depth < min_depth {
        return Err(GenError::Depth(chain_depth));
    }
    if chain_depth + 1 > NAMES.len() {
        return Err(GenError::TooDeep(chain_depth));
    }
    let rules = rules();
    let axioms = exclusivity();
    let mut labels: Vec<bool> = (0..count).map(|i| i % 2 == 0).collect();
    labels.shuffle(&mut rng_for(seed, "kinship|labels"));

    let mut problems = Vec::with_capacity(count);
    for (i, &label) in labels.iter().enumerate() {
        let mut rng = rng_for(seed, &format!("kinship|{i}"));
        let problem = (0..MAX_ATTEMPTS)
            .find_map(|_| {
                let depth = rng.random_range(min_depth..=chain_depth);
                let (rels, answer) = chain(&mut rng, depth)?;
                let people: Vec<&str> = NAMES.choose_multiple(&mut rng, depth + 1).copied().collect();
                let query_rel = if label {
                    answer
                } else {
                    let others: Vec<&str> = RELATIONS.iter().copied().filter(|r| *r != answer).collect();
                    *others.choose(&mut rng)?
                };
                let facts: Vec<String> = rels
                    .iter()
                    .enumerate()
                    .map(|(j, r)| format!("{r}({}, {})", people[j], people[j + 1]))
                    .collect();
                let (first, last) = (people[0], people[depth]);
                let mut premises: Vec<Formula> = facts.iter().map(|f| parse_formula(f).ok()).collect::<Option<_>>()?;
                premises.extend(axioms.iter().cloned());
                let query = parse_formula(&format!("{query_rel}({first}, {last})")).ok()?;
                let story: Vec<String> = rels
                    .iter()
                    .enumerate()
                    .map(|(j, r)| sentence(r, people[j], people[j + 1]))
                    .collect();
                let mut p = Problem::new(format!("kinship_{i:04}"), premises, query);
                p.text = Some(format!(
                    "{} True or false: {first} is the {query_rel} of {last}.",
                    story.join(" ")
                ));
                p.entities = people.iter().map(|n| Entity::new(*n)).collect();
                p.label = Some(label);
                p.withheld_rules = rules.clone();
                p.style = PromptStyle::Kinship;
                (restored_verdict(&p) == Some(label)).then_some(p)
            })
            .ok_or(GenError::Exhausted(MAX_ATTEMPTS))?;
        problems.push(problem);
    }
    Ok((problems, kb()))
}

/// Verdict of the problem with its withheld rules put back.
pub fn restored_verdict(p: &Problem) -> Option<bool> {
    let universe: BTreeSet<Entity> = p.universe();
    let mut all = p.premises.clone();
    all.extend(p.withheld_rules.iter().cloned());
    let ground = ground_all(&all, &universe, DEFAULT_GROUNDING_DEPTH).ok()?;
    let report = sat_solve(&ground, &[], &p.query, &SatLimits::default()).ok()?;
    match report.conclusion {
        SatConclusion::InconsistentPremises => None,
        c => c.verdict(),
    }
}

/// Worked examples for few-shot prompting.
pub fn exemplars() -> Vec<Exemplar> {
    let ex = |premises: &[&str], query: &str, answer: &str| Exemplar {
        premises: premises.iter().map(ToString::to_string).collect(),
        commonsense: Vec::new(),
        query: query.to_string(),
        answer: answer.to_string(),
    };
    vec![
        ex(
            &["mother(Ann, Ben)", "sister(Ben, Cat)"],
            "mother(Ann, Cat)",
            "Ann is Ben's mother and Ben is Cat's sibling, so Ann is Cat's mother. True",
        ),
        ex(
            &["father(Dan, Eve)", "father(Eve, Fay)"],
            "uncle(Dan, Fay)",
            "Dan is the father of Fay's parent Eve, so Dan is Fay's grandfather, not her uncle. False",
        ),
        ex(
            &["brother(Gus, Hal)", "son(Hal, Ida)"],
            "son(Gus, Ida)",
            "Hal is Ida's son and Gus is Hal's brother, so Gus is also Ida's son. True",
        ),
        ex(
            &["sister(Jo, Kim)", "mother(Kim, Lou)"],
            "grandmother(Jo, Lou)",
            "Jo is the sister of Lou's mother Kim, so Jo is Lou's aunt, not grandmother. False",
        ),
    ]
}
