//! Prompt templates for the four language-model subroutines.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Context, PromptStyle, Target};
use crate::logic::{Formula, Implication, Literal};

/// An annotated few-shot example for the chain-of-thought prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub premises: Vec<String>,
    #[serde(default)]
    pub commonsense: Vec<String>,
    pub query: String,
    /// Worked answer, ending in True or False.
    pub answer: String,
}

fn join_sentences<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    if parts.is_empty() {
        "none.".to_string()
    } else {
        format!("{}.", parts.join(". "))
    }
}

fn cot_block(out: &mut String, premises: &str, commonsense: &str, query: &str) {
    let _ = writeln!(out, "Here are some facts and rules: {premises}");
    let _ = writeln!(out, "Here is some additional info we found: {commonsense}");
    let _ = writeln!(out, "True or false: {query}?");
    out.push_str("Answer:");
}

pub fn cot(ctx: &Context<'_>) -> String {
    let mut out = String::new();
    for ex in ctx.exemplars {
        cot_block(
            &mut out,
            &join_sentences(&ex.premises),
            &join_sentences(&ex.commonsense),
            &ex.query,
        );
        let _ = write!(out, " {}\n\n", ex.answer.trim());
    }
    cot_block(
        &mut out,
        &join_sentences(ctx.premises),
        &join_sentences(ctx.commonsense),
        &ctx.query.to_string(),
    );
    out
}

/// `L1 & L2`, or `True` for the empty antecedent.
pub fn antecedent_text(antecedent: &[Literal]) -> String {
    match Formula::conjunction(antecedent.iter().map(Literal::to_formula)) {
        Some(f) => f.to_string(),
        None => "True".to_string(),
    }
}

pub fn generate(ctx: &Context<'_>, antecedent: &[Literal], target: &Target) -> String {
    let lhs = antecedent_text(antecedent);
    match (ctx.style, target) {
        (PromptStyle::Kinship, Target::Pair(a, b)) => {
            format!("If {lhs} then ___({a}, {b}). Fill in the blank.\nAnswer:")
        }
        (_, target) => {
            let known: Vec<String> = ctx.predicates().into_iter().map(|p| p.name).collect();
            format!(
                "Fill in the blank with a known predicate: {lhs} implies ___({}).\nKnown predicates are: {}\nAnswer:",
                target.args().iter().map(|e| e.as_str()).collect::<Vec<_>>().join(", "),
                known.join(", ")
            )
        }
    }
}

pub fn commonsense(clause: &Implication, style: PromptStyle) -> String {
    let question = match style {
        PromptStyle::General => "Does the following rule seem contradictory?",
        PromptStyle::Kinship => "Does the following rule seem true?",
    };
    format!("{question}\nRule: {clause}\nAnswer:")
}

pub fn relevance(ctx: &Context<'_>, clause: &Implication) -> String {
    let facts = join_sentences(
        ctx.premises
            .iter()
            .map(ToString::to_string)
            .chain(ctx.commonsense.iter().map(ToString::to_string)),
    );
    format!(
        "Here are some facts and rules: {facts}\nDoes the following new rule seem contextually relevant to the facts and rules? {clause}\nAnswer:"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_literal, Entity};

    #[test]
    fn cot_prompt_layout() {
        let premises = vec![parse_formula("A -> B").unwrap(), parse_formula("A").unwrap()];
        let cs = vec![Implication::new(vec![], parse_literal("C").unwrap())];
        let q = parse_formula("B").unwrap();
        let ctx = Context::new(&premises, &premises, &cs, &q, PromptStyle::General);
        assert_eq!(
            cot(&ctx),
            "Here are some facts and rules: A -> B. A.\n\
             Here is some additional info we found: C.\n\
             True or false: B?\n\
             Answer:"
        );
    }

    #[test]
    fn generation_prompts() {
        let premises = vec![parse_formula("drinksCoffee(Rina) & Loves(Mary, Sam)").unwrap()];
        let q = parse_formula("productive(Rina)").unwrap();
        let ctx = Context::new(&premises, &premises, &[], &q, PromptStyle::General);
        let ante = [
            parse_literal("drinksCoffee(Rina)").unwrap(),
            parse_literal("Loves(Mary, Sam)").unwrap(),
        ];
        let text = generate(&ctx, &ante, &Target::Entity(Entity::new("Rina")));
        assert!(text.starts_with(
            "Fill in the blank with a known predicate: drinksCoffee(Rina) & Loves(Mary, Sam) implies ___(Rina)."
        ));
        assert!(text.contains("Known predicates are: Loves, drinksCoffee\n"));

        let kin = Context::new(&premises, &premises, &[], &q, PromptStyle::Kinship);
        let text = generate(&kin, &ante[1..], &Target::Pair(Entity::new("Mary"), Entity::new("Sam")));
        assert_eq!(
            text,
            "If Loves(Mary, Sam) then ___(Mary, Sam). Fill in the blank.\nAnswer:"
        );
    }

    #[test]
    fn scoring_prompts() {
        let clause = Implication::new(
            vec![parse_literal("turns_white(fox, winter)").unwrap()],
            parse_literal("reflects(fox, sun)").unwrap(),
        );
        assert_eq!(
            commonsense(&clause, PromptStyle::General),
            "Does the following rule seem contradictory?\nRule: turns_white(fox, winter) -> reflects(fox, sun)\nAnswer:"
        );
        assert!(commonsense(&clause, PromptStyle::Kinship).starts_with("Does the following rule seem true?"));
    }
}
