//! Deterministic knowledge-base stand-in for a language model.
//!
//! The oracle knows a set of Horn rules. It proposes consequents by rule
//! instantiation, scores a clause as commonsense iff it instantiates a rule,
//! and answers chain-of-thought queries by forward chaining for a bounded
//! number of rounds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BackendError, Context, CotSample, LlmBackend, PromptStyle, Target, YesNo};
use crate::logic::{
    ground_all, parse_formula, Atom, Entity, Formula, Implication, Literal, LogicError, Term, DEFAULT_GROUNDING_DEPTH,
};
use crate::sat::{consistent, sat_solve, SatConclusion, SatLimits};
use crate::seed::rng_for;

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("rule {index}: {source}")]
    Parse { index: usize, source: LogicError },
    #[error("rule {index} `{text}` is not a supported Horn rule: {reason}")]
    NotHorn { index: usize, text: String, reason: String },
    #[error("knowledge base rules are mutually inconsistent")]
    Inconsistent,
    #[error("reading knowledge base: {0}")]
    Io(#[from] std::io::Error),
    #[error("knowledge base JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Pattern {
    predicate: String,
    args: Vec<Term>,
    positive: bool,
}

impl Pattern {
    fn from_formula(f: &Formula) -> Option<Pattern> {
        let (inner, positive) = match f {
            Formula::Not(g) => (g.as_ref(), false),
            other => (other, true),
        };
        match inner {
            Formula::Atom { predicate, args } => Some(Pattern {
                predicate: predicate.clone(),
                args: args.clone(),
                positive,
            }),
            _ => None,
        }
    }

    fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Entity(_) => None,
        })
    }

    /// Extend `binding` so the pattern matches `lit`. Distinct variables must
    /// take distinct entities.
    fn bind(&self, lit: &Literal, binding: &mut BTreeMap<String, Entity>) -> bool {
        if self.positive != lit.positive
            || self.predicate != lit.atom.predicate
            || self.args.len() != lit.atom.args.len()
        {
            return false;
        }
        for (t, e) in self.args.iter().zip(&lit.atom.args) {
            match t {
                Term::Entity(c) if c == e => {}
                Term::Entity(_) => return false,
                Term::Var(v) => match binding.get(v) {
                    Some(b) if b == e => {}
                    Some(_) => return false,
                    None => {
                        if binding.values().any(|b| b == e) {
                            return false;
                        }
                        binding.insert(v.clone(), e.clone());
                    }
                },
            }
        }
        true
    }

    fn instantiate(&self, binding: &BTreeMap<String, Entity>) -> Literal {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Entity(e) => e.clone(),
                Term::Var(v) => binding[v].clone(),
            })
            .collect::<Vec<_>>();
        Literal {
            atom: Atom::new(self.predicate.clone(), args),
            positive: self.positive,
        }
    }
}

/// `forall x.. (A1 & A2 -> C)` with at most two antecedent literals and
/// every consequent variable bound by the antecedent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    antecedent: Vec<Pattern>,
    consequent: Pattern,
    text: String,
}

impl Rule {
    pub fn from_formula(f: &Formula) -> Result<Rule, String> {
        let mut body = f;
        let mut bound = BTreeSet::new();
        while let Formula::Forall(v, inner) = body {
            bound.insert(v.clone());
            body = inner;
        }
        let (lhs, rhs) = match body {
            Formula::Implies(a, b) => (Some(a.as_ref()), b.as_ref()),
            other => (None, other),
        };
        let consequent = Pattern::from_formula(rhs).ok_or("consequent must be a literal")?;
        let mut antecedent = Vec::new();
        if let Some(lhs) = lhs {
            let mut stack = vec![lhs];
            while let Some(g) = stack.pop() {
                match g {
                    Formula::And(a, b) => {
                        stack.push(b);
                        stack.push(a);
                    }
                    other => antecedent
                        .push(Pattern::from_formula(other).ok_or("antecedent must be a conjunction of literals")?),
                }
            }
        }
        if antecedent.len() > 2 {
            return Err("at most two antecedent literals".into());
        }
        let lhs_vars: BTreeSet<&str> = antecedent.iter().flat_map(Pattern::vars).collect();
        if consequent.vars().any(|v| !lhs_vars.contains(v)) {
            return Err("consequent variable not bound by the antecedent".into());
        }
        if lhs_vars.iter().any(|v| !bound.contains(*v)) {
            return Err("free variable".into());
        }
        Ok(Rule {
            antecedent,
            consequent,
            text: f.to_string(),
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn arity(&self) -> usize {
        self.antecedent.len()
    }

    /// Consequent of this rule instantiated by `antecedent` in either order.
    fn fire(&self, antecedent: &[&Literal]) -> Vec<Literal> {
        if antecedent.len() != self.antecedent.len() {
            return Vec::new();
        }
        let orders: &[[usize; 2]] = match antecedent.len() {
            2 => &[[0, 1], [1, 0]],
            _ => &[[0, 1]],
        };
        let mut out = Vec::new();
        for order in orders {
            let mut binding = BTreeMap::new();
            let ok = self
                .antecedent
                .iter()
                .zip(order)
                .all(|(p, &i)| p.bind(antecedent[i], &mut binding));
            if ok {
                let c = self.consequent.instantiate(&binding);
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleKb {
    rules: Vec<Rule>,
}

#[derive(Serialize, Deserialize)]
struct KbFile {
    rules: Vec<String>,
}

impl OracleKb {
    pub fn from_formulas(formulas: &[Formula]) -> Result<OracleKb, KbError> {
        let rules = formulas
            .iter()
            .enumerate()
            .map(|(index, f)| {
                Rule::from_formula(f).map_err(|reason| KbError::NotHorn {
                    index,
                    text: f.to_string(),
                    reason,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let kb = OracleKb { rules };
        if !kb.is_consistent(formulas) {
            return Err(KbError::Inconsistent);
        }
        Ok(kb)
    }

    pub fn parse(texts: &[impl AsRef<str>]) -> Result<OracleKb, KbError> {
        let formulas = texts
            .iter()
            .enumerate()
            .map(|(index, t)| parse_formula(t.as_ref()).map_err(|source| KbError::Parse { index, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_formulas(&formulas)
    }

    pub fn from_json(text: &str) -> Result<OracleKb, KbError> {
        let file: KbFile = serde_json::from_str(text)?;
        Self::parse(&file.rules)
    }

    pub fn load(path: &Path) -> Result<OracleKb, KbError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = KbFile {
            rules: self.rules.iter().map(|r| r.text.clone()).collect(),
        };
        serde_json::to_string_pretty(&file).expect("plain strings serialize") + "\n"
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn formulas(&self) -> Vec<Formula> {
        self.rules
            .iter()
            .map(|r| parse_formula(&r.text).expect("rule text came from the printer"))
            .collect()
    }

    /// Ground over the rules' own constants plus enough fresh ones to give
    /// every variable a distinct value, and check satisfiability.
    fn is_consistent(&self, formulas: &[Formula]) -> bool {
        if formulas.is_empty() {
            return true;
        }
        let mut universe: BTreeSet<Entity> = formulas.iter().flat_map(Formula::entities).collect();
        let width = self
            .rules
            .iter()
            .map(|r| {
                r.antecedent
                    .iter()
                    .flat_map(Pattern::vars)
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .max()
            .unwrap_or(0);
        for i in 0..width.max(1) {
            universe.insert(Entity::new(format!("_kb{i}")));
        }
        match ground_all(formulas, &universe, DEFAULT_GROUNDING_DEPTH) {
            Ok(ground) => consistent(&ground, &[], &SatLimits::default()).unwrap_or(false),
            Err(_) => false,
        }
    }

    /// Consequents the rules derive from exactly this antecedent.
    pub fn consequents(&self, antecedent: &[Literal]) -> Vec<Literal> {
        let refs: Vec<&Literal> = antecedent.iter().collect();
        let mut out = Vec::new();
        for r in &self.rules {
            for c in r.fire(&refs) {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    pub fn is_instance(&self, clause: &Implication) -> bool {
        self.consequents(&clause.antecedent).contains(&clause.consequent)
    }

    /// One round of linear forward chaining: every consequent whose
    /// antecedent holds in `facts` and uses at least one `given` fact. After
    /// `n` rounds from `given`, derivations span at most `n + 1` given facts.
    pub fn step(&self, facts: &BTreeSet<Literal>, given: &BTreeSet<Literal>) -> BTreeSet<Literal> {
        let mut by_key: BTreeMap<(&str, bool), Vec<&Literal>> = BTreeMap::new();
        for f in facts {
            by_key
                .entry((f.atom.predicate.as_str(), f.positive))
                .or_default()
                .push(f);
        }
        let candidates = |p: &Pattern| -> Vec<&Literal> {
            by_key
                .get(&(p.predicate.as_str(), p.positive))
                .cloned()
                .unwrap_or_default()
        };
        let mut out = BTreeSet::new();
        for r in &self.rules {
            match r.antecedent.as_slice() {
                [] => {
                    out.insert(r.consequent.instantiate(&BTreeMap::new()));
                }
                [a] => {
                    for f in candidates(a).into_iter().filter(|f| given.contains(*f)) {
                        out.extend(r.fire(&[f]));
                    }
                }
                [a, b] => {
                    let (xs, ys) = (candidates(a), candidates(b));
                    for x in &xs {
                        for y in &ys {
                            if !given.contains(*x) && !given.contains(*y) {
                                continue;
                            }
                            let mut binding = BTreeMap::new();
                            if a.bind(x, &mut binding) && b.bind(y, &mut binding) {
                                out.insert(r.consequent.instantiate(&binding));
                            }
                        }
                    }
                }
                _ => unreachable!("arity checked at load"),
            }
        }
        out
    }
}

/// What the oracle's chain of thought does when it cannot derive an answer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnknownPolicy {
    #[default]
    Abstain,
    /// Seeded fair coin per sample, confidence 0.5.
    Guess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Forward-chaining rounds available to chain-of-thought answers.
    pub reasoning_depth: usize,
    /// Probability of flipping a score decision or hallucinating a proposal.
    pub noise: f64,
    pub seed: u64,
    pub unknown_policy: UnknownPolicy,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            reasoning_depth: 0,
            noise: 0.0,
            seed: 0,
            unknown_policy: UnknownPolicy::Abstain,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleBackend {
    kb: OracleKb,
    config: OracleConfig,
    limits: SatLimits,
}

fn context_key(ctx: &Context<'_>) -> String {
    let mut key = String::new();
    for p in ctx.ground_premises {
        let _ = write!(key, "{p};");
    }
    for c in ctx.commonsense {
        let _ = write!(key, "{c};");
    }
    let _ = write!(key, "?{}", ctx.query);
    key
}

impl OracleBackend {
    pub fn new(kb: OracleKb, config: OracleConfig) -> Self {
        OracleBackend {
            kb,
            config,
            limits: SatLimits::default(),
        }
    }

    pub fn kb(&self) -> &OracleKb {
        &self.kb
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    fn flip(&self, key: &str) -> bool {
        self.config.noise > 0.0 && rng_for(self.config.seed, key).random_bool(self.config.noise.min(1.0))
    }

    /// Verdict of the oracle's bounded reasoning, if it reaches one.
    pub fn derive(&self, ctx: &Context<'_>) -> Option<bool> {
        let report = sat_solve(ctx.ground_premises, ctx.commonsense, ctx.query, &self.limits).ok()?;
        if let Some(v) = report.conclusion.verdict() {
            return Some(v);
        }
        if report.conclusion != SatConclusion::Unknown || self.config.reasoning_depth == 0 {
            return None;
        }
        let given = report.backbone.literals;
        let mut facts = given.clone();
        for _ in 0..self.config.reasoning_depth {
            let new = self.kb.step(&facts, &given);
            let before = facts.len();
            facts.extend(new);
            if facts.len() == before {
                break;
            }
        }
        let mut extra: Vec<Implication> = ctx.commonsense.to_vec();
        extra.extend(facts.into_iter().map(|f| Implication::new(Vec::new(), f)));
        sat_solve(ctx.ground_premises, &extra, ctx.query, &self.limits)
            .ok()?
            .conclusion
            .verdict()
    }

    fn hallucinate(&self, ctx: &Context<'_>, target: &Target, key: &str) -> Option<String> {
        let mut rng = rng_for(self.config.seed, &format!("{key}|pick"));
        let want = target.args().len();
        let preds: Vec<_> = ctx.predicates().into_iter().filter(|p| p.arity >= want).collect();
        let pred = preds.choose(&mut rng)?;
        let universe: Vec<Entity> = ctx.entities().into_iter().collect();
        let mut args: Vec<Entity> = target.args().into_iter().cloned().collect();
        while args.len() < pred.arity {
            args.push(universe.choose(&mut rng)?.clone());
        }
        let lit = Literal {
            atom: Atom::new(pred.name.clone(), args),
            positive: rng.random_bool(0.5),
        };
        Some(lit.to_string())
    }
}

impl LlmBackend for OracleBackend {
    fn sample_cot(&self, ctx: &Context<'_>, k: usize) -> Result<Vec<CotSample>, BackendError> {
        if let Some(answer) = self.derive(ctx) {
            return Ok(vec![CotSample::answered(answer, 1.0); k]);
        }
        Ok(match self.config.unknown_policy {
            UnknownPolicy::Abstain => vec![CotSample::abstain("I cannot tell."); k],
            UnknownPolicy::Guess => {
                let key = context_key(ctx);
                (0..k)
                    .map(|i| {
                        let a = rng_for(self.config.seed, &format!("cot|{key}|{i}")).random_bool(0.5);
                        CotSample::answered(a, 0.5)
                    })
                    .collect()
            }
        })
    }

    fn generate(
        &self,
        ctx: &Context<'_>,
        antecedent: &[Literal],
        target: &Target,
    ) -> Result<Option<String>, BackendError> {
        let key = format!(
            "generate|{}|{target}",
            antecedent.iter().map(ToString::to_string).collect::<Vec<_>>().join("&")
        );
        if self.flip(&key) {
            return Ok(self.hallucinate(ctx, target, &key));
        }
        let found = self.kb.consequents(antecedent).into_iter().find(|c| match target {
            Target::Entity(e) => c.atom.args.contains(e),
            Target::Pair(a, b) => c.atom.args.len() == 2 && c.atom.args[0] == *a && c.atom.args[1] == *b,
        });
        Ok(found.map(|c| c.to_string()))
    }

    fn commonsense_logprobs(&self, clause: &Implication, style: PromptStyle) -> Result<YesNo, BackendError> {
        let mut good = self.kb.is_instance(clause);
        if self.flip(&format!("commonsense|{clause}")) {
            good = !good;
        }
        // "Contradictory?" wants No for a good rule; "true?" wants Yes.
        Ok(YesNo::decided(match style {
            PromptStyle::General => !good,
            PromptStyle::Kinship => good,
        }))
    }

    fn relevance_logprobs(&self, ctx: &Context<'_>, clause: &Implication) -> Result<YesNo, BackendError> {
        let known = ctx.entities();
        let mut relevant = clause.entities().iter().all(|e| known.contains(e));
        if self.flip(&format!("relevance|{clause}")) {
            relevant = !relevant;
        }
        Ok(YesNo::decided(relevant))
    }
}
