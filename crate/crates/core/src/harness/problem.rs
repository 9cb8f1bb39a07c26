use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::llm::{Exemplar, PromptStyle};
use crate::logic::{Entity, Formula, Parser};

/// A load failure pinned to the offending field.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("{field}: {message}")]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl ToString) -> Self {
        FieldError {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

/// On-disk form of a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default)]
    pub entities: Vec<String>,
    pub premises: Vec<String>,
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub withheld_rules: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    True,
    False,
}

impl From<bool> for Label {
    fn from(b: bool) -> Self {
        if b {
            Label::True
        } else {
            Label::False
        }
    }
}

impl From<Label> for bool {
    fn from(l: Label) -> bool {
        l == Label::True
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub id: String,
    pub text: Option<String>,
    /// Declared universe; empty means "whatever the formulas mention".
    pub entities: BTreeSet<Entity>,
    pub premises: Vec<Formula>,
    pub query: Formula,
    pub label: Option<bool>,
    pub withheld_rules: Vec<Formula>,
    pub style: PromptStyle,
    pub exemplars: Vec<Exemplar>,
}

impl Problem {
    pub fn new(id: impl Into<String>, premises: Vec<Formula>, query: Formula) -> Self {
        Problem {
            id: id.into(),
            text: None,
            entities: BTreeSet::new(),
            premises,
            query,
            label: None,
            withheld_rules: Vec::new(),
            style: PromptStyle::General,
            exemplars: Vec::new(),
        }
    }

    /// Parse every formula. Constants must be declared when `entities` is
    /// non-empty; predicate arities must agree across all fields.
    pub fn from_file(file: ProblemFile) -> Result<Problem, FieldError> {
        let entities: BTreeSet<Entity> = file.entities.iter().map(Entity::new).collect();
        if file.entities.iter().any(|e| e.is_empty()) {
            return Err(FieldError::new("entities", "empty entity name"));
        }
        let mut parser = if entities.is_empty() {
            Parser::new()
        } else {
            Parser::strict(&entities)
        };
        let mut premises = Vec::with_capacity(file.premises.len());
        for (i, p) in file.premises.iter().enumerate() {
            premises.push(
                parser
                    .parse(p)
                    .map_err(|e| FieldError::new(format!("premises[{i}]"), e))?,
            );
        }
        let query = parser.parse(&file.query).map_err(|e| FieldError::new("query", e))?;
        // Rules quantify over the universe, but may still name constants
        // the story does not.
        let mut rule_parser = Parser::new().with_signature(parser.signature.clone());
        let mut withheld_rules = Vec::with_capacity(file.withheld_rules.len());
        for (i, r) in file.withheld_rules.iter().enumerate() {
            withheld_rules.push(
                rule_parser
                    .parse(r)
                    .map_err(|e| FieldError::new(format!("withheld_rules[{i}]"), e))?,
            );
        }
        Ok(Problem {
            id: file.id,
            text: file.text,
            entities,
            premises,
            query,
            label: file.label.map(bool::from),
            withheld_rules,
            style: PromptStyle::General,
            exemplars: Vec::new(),
        })
    }

    pub fn parse_json(text: &str) -> Result<Problem, FieldError> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| FieldError::new("document", e))?;
        Problem::from_file(file)
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            id: self.id.clone(),
            text: self.text.clone(),
            entities: self.entities.iter().map(|e| e.as_str().to_string()).collect(),
            premises: self.premises.iter().map(ToString::to_string).collect(),
            query: self.query.to_string(),
            label: self.label.map(Label::from),
            withheld_rules: self.withheld_rules.iter().map(ToString::to_string).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("problem serializes");
        s.push('\n');
        s
    }

    /// Declared entities plus every constant in the premises and query.
    pub fn universe(&self) -> BTreeSet<Entity> {
        let mut u = self.entities.clone();
        for f in self.premises.iter().chain([&self.query]) {
            u.extend(f.entities());
        }
        u
    }
}
