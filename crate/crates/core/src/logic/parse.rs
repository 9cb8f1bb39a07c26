use std::collections::{BTreeMap, BTreeSet};

use super::{Entity, Formula, Literal, LogicError, Predicate, Term};

/// Predicate arities seen so far. Shared across the formulas of one problem
/// so that `F(a)` and `F(a, b)` cannot both appear.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    arities: BTreeMap<String, usize>,
}

impl Signature {
    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.arities.get(predicate).copied()
    }

    pub fn predicates(&self) -> impl Iterator<Item = Predicate> + '_ {
        self.arities.iter().map(|(name, &arity)| Predicate {
            name: name.clone(),
            arity,
        })
    }

    pub fn check(&mut self, predicate: &str, arity: usize, position: usize) -> Result<(), LogicError> {
        match self.arities.get(predicate) {
            Some(&expected) if expected != arity => Err(LogicError::ArityMismatch {
                predicate: predicate.to_owned(),
                expected,
                found: arity,
                position,
            }),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(predicate.to_owned(), arity);
                Ok(())
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.arities.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Not,
    And,
    Or,
    Implies,
    Iff,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, LogicError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'~' => Tok::Not,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Implies
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') => {
                i += 2;
                Tok::Iff
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_owned()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(LogicError::Syntax {
                    position: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

/// Recursive-descent parser for the ASCII formula grammar.
///
/// Precedence, tightest first: `~`, `&`, `|`, `->` (right associative),
/// `<->`. Identifiers bound by an enclosing quantifier are variables, every
/// other argument identifier is an entity.
#[derive(Debug, Default)]
pub struct Parser<'a> {
    pub signature: Signature,
    entities: Option<&'a BTreeSet<Entity>>,
}

impl<'a> Parser<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reject entity constants outside `entities`.
    pub fn strict(entities: &'a BTreeSet<Entity>) -> Self {
        Self {
            signature: Signature::default(),
            entities: Some(entities),
        }
    }

    pub fn with_signature(mut self, signature: Signature) -> Self {
        self.signature = signature;
        self
    }

    pub fn parse(&mut self, text: &str) -> Result<Formula, LogicError> {
        let toks = tokenize(text)?;
        let mut st = State {
            toks,
            pos: 0,
            bound: Vec::new(),
            parser: self,
        };
        let f = st.formula()?;
        match st.peek() {
            Tok::End => Ok(f),
            other => Err(st.error(format!("unexpected {other:?} after formula"))),
        }
    }
}

struct State<'p, 'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    bound: Vec<String>,
    parser: &'p mut Parser<'a>,
}

impl State<'_, '_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: String) -> LogicError {
        LogicError::Syntax {
            position: self.offset(),
            message,
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), LogicError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {tok:?}, found {:?}", self.peek())))
        }
    }

    fn formula(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.implication()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.implication()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LogicError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(name) if name == "forall" || name == "exists" => self.quantified(),
            Tok::Ident(_) => self.atom(),
            other => Err(self.error(format!("expected a formula, found {other:?}"))),
        }
    }

    fn quantified(&mut self) -> Result<Formula, LogicError> {
        let Tok::Ident(keyword) = self.bump() else {
            unreachable!("caller checked for a quantifier keyword")
        };
        let var = match self.bump() {
            Tok::Ident(v) if v != "forall" && v != "exists" => v,
            other => {
                self.pos -= 1;
                return Err(self.error(format!("expected a variable name, found {other:?}")));
            }
        };
        self.bound.push(var.clone());
        let body = match self.peek() {
            Tok::Ident(k) if k == "forall" || k == "exists" => self.quantified(),
            _ => {
                self.expect(Tok::LParen)?;
                let f = self.formula();
                f.and_then(|f| self.expect(Tok::RParen).map(|_| f))
            }
        };
        self.bound.pop();
        let body = Box::new(body?);
        Ok(if keyword == "forall" {
            Formula::Forall(var, body)
        } else {
            Formula::Exists(var, body)
        })
    }

    fn atom(&mut self) -> Result<Formula, LogicError> {
        let position = self.offset();
        let Tok::Ident(predicate) = self.bump() else {
            unreachable!("caller checked for an identifier")
        };
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                let arg_pos = self.offset();
                match self.bump() {
                    Tok::Ident(name) => {
                        if self.bound.contains(&name) {
                            args.push(Term::Var(name));
                        } else {
                            if let Some(universe) = self.parser.entities {
                                if !universe.contains(name.as_str()) {
                                    return Err(LogicError::UndeclaredEntity {
                                        entity: name,
                                        position: arg_pos,
                                    });
                                }
                            }
                            args.push(Term::Entity(Entity(name)));
                        }
                    }
                    other => {
                        self.pos -= 1;
                        return Err(self.error(format!("expected an argument, found {other:?}")));
                    }
                }
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    other => {
                        self.pos -= 1;
                        return Err(self.error(format!("expected `,` or `)`, found {other:?}")));
                    }
                }
            }
        }
        self.parser.signature.check(&predicate, args.len(), position)?;
        Ok(Formula::Atom { predicate, args })
    }
}

impl std::borrow::Borrow<str> for Entity {
    fn borrow(&self) -> &str {
        &self.0
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    Parser::new().parse(text)
}

/// Parse `A` or `~A` for a ground atom `A`.
pub fn parse_literal(text: &str) -> Result<Literal, LogicError> {
    let f = parse_formula(text)?;
    f.as_literal().ok_or_else(|| LogicError::Syntax {
        position: 0,
        message: format!("`{text}` is not a ground literal"),
    })
}
