//! Surface syntax for formulas.
//!
//! ```text
//! f ::= true | ident | ~f | f & f | f "|" f | <>{ident, ...} f | ( f )
//! ```
//!
//! `~` and `<>{..}` bind tightest, then `&`, then `|`. Binary operators are
//! left-associative.

use std::collections::BTreeSet;

use super::{Formula, FormulaError};
use crate::ids::AgentId;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    True,
    Ident(String),
    Not,
    And,
    Or,
    Diamond,
    LBrace,
    RBrace,
    Comma,
    LParen,
    RParen,
}

fn describe(tok: Option<&Token>) -> String {
    match tok {
        None => "end of input".into(),
        Some(Token::True) => "`true`".into(),
        Some(Token::Ident(s)) => format!("identifier `{s}`"),
        Some(Token::Not) => "`~`".into(),
        Some(Token::And) => "`&`".into(),
        Some(Token::Or) => "`|`".into(),
        Some(Token::Diamond) => "`<>`".into(),
        Some(Token::LBrace) => "`{`".into(),
        Some(Token::RBrace) => "`}`".into(),
        Some(Token::Comma) => "`,`".into(),
        Some(Token::LParen) => "`(`".into(),
        Some(Token::RParen) => "`)`".into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, FormulaError> {
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
            b'~' => Token::Not,
            b'&' => Token::And,
            b'|' => Token::Or,
            b'{' => Token::LBrace,
            b'}' => Token::RBrace,
            b',' => Token::Comma,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'<' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Token::Diamond
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                let word = &text[start..=i];
                if word == "true" {
                    Token::True
                } else {
                    Token::Ident(word.to_owned())
                }
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(FormulaError::Syntax {
                    position: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error<T>(&self, expected: &str) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            position: self.offset(),
            message: format!("expected {expected}, found {}", describe(self.peek())),
        })
    }

    fn eat(&mut self, tok: &Token) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Token::Or) {
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.unary()?;
        while self.eat(&Token::And) {
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::Diamond) => {
                self.pos += 1;
                let coalition = self.coalition()?;
                let child = self.unary()?;
                Ok(Formula::Diamond(coalition, Box::new(child)))
            }
            _ => self.atom(),
        }
    }

    fn coalition(&mut self) -> Result<BTreeSet<AgentId>, FormulaError> {
        let open = self.offset();
        if !self.eat(&Token::LBrace) {
            return self.error("`{` after `<>`");
        }
        if self.eat(&Token::RBrace) {
            return Err(FormulaError::EmptyCoalition { position: open });
        }
        let mut agents = BTreeSet::new();
        loop {
            match self.peek() {
                Some(Token::Ident(name)) => {
                    agents.insert(AgentId::new(name.clone()));
                    self.pos += 1;
                }
                _ => return self.error("agent identifier"),
            }
            if self.eat(&Token::RBrace) {
                return Ok(agents);
            }
            if !self.eat(&Token::Comma) {
                return self.error("`,` or `}`");
            }
        }
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().cloned() {
            Some(Token::True) => {
                self.pos += 1;
                Ok(Formula::Top)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(Formula::var(name))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.disjunction()?;
                if !self.eat(&Token::RParen) {
                    return self.error("`)`");
                }
                Ok(inner)
            }
            _ => self.error("formula"),
        }
    }
}

/// Parses formula text into its desugared tree.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        end: text.len(),
    };
    let f = parser.disjunction()?;
    if parser.peek().is_some() {
        return parser.error("end of input");
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
