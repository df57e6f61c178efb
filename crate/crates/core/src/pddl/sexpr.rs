//! Minimal s-expression reader for PDDL text.
//!
//! Symbols are lower-cased (PDDL is case-insensitive) and every node keeps
//! the line/column where it starts so later stages can report positions.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::PddlError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// The leading symbol of a list, e.g. `and` for `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexpr], PddlError> {
        self.as_list()
            .ok_or_else(|| PddlError::syntax(self.pos(), alloc::format!("expected {what}")))
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str, PddlError> {
        self.as_atom()
            .ok_or_else(|| PddlError::syntax(self.pos(), alloc::format!("expected {what}")))
    }
}

/// Reads every top-level expression from `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexpr>, PddlError> {
    let mut reader = Reader::new(text);
    let mut out = Vec::new();
    loop {
        reader.skip_trivia();
        if reader.peek().is_none() {
            return Ok(out);
        }
        out.push(reader.read()?);
    }
}

/// Reads exactly one expression; trailing content is an error.
pub fn parse_one(text: &str) -> Result<Sexpr, PddlError> {
    let mut reader = Reader::new(text);
    reader.skip_trivia();
    if reader.peek().is_none() {
        return Err(PddlError::syntax(reader.pos(), "empty input".to_string()));
    }
    let expr = reader.read()?;
    reader.skip_trivia();
    if reader.peek().is_some() {
        return Err(PddlError::syntax(
            reader.pos(),
            "trailing content after expression".to_string(),
        ));
    }
    Ok(expr)
}

struct Reader<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexpr, PddlError> {
        self.skip_trivia();
        let start = self.pos();
        match self.peek() {
            None => Err(PddlError::syntax(start, "unexpected end of input".to_string())),
            Some(')') => Err(PddlError::syntax(start, "unbalanced ')'".to_string())),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => return Err(PddlError::syntax(start, "unclosed '(' at end of input".to_string())),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut sym = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    sym.extend(c.to_lowercase());
                    self.bump();
                }
                Ok(Sexpr::Atom(sym, start))
            }
        }
    }
}
