//! Minimal s-expression reader with source positions.

use crate::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    pub fn error(self, kind: ParseErrorKind) -> ParseError {
        ParseError { line: self.line, col: self.col, kind }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            Sexp::Atom(..) => None,
        }
    }
}

fn is_atom_char(c: char) -> bool {
    c.is_alphanumeric() || "_-:.*+/<>=!?@#$%&^~".contains(c)
}

/// Reads every top-level expression in `text`. `;` starts a comment that
/// runs to the end of the line.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    while let Some(&c) = chars.peek() {
        let here = Pos { line, col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        match c {
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                stack.push((Vec::new(), here));
            }
            ')' => {
                chars.next();
                col += 1;
                let (items, start) =
                    stack.pop().ok_or_else(|| here.error(ParseErrorKind::Syntax("unbalanced `)`".into())))?;
                let list = Sexp::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            c if is_atom_char(c) => {
                let mut atom = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_atom_char(c) {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                    col += 1;
                }
                let a = Sexp::Atom(atom, here);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(a),
                    None => return Err(here.error(ParseErrorKind::Syntax("atom outside of a section".into()))),
                }
            }
            other => {
                return Err(here.error(ParseErrorKind::Lexical(format!("unexpected character {other:?}"))));
            }
        }
    }
    if let Some((_, start)) = stack.pop() {
        return Err(start.error(ParseErrorKind::Syntax("unclosed `(`".into())));
    }
    Ok(top)
}
