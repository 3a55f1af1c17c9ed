//! Tokenizer and s-expression reader. Symbols are lowercased on the way in.

use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, serde::Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom { text: String, pos: Pos },
    List { items: Vec<Sexp>, pos: Pos },
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom { pos, .. } | Sexp::List { pos, .. } => *pos,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }

    /// The leading symbol of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|items| items.first()).and_then(Sexp::as_atom)
    }
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '?' | ':' | '.' | '=' | '<' | '>' | '+' | '*' | '/' | '!' | '@')
}

#[derive(Debug)]
enum Token {
    Open(Pos),
    Close(Pos),
    Symbol(String, Pos),
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                col += 1;
                tokens.push(Token::Open(pos));
            }
            ')' => {
                chars.next();
                col += 1;
                tokens.push(Token::Close(pos));
            }
            c if is_symbol_char(c) => {
                let mut sym = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_symbol_char(c) {
                        break;
                    }
                    sym.push(c.to_ascii_lowercase());
                    chars.next();
                    col += 1;
                }
                tokens.push(Token::Symbol(sym, pos));
            }
            other => return Err(ParseError::new(pos, format!("unexpected character '{other}'"))),
        }
    }
    Ok(tokens)
}

/// Reads exactly one top-level s-expression.
pub fn read_sexp(text: &str) -> Result<Sexp, ParseError> {
    let tokens = tokenize(text)?;
    let mut stack: Vec<(Pos, Vec<Sexp>)> = Vec::new();
    let mut top: Option<Sexp> = None;
    for token in tokens {
        if let Some(done) = &top {
            let pos = match token {
                Token::Close(p) => return Err(ParseError::new(p, "unbalanced ')'")),
                Token::Open(p) | Token::Symbol(_, p) => p,
            };
            return Err(ParseError::new(pos, format!("unexpected input after the expression that started at {}", done.pos())));
        }
        match token {
            Token::Open(pos) => stack.push((pos, Vec::new())),
            Token::Close(pos) => {
                let (open, items) = stack.pop().ok_or_else(|| ParseError::new(pos, "unbalanced ')'"))?;
                let list = Sexp::List { items, pos: open };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(list),
                    None => top = Some(list),
                }
            }
            Token::Symbol(text, pos) => match stack.last_mut() {
                Some((_, parent)) => parent.push(Sexp::Atom { text, pos }),
                None => return Err(ParseError::new(pos, format!("expected '(' but found '{text}'"))),
            },
        }
    }
    if let Some((open, _)) = stack.last() {
        return Err(ParseError::new(*open, "unbalanced '(': list is never closed"));
    }
    top.ok_or_else(|| ParseError::new(Pos { line: 1, col: 1 }, "empty input"))
}
