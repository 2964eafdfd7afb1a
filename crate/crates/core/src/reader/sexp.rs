use std::fmt;
use std::iter::Peekable;
use std::str::Chars;
use std::sync::Arc;

use num_bigint::BigInt;

use crate::value::{Name, SourcePos};

#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    pub kind: FormKind,
    pub pos: SourcePos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FormKind {
    Int(BigInt),
    Sym(Name),
    Char(u32),
    Str(String),
    Bool(bool),
    List(Vec<Form>),
    Quote(Box<Form>),
}

impl Form {
    pub fn sym(&self) -> Option<&str> {
        match &self.kind {
            FormKind::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Form]> {
        match &self.kind {
            FormKind::List(items) => Some(items),
            _ => None,
        }
    }

    /// Head symbol of a list form.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(Form::sym)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FormKind::Int(n) => write!(f, "{n}"),
            FormKind::Sym(s) => f.write_str(s),
            FormKind::Char(c) => match char::from_u32(*c) {
                Some(' ') => f.write_str("#\\space"),
                Some('\n') => f.write_str("#\\newline"),
                Some(ch) => write!(f, "#\\{ch}"),
                None => write!(f, "#\\x{c:x}"),
            },
            FormKind::Str(s) => write!(f, "{s:?}"),
            FormKind::Bool(b) => f.write_str(if *b { "#t" } else { "#f" }),
            FormKind::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
            FormKind::Quote(q) => write!(f, "'{q}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("parse error at {pos}: {message}")]
pub struct ParseError {
    pub pos: SourcePos,
    pub message: String,
}

struct Lexer<'a> {
    chars: Peekable<Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn pos(&self) -> SourcePos {
        SourcePos {
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
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn err<T>(&self, pos: SourcePos, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos,
            message: message.into(),
        })
    }

    fn atom_text(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if is_delimiter(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn form(&mut self) -> Result<Option<Form>, ParseError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let kind = match c {
            '(' | '[' => {
                self.bump();
                let close = if c == '(' { ')' } else { ']' };
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => return self.err(pos, format!("unclosed '{c}'")),
                        Some(d) if d == close => {
                            self.bump();
                            break;
                        }
                        Some(d @ (')' | ']')) => {
                            return self.err(self.pos(), format!("mismatched '{d}'"))
                        }
                        Some(_) => match self.form()? {
                            Some(f) => items.push(f),
                            None => return self.err(pos, format!("unclosed '{c}'")),
                        },
                    }
                }
                FormKind::List(items)
            }
            ')' | ']' => return self.err(pos, format!("unexpected '{c}'")),
            '\'' => {
                self.bump();
                match self.form()? {
                    Some(f) => FormKind::Quote(Box::new(f)),
                    None => return self.err(pos, "quote at end of input"),
                }
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return self.err(pos, "unterminated string"),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(e @ ('\\' | '"')) => s.push(e),
                            _ => return self.err(pos, "bad string escape"),
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                FormKind::Str(s)
            }
            '#' => {
                self.bump();
                match self.peek() {
                    Some('\\') => {
                        self.bump();
                        // The first character is always part of the literal, even
                        // when it is a delimiter such as `(` or space.
                        let Some(first) = self.bump() else {
                            return self.err(pos, "character literal at end of input");
                        };
                        let mut name = String::from(first);
                        name.push_str(&self.atom_text());
                        let code = if name.chars().count() == 1 {
                            first as u32
                        } else {
                            match name.as_str() {
                                "space" => ' ' as u32,
                                "newline" => '\n' as u32,
                                "tab" => '\t' as u32,
                                "nul" => 0,
                                _ => return self.err(pos, format!("unknown character #\\{name}")),
                            }
                        };
                        FormKind::Char(code)
                    }
                    _ => match self.atom_text().as_str() {
                        "t" | "true" => FormKind::Bool(true),
                        "f" | "false" => FormKind::Bool(false),
                        other => return self.err(pos, format!("unknown syntax #{other}")),
                    },
                }
            }
            _ => {
                let text = self.atom_text();
                match parse_int(&text) {
                    Some(n) => FormKind::Int(n),
                    None => FormKind::Sym(Arc::from(text.as_str())),
                }
            }
        };
        Ok(Some(Form { kind, pos }))
    }
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '\'' | '"' | ';')
}

fn parse_int(text: &str) -> Option<BigInt> {
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// Parses UTF-8 program text into top-level s-expressions. `;` starts a
/// comment running to the end of the line.
pub fn read_program(text: &str) -> Result<Vec<Form>, ParseError> {
    let mut lx = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(f) = lx.form()? {
        out.push(f);
    }
    Ok(out)
}
