//! Recursive-descent parser for the `.dl` text format.
//!
//! ```text
//! program   := item*
//! item      := "input" IDENT "/" NAT "."
//!            | "output" IDENT "/" NAT "."
//!            | "enum" ("input" | "output") ":" enum_atom ("," enum_atom)* ";"
//!            | atom "<-" atom ("," atom)* "."
//! atom      := IDENT [ "(" [ term ("," term)* ] ")" ]
//! enum_atom := IDENT [ "(" [ eterm ("," eterm)* ] ")" ]
//! eterm     := NAT [ ".." NAT ]
//! term      := primary (("+" | "-") primary)*
//! primary   := NAT | IDENT | "(" term ")"
//! ```
//!
//! `%` starts a comment running to the end of the line. A range `a..b` inside an
//! enumeration atom expands to one atom per value (inclusive), leftmost argument
//! varying slowest.

use super::ast::{ArithOp, Term};
use super::DatalogError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Nat(u32),
    LParen,
    RParen,
    Comma,
    Dot,
    DotDot,
    Slash,
    Colon,
    Semi,
    Arrow,
    Plus,
    Minus,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Nat(n) => format!("number `{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Arrow => "`<-`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> DatalogError {
    DatalogError::Syntax {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, DatalogError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let mut advance = 1;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '/' => Tok::Slash,
            ':' => Tok::Colon,
            ';' => Tok::Semi,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '.' if chars.get(i + 1) == Some(&'.') => {
                advance = 2;
                Tok::DotDot
            }
            '.' => Tok::Dot,
            '<' if chars.get(i + 1) == Some(&'-') => {
                advance = 2;
                Tok::Arrow
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i + advance < chars.len() && chars[i + advance].is_ascii_digit() {
                    advance += 1;
                }
                let text: String = chars[start..start + advance].iter().collect();
                let n = text
                    .parse::<u32>()
                    .map_err(|_| syntax(pos, format!("number `{text}` is too large")))?;
                Tok::Nat(n)
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i + advance < chars.len()
                    && (chars[i + advance].is_alphanumeric() || chars[i + advance] == '_')
                {
                    advance += 1;
                }
                Tok::Ident(chars[start..start + advance].iter().collect())
            }
            other => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        };
        toks.push((tok, pos));
        i += advance;
        col += advance;
    }
    toks.push((Tok::Eof, Pos { line, col }));
    Ok(toks)
}

#[derive(Debug, Clone)]
pub(crate) enum RawTerm {
    Term(Term),
    Range(u32, u32),
}

#[derive(Debug, Clone)]
pub(crate) struct RawAtom {
    pub name: String,
    pub terms: Vec<RawTerm>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DeclKind {
    Input,
    Output,
}

#[derive(Debug, Clone)]
pub(crate) enum Item {
    Decl {
        kind: DeclKind,
        name: String,
        arity: usize,
        pos: Pos,
    },
    Enum {
        kind: DeclKind,
        atoms: Vec<RawAtom>,
    },
    Rule {
        head: RawAtom,
        body: Vec<RawAtom>,
        pos: Pos,
    },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Pos, DatalogError> {
        let (tok, pos) = self.bump();
        if tok == want {
            Ok(pos)
        } else {
            Err(syntax(
                pos,
                format!("expected {}, found {}", want.describe(), tok.describe()),
            ))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), DatalogError> {
        match self.bump() {
            (Tok::Ident(s), pos) => Ok((s, pos)),
            (tok, pos) => Err(syntax(
                pos,
                format!("expected identifier, found {}", tok.describe()),
            )),
        }
    }

    fn nat(&mut self) -> Result<u32, DatalogError> {
        match self.bump() {
            (Tok::Nat(n), _) => Ok(n),
            (tok, pos) => Err(syntax(
                pos,
                format!("expected number, found {}", tok.describe()),
            )),
        }
    }

    fn items(&mut self) -> Result<Vec<Item>, DatalogError> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            items.push(self.item()?);
        }
        Ok(items)
    }

    fn item(&mut self) -> Result<Item, DatalogError> {
        let pos = self.pos();
        let keyword = match self.peek() {
            Tok::Ident(s) => s.clone(),
            other => {
                return Err(syntax(
                    pos,
                    format!("expected declaration or rule, found {}", other.describe()),
                ))
            }
        };
        // Keywords are only keywords when followed by what a declaration needs;
        // otherwise `input(...)` is an ordinary rule head.
        let next = &self.toks[(self.at + 1).min(self.toks.len() - 1)].0;
        match (keyword.as_str(), next) {
            ("input", Tok::Ident(_)) | ("output", Tok::Ident(_)) => {
                self.bump();
                let kind = if keyword == "input" {
                    DeclKind::Input
                } else {
                    DeclKind::Output
                };
                let (name, _) = self.ident()?;
                self.expect(Tok::Slash)?;
                let arity = self.nat()? as usize;
                self.expect(Tok::Dot)?;
                Ok(Item::Decl {
                    kind,
                    name,
                    arity,
                    pos,
                })
            }
            ("enum", Tok::Ident(_)) => {
                self.bump();
                let (which, wpos) = self.ident()?;
                let kind = match which.as_str() {
                    "input" => DeclKind::Input,
                    "output" => DeclKind::Output,
                    _ => {
                        return Err(syntax(
                            wpos,
                            format!("expected `input` or `output` after `enum`, found `{which}`"),
                        ))
                    }
                };
                self.expect(Tok::Colon)?;
                let mut atoms = vec![self.atom(true)?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    atoms.push(self.atom(true)?);
                }
                self.expect(Tok::Semi)?;
                Ok(Item::Enum { kind, atoms })
            }
            _ => {
                let head = self.atom(false)?;
                self.expect(Tok::Arrow)?;
                let mut body = vec![self.atom(false)?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    body.push(self.atom(false)?);
                }
                self.expect(Tok::Dot)?;
                Ok(Item::Rule { head, body, pos })
            }
        }
    }

    fn atom(&mut self, in_enum: bool) -> Result<RawAtom, DatalogError> {
        let (name, pos) = self.ident()?;
        let mut terms = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            if *self.peek() != Tok::RParen {
                loop {
                    terms.push(if in_enum {
                        self.enum_term()?
                    } else {
                        RawTerm::Term(self.term()?)
                    });
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(RawAtom { name, terms, pos })
    }

    fn enum_term(&mut self) -> Result<RawTerm, DatalogError> {
        let pos = self.pos();
        let lo = match self.bump() {
            (Tok::Nat(n), _) => n,
            (tok, p) => {
                return Err(syntax(
                    p,
                    format!(
                        "enumeration entries must be ground; expected number, found {}",
                        tok.describe()
                    ),
                ))
            }
        };
        if *self.peek() == Tok::DotDot {
            self.bump();
            let hi = self.nat()?;
            if hi < lo {
                return Err(syntax(pos, format!("empty range {lo}..{hi}")));
            }
            Ok(RawTerm::Range(lo, hi))
        } else {
            Ok(RawTerm::Term(Term::Const(lo)))
        }
    }

    fn term(&mut self) -> Result<Term, DatalogError> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.primary()?;
            lhs = Term::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn primary(&mut self) -> Result<Term, DatalogError> {
        match self.bump() {
            (Tok::Nat(n), _) => Ok(Term::Const(n)),
            (Tok::Ident(v), _) => Ok(Term::Var(v)),
            (Tok::LParen, _) => {
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            (tok, pos) => Err(syntax(
                pos,
                format!("expected term, found {}", tok.describe()),
            )),
        }
    }
}

pub(crate) fn parse_items(src: &str) -> Result<Vec<Item>, DatalogError> {
    let toks = lex(src)?;
    Parser { toks, at: 0 }.items()
}
