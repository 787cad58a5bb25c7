use super::lexer::Tok;
use super::{ErrorKind, Loc, ParseError};

/// Nesting limit for parenthesised circuit expressions.
const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone)]
pub(crate) struct Spanned<T> {
    pub value: T,
    pub loc: Loc,
}

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub re: Option<(bool, String)>,
    pub im: Option<(bool, String)>,
    pub loc: Loc,
}

#[derive(Debug, Clone)]
pub(crate) enum RawPayload {
    Vector(Vec<Entry>),
    Matrix(Vec<Vec<Entry>>),
    Ket(Vec<Entry>),
}

/// Atom names; empty for `I`.
pub(crate) type RawType = Vec<Spanned<String>>;

#[derive(Debug, Clone)]
pub(crate) enum RawExpr {
    Ref(Spanned<String>),
    Id(RawType),
    Discard(RawType),
    Swap(RawType, RawType),
    Seq(Box<RawExpr>, Box<RawExpr>),
    Par(Box<RawExpr>, Box<RawExpr>),
}

#[derive(Debug, Clone)]
pub(crate) enum Decl {
    Backend(Spanned<String>),
    System { name: Spanned<String>, dim: Spanned<String> },
    State { name: Spanned<String>, ty: RawType, payload: Spanned<RawPayload> },
    Gate { name: Spanned<String>, dom: RawType, cod: RawType, payload: Spanned<RawPayload> },
    Family { name: Spanned<String>, members: Vec<Spanned<String>> },
    Gates { name: Spanned<String>, dom: RawType, cod: RawType, members: Vec<Spanned<String>> },
    Circuit { name: Spanned<String>, expr: RawExpr },
    Certificate { kind: Spanned<String>, gate: Spanned<String>, family: Spanned<String>, gates: Option<Spanned<String>> },
}

pub(crate) const KEYWORDS: &[&str] =
    &["backend", "system", "state", "gate", "family", "gates", "circuit", "certificate", "dim", "ket", "id", "discard", "swap", "for", "I"];

const DECL_START: &[&str] = &["backend", "system", "state", "gate", "family", "gates", "circuit", "certificate"];

pub(crate) struct Parser {
    toks: Vec<(Tok, Loc)>,
    pos: usize,
    depth: usize,
}

impl Parser {
    pub(crate) fn new(toks: Vec<(Tok, Loc)>) -> Self {
        Self { toks, pos: 0, depth: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Loc) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().describe();
        let mut e = ParseError::new(ErrorKind::Syntax, self.loc(), format!("unexpected {found}"));
        e.expected = expected.iter().map(|s| s.to_string()).collect();
        e
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<Loc, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&[name]))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Loc, ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => Ok(self.bump().1),
            _ => Err(self.unexpected(&[&format!("`{kw}`")])),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    /// A non-keyword identifier.
    fn name(&mut self) -> Result<Spanned<String>, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let (tok, loc) = self.bump();
                let Tok::Ident(value) = tok else { unreachable!() };
                Ok(Spanned { value, loc })
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    pub(crate) fn parse_file(&mut self) -> Result<Vec<Decl>, ParseError> {
        let mut decls = Vec::new();
        while *self.peek() != Tok::Eof {
            decls.push(self.decl()?);
        }
        Ok(decls)
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        let kw = match self.peek() {
            Tok::Ident(s) if DECL_START.contains(&s.as_str()) => s.clone(),
            _ => {
                let names: Vec<String> = DECL_START.iter().map(|k| format!("`{k}`")).collect();
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                return Err(self.unexpected(&refs));
            }
        };
        self.bump();
        Ok(match kw.as_str() {
            "backend" => Decl::Backend(self.name()?),
            "system" => {
                let name = self.name()?;
                self.keyword("dim")?;
                let loc = self.loc();
                let dim = match self.peek().clone() {
                    Tok::Number { text, imag: false } if text.chars().all(|c| c.is_ascii_digit()) => {
                        self.bump();
                        text
                    }
                    _ => return Err(self.unexpected(&["positive integer"])),
                };
                Decl::System { name, dim: Spanned { value: dim, loc } }
            }
            "state" => {
                let name = self.name()?;
                self.expect(Tok::Colon, "`:`")?;
                let ty = self.ty()?;
                self.expect(Tok::Equals, "`=`")?;
                let payload = self.payload()?;
                Decl::State { name, ty, payload }
            }
            "gate" => {
                let name = self.name()?;
                self.expect(Tok::Colon, "`:`")?;
                let dom = self.ty()?;
                self.expect(Tok::Arrow, "`->`")?;
                let cod = self.ty()?;
                self.expect(Tok::Equals, "`=`")?;
                let payload = self.payload()?;
                Decl::Gate { name, dom, cod, payload }
            }
            "family" => {
                let name = self.name()?;
                self.expect(Tok::Equals, "`=`")?;
                Decl::Family { name, members: self.name_set()? }
            }
            "gates" => {
                let name = self.name()?;
                self.expect(Tok::Colon, "`:`")?;
                let dom = self.ty()?;
                self.expect(Tok::Arrow, "`->`")?;
                let cod = self.ty()?;
                self.expect(Tok::Equals, "`=`")?;
                Decl::Gates { name, dom, cod, members: self.name_set()? }
            }
            "circuit" => {
                let name = self.name()?;
                self.expect(Tok::Equals, "`=`")?;
                Decl::Circuit { name, expr: self.seq()? }
            }
            "certificate" => {
                let kind = self.name()?;
                let gate = self.name()?;
                self.keyword("for")?;
                let family = self.name()?;
                let gates = match self.peek() {
                    Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Some(self.name()?),
                    _ => None,
                };
                Decl::Certificate { kind, gate, family, gates }
            }
            _ => unreachable!("checked against DECL_START"),
        })
    }

    fn name_set(&mut self) -> Result<Vec<Spanned<String>>, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = vec![self.name()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.name()?);
        }
        self.expect(Tok::RBrace, "`}` or `,`")?;
        Ok(out)
    }

    /// `I` or `A * B * ...`.
    fn ty(&mut self) -> Result<RawType, ParseError> {
        if self.is_keyword("I") {
            self.bump();
            return Ok(Vec::new());
        }
        let mut out = vec![self.name().map_err(|_| self.unexpected(&["system name", "`I`"]))?];
        while *self.peek() == Tok::Star {
            self.bump();
            if self.is_keyword("I") {
                self.bump();
            } else {
                out.push(self.name()?);
            }
        }
        Ok(out)
    }

    fn payload(&mut self) -> Result<Spanned<RawPayload>, ParseError> {
        let loc = self.loc();
        if self.is_keyword("ket") {
            self.bump();
            let v = self.vector()?;
            return Ok(Spanned { value: RawPayload::Ket(v), loc });
        }
        self.expect(Tok::LBracket, "`[` or `ket`")?;
        if *self.peek() == Tok::LBracket {
            self.bump();
            let mut rows = vec![self.entries_until_close()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                self.expect(Tok::LBracket, "`[`")?;
                rows.push(self.entries_until_close()?);
            }
            self.expect(Tok::RBracket, "`]` or `,`")?;
            return Ok(Spanned { value: RawPayload::Matrix(rows), loc });
        }
        let v = self.entries_until_close()?;
        Ok(Spanned { value: RawPayload::Vector(v), loc })
    }

    fn vector(&mut self) -> Result<Vec<Entry>, ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        self.entries_until_close()
    }

    fn entries_until_close(&mut self) -> Result<Vec<Entry>, ParseError> {
        let mut out = vec![self.entry()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.entry()?);
        }
        self.expect(Tok::RBracket, "`]` or `,`")?;
        Ok(out)
    }

    fn signed_number(&mut self) -> Result<(bool, String, bool), ParseError> {
        let neg = match self.peek() {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        match self.peek().clone() {
            Tok::Number { text, imag } => {
                self.bump();
                Ok((neg, text, imag))
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    /// `re`, `im i`, or `re ± im i`.
    fn entry(&mut self) -> Result<Entry, ParseError> {
        let loc = self.loc();
        let (neg, text, imag) = self.signed_number()?;
        if imag {
            return Ok(Entry { re: None, im: Some((neg, text)), loc });
        }
        if matches!(self.peek(), Tok::Plus | Tok::Minus) {
            let (ineg, itext, iimag) = self.signed_number()?;
            if !iimag {
                return Err(ParseError::new(ErrorKind::Syntax, loc, "second term of a complex entry must be imaginary"));
            }
            return Ok(Entry { re: Some((neg, text)), im: Some((ineg, itext)), loc });
        }
        Ok(Entry { re: Some((neg, text)), im: None, loc })
    }

    fn seq(&mut self) -> Result<RawExpr, ParseError> {
        let mut lhs = self.par()?;
        while *self.peek() == Tok::Semi {
            self.bump();
            let rhs = self.par()?;
            lhs = RawExpr::Seq(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn par(&mut self) -> Result<RawExpr, ParseError> {
        let mut lhs = self.atom()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.atom()?;
            lhs = RawExpr::Par(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<RawExpr, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                if self.depth >= MAX_DEPTH {
                    return Err(ParseError::new(ErrorKind::Syntax, self.loc(), "circuit nested too deeply"));
                }
                self.bump();
                self.depth += 1;
                let inner = self.seq()?;
                self.depth -= 1;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(s) if s == "id" || s == "discard" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let t = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(if s == "id" { RawExpr::Id(t) } else { RawExpr::Discard(t) })
            }
            Tok::Ident(s) if s == "swap" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let a = self.ty()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(RawExpr::Swap(a, b))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Ok(RawExpr::Ref(self.name()?)),
            _ => Err(self.unexpected(&["generator name", "`id`", "`discard`", "`swap`", "`(`"])),
        }
    }
}
