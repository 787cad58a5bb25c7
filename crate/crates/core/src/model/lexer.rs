use super::{ErrorKind, Loc, ParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Real literal text (`3`, `7/3`, `0.5`, `1.5e-3`), imaginary when
    /// suffixed by `i`.
    Number { text: String, imag: bool },
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Equals,
    Semi,
    Star,
    Plus,
    Minus,
    Arrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number { text, imag } => format!("number `{text}{}`", if *imag { "i" } else { "" }),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Star => "`*`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Loc)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let ch = chars[i];
        let loc = Loc { line, col };
        if ch == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if ch == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if ch.is_ascii_alphabetic() || ch == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            lex_number(&chars, &mut i, loc)?
        } else {
            i += 1;
            match ch {
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '=' => Tok::Equals,
                ';' => Tok::Semi,
                '*' => Tok::Star,
                '+' => Tok::Plus,
                '-' if chars.get(i) == Some(&'>') => {
                    i += 1;
                    Tok::Arrow
                }
                '-' => Tok::Minus,
                other => {
                    return Err(ParseError::new(ErrorKind::Syntax, loc, format!("unexpected character {other:?}")));
                }
            }
        };
        col += i - start;
        out.push((tok, loc));
    }
    out.push((Tok::Eof, Loc { line, col }));
    Ok(out)
}

fn lex_number(chars: &[char], i: &mut usize, loc: Loc) -> Result<Tok, ParseError> {
    let start = *i;
    let digits = |i: &mut usize| {
        let s = *i;
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
        *i > s
    };
    digits(i);
    if chars.get(*i) == Some(&'.') {
        *i += 1;
        digits(i);
    }
    if matches!(chars.get(*i), Some('e' | 'E')) {
        let save = *i;
        *i += 1;
        if matches!(chars.get(*i), Some('+' | '-')) {
            *i += 1;
        }
        if !digits(i) {
            *i = save;
        }
    }
    if chars.get(*i) == Some(&'/') && chars.get(*i + 1).is_some_and(char::is_ascii_digit) {
        *i += 1;
        digits(i);
    }
    let text: String = chars[start..*i].iter().collect();
    let imag = chars.get(*i) == Some(&'i') && !chars.get(*i + 1).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_');
    if imag {
        *i += 1;
    }
    if chars.get(*i).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '.') {
        return Err(ParseError::new(ErrorKind::Syntax, loc, format!("malformed number starting `{text}`")));
    }
    Ok(Tok::Number { text, imag })
}
