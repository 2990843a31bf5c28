//! Tokens. Newlines are significant except inside brackets; `#` starts a comment.

use crate::diagnostics::{Diagnostic, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u32),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    Comma,
    Colon,
    /// `.` ending a binder list.
    Period,
    /// `.` between two names with no spaces, as in `bb.os`.
    Dot,
    DotDot,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Eq,
    /// `<-`, the direction of a connection.
    Arrow,
    WellFounded,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Period => "`.`".into(),
            Tok::Dot => "`.`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Arrow => "`<-`".into(),
            Tok::WellFounded => "`well-founded`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c.is_ascii_digit()
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<Token> = Vec::new();
    let (mut line, mut col) = (1u32, 1u32);
    let mut depth = 0i32;
    let mut i = 0;
    let push = |out: &mut Vec<Token>, tok: Tok, span: Span| out.push(Token { tok, span });
    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        let next = chars.get(i + 1).copied();
        let mut width = 1;
        match c {
            '\n' => {
                if depth == 0 && !matches!(out.last(), Some(Token { tok: Tok::Newline, .. }) | None) {
                    push(&mut out, Tok::Newline, span);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
                continue;
            }
            '(' | '{' | '[' => {
                depth += 1;
                let t = match c {
                    '(' => Tok::LParen,
                    '{' => Tok::LBrace,
                    _ => Tok::LBrack,
                };
                push(&mut out, t, span);
            }
            ')' | '}' | ']' => {
                depth -= 1;
                let t = match c {
                    ')' => Tok::RParen,
                    '}' => Tok::RBrace,
                    _ => Tok::RBrack,
                };
                push(&mut out, t, span);
            }
            ',' => push(&mut out, Tok::Comma, span),
            ':' => push(&mut out, Tok::Colon, span),
            '.' => {
                if next == Some('.') {
                    width = 2;
                    push(&mut out, Tok::DotDot, span);
                } else {
                    let prev_attached = i > 0 && (ident_char(chars[i - 1]) || chars[i - 1] == ')');
                    let next_attached = next.is_some_and(|n| n.is_alphabetic() || n == '_');
                    let t = if prev_attached && next_attached { Tok::Dot } else { Tok::Period };
                    push(&mut out, t, span);
                }
            }
            '!' | '¬' => push(&mut out, Tok::Not, span),
            '&' | '∧' => {
                if next == Some('&') {
                    width = 2;
                }
                push(&mut out, Tok::And, span)
            }
            '|' | '∨' => {
                if next == Some('|') {
                    width = 2;
                }
                push(&mut out, Tok::Or, span)
            }
            '⇒' | '→' => push(&mut out, Tok::Implies, span),
            '⇔' | '↔' => push(&mut out, Tok::Iff, span),
            '≐' => push(&mut out, Tok::Eq, span),
            '←' | '⟵' | '⟶' => push(&mut out, Tok::Arrow, span),
            '∈' => push(&mut out, Tok::Ident("in".into()), span),
            '∀' => push(&mut out, Tok::Ident("forall".into()), span),
            '∃' => push(&mut out, Tok::Ident("exists".into()), span),
            '□' => push(&mut out, Tok::Ident("G".into()), span),
            '◇' => push(&mut out, Tok::Ident("F".into()), span),
            '○' => push(&mut out, Tok::Ident("X".into()), span),
            '=' => {
                if next == Some('=') {
                    width = 2;
                }
                push(&mut out, Tok::Eq, span)
            }
            '-' if next == Some('>') => {
                width = 2;
                push(&mut out, Tok::Implies, span)
            }
            '<' if next == Some('-') => {
                if chars.get(i + 2) == Some(&'>') {
                    width = 3;
                    push(&mut out, Tok::Iff, span)
                } else {
                    width = 2;
                    push(&mut out, Tok::Arrow, span)
                }
            }
            c if ident_start(c) => {
                let start = i;
                while i < chars.len() && ident_char(chars[i]) {
                    i += 1;
                }
                let mut word: String = chars[start..i].iter().collect();
                if word == "well" && chars[i..].starts_with(&['-', 'f', 'o', 'u', 'n', 'd', 'e', 'd']) {
                    let end = i + 8;
                    if !chars.get(end).copied().is_some_and(ident_char) {
                        i = end;
                        word = "well-founded".into();
                    }
                }
                col += (i - start) as u32;
                let tok = if word == "well-founded" {
                    Tok::WellFounded
                } else if word.chars().all(|c| c.is_ascii_digit()) {
                    match word.parse() {
                        Ok(n) => Tok::Num(n),
                        Err(_) => return Err(Diagnostic::error("lex", span, format!("number {word} is too large"))),
                    }
                } else {
                    Tok::Ident(word)
                };
                push(&mut out, tok, span);
                continue;
            }
            other => {
                return Err(Diagnostic::error("lex", span, format!("unexpected character `{other}`")));
            }
        }
        i += width;
        col += width as u32;
    }
    if !matches!(out.last(), Some(Token { tok: Tok::Newline, .. }) | None) {
        out.push(Token { tok: Tok::Newline, span: Span::new(line, col) });
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(line, col) });
    Ok(out)
}
