use std::sync::Arc;

use crate::diag::{Diagnostic, SourceSpan};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    /// Length in characters.
    pub len: usize,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn span(&self, file: &Arc<str>) -> SourceSpan {
        SourceSpan::new(file.clone(), self.line, self.column, self.len.max(1))
    }

    /// Zero-width position just after this token.
    pub fn after(&self, file: &Arc<str>) -> SourceSpan {
        SourceSpan::new(file.clone(), self.line, self.column + self.len, 1)
    }

    pub fn describe(&self) -> String {
        match &self.tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_) => "number".to_string(),
            Tok::Str(_) => "string".to_string(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

const PUNCT: &[&str] = &[
    "<=", ">=", "==", "!=", "=", "{", "}", "(", ")", "[", "]", ",", ":", "+", "-", "*", "/", "<",
    ">",
];

/// Splits source text into tokens. Unrecognized characters are reported and skipped.
pub(crate) fn tokenize(src: &str, file: &Arc<str>) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            b' ' | b'\t' | b'\r' => {
                i += 1;
                col += 1;
                continue;
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            _ => {}
        }

        let start = i;
        let start_col = col;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c.is_ascii_digit()
            || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            match src[start..i].parse::<f64>() {
                Ok(v) if v.is_finite() => Tok::Number(v),
                _ => {
                    diags.push(
                        Diagnostic::error(format!("number `{}` is out of range", &src[start..i]))
                            .with_span(Some(SourceSpan::new(
                                file.clone(),
                                line,
                                start_col,
                                i - start,
                            ))),
                    );
                    Tok::Number(0.0)
                }
            }
        } else if c == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' && bytes[i] != b'\n' {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'"' {
                i += 1;
                Tok::Str(src[start + 1..i - 1].to_string())
            } else {
                diags.push(
                    Diagnostic::error("unterminated string").with_span(Some(SourceSpan::new(
                        file.clone(),
                        line,
                        start_col,
                        1,
                    ))),
                );
                Tok::Str(src[start + 1..i].to_string())
            }
        } else if let Some(p) = PUNCT.iter().find(|p| src[i..].starts_with(**p)) {
            i += p.len();
            Tok::Punct(p)
        } else {
            let ch = src[i..].chars().next().expect("in bounds");
            diags.push(
                Diagnostic::error(format!("unexpected character `{}`", ch.escape_default()))
                    .with_span(Some(SourceSpan::new(file.clone(), line, col, 1))),
            );
            i += ch.len_utf8();
            col += 1;
            continue;
        };
        let len = src[start..i].chars().count();
        col += len;
        tokens.push(Token {
            tok,
            line,
            column: start_col,
            len,
            start,
            end: i,
        });
    }
    tokens.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
        len: 0,
        start: src.len(),
        end: src.len(),
    });
    (tokens, diags)
}
