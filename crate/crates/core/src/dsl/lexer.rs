use crate::diag::{Diagnostic, Location, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Str(String),
    Punct(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    /// 1-based column of the first character.
    pub col: u32,
    /// 1-based column of the last character.
    pub end_col: u32,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.tok, Tok::Punct(q) if q == p)
    }

    pub fn is_word(&self, w: &str) -> bool {
        matches!(&self.tok, Tok::Ident(i) if i == w)
    }

    pub fn describe(&self) -> String {
        match &self.tok {
            Tok::Ident(i) => format!("`{i}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Str(_) => "a string".to_string(),
            Tok::Punct(p) => format!("`{p}`"),
        }
    }
}

// longest first
const PUNCTS: [&str; 19] = [
    "->", ":=", "==", "!=", "<=", ">=", "{", "}", "(", ")", ",", ";", ":", "=", "<", ">", "+", "-",
    "*",
];

/// A lexed source line.
pub struct Line {
    pub text: String,
    pub tokens: Vec<Token>,
}

/// Splits `text` into lines of tokens. Lines that fail to lex are reported
/// and dropped so later lines still get checked.
pub fn lex(text: &str, file: &str) -> (Vec<Line>, Vec<Diagnostic>) {
    let mut lines = Vec::new();
    let mut diags = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let number = idx as u32 + 1;
        match lex_line(raw, number) {
            Ok(tokens) if tokens.is_empty() => {}
            Ok(tokens) => lines.push(Line {
                text: raw.to_string(),
                tokens,
            }),
            Err((col, msg)) => diags.push(Diagnostic::error(
                "lex-error",
                msg,
                Location::Span(SourceSpan::new(file, number, col, number, col)),
            )),
        }
    }
    (lines, diags)
}

pub fn lex_line(raw: &str, line: u32) -> Result<Vec<Token>, (u32, String)> {
    let chars: Vec<char> = raw.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i as u32 + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line,
                col,
                end_col: i as u32,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                return Err((col, format!("malformed number `{digits}{}`", chars[i])));
            }
            let n = digits
                .parse::<u64>()
                .map_err(|_| (col, format!("number `{digits}` is too large")))?;
            tokens.push(Token {
                tok: Tok::Int(n),
                line,
                col,
                end_col: i as u32,
            });
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err((col, "unterminated string".to_string())),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = match chars.get(i + 1) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some(other) => {
                                return Err((i as u32 + 1, format!("unknown escape `\\{other}`")))
                            }
                            None => return Err((col, "unterminated string".to_string())),
                        };
                        s.push(esc);
                        i += 2;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        i += 1;
                    }
                }
            }
            tokens.push(Token {
                tok: Tok::Str(s),
                line,
                col,
                end_col: i as u32,
            });
            continue;
        }
        if c == '@' {
            tokens.push(Token {
                tok: Tok::Punct("@"),
                line,
                col,
                end_col: col,
            });
            i += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                let len = p.len();
                tokens.push(Token {
                    tok: Tok::Punct(p),
                    line,
                    col,
                    end_col: col + len as u32 - 1,
                });
                i += len;
            }
            None => return Err((col, format!("unexpected character `{c}`"))),
        }
    }
    Ok(tokens)
}

/// Quotes a string for output so that the lexer reads it back unchanged.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
