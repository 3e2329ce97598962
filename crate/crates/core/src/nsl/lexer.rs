//! Line tokenizer. `#` starts a comment, tokens are whitespace-separated,
//! and double-quoted strings may contain spaces (`\"` and `\\` escapes).

use super::ast::{Span, Value};
use super::NslError;
use crate::frame::MacAddress;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Word(String),
    Value(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn classify(text: &str, span: Span) -> Result<TokenKind, NslError> {
    if text.len() == 17 && text.matches(':').count() == 5 {
        return text
            .parse::<MacAddress>()
            .map(|m| TokenKind::Value(Value::Mac(m)))
            .map_err(|_| NslError::new(span, format!("malformed MAC address `{text}`")));
    }
    if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        let digits: String = hex.chars().filter(|&c| c != '_').collect();
        return i64::from_str_radix(&digits, 16)
            .map(|v| TokenKind::Value(Value::hex(v)))
            .map_err(|_| NslError::new(span, format!("malformed hex value `{text}`")));
    }
    let unsigned = text.strip_prefix(['-', '+']).unwrap_or(text);
    if unsigned.starts_with(|c: char| c.is_ascii_digit()) {
        let digits: String = text.chars().filter(|&c| c != '_').collect();
        if digits.contains('.') {
            return match digits.parse::<f64>() {
                Ok(v) if v.is_finite() && !digits.contains(['e', 'E']) => {
                    Ok(TokenKind::Value(Value::Decimal(v)))
                }
                _ => Err(NslError::new(span, format!("malformed number `{text}`"))),
            };
        }
        return digits
            .parse::<i64>()
            .map(|v| TokenKind::Value(Value::int(v)))
            .map_err(|_| NslError::new(span, format!("malformed number `{text}`")));
    }
    if is_ident(text) {
        return Ok(TokenKind::Word(text.to_string()));
    }
    Err(NslError::new(span, format!("malformed value `{text}`")))
}

/// Splits off a quoted string starting at byte `start` (the opening quote).
/// Returns the unescaped text and the byte index just past the closing quote.
pub(crate) fn lex_string(
    line: &str,
    start: usize,
    span: Span,
) -> Result<(String, usize), NslError> {
    let mut out = String::new();
    let mut chars = line[start + 1..].char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Ok((out, start + 1 + i + 1)),
            '\\' => match chars.next() {
                Some((_, '"')) => out.push('"'),
                Some((_, '\\')) => out.push('\\'),
                Some((_, other)) => {
                    out.push('\\');
                    out.push(other);
                }
                None => break,
            },
            c => out.push(c),
        }
    }
    Err(NslError::new(span, "unterminated string"))
}

fn column(line: &str, byte: usize) -> u32 {
    line[..byte].chars().count() as u32 + 1
}

pub fn lex_line(line: &str, line_no: u32) -> Result<Vec<Token>, NslError> {
    let mut tokens = Vec::new();
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let span = Span {
            line: line_no,
            col: column(line, i),
        };
        if c == b'#' {
            break;
        }
        if c == b'"' {
            let (text, end) = lex_string(line, i, span)?;
            tokens.push(Token {
                kind: TokenKind::Value(Value::Str(text)),
                span,
            });
            i = end;
            continue;
        }
        let end = line[i..]
            .find(|ch: char| ch.is_whitespace() || ch == '#' || ch == '"')
            .map_or(line.len(), |off| i + off);
        tokens.push(Token {
            kind: classify(&line[i..end], span)?,
            span,
        });
        i = end;
    }
    Ok(tokens)
}
