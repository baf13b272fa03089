//! Tokenizer for the Java subset the extractor understands.
//!
//! Operators are emitted one character at a time (`>>` becomes two `>`
//! tokens), which keeps generic argument lists balanced without any
//! expression grammar.

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    /// String, char, text block or numeric literal. The content is not kept.
    Literal,
    /// Single punctuation or operator character, plus `...` and `::`.
    Punct(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
}

impl Token {
    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.kind, TokenKind::Punct(q) if q == p)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident(i) if i == s)
    }
}

const PUNCT: &[&str] = &[
    "{", "}", "(", ")", "[", "]", ";", ",", ".", "@", "=", ">", "<", "!", "~", "?", ":", "+",
    "-", "*", "/", "&", "|", "^", "%",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let err = |line: usize, msg: &str| SyntaxError {
        line,
        message: msg.to_string(),
    };

    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                let start = line;
                i += 2;
                loop {
                    match chars.get(i) {
                        None => return Err(err(start, "unterminated block comment")),
                        Some('*') if chars.get(i + 1) == Some(&'/') => {
                            i += 2;
                            break;
                        }
                        Some('\n') => {
                            line += 1;
                            i += 1;
                        }
                        Some(_) => i += 1,
                    }
                }
            }
            '"' if chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') => {
                let start = line;
                i += 3;
                loop {
                    match chars.get(i) {
                        None => return Err(err(start, "unterminated text block")),
                        Some('\\') => i += 2,
                        Some('"') if chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') => {
                            i += 3;
                            break;
                        }
                        Some('\n') => {
                            line += 1;
                            i += 1;
                        }
                        Some(_) => i += 1,
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Literal,
                    line: start,
                });
            }
            '"' | '\'' => {
                let quote = c;
                i += 1;
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(err(line, "unterminated literal")),
                        Some('\\') => i += 2,
                        Some(&q) if q == quote => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Literal,
                    line,
                });
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let exponent_sign = (d == '+' || d == '-')
                        && matches!(chars[i - 1], 'e' | 'E' | 'p' | 'P')
                        && !is_hex_literal(&chars, i);
                    if d.is_ascii_alphanumeric() || d == '_' || d == '.' || exponent_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Literal,
                    line,
                });
            }
            c if c.is_alphabetic() || c == '_' || c == '$' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(chars[start..i].iter().collect()),
                    line,
                });
            }
            '.' if chars.get(i + 1) == Some(&'.') && chars.get(i + 2) == Some(&'.') => {
                tokens.push(Token {
                    kind: TokenKind::Punct("..."),
                    line,
                });
                i += 3;
            }
            ':' if chars.get(i + 1) == Some(&':') => {
                tokens.push(Token {
                    kind: TokenKind::Punct("::"),
                    line,
                });
                i += 2;
            }
            _ => {
                let s = c.to_string();
                match PUNCT.iter().find(|p| **p == s) {
                    Some(p) => tokens.push(Token {
                        kind: TokenKind::Punct(p),
                        line,
                    }),
                    None => return Err(err(line, &format!("unexpected character `{c}`"))),
                }
                i += 1;
            }
        }
    }
    Ok(tokens)
}

/// True when position `i` sits inside a hex literal, where `e` is a digit
/// rather than an exponent marker.
fn is_hex_literal(chars: &[char], i: usize) -> bool {
    let mut j = i;
    while j > 0 && (chars[j - 1].is_ascii_alphanumeric() || chars[j - 1] == '_' || chars[j - 1] == '.') {
        j -= 1;
    }
    chars.get(j) == Some(&'0')
        && matches!(chars.get(j + 1), Some('x') | Some('X'))
        && !chars[j..i].iter().any(|c| matches!(c, 'p' | 'P'))
}
