//! Tokenizer shared by the SDL and query parsers.
//!
//! GraphQL-style lexical rules: `#` comments run to end of line, commas are
//! whitespace, names are `[_A-Za-z][_0-9A-Za-z]*`, strings are double-quoted
//! with the common escapes. Every token carries its source position.

use crate::error::{Error, Pos, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Name(String),
    Int(i64),
    /// Lexed so the parsers can reject float literals with a useful message.
    Float(f64),
    Str(String),
    Punct(char),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Name(n) => format!("name `{n}`"),
            TokenKind::Int(n) => format!("integer `{n}`"),
            TokenKind::Float(x) => format!("float `{x}`"),
            TokenKind::Str(s) => format!("string {s:?}"),
            TokenKind::Punct(c) => format!("`{c}`"),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

pub struct Lexer<'a> {
    src: &'a [u8],
    i: usize,
    line: usize,
    col: usize,
}

const PUNCTS: &[char] = &['{', '}', '(', ')', '[', ']', ':', '!', '=', '@', '$', '|', '&', '.'];

impl<'a> Lexer<'a> {
    pub fn new(source: &'a str) -> Self {
        Lexer {
            src: source.as_bytes(),
            i: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.i).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.i += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn skip_trivia(&mut self) {
        while let Some(b) = self.peek() {
            match b {
                b' ' | b'\t' | b'\r' | b'\n' | b',' => {
                    self.bump();
                }
                b'#' => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    pub fn next_token(&mut self) -> Result<Token> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(b) = self.peek() else {
            return Ok(Token {
                kind: TokenKind::Eof,
                pos,
            });
        };
        match b {
            b'"' => self.lex_string(pos),
            b'-' | b'0'..=b'9' => self.lex_number(pos),
            b'_' | b'a'..=b'z' | b'A'..=b'Z' => {
                let mut name = String::new();
                while let Some(b) = self.peek() {
                    if b == b'_' || b.is_ascii_alphanumeric() {
                        name.push(b as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Ok(Token {
                    kind: TokenKind::Name(name),
                    pos,
                })
            }
            _ => {
                let c = b as char;
                if PUNCTS.contains(&c) {
                    self.bump();
                    Ok(Token {
                        kind: TokenKind::Punct(c),
                        pos,
                    })
                } else {
                    Err(Error::Syntax {
                        pos,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        }
    }

    fn lex_string(&mut self, pos: Pos) -> Result<Token> {
        self.bump(); // opening quote
        let mut out = String::new();
        loop {
            let Some(b) = self.bump() else {
                return Err(Error::Syntax {
                    pos,
                    message: "unterminated string".to_string(),
                });
            };
            match b {
                b'"' => {
                    return Ok(Token {
                        kind: TokenKind::Str(out),
                        pos,
                    });
                }
                b'\n' => {
                    return Err(Error::Syntax {
                        pos,
                        message: "unterminated string".to_string(),
                    });
                }
                b'\\' => {
                    let Some(esc) = self.bump() else {
                        return Err(Error::Syntax {
                            pos,
                            message: "unterminated string".to_string(),
                        });
                    };
                    match esc {
                        b'"' => out.push('"'),
                        b'\\' => out.push('\\'),
                        b'/' => out.push('/'),
                        b'n' => out.push('\n'),
                        b't' => out.push('\t'),
                        b'r' => out.push('\r'),
                        other => {
                            return Err(Error::Syntax {
                                pos,
                                message: format!("unknown escape `\\{}`", other as char),
                            });
                        }
                    }
                }
                other => {
                    // Source is valid UTF-8; collect continuation bytes as-is.
                    if other < 0x80 {
                        out.push(other as char);
                    } else {
                        let start = self.i - 1;
                        let mut end = self.i;
                        while end < self.src.len() && (self.src[end] & 0xC0) == 0x80 {
                            self.bump();
                            end += 1;
                        }
                        out.push_str(std::str::from_utf8(&self.src[start..end]).map_err(
                            |_| Error::Syntax {
                                pos,
                                message: "invalid UTF-8 in string".to_string(),
                            },
                        )?);
                    }
                }
            }
        }
    }

    fn lex_number(&mut self, pos: Pos) -> Result<Token> {
        let mut text = String::new();
        if self.peek() == Some(b'-') {
            text.push('-');
            self.bump();
        }
        let mut is_float = false;
        while let Some(b) = self.peek() {
            match b {
                b'0'..=b'9' => {
                    text.push(b as char);
                    self.bump();
                }
                b'.' | b'e' | b'E' => {
                    is_float = true;
                    text.push(b as char);
                    self.bump();
                    if let Some(sign @ (b'+' | b'-')) = self.peek() {
                        if b != b'.' {
                            text.push(sign as char);
                            self.bump();
                        }
                    }
                }
                _ => break,
            }
        }
        if is_float {
            let value: f64 = text.parse().map_err(|_| Error::Syntax {
                pos,
                message: format!("malformed number `{text}`"),
            })?;
            Ok(Token {
                kind: TokenKind::Float(value),
                pos,
            })
        } else {
            let value: i64 = text.parse().map_err(|_| Error::Syntax {
                pos,
                message: format!("malformed number `{text}`"),
            })?;
            Ok(Token {
                kind: TokenKind::Int(value),
                pos,
            })
        }
    }

    /// Lexes the whole input, Eof token included.
    pub fn tokenize(source: &'a str) -> Result<Vec<Token>> {
        let mut lexer = Lexer::new(source);
        let mut tokens = Vec::new();
        loop {
            let tok = lexer.next_token()?;
            let done = tok.kind == TokenKind::Eof;
            tokens.push(tok);
            if done {
                return Ok(tokens);
            }
        }
    }
}
