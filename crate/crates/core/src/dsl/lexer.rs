//! Tokenizer shared by the diagram DSL and the CPT spec format.

use super::{ErrorCode, ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Ident(String),
    Str(String),
    Number(String),
    LBrace,
    RBrace,
    Equals,
    Arrow,
    Comma,
    Colon,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Str(_) => "string".to_string(),
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::Equals => "`=`".to_string(),
            TokenKind::Arrow => "`->`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::Colon => "`:`".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

/// Splits `text` into tokens, collecting every lexical error.
pub(crate) fn tokenize(text: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();

    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.column);
        let span = |len: usize| SourceSpan::new(line, column, len);

        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            let len = s.chars().count();
            tokens.push(Token {
                kind: TokenKind::Ident(s),
                span: span(len),
            });
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let s = lex_number(&mut cur);
            let len = s.chars().count();
            tokens.push(Token {
                kind: TokenKind::Number(s),
                span: span(len),
            });
            continue;
        }
        if c == '"' {
            cur.bump();
            let mut value = String::new();
            let mut len = 1;
            let mut closed = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                len += 1;
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => {
                        let (eline, ecol) = (cur.line, cur.column - 1);
                        match cur.peek() {
                            Some(e @ ('"' | '\\' | 'n' | 't' | 'r')) => {
                                cur.bump();
                                len += 1;
                                value.push(match e {
                                    'n' => '\n',
                                    't' => '\t',
                                    'r' => '\r',
                                    other => other,
                                });
                            }
                            Some('\n') | None => {}
                            Some(other) => {
                                cur.bump();
                                len += 1;
                                errors.push(ParseError::new(
                                    SourceSpan::new(eline, ecol, 2),
                                    ErrorCode::Lex,
                                    format!("unknown escape sequence `\\{other}`"),
                                ));
                            }
                        }
                    }
                    other => value.push(other),
                }
            }
            if closed {
                tokens.push(Token {
                    kind: TokenKind::Str(value),
                    span: span(len),
                });
            } else {
                errors.push(ParseError::new(span(len), ErrorCode::Lex, "unterminated string"));
            }
            continue;
        }
        let kind = match c {
            '{' => Some(TokenKind::LBrace),
            '}' => Some(TokenKind::RBrace),
            '=' => Some(TokenKind::Equals),
            ',' => Some(TokenKind::Comma),
            ':' => Some(TokenKind::Colon),
            _ => None,
        };
        if let Some(kind) = kind {
            cur.bump();
            tokens.push(Token { kind, span: span(1) });
            continue;
        }
        if c == '-' {
            cur.bump();
            if cur.peek() == Some('>') {
                cur.bump();
                tokens.push(Token {
                    kind: TokenKind::Arrow,
                    span: span(2),
                });
            } else {
                errors.push(ParseError::new(span(1), ErrorCode::Lex, "illegal character `-` (did you mean `->`?)"));
            }
            continue;
        }
        cur.bump();
        errors.push(ParseError::new(
            span(1),
            ErrorCode::Lex,
            format!("illegal character {c:?}"),
        ));
    }
    (tokens, errors)
}

fn lex_number(cur: &mut Cursor<'_>) -> String {
    let mut s = String::new();
    let digits = |cur: &mut Cursor<'_>, s: &mut String| {
        while let Some(c) = cur.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                cur.bump();
            } else {
                break;
            }
        }
    };
    digits(cur, &mut s);
    if cur.peek() == Some('.') {
        s.push('.');
        cur.bump();
        digits(cur, &mut s);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        s.push('e');
        cur.bump();
        if let Some(sign @ ('+' | '-')) = cur.peek() {
            s.push(sign);
            cur.bump();
        }
        digits(cur, &mut s);
    }
    s
}

/// Position just past the last character, used for end-of-input errors.
pub(crate) fn end_span(text: &str) -> SourceSpan {
    let mut line = 1;
    let mut column = 1;
    for c in text.chars() {
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    SourceSpan::new(line, column, 1)
}
