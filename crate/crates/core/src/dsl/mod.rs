//! Text format for causal diagrams (`.cdsl`) and DOT export.
//!
//! ```text
//! diagram "skin lesion" {
//!   node disease role=target
//!   node image role=image
//!   node selection kind=selection
//!   edge disease -> image
//! }
//! ```
//!
//! Attributes on a node must appear in the order `kind`, `role`, `label`.
//! Unknown attribute keys are rejected.

mod dot;
pub(crate) mod lexer;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::diagram::{
    build_diagram, CausalDiagram, Edge, IssueCode, Node, NodeKind, NodeRole, ValidationMode,
};
use lexer::{Token, TokenKind};

pub use dot::export_dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column: usize, length: usize) -> Self {
        SourceSpan {
            line,
            column,
            length: length.max(1),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ErrorCode {
    Lex,
    Syntax,
    Semantic,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorCode::Lex => "LEX",
            ErrorCode::Syntax => "SYNTAX",
            ErrorCode::Semantic => "SEMANTIC",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub span: SourceSpan,
    pub code: ErrorCode,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(span: SourceSpan, code: ErrorCode, message: impl Into<String>) -> Self {
        ParseError {
            span,
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} error: {}", self.span, self.code, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Cursor over a token stream with helpers for "expected X" diagnostics.
pub(crate) struct TokenStream {
    tokens: Vec<Token>,
    pos: usize,
    eof: SourceSpan,
}

impl TokenStream {
    pub(crate) fn new(tokens: Vec<Token>, text: &str) -> Self {
        TokenStream {
            tokens,
            pos: 0,
            eof: lexer::end_span(text),
        }
    }

    pub(crate) fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    pub(crate) fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(s),
                ..
            }) => Some(s),
            _ => None,
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub(crate) fn current_span(&self) -> SourceSpan {
        self.peek().map(|t| t.span).unwrap_or(self.eof)
    }

    pub(crate) fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, expected: &str) -> ParseError {
        let found = match self.peek() {
            Some(t) => t.kind.describe(),
            None => "end of input".to_string(),
        };
        ParseError::new(
            self.current_span(),
            ErrorCode::Syntax,
            format!("expected {expected}, found {found}"),
        )
    }

    pub(crate) fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<SourceSpan, ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                let span = t.span;
                self.pos += 1;
                Ok(span)
            }
            _ => Err(self.error(expected)),
        }
    }

    pub(crate) fn expect_keyword(&mut self, word: &str) -> Result<SourceSpan, ParseError> {
        if self.peek_ident() == Some(word) {
            Ok(self.advance().unwrap().span)
        } else {
            Err(self.error(&format!("keyword `{word}`")))
        }
    }

    pub(crate) fn expect_ident(&mut self, expected: &str) -> Result<(String, SourceSpan), ParseError> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(s),
                span,
            }) => {
                let out = (s.clone(), *span);
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.error(expected)),
        }
    }

    pub(crate) fn expect_string(&mut self, expected: &str) -> Result<(String, SourceSpan), ParseError> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Str(s),
                span,
            }) => {
                let out = (s.clone(), *span);
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.error(expected)),
        }
    }
}

const ATTRIBUTES: [&str; 3] = ["kind", "role", "label"];

struct ParsedDiagram {
    name: String,
    nodes: Vec<(Node, SourceSpan)>,
    edges: Vec<(Edge, SourceSpan)>,
}

fn parse_file(ts: &mut TokenStream) -> Result<ParsedDiagram, ParseError> {
    ts.expect_keyword("diagram")?;
    let (name, _) = ts.expect_string("diagram name (string)")?;
    ts.expect(TokenKind::LBrace, "`{`")?;
    let mut out = ParsedDiagram {
        name,
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    loop {
        match ts.peek_ident() {
            Some("node") => {
                let start = ts.advance().unwrap().span;
                let (id, id_span) = ts.expect_ident("node identifier")?;
                let node = parse_attrs(ts, Node::observed(id))?;
                let length = if id_span.line == start.line {
                    id_span.column + id_span.length - start.column
                } else {
                    start.length
                };
                let span = SourceSpan::new(start.line, start.column, length);
                out.nodes.push((node, span));
            }
            Some("edge") => {
                let start = ts.advance().unwrap().span;
                let (from, _) = ts.expect_ident("edge source identifier")?;
                ts.expect(TokenKind::Arrow, "`->`")?;
                let (to, to_span) = ts.expect_ident("edge target identifier")?;
                let length = if to_span.line == start.line {
                    to_span.column + to_span.length - start.column
                } else {
                    start.length
                };
                out.edges.push((Edge::new(from, to), SourceSpan::new(start.line, start.column, length)));
            }
            _ => {
                if ts.peek().map(|t| &t.kind) == Some(&TokenKind::RBrace) {
                    ts.advance();
                    break;
                }
                return Err(ts.error("`node`, `edge` or `}`"));
            }
        }
    }
    if !ts.at_end() {
        return Err(ts.error("end of input"));
    }
    Ok(out)
}

fn parse_attrs(ts: &mut TokenStream, mut node: Node) -> Result<Node, ParseError> {
    let mut next_allowed = 0;
    while let Some(key) = ts.peek_ident() {
        if key == "node" || key == "edge" {
            break;
        }
        let Some(rank) = ATTRIBUTES.iter().position(|a| *a == key) else {
            return Err(ParseError::new(
                ts.current_span(),
                ErrorCode::Syntax,
                format!("unknown attribute `{key}`; expected `kind`, `role`, `label`, `node`, `edge` or `}}`"),
            ));
        };
        if rank < next_allowed {
            return Err(ParseError::new(
                ts.current_span(),
                ErrorCode::Syntax,
                format!("attribute `{key}` out of order; attributes must appear as kind, role, label"),
            ));
        }
        next_allowed = rank + 1;
        ts.advance();
        ts.expect(TokenKind::Equals, "`=`")?;
        match rank {
            0 => {
                let span = ts.current_span();
                let (word, _) = ts.expect_ident("kind (observed, unobserved, domain, selection)")?;
                node.kind = NodeKind::from_keyword(&word).ok_or_else(|| {
                    ParseError::new(
                        span,
                        ErrorCode::Syntax,
                        format!("expected kind (observed, unobserved, domain, selection), found `{word}`"),
                    )
                })?;
            }
            1 => {
                let span = ts.current_span();
                let (word, _) = ts.expect_ident("role (image, target, anatomy)")?;
                node.role = NodeRole::from_keyword(&word).ok_or_else(|| {
                    ParseError::new(
                        span,
                        ErrorCode::Syntax,
                        format!("expected role (image, target, anatomy), found `{word}`"),
                    )
                })?;
            }
            _ => {
                let (label, _) = ts.expect_string("label (string)")?;
                node.label = Some(label);
            }
        }
    }
    Ok(node)
}

/// Parses a `.cdsl` document and validates it strictly.
pub fn parse_dsl(text: &str) -> Result<CausalDiagram, Vec<ParseError>> {
    parse_dsl_with(text, ValidationMode::Strict)
}

/// Parses a `.cdsl` document with the given validation mode.
pub fn parse_dsl_with(text: &str, mode: ValidationMode) -> Result<CausalDiagram, Vec<ParseError>> {
    let (tokens, lex_errors) = lexer::tokenize(text);
    if !lex_errors.is_empty() {
        return Err(lex_errors);
    }
    let mut ts = TokenStream::new(tokens, text);
    let parsed = parse_file(&mut ts).map_err(|e| vec![e])?;

    let mut node_spans: HashMap<String, SourceSpan> = HashMap::new();
    for (n, span) in &parsed.nodes {
        // later duplicates win so DUP_ID points at the redeclaration
        node_spans.insert(n.id.clone(), *span);
    }
    let edge_spans: HashMap<String, SourceSpan> = parsed
        .edges
        .iter()
        .map(|(e, span)| (e.to_string(), *span))
        .collect();
    let file_span = SourceSpan::new(1, 1, 1);

    let nodes = parsed.nodes.into_iter().map(|(n, _)| n).collect();
    let edges = parsed.edges.into_iter().map(|(e, _)| e).collect();
    build_diagram(parsed.name, nodes, edges, mode).map_err(|report| {
        report
            .errors
            .into_iter()
            .map(|issue| {
                let span = match issue.code {
                    IssueCode::Cycle => {
                        // element is `a -> b -> ... -> a`; point at its first edge
                        let mut it = issue.element.split(" -> ");
                        match (it.next(), it.next()) {
                            (Some(a), Some(b)) => edge_spans.get(&format!("{a} -> {b}")).copied(),
                            _ => None,
                        }
                    }
                    IssueCode::DupRole => issue
                        .element
                        .rsplit(", ")
                        .next()
                        .and_then(|id| node_spans.get(id).copied()),
                    _ => edge_spans
                        .get(&issue.element)
                        .or_else(|| node_spans.get(&issue.element))
                        .copied(),
                }
                .unwrap_or(file_span);
                ParseError::new(span, ErrorCode::Semantic, format!("{}: {}", issue.code, issue.message))
            })
            .collect()
    })
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical text form: nodes by id, then edges by `(from, to)`.
pub fn serialize_dsl(diagram: &CausalDiagram) -> String {
    let mut out = format!("diagram {} {{\n", quote(diagram.name()));
    for node in diagram.nodes() {
        out.push_str("  node ");
        out.push_str(&node.id);
        if node.kind != NodeKind::Observed {
            out.push_str(" kind=");
            out.push_str(node.kind.keyword());
        }
        if let Some(role) = node.role.keyword() {
            out.push_str(" role=");
            out.push_str(role);
        }
        if let Some(label) = &node.label {
            out.push_str(" label=");
            out.push_str(&quote(label));
        }
        out.push('\n');
    }
    if !diagram.edges().is_empty() {
        out.push('\n');
    }
    for edge in diagram.edges() {
        out.push_str(&format!("  edge {} -> {}\n", edge.from, edge.to));
    }
    out.push_str("}\n");
    out
}
