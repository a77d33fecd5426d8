//! Parser for the `.cpt` model format.
//!
//! ```text
//! model for "diagram-name"
//! var <IDENT> states <name> ("," <name>)+
//! cpt <IDENT> (given <IDENT> ("," <IDENT>)*)?
//!   row (<parent-state> ("," <parent-state>)*)? : <p> (<p>)*
//! ```

use super::{BnError, BnErrorCode, Cpt, CptRow, VariableSpec};
use crate::dsl::lexer::{tokenize, Token, TokenKind};
use crate::dsl::{ParseError, SourceSpan, TokenStream};

pub(crate) struct Spanned<T> {
    pub value: T,
    pub span: SourceSpan,
}

pub(crate) struct ParsedSpec {
    pub name: Spanned<String>,
    pub variables: Vec<Spanned<VariableSpec>>,
    pub cpts: Vec<Spanned<Cpt>>,
    /// Span of each row, parallel to `cpts[i].value.rows`.
    pub row_spans: Vec<Vec<SourceSpan>>,
}

fn syntax(e: ParseError) -> BnError {
    let code = match e.code {
        crate::dsl::ErrorCode::Lex => BnErrorCode::Lex,
        _ => BnErrorCode::Syntax,
    };
    BnError::at(code, e.message, e.span)
}

/// State names may be identifiers or bare numbers such as `0` and `1`.
fn state_name(ts: &mut TokenStream) -> Result<String, ParseError> {
    match ts.peek() {
        Some(Token {
            kind: TokenKind::Ident(s) | TokenKind::Number(s),
            ..
        }) => {
            let s = s.clone();
            ts.advance();
            Ok(s)
        }
        _ => Err(ts.error("state name")),
    }
}

fn parse_var(ts: &mut TokenStream) -> Result<Spanned<VariableSpec>, ParseError> {
    let span = ts.expect_keyword("var")?;
    let (id, _) = ts.expect_ident("variable name")?;
    ts.expect_keyword("states")?;
    let mut states = vec![state_name(ts)?];
    ts.expect(TokenKind::Comma, "`,` (at least two states)")?;
    states.push(state_name(ts)?);
    while ts.peek().map(|t| &t.kind) == Some(&TokenKind::Comma) {
        ts.advance();
        states.push(state_name(ts)?);
    }
    Ok(Spanned {
        value: VariableSpec { id, states },
        span,
    })
}

fn parse_probability(ts: &mut TokenStream) -> Result<f64, ParseError> {
    let span = ts.current_span();
    match ts.peek() {
        Some(Token {
            kind: TokenKind::Number(s),
            ..
        }) => {
            let s = s.clone();
            ts.advance();
            s.parse::<f64>().map_err(|_| {
                ParseError::new(span, crate::dsl::ErrorCode::Syntax, format!("invalid probability `{s}`"))
            })
        }
        _ => Err(ts.error("probability")),
    }
}

fn parse_row(ts: &mut TokenStream) -> Result<(CptRow, SourceSpan), ParseError> {
    let span = ts.expect_keyword("row")?;
    let mut parent_states = Vec::new();
    if ts.peek().map(|t| &t.kind) != Some(&TokenKind::Colon) {
        parent_states.push(state_name(ts)?);
        while ts.peek().map(|t| &t.kind) == Some(&TokenKind::Comma) {
            ts.advance();
            parent_states.push(state_name(ts)?);
        }
    }
    ts.expect(TokenKind::Colon, "`:`")?;
    let mut probs = vec![parse_probability(ts)?];
    while matches!(ts.peek().map(|t| &t.kind), Some(TokenKind::Number(_))) {
        probs.push(parse_probability(ts)?);
    }
    Ok((CptRow { parent_states, probs }, span))
}

fn parse_cpt(ts: &mut TokenStream) -> Result<(Spanned<Cpt>, Vec<SourceSpan>), ParseError> {
    let span = ts.expect_keyword("cpt")?;
    let (node, _) = ts.expect_ident("variable name")?;
    let mut parents = Vec::new();
    if ts.peek_ident() == Some("given") {
        ts.advance();
        parents.push(ts.expect_ident("parent name")?.0);
        while ts.peek().map(|t| &t.kind) == Some(&TokenKind::Comma) {
            ts.advance();
            parents.push(ts.expect_ident("parent name")?.0);
        }
    }
    let mut rows = Vec::new();
    let mut spans = Vec::new();
    while ts.peek_ident() == Some("row") {
        let (row, s) = parse_row(ts)?;
        rows.push(row);
        spans.push(s);
    }
    Ok((
        Spanned {
            value: Cpt { node, parents, rows },
            span,
        },
        spans,
    ))
}

fn parse_tokens(ts: &mut TokenStream) -> Result<ParsedSpec, ParseError> {
    ts.expect_keyword("model")?;
    ts.expect_keyword("for")?;
    let (name, name_span) = ts.expect_string("model name string")?;
    let mut spec = ParsedSpec {
        name: Spanned {
            value: name,
            span: name_span,
        },
        variables: Vec::new(),
        cpts: Vec::new(),
        row_spans: Vec::new(),
    };
    while !ts.at_end() {
        match ts.peek_ident() {
            Some("var") => spec.variables.push(parse_var(ts)?),
            Some("cpt") => {
                let (cpt, spans) = parse_cpt(ts)?;
                spec.cpts.push(cpt);
                spec.row_spans.push(spans);
            }
            _ => return Err(ts.error("`var` or `cpt`")),
        }
    }
    Ok(spec)
}

pub(crate) fn parse_spec(text: &str) -> Result<ParsedSpec, Vec<BnError>> {
    let (tokens, lex_errors) = tokenize(text);
    if !lex_errors.is_empty() {
        return Err(lex_errors.into_iter().map(syntax).collect());
    }
    let mut ts = TokenStream::new(tokens, text);
    parse_tokens(&mut ts).map_err(|e| vec![syntax(e)])
}
