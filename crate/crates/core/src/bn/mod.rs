//! Discrete Bayesian networks over causal diagrams.
//!
//! Exact inference enumerates the full joint, so models are capped at
//! [`MAX_JOINT_STATES`] joint states. Sampling is ancestral with rejection
//! for evidence.

mod cpt;
mod sample;
pub mod verify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::diagram::{CausalDiagram, NodeKind};
use crate::dsl::SourceSpan;

pub use sample::Dataset;
pub use verify::{
    verify_findings, CheckKind, CheckStatus, CorrectionCheck, FindingCheck, VerificationReport, VerifyOptions,
};

pub const MAX_JOINT_STATES: usize = 1 << 20;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
pub const DOMAIN_STATES: [&str; 2] = ["train", "test"];
pub const SELECTION_STATES: [&str; 2] = ["out", "in"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BnErrorCode {
    Lex,
    Syntax,
    UnknownVariable,
    DuplicateVariable,
    InvalidStates,
    MissingVariable,
    MissingCpt,
    DuplicateCpt,
    ParentMismatch,
    UnknownState,
    ArityMismatch,
    ProbabilityOutOfRange,
    RowNotNormalized,
    DuplicateRow,
    MissingRow,
    StateSpaceTooLarge,
    ModelDiagramMismatch,
    InvalidQuery,
    ZeroProbabilityEvidence,
    RejectionTooSlow,
}

impl BnErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            BnErrorCode::Lex => "LEX",
            BnErrorCode::Syntax => "SYNTAX",
            BnErrorCode::UnknownVariable => "UNKNOWN_VARIABLE",
            BnErrorCode::DuplicateVariable => "DUPLICATE_VARIABLE",
            BnErrorCode::InvalidStates => "INVALID_STATES",
            BnErrorCode::MissingVariable => "MISSING_VARIABLE",
            BnErrorCode::MissingCpt => "MISSING_CPT",
            BnErrorCode::DuplicateCpt => "DUPLICATE_CPT",
            BnErrorCode::ParentMismatch => "PARENT_MISMATCH",
            BnErrorCode::UnknownState => "UNKNOWN_STATE",
            BnErrorCode::ArityMismatch => "ARITY_MISMATCH",
            BnErrorCode::ProbabilityOutOfRange => "PROBABILITY_OUT_OF_RANGE",
            BnErrorCode::RowNotNormalized => "ROW_NOT_NORMALIZED",
            BnErrorCode::DuplicateRow => "DUPLICATE_ROW",
            BnErrorCode::MissingRow => "MISSING_ROW",
            BnErrorCode::StateSpaceTooLarge => "STATE_SPACE_TOO_LARGE",
            BnErrorCode::ModelDiagramMismatch => "MODEL_DIAGRAM_MISMATCH",
            BnErrorCode::InvalidQuery => "INVALID_QUERY",
            BnErrorCode::ZeroProbabilityEvidence => "ZERO_PROBABILITY_EVIDENCE",
            BnErrorCode::RejectionTooSlow => "REJECTION_TOO_SLOW",
        }
    }
}

impl fmt::Display for BnErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BnError {
    pub code: BnErrorCode,
    pub message: String,
    /// Location in the `.cpt` text, for errors raised while attaching.
    pub span: Option<SourceSpan>,
    origin: Option<Origin>,
}

/// Spec element an attach error refers to, resolved to a span when the
/// model came from text.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Origin {
    Var(String),
    Cpt(usize),
    Row(usize, usize),
}

impl BnError {
    pub(crate) fn new(code: BnErrorCode, message: impl Into<String>) -> Self {
        BnError {
            code,
            message: message.into(),
            span: None,
            origin: None,
        }
    }

    fn from(mut self, origin: Origin) -> Self {
        self.origin = Some(origin);
        self
    }

    pub(crate) fn at(code: BnErrorCode, message: impl Into<String>, span: SourceSpan) -> Self {
        BnError {
            code,
            message: message.into(),
            span: Some(span),
            origin: None,
        }
    }
}

impl fmt::Display for BnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(span) => write!(f, "{span}: {}: {}", self.code, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl std::error::Error for BnError {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableSpec {
    pub id: String,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CptRow {
    pub parent_states: Vec<String>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cpt {
    pub node: String,
    pub parents: Vec<String>,
    pub rows: Vec<CptRow>,
}

/// Dense conditional table: row `r` (mixed radix over parent states, first
/// parent most significant) occupies `probs[r * card .. (r + 1) * card]`.
#[derive(Debug, Clone)]
struct Table {
    parents: Vec<usize>,
    probs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BnModel {
    diagram: CausalDiagram,
    variables: Vec<VariableSpec>,
    cpts: Vec<Cpt>,
    tables: Vec<Table>,
    cards: Vec<usize>,
    strides: Vec<usize>,
    joint: Vec<f64>,
}

/// Exact conditional distribution over a list of variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    variables: Vec<String>,
    states: Vec<Vec<String>>,
    probs: Vec<f64>,
}

impl Distribution {
    fn new(variables: Vec<String>, states: Vec<Vec<String>>, mut probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        Distribution {
            variables,
            states,
            probs,
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Probabilities in mixed-radix order, last variable fastest.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn probability(&self, states: &[&str]) -> Option<f64> {
        if states.len() != self.variables.len() {
            return None;
        }
        let mut idx = 0;
        for (names, s) in self.states.iter().zip(states) {
            idx = idx * names.len() + names.iter().position(|n| n == s)?;
        }
        Some(self.probs[idx])
    }

    /// `(state tuple, probability)` pairs in table order.
    pub fn entries(&self) -> Vec<(Vec<&str>, f64)> {
        let mut out = Vec::with_capacity(self.probs.len());
        for (i, &p) in self.probs.iter().enumerate() {
            let mut rest = i;
            let mut tuple = vec![""; self.states.len()];
            for (k, names) in self.states.iter().enumerate().rev() {
                tuple[k] = names[rest % names.len()].as_str();
                rest /= names.len();
            }
            out.push((tuple, p));
        }
        out
    }
}

/// Parses a `.cpt` spec and attaches it to `diagram`.
pub fn attach_model(diagram: &CausalDiagram, spec_text: &str) -> Result<BnModel, Vec<BnError>> {
    let spec = cpt::parse_spec(spec_text)?;
    let mut errors = Vec::new();
    if spec.name.value != diagram.name() {
        errors.push(BnError::at(
            BnErrorCode::ModelDiagramMismatch,
            format!(
                "model is for diagram \"{}\" but was attached to \"{}\"",
                spec.name.value,
                diagram.name()
            ),
            spec.name.span,
        ));
    }
    let var_spans: BTreeMap<&str, SourceSpan> =
        spec.variables.iter().map(|v| (v.value.id.as_str(), v.span)).collect();
    let variables: Vec<VariableSpec> = spec.variables.iter().map(|v| v.value.clone()).collect();
    let cpts: Vec<Cpt> = spec.cpts.iter().map(|c| c.value.clone()).collect();
    match BnModel::validate(diagram, variables, cpts) {
        Ok(model) if errors.is_empty() => Ok(model),
        Ok(_) => Err(errors),
        Err(found) => {
            for mut e in found {
                e.span = match &e.origin {
                    Some(Origin::Var(id)) => var_spans.get(id.as_str()).copied(),
                    Some(Origin::Cpt(k)) => Some(spec.cpts[*k].span),
                    Some(Origin::Row(k, r)) => Some(spec.row_spans[*k][*r]),
                    None => None,
                };
                errors.push(e);
            }
            Err(errors)
        }
    }
}

impl BnModel {
    /// Builds a model from already-parsed variables and tables.
    pub fn from_tables(
        diagram: &CausalDiagram,
        variables: Vec<VariableSpec>,
        cpts: Vec<Cpt>,
    ) -> Result<BnModel, Vec<BnError>> {
        Self::validate(diagram, variables, cpts)
    }

    fn validate(
        diagram: &CausalDiagram,
        variables: Vec<VariableSpec>,
        cpts: Vec<Cpt>,
    ) -> Result<BnModel, Vec<BnError>> {
        use BnErrorCode::*;
        let n = diagram.len();
        let mut errors = Vec::new();
        let mut vars: Vec<Option<VariableSpec>> = vec![None; n];
        let mut declared = vec![false; n];

        for v in variables {
            let Some(i) = diagram.index_of(&v.id) else {
                errors.push(
                    BnError::new(
                        UnknownVariable,
                        format!("variable `{}` is not a node of diagram \"{}\"", v.id, diagram.name()),
                    )
                    .from(Origin::Var(v.id)),
                );
                continue;
            };
            if declared[i] {
                errors.push(
                    BnError::new(DuplicateVariable, format!("variable `{}` declared twice", v.id))
                        .from(Origin::Var(v.id)),
                );
                continue;
            }
            declared[i] = true;
            let unique: BTreeSet<&String> = v.states.iter().collect();
            if v.states.len() < 2 || unique.len() != v.states.len() {
                errors.push(
                    BnError::new(
                        InvalidStates,
                        format!("variable `{}` needs at least two distinct states", v.id),
                    )
                    .from(Origin::Var(v.id)),
                );
                continue;
            }
            let fixed = match diagram.nodes()[i].kind {
                NodeKind::DomainIndicator => Some(DOMAIN_STATES),
                NodeKind::Selection => Some(SELECTION_STATES),
                _ => None,
            };
            if let Some(fixed) = fixed {
                if v.states != fixed {
                    let message = format!(
                        "variable `{}` is a {} node and must have states {}, {}",
                        v.id,
                        diagram.nodes()[i].kind.keyword(),
                        fixed[0],
                        fixed[1]
                    );
                    errors.push(BnError::new(InvalidStates, message).from(Origin::Var(v.id)));
                    continue;
                }
            }
            vars[i] = Some(v);
        }
        for i in (0..n).filter(|&i| !declared[i]) {
            errors.push(BnError::new(
                MissingVariable,
                format!("node `{}` has no `var` declaration", diagram.id(i)),
            ));
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let variables: Vec<VariableSpec> = vars.into_iter().map(Option::unwrap).collect();
        let cards: Vec<usize> = variables.iter().map(|v| v.states.len()).collect();
        let total = cards
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c).filter(|&t| t <= MAX_JOINT_STATES));
        let Some(total) = total else {
            return Err(vec![BnError::new(
                StateSpaceTooLarge,
                format!("joint state space exceeds {MAX_JOINT_STATES} states"),
            )]);
        };

        let mut tables: Vec<Option<Table>> = vec![None; n];
        let mut by_node: Vec<Option<Cpt>> = vec![None; n];
        let mut attempted = vec![false; n];
        for (k, c) in cpts.into_iter().enumerate() {
            let Some(i) = diagram.index_of(&c.node) else {
                errors.push(
                    BnError::new(
                        UnknownVariable,
                        format!("cpt for `{}`, which is not a node of the diagram", c.node),
                    )
                    .from(Origin::Cpt(k)),
                );
                continue;
            };
            if attempted[i] {
                errors.push(
                    BnError::new(DuplicateCpt, format!("second cpt for `{}`", c.node)).from(Origin::Cpt(k)),
                );
                continue;
            }
            attempted[i] = true;
            match build_table(diagram, &variables, &cards, k, i, &c) {
                Ok(t) => {
                    tables[i] = Some(t);
                    by_node[i] = Some(c);
                }
                Err(mut es) => errors.append(&mut es),
            }
        }
        for i in (0..n).filter(|&i| !attempted[i]) {
            errors.push(BnError::new(MissingCpt, format!("node `{}` has no cpt", diagram.id(i))));
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let mut strides = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cards[i + 1];
        }
        let mut model = BnModel {
            diagram: diagram.clone(),
            variables,
            cpts: by_node.into_iter().map(Option::unwrap).collect(),
            tables: tables.into_iter().map(Option::unwrap).collect(),
            cards,
            strides,
            joint: Vec::new(),
        };
        let mut states = vec![0; n];
        model.joint = (0..total)
            .map(|j| {
                model.decode_into(j, &mut states);
                model.factor_product(&states)
            })
            .collect();
        Ok(model)
    }

    pub fn diagram(&self) -> &CausalDiagram {
        &self.diagram
    }

    /// Variables in diagram node order.
    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn variable(&self, id: &str) -> Option<&VariableSpec> {
        self.diagram.index_of(id).map(|i| &self.variables[i])
    }

    /// Number of joint states (product of cardinalities).
    pub fn joint_size(&self) -> usize {
        self.joint.len()
    }

    /// Enumerated joint, indexed in mixed radix over node order (last node
    /// fastest).
    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    /// State index of every variable for joint index `index`.
    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.cards.len()];
        self.decode_into(index, &mut out);
        out
    }

    fn decode_into(&self, index: usize, out: &mut [usize]) {
        for (i, s) in out.iter_mut().enumerate() {
            *s = (index / self.strides[i]) % self.cards[i];
        }
    }

    #[inline]
    fn state_of(&self, index: usize, var: usize) -> usize {
        (index / self.strides[var]) % self.cards[var]
    }

    /// Product of CPT entries for a complete assignment (state indices in
    /// node order).
    pub fn factor_product(&self, states: &[usize]) -> f64 {
        let mut p = 1.0;
        for (i, t) in self.tables.iter().enumerate() {
            let mut row = 0;
            for &q in &t.parents {
                row = row * self.cards[q] + states[q];
            }
            p *= t.probs[row * self.cards[i] + states[i]];
            if p == 0.0 {
                break;
            }
        }
        p
    }

    pub(crate) fn card(&self, var: usize) -> usize {
        self.cards[var]
    }

    pub(crate) fn resolve_var(&self, id: &str) -> Result<usize, BnError> {
        self.diagram
            .index_of(id)
            .ok_or_else(|| BnError::new(BnErrorCode::UnknownVariable, format!("unknown variable `{id}`")))
    }

    pub(crate) fn resolve_state(&self, var: usize, state: &str) -> Result<usize, BnError> {
        self.variables[var].states.iter().position(|s| s == state).ok_or_else(|| {
            BnError::new(
                BnErrorCode::UnknownState,
                format!(
                    "`{state}` is not a state of `{}` (states: {})",
                    self.variables[var].id,
                    self.variables[var].states.join(", ")
                ),
            )
        })
    }

    pub(crate) fn resolve_evidence(&self, evidence: &[(&str, &str)]) -> Result<Vec<(usize, usize)>, BnError> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &(id, state) in evidence {
            let v = self.resolve_var(id)?;
            let s = self.resolve_state(v, state)?;
            if let Some(&(_, prev)) = out.iter().find(|(w, _)| *w == v) {
                if prev != s {
                    return Err(BnError::new(
                        BnErrorCode::InvalidQuery,
                        format!("conflicting evidence for `{id}`"),
                    ));
                }
                continue;
            }
            out.push((v, s));
        }
        Ok(out)
    }

    /// Unnormalised table `P(vars, evidence)` in mixed radix over `vars`, and
    /// `P(evidence)`.
    pub(crate) fn marginal_table(&self, vars: &[usize], evidence: &[(usize, usize)]) -> (Vec<f64>, f64) {
        let size: usize = vars.iter().map(|&v| self.cards[v]).product();
        let mut table = vec![0.0; size];
        let mut mass = 0.0;
        'joint: for (j, &p) in self.joint.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(v, s) in evidence {
                if self.state_of(j, v) != s {
                    continue 'joint;
                }
            }
            mass += p;
            let mut idx = 0;
            for &v in vars {
                idx = idx * self.cards[v] + self.state_of(j, v);
            }
            table[idx] += p;
        }
        (table, mass)
    }

    /// Exact `P(targets | evidence)` by enumeration.
    pub fn query(&self, targets: &[&str], evidence: &[(&str, &str)]) -> Result<Distribution, BnError> {
        let ev = self.resolve_evidence(evidence)?;
        let mut vars = Vec::new();
        for &t in targets {
            let v = self.resolve_var(t)?;
            if vars.contains(&v) || ev.iter().any(|&(w, _)| w == v) {
                return Err(BnError::new(
                    BnErrorCode::InvalidQuery,
                    format!("`{t}` is repeated or also in the evidence"),
                ));
            }
            vars.push(v);
        }
        if vars.is_empty() {
            return Err(BnError::new(BnErrorCode::InvalidQuery, "no query variables"));
        }
        let (table, mass) = self.marginal_table(&vars, &ev);
        if mass <= 0.0 {
            return Err(zero_evidence(evidence));
        }
        Ok(Distribution::new(
            vars.iter().map(|&v| self.variables[v].id.clone()).collect(),
            vars.iter().map(|&v| self.variables[v].states.clone()).collect(),
            table,
        ))
    }

    /// Exact `I(A; B | C)` in nats.
    pub fn conditional_mutual_information(&self, a: &str, b: &str, given: &[&str]) -> Result<f64, BnError> {
        let a = self.resolve_var(a)?;
        let b = self.resolve_var(b)?;
        let c = given.iter().map(|g| self.resolve_var(g)).collect::<Result<Vec<_>, _>>()?;
        if a == b || c.contains(&a) || c.contains(&b) {
            return Err(BnError::new(
                BnErrorCode::InvalidQuery,
                "A and B must differ and not appear in the conditioning set",
            ));
        }
        Ok(self.cmi_indices(a, b, &c))
    }

    pub(crate) fn cmi_indices(&self, a: usize, b: usize, c: &[usize]) -> f64 {
        let mut vars = vec![a, b];
        vars.extend_from_slice(c);
        let (abc, _) = self.marginal_table(&vars, &[]);
        let (ca, cb) = (self.cards[a], self.cards[b]);
        let cc = abc.len() / (ca * cb);
        let mut pc = vec![0.0; cc];
        let mut pac = vec![0.0; ca * cc];
        let mut pbc = vec![0.0; cb * cc];
        for x in 0..ca {
            for y in 0..cb {
                for z in 0..cc {
                    let p = abc[(x * cb + y) * cc + z];
                    pc[z] += p;
                    pac[x * cc + z] += p;
                    pbc[y * cc + z] += p;
                }
            }
        }
        let mut total = 0.0;
        for x in 0..ca {
            for y in 0..cb {
                for z in 0..cc {
                    let p = abc[(x * cb + y) * cc + z];
                    if p > 0.0 {
                        total += p * (p * pc[z] / (pac[x * cc + z] * pbc[y * cc + z])).ln();
                    }
                }
            }
        }
        total.max(0.0)
    }
}

pub(crate) fn zero_evidence(evidence: &[(&str, &str)]) -> BnError {
    let ev: Vec<String> = evidence.iter().map(|(k, v)| format!("{k}={v}")).collect();
    BnError::new(
        BnErrorCode::ZeroProbabilityEvidence,
        format!("evidence {{{}}} has probability zero", ev.join(", ")),
    )
}

fn build_table(
    diagram: &CausalDiagram,
    variables: &[VariableSpec],
    cards: &[usize],
    k: usize,
    node: usize,
    c: &Cpt,
) -> Result<Table, Vec<BnError>> {
    use BnErrorCode::*;
    let mut errors = Vec::new();
    let expected: BTreeSet<&str> = diagram.parent_indices(node).iter().map(|&p| diagram.id(p)).collect();
    let listed: BTreeSet<&str> = c.parents.iter().map(String::as_str).collect();
    if expected != listed || listed.len() != c.parents.len() {
        let exp: Vec<&str> = expected.into_iter().collect();
        return Err(vec![BnError::new(
            ParentMismatch,
            format!(
                "cpt for `{}` lists parents [{}] but the diagram has [{}]",
                c.node,
                c.parents.join(", "),
                exp.join(", ")
            ),
        )
        .from(Origin::Cpt(k))]);
    }
    let parents: Vec<usize> = c.parents.iter().map(|p| diagram.index_of(p).unwrap()).collect();
    let card = cards[node];
    let rows: usize = parents.iter().map(|&p| cards[p]).product();
    let mut probs = vec![0.0; rows * card];
    let mut seen = vec![false; rows];

    for (r, row) in c.rows.iter().enumerate() {
        let tag = format!("cpt for `{}`:", c.node);
        let at = Origin::Row(k, r);
        if row.parent_states.len() != parents.len() {
            errors.push(BnError::new(
                ArityMismatch,
                format!("{tag} row has {} parent states, expected {}", row.parent_states.len(), parents.len()),
            ).from(at.clone()));
            continue;
        }
        let mut idx = 0;
        let mut bad = false;
        for (&p, s) in parents.iter().zip(&row.parent_states) {
            match variables[p].states.iter().position(|n| n == s) {
                Some(pos) => idx = idx * cards[p] + pos,
                None => {
                    errors.push(BnError::new(
                        UnknownState,
                        format!("{tag} `{s}` is not a state of parent `{}`", variables[p].id),
                    ).from(at.clone()));
                    bad = true;
                }
            }
        }
        if bad {
            continue;
        }
        let label = if row.parent_states.is_empty() {
            "(root)".to_string()
        } else {
            format!("({})", row.parent_states.join(", "))
        };
        if seen[idx] {
            errors.push(BnError::new(DuplicateRow, format!("{tag} row {label} given twice")).from(at.clone()));
            continue;
        }
        if row.probs.len() != card {
            errors.push(BnError::new(
                ArityMismatch,
                format!("{tag} row {label} has {} probabilities, expected {card}", row.probs.len()),
            ).from(at.clone()));
            continue;
        }
        if let Some(p) = row.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            errors.push(BnError::new(
                ProbabilityOutOfRange,
                format!("{tag} row {label} has probability {p} outside [0, 1]"),
            ).from(at.clone()));
            continue;
        }
        let sum: f64 = row.probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            errors.push(BnError::new(
                RowNotNormalized,
                format!("{tag} row {label} sums to {sum}"),
            ).from(at.clone()));
            continue;
        }
        seen[idx] = true;
        probs[idx * card..(idx + 1) * card].copy_from_slice(&row.probs);
    }
    if errors.is_empty() {
        if let Some(missing) = seen.iter().position(|s| !s) {
            let mut rest = missing;
            let mut names = vec![""; parents.len()];
            for (j, &p) in parents.iter().enumerate().rev() {
                names[j] = variables[p].states[rest % cards[p]].as_str();
                rest /= cards[p];
            }
            errors.push(BnError::new(
                MissingRow,
                format!("cpt for `{}` has no row for parent states ({})", c.node, names.join(", ")),
            )
            .from(Origin::Cpt(k)));
        }
    }
    if errors.is_empty() {
        Ok(Table { parents, probs })
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_dsl;

    pub(crate) const BERKSON_DSL: &str = "diagram \"berkson\" { node X role=image node Y role=target \
                                          node S kind=selection edge X -> S edge Y -> S }";
    pub(crate) const BERKSON_CPT: &str = "model for \"berkson\"
var X states 0, 1
var Y states 0, 1
var S states out, in
cpt X
  row : 0.5 0.5
cpt Y
  row : 0.5 0.5
cpt S given X, Y
  row 0, 0 : 1 0
  row 0, 1 : 0 1
  row 1, 0 : 0 1
  row 1, 1 : 0 1
";

    fn berkson() -> BnModel {
        attach_model(&parse_dsl(BERKSON_DSL).unwrap(), BERKSON_CPT).unwrap()
    }

    fn errors(dsl: &str, cpt: &str) -> Vec<BnError> {
        attach_model(&parse_dsl(dsl).unwrap(), cpt).unwrap_err()
    }

    const COIN: &str = "diagram \"c\" { node X }";

    #[test]
    fn root_marginal_reads_cpt() {
        let m = attach_model(
            &parse_dsl(COIN).unwrap(),
            "model for \"c\" var X states 0, 1 cpt X row : 0.7 0.3",
        )
        .unwrap();
        assert_eq!(m.query(&["X"], &[]).unwrap().probs(), [0.7, 0.3]);
    }

    #[test]
    fn berkson_queries() {
        let m = berkson();
        let d = m.query(&["Y"], &[("X", "0"), ("S", "in")]).unwrap();
        assert_eq!(d.probability(&["1"]), Some(1.0));
        let d = m.query(&["Y"], &[("X", "1"), ("S", "in")]).unwrap();
        assert!((d.probability(&["1"]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_evidence() {
        let e = berkson().query(&["Y"], &[("X", "1"), ("S", "out")]).unwrap_err();
        assert_eq!(e.code, BnErrorCode::ZeroProbabilityEvidence);
        assert!(e.message.contains("X=1, S=out"));
    }

    #[test]
    fn target_in_evidence_is_rejected() {
        let e = berkson().query(&["Y"], &[("Y", "0")]).unwrap_err();
        assert_eq!(e.code, BnErrorCode::InvalidQuery);
    }

    #[test]
    fn berkson_selection_creates_dependence() {
        assert!(berkson().conditional_mutual_information("X", "Y", &["S"]).unwrap() > 0.05);
    }

    #[test]
    fn unknown_state() {
        let e = berkson().query(&["Y"], &[("X", "2")]).unwrap_err();
        assert_eq!(e.code, BnErrorCode::UnknownState);
    }

    #[test]
    fn deterministic_copy_has_ln2_information() {
        let m = attach_model(
            &parse_dsl("diagram \"c\" { node A node B edge A -> B }").unwrap(),
            "model for \"c\" var A states 0, 1 var B states 0, 1 cpt A row : 0.5 0.5 \
             cpt B given A row 0 : 1 0 row 1 : 0 1",
        )
        .unwrap();
        let i = m.conditional_mutual_information("A", "B", &[]).unwrap();
        assert!((i - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn berkson_is_marginally_independent() {
        let m = berkson();
        assert!(m.conditional_mutual_information("X", "Y", &[]).unwrap() <= 1e-12);
    }

    #[test]
    fn row_not_normalized_names_node_and_row() {
        let e = errors(COIN, "model for \"c\"\nvar X states 0, 1\ncpt X\n  row : 0.6 0.3\n");
        assert_eq!(e[0].code, BnErrorCode::RowNotNormalized);
        assert!(e[0].message.contains("`X`") && e[0].message.contains("(root)"));
        assert_eq!(e[0].span.unwrap().line, 4);
    }

    #[test]
    fn parent_mismatch() {
        let e = errors(
            "diagram \"c\" { node A node B }",
            "model for \"c\" var A states 0, 1 var B states 0, 1 cpt A row : 0.5 0.5 \
             cpt B given A row 0 : 1 0 row 1 : 0 1",
        );
        assert_eq!(e[0].code, BnErrorCode::ParentMismatch);
        assert_eq!(e[0].span.unwrap().line, 1);
    }

    #[test]
    fn missing_cpt_and_missing_row() {
        let e = errors(COIN, "model for \"c\" var X states 0, 1");
        assert_eq!(e[0].code, BnErrorCode::MissingCpt);
        let e = errors(
            "diagram \"c\" { node A node B edge A -> B }",
            "model for \"c\" var A states 0, 1 var B states 0, 1 cpt A row : 0.5 0.5 cpt B given A row 0 : 1 0",
        );
        assert_eq!(e[0].code, BnErrorCode::MissingRow);
        assert!(e[0].message.contains("(1)"));
    }

    #[test]
    fn domain_and_selection_states_are_fixed() {
        let e = errors(
            "diagram \"c\" { node D kind=domain }",
            "model for \"c\" var D states a, b cpt D row : 0.5 0.5",
        );
        assert_eq!(e[0].code, BnErrorCode::InvalidStates);
        assert!(e[0].message.contains("train, test"));
    }

    #[test]
    fn model_name_must_match() {
        let e = errors(COIN, "model for \"other\" var X states 0, 1 cpt X row : 0.5 0.5");
        assert_eq!(e[0].code, BnErrorCode::ModelDiagramMismatch);
    }

    #[test]
    fn state_space_cap() {
        let mut dsl = String::from("diagram \"big\" {");
        let mut cpt = String::from("model for \"big\"\n");
        for i in 0..21 {
            dsl.push_str(&format!(" node v{i}"));
            cpt.push_str(&format!("var v{i} states 0, 1\ncpt v{i} row : 0.5 0.5\n"));
        }
        dsl.push('}');
        let e = errors(&dsl, &cpt);
        assert_eq!(e[0].code, BnErrorCode::StateSpaceTooLarge);
    }

    #[test]
    fn factorization_identity() {
        let m = berkson();
        for j in 0..m.joint_size() {
            assert_eq!(m.joint()[j], m.factor_product(&m.decode(j)));
        }
        let total: f64 = m.joint().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_entries_follow_table_order() {
        let d = berkson().query(&["X", "S"], &[]).unwrap();
        let e = d.entries();
        assert_eq!(e[1].0, ["0", "in"]);
        assert!((e[1].1 - 0.25).abs() < 1e-15);
    }
}
