//! Numerical checks of taxonomy findings against an attached model.
//!
//! Train and test quantities condition on the domain indicator
//! (`D=train` / `D=test`); for selection findings "train" is the selected
//! sample (`S=in`) and "test" the unselected population.

use serde::Serialize;

use super::{BnError, BnErrorCode, BnModel};
use crate::diagram::{NodeKind, NodeRole};
use crate::graph::is_d_separated;
use crate::taxonomy::{CorrectionPlan, Factor, FindingRef, SelectionFinding, ShiftFinding, ShiftType, WeightFormula};

pub const EXACT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Minimum total-variation distance a flagged factor must show.
    pub delta: f64,
    /// Loss indexed `[image state][target state]`. Defaults to the 0-1 loss
    /// of the train-domain Bayes classifier.
    pub loss: Option<Vec<Vec<f64>>>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            delta: DEFAULT_DELTA,
            loss: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    InvariantFactor,
    ChangedFactor,
    SelectionRecoverability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindingCheck {
    pub finding: FindingRef,
    pub kind: CheckKind,
    pub claim: String,
    /// Largest total-variation distance over conditioning states.
    pub discrepancy: Option<f64>,
    pub tolerance: f64,
    pub bound: Bound,
    /// Whether the structural analysis predicts the claim holds.
    pub expected: bool,
    pub status: CheckStatus,
    /// Outcome agrees with the analysis (or the check did not apply).
    pub consistent: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionCheck {
    pub finding: FindingRef,
    pub weight_formula: WeightFormula,
    /// `|E_train[loss] - E_test[loss]|`
    pub uncorrected_bias: f64,
    /// `|E_train[w * loss] - E_test[loss]|`
    pub corrected_bias: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// The diagram implies the weighting identity, so failure is an error.
    pub required: bool,
    pub consistent: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub delta: f64,
    pub checks: Vec<FindingCheck>,
    pub corrections: Vec<CorrectionCheck>,
    /// Every check and correction is consistent with the analysis.
    pub passed: bool,
}

struct Roles {
    image: usize,
    target: usize,
    anatomy: Option<usize>,
}

/// A factor `P(vars | given)` with its display name.
struct FactorSpec {
    label: String,
    vars: Vec<usize>,
    given: Vec<usize>,
}

fn factor_spec(roles: &Roles, factor: Factor) -> Option<FactorSpec> {
    let (x, y) = (roles.image, roles.target);
    let (label, vars, given) = match factor {
        Factor::AnatomyMarginal => ("P(Z)", vec![roles.anatomy?], vec![]),
        Factor::TargetGivenImage => ("P(Y|X)", vec![y], vec![x]),
        Factor::TargetMarginal => ("P(Y)", vec![y], vec![]),
        Factor::AnatomyGivenTarget => ("P(Z|Y)", vec![roles.anatomy?], vec![y]),
        Factor::ImageGivenAnatomy => match roles.anatomy {
            Some(z) => ("P(X|Z)", vec![x], vec![z]),
            None => ("P(X)", vec![x], vec![]),
        },
        Factor::Other => return None,
    };
    Some(FactorSpec {
        label: label.to_string(),
        vars,
        given,
    })
}

/// The factor each shift type leaves unchanged.
fn invariant_spec(roles: &Roles, shift: ShiftType) -> Option<FactorSpec> {
    let (x, y) = (roles.image, roles.target);
    let (label, vars, given) = match shift {
        ShiftType::PopulationShift => ("P(Y|X)", vec![y], vec![x]),
        ShiftType::AnnotationShift => ("P(X)", vec![x], vec![]),
        ShiftType::PrevalenceShift => ("P(X|Y)", vec![x], vec![y]),
        ShiftType::ManifestationShift => ("P(Y)", vec![y], vec![]),
        ShiftType::AcquisitionShift => ("P(Z)", vec![roles.anatomy?], vec![]),
        ShiftType::UnclassifiedExogenous => return None,
    };
    Some(FactorSpec {
        label: label.to_string(),
        vars,
        given,
    })
}

impl BnModel {
    /// Largest total-variation distance between `P(vars | given=g, a)` and
    /// `P(vars | given=g, b)` over states `g` with positive mass under both.
    /// `None` when no conditioning state has shared support.
    fn max_conditional_tv(
        &self,
        vars: &[usize],
        given: &[usize],
        a: &[(usize, usize)],
        b: &[(usize, usize)],
    ) -> Option<f64> {
        let mut all = vars.to_vec();
        all.extend_from_slice(given);
        let (ta, _) = self.marginal_table(&all, a);
        let (tb, _) = self.marginal_table(&all, b);
        let g: usize = given.iter().map(|&v| self.card(v)).product();
        let nv = ta.len() / g;
        let mut worst: Option<f64> = None;
        for c in 0..g {
            let ma: f64 = (0..nv).map(|v| ta[v * g + c]).sum();
            let mb: f64 = (0..nv).map(|v| tb[v * g + c]).sum();
            if ma <= 0.0 || mb <= 0.0 {
                continue;
            }
            let tv = 0.5 * (0..nv).map(|v| (ta[v * g + c] / ma - tb[v * g + c] / mb).abs()).sum::<f64>();
            worst = Some(worst.map_or(tv, |w: f64| w.max(tv)));
        }
        worst
    }

    fn require_mass(&self, ev: &[(usize, usize)]) -> Result<(), BnError> {
        if self.marginal_table(&[], ev).1 > 0.0 {
            return Ok(());
        }
        let names: Vec<String> = ev
            .iter()
            .map(|&(v, s)| format!("{}={}", self.variables[v].id, self.variables[v].states[s]))
            .collect();
        Err(BnError::new(
            BnErrorCode::ZeroProbabilityEvidence,
            format!("{} has probability zero", names.join(", ")),
        ))
    }
}

fn mismatch(message: String) -> BnError {
    BnError::new(BnErrorCode::ModelDiagramMismatch, message)
}

fn node_of_kind(model: &BnModel, id: &str, kind: NodeKind) -> Result<usize, BnError> {
    let d = model.diagram();
    match d.index_of(id) {
        Some(i) if d.nodes()[i].kind == kind => Ok(i),
        _ => Err(mismatch(format!("model has no {} node `{id}`", kind.keyword()))),
    }
}

#[allow(clippy::too_many_arguments)]
fn check(
    finding: FindingRef,
    kind: CheckKind,
    claim: String,
    discrepancy: Option<f64>,
    tolerance: f64,
    bound: Bound,
    expected: bool,
    note: Option<String>,
) -> FindingCheck {
    let status = match discrepancy {
        None => CheckStatus::NotApplicable,
        Some(d) => {
            let ok = match bound {
                Bound::AtMost => d <= tolerance,
                Bound::AtLeast => d >= tolerance,
            };
            if ok {
                CheckStatus::Passed
            } else {
                CheckStatus::Failed
            }
        }
    };
    let consistent = match status {
        CheckStatus::NotApplicable => true,
        s => (s == CheckStatus::Passed) == expected,
    };
    FindingCheck {
        finding,
        kind,
        claim,
        discrepancy,
        tolerance,
        bound,
        expected,
        status,
        consistent,
        note,
    }
}

/// Runs the numerical checks for every finding and weight-based plan item.
pub fn verify_findings(
    model: &BnModel,
    shifts: &[ShiftFinding],
    selections: &[SelectionFinding],
    plan: &CorrectionPlan,
    options: &VerifyOptions,
) -> Result<VerificationReport, BnError> {
    let diagram = model.diagram();
    let role = |r: NodeRole| {
        diagram
            .node_with_role(r)
            .and_then(|n| diagram.index_of(&n.id))
    };
    let roles = Roles {
        image: role(NodeRole::Image).ok_or_else(|| mismatch("model has no image node".into()))?,
        target: role(NodeRole::Target).ok_or_else(|| mismatch("model has no target node".into()))?,
        anatomy: role(NodeRole::Anatomy),
    };
    let (x, y) = (roles.image, roles.target);
    if let Some(loss) = &options.loss {
        let ok = loss.len() == model.card(x)
            && loss.iter().all(|r| r.len() == model.card(y) && r.iter().all(|v| v.is_finite()));
        if !ok {
            return Err(BnError::new(
                BnErrorCode::InvalidQuery,
                format!("loss table must be {} x {} and finite", model.card(x), model.card(y)),
            ));
        }
    }

    // train/test evidence per finding
    let mut shift_domains = Vec::new();
    for f in shifts {
        let d = node_of_kind(model, &f.domain_node, NodeKind::DomainIndicator)?;
        let head = diagram.index_of(&f.mechanism_edge.to);
        if !head.is_some_and(|h| diagram.has_edge(d, h)) {
            return Err(mismatch(format!("model has no edge {}", f.mechanism_edge)));
        }
        let tr = vec![(d, 0)];
        let te = vec![(d, 1)];
        model.require_mass(&tr)?;
        model.require_mass(&te)?;
        shift_domains.push((d, tr, te));
    }
    let mut selection_nodes = Vec::new();
    for f in selections {
        let s = node_of_kind(model, &f.selection_node, NodeKind::Selection)?;
        let tr = vec![(s, 1)];
        model.require_mass(&tr)?;
        selection_nodes.push((s, tr, Vec::new()));
    }

    let mut checks = Vec::new();
    for (i, f) in shifts.iter().enumerate() {
        let r = FindingRef::Shift(i);
        let (d, tr, te) = &shift_domains[i];
        let dname = &f.domain_node;

        match invariant_spec(&roles, f.shift_type) {
            Some(spec) => {
                let implied = is_d_separated(diagram, &[*d], &spec.vars, &spec.given);
                let (disc, note) = if implied {
                    let disc = model.max_conditional_tv(&spec.vars, &spec.given, tr, te);
                    let note = disc.is_none().then(|| "no conditioning state has support in both domains".to_string());
                    (disc, note)
                } else {
                    (
                        None,
                        Some(format!(
                            "other mechanisms from `{dname}` also change {}; invariance not implied",
                            spec.label
                        )),
                    )
                };
                checks.push(check(
                    r,
                    CheckKind::InvariantFactor,
                    format!("{} identical for {dname}=train and {dname}=test", spec.label),
                    disc,
                    EXACT_TOLERANCE,
                    Bound::AtMost,
                    true,
                    note,
                ));
            }
            None => checks.push(check(
                r,
                CheckKind::InvariantFactor,
                "no invariant factor defined for this finding".to_string(),
                None,
                EXACT_TOLERANCE,
                Bound::AtMost,
                true,
                Some("requires a classified shift and, for acquisition shift, an anatomy node".to_string()),
            )),
        }

        match factor_spec(&roles, f.changed_factor) {
            Some(spec) => {
                let disc = model.max_conditional_tv(&spec.vars, &spec.given, tr, te);
                checks.push(check(
                    r,
                    CheckKind::ChangedFactor,
                    format!("{} differs between {dname}=train and {dname}=test", spec.label),
                    disc,
                    options.delta,
                    Bound::AtLeast,
                    true,
                    disc.is_none()
                        .then(|| "no conditioning state has support in both domains".to_string()),
                ));
            }
            None => checks.push(check(
                r,
                CheckKind::ChangedFactor,
                "changed factor not identified".to_string(),
                None,
                options.delta,
                Bound::AtLeast,
                true,
                Some("unclassified mechanism".to_string()),
            )),
        }
    }

    for (i, f) in selections.iter().enumerate() {
        let (_, tr, te) = &selection_nodes[i];
        let sname = &f.selection_node;
        let disc = model.max_conditional_tv(&[y], &[x], tr, te);
        checks.push(check(
            FindingRef::Selection(i),
            CheckKind::SelectionRecoverability,
            format!("P(Y|X, {sname}=in) equals P(Y|X)"),
            disc,
            EXACT_TOLERANCE,
            Bound::AtMost,
            f.recoverable_predictive_relation,
            (!f.recoverable_predictive_relation)
                .then(|| "selection is not recoverable; a discrepancy is expected".to_string()),
        ));
    }

    let mut corrections = Vec::new();
    for item in &plan.items {
        let Some(formula) = item.weight_formula else {
            continue;
        };
        let (indicator, tr, te) = match item.finding {
            FindingRef::Shift(i) => shift_domains.get(i),
            FindingRef::Selection(i) => selection_nodes.get(i),
        }
        .ok_or_else(|| mismatch("correction plan refers to a finding that was not supplied".into()))?;
        corrections.push(correction_check(model, &roles, *indicator, tr, te, item.finding, formula, options));
    }

    let passed = checks.iter().all(|c| c.consistent) && corrections.iter().all(|c| c.consistent);
    Ok(VerificationReport {
        delta: options.delta,
        checks,
        corrections,
        passed,
    })
}

#[allow(clippy::too_many_arguments)]
fn correction_check(
    model: &BnModel,
    roles: &Roles,
    indicator: usize,
    tr: &[(usize, usize)],
    te: &[(usize, usize)],
    finding: FindingRef,
    formula: WeightFormula,
    options: &VerifyOptions,
) -> CorrectionCheck {
    let (x, y) = (roles.image, roles.target);
    let (cx, cy) = (model.card(x), model.card(y));
    let normalize = |(mut t, m): (Vec<f64>, f64)| {
        t.iter_mut().for_each(|p| *p /= m);
        t
    };
    // joint tables indexed [x * cy + y]
    let p_tr = normalize(model.marginal_table(&[x, y], tr));
    let p_te = normalize(model.marginal_table(&[x, y], te));

    let loss: Vec<Vec<f64>> = options.loss.clone().unwrap_or_else(|| {
        (0..cx)
            .map(|xs| {
                let row = &p_tr[xs * cy..(xs + 1) * cy];
                // first maximum wins ties
                let h = (0..cy).fold(0, |best, ys| if row[ys] > row[best] { ys } else { best });
                (0..cy).map(|ys| if ys == h { 0.0 } else { 1.0 }).collect()
            })
            .collect()
    });

    let marg_x = |t: &[f64]| (0..cx).map(|xs| (0..cy).map(|ys| t[xs * cy + ys]).sum()).collect::<Vec<f64>>();
    let marg_y = |t: &[f64]| (0..cy).map(|ys| (0..cx).map(|xs| t[xs * cy + ys]).sum()).collect::<Vec<f64>>();
    let ratio = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> {
        a.iter().zip(&b).map(|(n, d)| if *d > 0.0 { n / d } else { 0.0 }).collect()
    };
    let (w_x, w_y) = match formula {
        WeightFormula::InputRatio => (ratio(marg_x(&p_te), marg_x(&p_tr)), vec![1.0; cy]),
        WeightFormula::TargetRatio => (vec![1.0; cx], ratio(marg_y(&p_te), marg_y(&p_tr))),
    };

    let (mut e_tr, mut e_tr_w, mut e_te) = (0.0, 0.0, 0.0);
    for xs in 0..cx {
        for ys in 0..cy {
            let l = loss[xs][ys];
            e_tr += p_tr[xs * cy + ys] * l;
            e_tr_w += p_tr[xs * cy + ys] * w_x[xs] * w_y[ys] * l;
            e_te += p_te[xs * cy + ys] * l;
        }
    }
    let uncorrected_bias = (e_tr - e_te).abs();
    let corrected_bias = (e_tr_w - e_te).abs();
    let passed = corrected_bias <= EXACT_TOLERANCE;

    // the identity needs the conditional not being reweighted to be shared
    let diagram = model.diagram();
    let required = match formula {
        WeightFormula::InputRatio => is_d_separated(diagram, &[indicator], &[y], &[x]),
        WeightFormula::TargetRatio => is_d_separated(diagram, &[indicator], &[x], &[y]),
    };
    let note = if !required {
        Some(match formula {
            WeightFormula::InputRatio => "P(Y|X) is not implied invariant; weighting is not exact".to_string(),
            WeightFormula::TargetRatio => "P(X|Y) is not implied invariant; weighting is not exact".to_string(),
        })
    } else {
        None
    };
    CorrectionCheck {
        finding,
        weight_formula: formula,
        uncorrected_bias,
        corrected_bias,
        tolerance: EXACT_TOLERANCE,
        passed,
        required,
        consistent: passed || !required,
        note,
    }
}
