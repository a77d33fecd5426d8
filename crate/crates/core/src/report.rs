//! Analysis report: the six-step checklist, JSON and markdown rendering, and
//! the exit-status contract.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bn::{verify_findings, BnError, BnModel, CheckStatus, VerificationReport, VerifyOptions};
use crate::diagram::{CausalDiagram, NodeKind, NodeRole};
use crate::dsl::export_dot;
use crate::taxonomy::{
    advise_learning_strategies, analyze_selection, detect_dataset_shifts, plan_corrections, Advisory, CorrectionPlan,
    DirectionEvidence, DirectionKind, FindingRef, PlanItem, PredictiveDirection, SelectionFinding, SelectionType,
    ShiftFinding, ShiftType, TaxonomyError,
};

pub const SCHEMA_VERSION: &str = "1";

pub const STEP_TITLES: [&str; 6] = [
    "Collect dataset metadata",
    "Decide whether the task is causal or anticausal",
    "Look for distribution differences between datasets",
    "Compare acquisition setups",
    "Check how samples were selected",
    "Assemble the complete diagram",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Satisfied,
    Attention,
    NotApplicable,
}

impl StepStatus {
    fn label(self) -> &'static str {
        match self {
            StepStatus::Satisfied => "satisfied",
            StepStatus::Attention => "attention",
            StepStatus::NotApplicable => "not applicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChecklistStep {
    pub step: u8,
    pub title: String,
    pub status: StepStatus,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagramSummary {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub image: Option<String>,
    pub target: Option<String>,
    pub anatomy: Option<String>,
    pub domain_nodes: Vec<String>,
    pub selection_nodes: Vec<String>,
    pub unobserved_nodes: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub diagram: DiagramSummary,
    pub direction: PredictiveDirection,
    pub shifts: Vec<ShiftFinding>,
    pub selections: Vec<SelectionFinding>,
    pub plan: CorrectionPlan,
    pub advisory: Advisory,
    pub checklist: Vec<ChecklistStep>,
    pub verification: Option<VerificationReport>,
    #[serde(skip)]
    dot: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    /// No findings.
    Clean,
    /// Findings that require action, or a failed verification.
    Attention,
    /// Unreadable or invalid input.
    InputError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Clean => 0,
            ExitStatus::Attention => 1,
            ExitStatus::InputError => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

fn ids(diagram: &CausalDiagram, kind: NodeKind) -> Vec<String> {
    diagram.nodes_of_kind(kind).map(|n| n.id.clone()).collect()
}

/// Runs the structural analysis of a validated diagram.
pub fn analyze(diagram: &CausalDiagram) -> Result<AnalysisReport, TaxonomyError> {
    let scan = detect_dataset_shifts(diagram)?;
    let selections = analyze_selection(diagram)?;
    let plan = plan_corrections(&scan.direction, &scan.findings, &selections);
    let advisory = advise_learning_strategies(&scan.direction);
    let role = |r| diagram.node_with_role(r).map(|n| n.id.clone());

    let mut warnings: Vec<String> = diagram.warnings().iter().map(|w| w.to_string()).collect();
    warnings.extend(scan.warnings);
    let summary = DiagramSummary {
        name: diagram.name().to_string(),
        nodes: diagram.len(),
        edges: diagram.edges().len(),
        image: role(NodeRole::Image),
        target: role(NodeRole::Target),
        anatomy: role(NodeRole::Anatomy),
        domain_nodes: ids(diagram, NodeKind::DomainIndicator),
        selection_nodes: ids(diagram, NodeKind::Selection),
        unobserved_nodes: ids(diagram, NodeKind::Unobserved),
        warnings,
    };
    let checklist = checklist(&summary, &scan.direction, &scan.findings, &selections);
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION.to_string(),
        diagram: summary,
        direction: scan.direction,
        shifts: scan.findings,
        selections,
        plan,
        advisory,
        checklist,
        verification: None,
        dot: export_dot(diagram),
    })
}

#[derive(Debug)]
pub enum AnalysisError {
    Taxonomy(TaxonomyError),
    Model(BnError),
}

impl std::fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnalysisError::Taxonomy(e) => e.fmt(f),
            AnalysisError::Model(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for AnalysisError {}

/// Analyses the model's diagram and verifies every finding against the model.
pub fn analyze_and_verify(model: &BnModel, options: &VerifyOptions) -> Result<AnalysisReport, AnalysisError> {
    let mut report = analyze(model.diagram()).map_err(AnalysisError::Taxonomy)?;
    let verification = verify_findings(model, &report.shifts, &report.selections, &report.plan, options)
        .map_err(AnalysisError::Model)?;
    report.verification = Some(verification);
    Ok(report)
}

fn join_types<T: std::fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

fn checklist(
    summary: &DiagramSummary,
    direction: &PredictiveDirection,
    shifts: &[ShiftFinding],
    selections: &[SelectionFinding],
) -> Vec<ChecklistStep> {
    let step = |n: usize, status, note: String| ChecklistStep {
        step: n as u8 + 1,
        title: STEP_TITLES[n].to_string(),
        status,
        note,
    };
    let has_domain = !summary.domain_nodes.is_empty();
    let (mismatch, acquisition): (Vec<&ShiftFinding>, Vec<&ShiftFinding>) =
        shifts.iter().partition(|f| f.shift_type != ShiftType::AcquisitionShift);
    let biased: Vec<&SelectionFinding> =
        selections.iter().filter(|s| s.selection_type != SelectionType::Random).collect();

    let direction_status = match direction.kind {
        DirectionKind::Causal | DirectionKind::Anticausal => StepStatus::Satisfied,
        _ => StepStatus::Attention,
    };
    let direction_note = match &direction.evidence {
        DirectionEvidence::DirectedPath { nodes } => format!("{} via {}", direction.kind, nodes.join(" -> ")),
        DirectionEvidence::CommonAncestor { node } => {
            format!("{}: image and target share the ancestor `{node}`", direction.kind)
        }
        DirectionEvidence::None => format!("{}: no causal connection between image and target", direction.kind),
    };

    vec![
        step(
            0,
            StepStatus::NotApplicable,
            "manual step: record application field, task type, annotation method and reliability, cohort, \
             subject inclusion criteria, acquisition setup and train/test split for every dataset"
                .to_string(),
        ),
        step(1, direction_status, direction_note),
        if !has_domain {
            step(2, StepStatus::NotApplicable, "no domain indicator in the diagram".to_string())
        } else if mismatch.is_empty() {
            step(2, StepStatus::Satisfied, "no population, annotation, prevalence or manifestation shift".to_string())
        } else {
            step(
                2,
                StepStatus::Attention,
                join_types(mismatch.iter().map(|f| format!("{} ({})", f.shift_type, f.mechanism_edge))),
            )
        },
        if !has_domain {
            step(3, StepStatus::NotApplicable, "no domain indicator in the diagram".to_string())
        } else if acquisition.is_empty() {
            step(3, StepStatus::Satisfied, "no acquisition differences between domains".to_string())
        } else {
            step(
                3,
                StepStatus::Attention,
                join_types(acquisition.iter().map(|f| format!("{} ({})", f.shift_type, f.mechanism_edge))),
            )
        },
        if selections.is_empty() {
            step(4, StepStatus::NotApplicable, "no selection node in the diagram".to_string())
        } else if biased.is_empty() {
            step(4, StepStatus::Satisfied, "selection is random".to_string())
        } else {
            step(
                4,
                StepStatus::Attention,
                join_types(
                    biased
                        .iter()
                        .map(|s| format!("{} selection at `{}`", s.selection_type, s.selection_node)),
                ),
            )
        },
        step(
            5,
            StepStatus::Satisfied,
            format!("diagram \"{}\": {} nodes, {} edges", summary.name, summary.nodes, summary.edges),
        ),
    ]
}

impl AnalysisReport {
    pub fn exit_status(&self) -> ExitStatus {
        let biased = self
            .selections
            .iter()
            .any(|s| s.selection_type != SelectionType::Random);
        let failed = self.verification.as_ref().is_some_and(|v| !v.passed);
        if !self.shifts.is_empty() || biased || failed {
            ExitStatus::Attention
        } else {
            ExitStatus::Clean
        }
    }

    pub fn dot(&self) -> &str {
        &self.dot
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Markdown => self.to_markdown(),
        }
    }

    /// Pretty JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serialises to JSON");
        canonical_json(&value)
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let d = &self.diagram;
        let _ = writeln!(md, "# Causal analysis: {}\n", d.name);
        let _ = writeln!(
            md,
            "{} nodes, {} edges. Image `{}`, target `{}`{}.\n",
            d.nodes,
            d.edges,
            d.image.as_deref().unwrap_or("-"),
            d.target.as_deref().unwrap_or("-"),
            d.anatomy
                .as_deref()
                .map(|a| format!(", anatomy `{a}`"))
                .unwrap_or_default()
        );
        for w in &d.warnings {
            let _ = writeln!(md, "> warning: {w}\n");
        }

        for step in &self.checklist {
            let _ = writeln!(md, "## {}. {}\n", step.step, step.title);
            let _ = writeln!(md, "Status: **{}**. {}\n", step.status.label(), step.note);
            match step.step {
                2 => self.md_direction(&mut md),
                3 => self.md_shifts(&mut md, false),
                4 => self.md_shifts(&mut md, true),
                5 => self.md_selections(&mut md),
                6 => {
                    let _ = writeln!(md, "```dot\n{}```\n", self.dot);
                }
                _ => {}
            }
        }
        if let Some(v) = &self.verification {
            self.md_verification(&mut md, v);
        }
        md.truncate(md.trim_end().len());
        md.push('\n');
        md
    }

    fn plan_for(&self, r: FindingRef) -> Option<&PlanItem> {
        self.plan.items.iter().find(|i| i.finding == r)
    }

    fn md_plan(&self, md: &mut String, r: FindingRef) {
        let Some(item) = self.plan_for(r) else {
            return;
        };
        let weight = item
            .weight_formula
            .map(|w| format!(", w = {w}"))
            .unwrap_or_default();
        let _ = writeln!(md, "  - correction: {}{weight}", item.strategy);
        for a in &item.alternatives {
            let _ = writeln!(md, "  - alternative: {a}");
        }
        for c in &item.caveats {
            let _ = writeln!(md, "  - caveat: {c}");
        }
    }

    fn md_direction(&self, md: &mut String) {
        let a = &self.advisory;
        let ssl = match a.ssl {
            crate::taxonomy::SslAdvice::TheoreticallyFutile => "theoretically futile",
            crate::taxonomy::SslAdvice::MayHelp => "may help",
            crate::taxonomy::SslAdvice::Indeterminate => "indeterminate",
        };
        let _ = writeln!(md, "- semi-supervised learning: {ssl}. {}", a.ssl_rationale);
        let _ = writeln!(md, "- data augmentation: {}", a.augmentation_note);
        for c in &a.caveats {
            let _ = writeln!(md, "- caveat: {c}");
        }
        md.push('\n');
    }

    fn md_shifts(&self, md: &mut String, acquisition: bool) {
        let mut any = false;
        for (i, f) in self.shifts.iter().enumerate() {
            if (f.shift_type == ShiftType::AcquisitionShift) != acquisition {
                continue;
            }
            any = true;
            let transport = if f.transportable {
                "transportable"
            } else {
                "not transportable"
            };
            let _ = writeln!(
                md,
                "- **{}** at `{}`: {} changes; {transport}",
                f.shift_type, f.mechanism_edge, f.changed_factor
            );
            if let Some(note) = &f.note {
                let _ = writeln!(md, "  - note: {note}");
            }
            self.md_plan(md, FindingRef::Shift(i));
        }
        if any {
            md.push('\n');
        }
    }

    fn md_selections(&self, md: &mut String) {
        for (i, s) in self.selections.iter().enumerate() {
            let recover = if s.recoverable_predictive_relation {
                "P(Y|X) recoverable"
            } else {
                "P(Y|X) not recoverable"
            };
            let _ = writeln!(
                md,
                "- **{} selection** at `{}` (parents: {}): {recover}; induced bias: {}",
                s.selection_type,
                s.selection_node,
                if s.parents.is_empty() {
                    "none".to_string()
                } else {
                    s.parents.join(", ")
                },
                s.induced_bias
            );
            self.md_plan(md, FindingRef::Selection(i));
        }
        if !self.selections.is_empty() {
            md.push('\n');
        }
    }

    fn md_verification(&self, md: &mut String, v: &VerificationReport) {
        let verdict = if v.passed {
            "all checks agree with the analysis"
        } else {
            "some checks disagree with the analysis"
        };
        let _ = writeln!(md, "## Verification\n\n{verdict} (delta = {}).\n", v.delta);
        if !v.checks.is_empty() {
            let _ = writeln!(md, "| finding | claim | discrepancy | bound | status | expected |");
            let _ = writeln!(md, "|---|---|---|---|---|---|");
            for c in &v.checks {
                let status = match c.status {
                    CheckStatus::Passed => "passed",
                    CheckStatus::Failed => "failed",
                    CheckStatus::NotApplicable => "n/a",
                };
                let bound = match c.bound {
                    crate::bn::verify::Bound::AtMost => format!("<= {:e}", c.tolerance),
                    crate::bn::verify::Bound::AtLeast => format!(">= {}", c.tolerance),
                };
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {bound} | {status} | {} |",
                    finding_label(c.finding),
                    cell(&c.claim),
                    c.discrepancy.map(|d| format!("{d:.3e}")).unwrap_or_else(|| "-".into()),
                    if c.expected { "hold" } else { "fail" }
                );
            }
            md.push('\n');
        }
        if !v.corrections.is_empty() {
            let _ = writeln!(md, "| finding | weight | uncorrected bias | corrected bias | passed |");
            let _ = writeln!(md, "|---|---|---|---|---|");
            for c in &v.corrections {
                let _ = writeln!(
                    md,
                    "| {} | {} | {:.3e} | {:.3e} | {} |",
                    finding_label(c.finding),
                    c.weight_formula,
                    c.uncorrected_bias,
                    c.corrected_bias,
                    if c.passed { "yes" } else { "no" }
                );
            }
            md.push('\n');
        }
    }
}

fn finding_label(r: FindingRef) -> String {
    match r {
        FindingRef::Shift(i) => format!("shift {i}"),
        FindingRef::Selection(i) => format!("selection {i}"),
    }
}

/// Renders a JSON value with two-space indentation and sorted keys, so that
/// parsing and re-rendering is byte-stable.
/// Escapes pipes so a value stays inside one Markdown table cell.
fn cell(text: &str) -> String {
    text.replace('|', "\\|")
}

pub fn canonical_json(value: &serde_json::Value) -> String {
    // serde_json's default map is ordered by key
    let mut s = serde_json::to_string_pretty(value).expect("JSON value serialises");
    s.push('\n');
    s
}
