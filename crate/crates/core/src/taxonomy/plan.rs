use std::fmt;

use serde::{Serialize, Serializer};

use super::{InducedBias, PredictiveDirection, SelectionFinding, SelectionType, ShiftFinding, ShiftType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ImportanceWeightInputs,
    ImportanceWeightTargets,
    GenerativeBayesReuse,
    Harmonization,
    Reannotation,
    ControlAdditionalVariables,
    NoneKnown,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::ImportanceWeightInputs => "importance-weight inputs",
            Strategy::ImportanceWeightTargets => "importance-weight targets",
            Strategy::GenerativeBayesReuse => "reuse generative model with test prior",
            Strategy::Harmonization => "harmonise acquisition",
            Strategy::Reannotation => "re-annotate or calibrate labels",
            Strategy::ControlAdditionalVariables => "control for additional variables",
            Strategy::NoneKnown => "no known correction",
        })
    }
}

/// Density-ratio weight attached to reweighting strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFormula {
    /// `p_te(x) / p_tr(x)`
    InputRatio,
    /// `p_te(y) / p_tr(y)`
    TargetRatio,
}

impl WeightFormula {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightFormula::InputRatio => "p_te(x)/p_tr(x)",
            WeightFormula::TargetRatio => "p_te(y)/p_tr(y)",
        }
    }
}

impl fmt::Display for WeightFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for WeightFormula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum FindingRef {
    Shift(usize),
    Selection(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanItem {
    pub finding: FindingRef,
    pub strategy: Strategy,
    pub weight_formula: Option<WeightFormula>,
    pub alternatives: Vec<Strategy>,
    pub caveats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorrectionPlan {
    pub items: Vec<PlanItem>,
}

const SUPPORT_CAVEAT: &str =
    "training data must cover the support of the test distribution; there is no guarantee outside it";

fn item(finding: FindingRef, strategy: Strategy, caveats: &[&str]) -> PlanItem {
    let weight_formula = match strategy {
        Strategy::ImportanceWeightInputs => Some(WeightFormula::InputRatio),
        Strategy::ImportanceWeightTargets => Some(WeightFormula::TargetRatio),
        _ => None,
    };
    let alternatives = if strategy == Strategy::ImportanceWeightTargets {
        vec![Strategy::GenerativeBayesReuse]
    } else {
        Vec::new()
    };
    PlanItem {
        finding,
        strategy,
        weight_formula,
        alternatives,
        caveats: caveats.iter().map(|s| s.to_string()).collect(),
    }
}

fn shift_item(index: usize, finding: &ShiftFinding) -> PlanItem {
    let r = FindingRef::Shift(index);
    match finding.shift_type {
        ShiftType::PopulationShift => item(
            r,
            Strategy::ImportanceWeightInputs,
            &[
                "P(Y|X) is invariant across domains, so a well-specified predictor transfers directly; weighting mitigates misspecified (underfitted) models",
                SUPPORT_CAVEAT,
            ],
        ),
        ShiftType::AnnotationShift => item(
            r,
            Strategy::Reannotation,
            &["labels follow a different policy in each domain; without assumptions on that change no general correction exists, so calibrate labels or re-annotate (partially)"],
        ),
        ShiftType::PrevalenceShift => item(
            r,
            Strategy::ImportanceWeightTargets,
            &[
                "requires the test class distribution p_te(y) to be known in advance",
                "P(X|Y) is invariant, so a generative model can combine the training appearance model with the test prior",
            ],
        ),
        ShiftType::ManifestationShift => item(
            r,
            Strategy::NoneKnown,
            &["cannot be corrected without strong parametric assumptions about how the manifestation differs"],
        ),
        ShiftType::AcquisitionShift => item(
            r,
            Strategy::Harmonization,
            &[
                "a predictor fitted in one domain does not carry over unchanged: image appearance differs between domains",
                "spatial alignment (rigid registration, resampling to a common resolution) and intensity normalisation",
            ],
        ),
        ShiftType::UnclassifiedExogenous => item(
            r,
            Strategy::NoneKnown,
            &["mechanism change is not covered by the shift taxonomy; inspect the affected paths manually"],
        ),
    }
}

fn selection_item(index: usize, finding: &SelectionFinding) -> PlanItem {
    let r = FindingRef::Selection(index);
    match (finding.selection_type, finding.recoverable_predictive_relation) {
        (SelectionType::Random, _) => item(
            r,
            Strategy::NoneKnown,
            &["no correction needed: random selection leaves the population distribution unchanged"],
        ),
        (SelectionType::ImageDependent, true) => item(
            r,
            Strategy::ImportanceWeightInputs,
            &[
                "P(Y|X) is recoverable from the selected sample, but the training objective is still weighted towards selected images",
                SUPPORT_CAVEAT,
            ],
        ),
        (SelectionType::TargetDependent, _) => item(
            r,
            Strategy::ImportanceWeightTargets,
            &["target-only selection preserves P(X|Y) and acts like prevalence shift; population p(y) must be known"],
        ),
        (SelectionType::OtherDependent, true) => match finding.induced_bias {
            InducedBias::PopulationShiftLike => item(r, Strategy::ImportanceWeightInputs, &[SUPPORT_CAVEAT]),
            InducedBias::AcquisitionShiftLike => item(
                r,
                Strategy::Harmonization,
                &["selection acts on acquisition-related variables and distorts image appearance statistics"],
            ),
            InducedBias::PrevalenceShiftLike => item(
                r,
                Strategy::ImportanceWeightTargets,
                &["selection acts on causes of the target only; population p(y) must be known"],
            ),
            _ => item(
                r,
                Strategy::NoneKnown,
                &["selection variables do not influence image, target or anatomy; no correction needed"],
            ),
        },
        _ => item(
            r,
            Strategy::ControlAdditionalVariables,
            &["conditioning on selection opens a spurious image-target path; recovery needs variables that block it or assumptions on the selection mechanism"],
        ),
    }
}

/// One plan item per finding: shifts first, then selections, in input order.
pub fn plan_corrections(
    _direction: &PredictiveDirection,
    shifts: &[ShiftFinding],
    selections: &[SelectionFinding],
) -> CorrectionPlan {
    let mut items: Vec<PlanItem> = shifts
        .iter()
        .enumerate()
        .map(|(i, f)| shift_item(i, f))
        .chain(selections.iter().enumerate().map(|(i, f)| selection_item(i, f)))
        .collect();
    let total = items.len();
    if total >= 2 {
        let note = format!(
            "co-occurs with {} other finding(s); interactions between simultaneous mechanisms are not analysed",
            total - 1
        );
        for item in &mut items {
            item.caveats.push(note.clone());
        }
    }
    CorrectionPlan { items }
}
