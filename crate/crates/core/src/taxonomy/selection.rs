use std::fmt;

use serde::Serialize;

use super::{direct_role_reach, prediction_roles, TaxonomyError};
use crate::diagram::{CausalDiagram, NodeKind, NodeRole};
use crate::graph::is_d_separated;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionType {
    Random,
    ImageDependent,
    TargetDependent,
    JointDependent,
    OtherDependent,
}

impl fmt::Display for SelectionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionType::Random => "random",
            SelectionType::ImageDependent => "image-dependent",
            SelectionType::TargetDependent => "target-dependent",
            SelectionType::JointDependent => "jointly dependent",
            SelectionType::OtherDependent => "other-dependent",
        })
    }
}

/// The distortion a selection mechanism induces in the training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InducedBias {
    None,
    PopulationShiftLike,
    AcquisitionShiftLike,
    PrevalenceShiftLike,
    SpuriousAssociation,
}

impl fmt::Display for InducedBias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InducedBias::None => "none",
            InducedBias::PopulationShiftLike => "population-shift-like",
            InducedBias::AcquisitionShiftLike => "acquisition-shift-like",
            InducedBias::PrevalenceShiftLike => "prevalence-shift-like",
            InducedBias::SpuriousAssociation => "spurious association",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionFinding {
    pub selection_node: String,
    pub selection_type: SelectionType,
    /// `P(Y | X)` in the selected sample equals the population one,
    /// i.e. S is d-separated from the target given the image.
    pub recoverable_predictive_relation: bool,
    pub induced_bias: InducedBias,
    pub parents: Vec<String>,
}

/// Classifies every selection node by what its inclusion criteria depend on.
///
/// Walking backwards from S through nodes without a role, the first role
/// nodes met decide the type: image or anatomy makes the selection
/// image-dependent, the target makes it target-dependent, both make it joint.
pub fn analyze_selection(diagram: &CausalDiagram) -> Result<Vec<SelectionFinding>, TaxonomyError> {
    let selections: Vec<usize> = (0..diagram.len())
        .filter(|&i| diagram.nodes()[i].kind == NodeKind::Selection)
        .collect();
    if selections.is_empty() {
        return Ok(Vec::new());
    }
    let (image, target) = prediction_roles(diagram)?;

    let mut out = Vec::new();
    for s in selections {
        let parents = diagram.parent_indices(s);
        let recoverable = is_d_separated(diagram, &[s], &[target], &[image]);
        let reach = direct_role_reach(diagram, s, false);
        let image_side = reach.contains(&NodeRole::Image) || reach.contains(&NodeRole::Anatomy);
        let target_side = reach.contains(&NodeRole::Target);

        let selection_type = if parents.is_empty() {
            SelectionType::Random
        } else {
            match (image_side, target_side) {
                (true, true) => SelectionType::JointDependent,
                (true, false) => SelectionType::ImageDependent,
                (false, true) => SelectionType::TargetDependent,
                (false, false) => SelectionType::OtherDependent,
            }
        };
        let induced_bias = match selection_type {
            SelectionType::Random => InducedBias::None,
            SelectionType::ImageDependent => InducedBias::PopulationShiftLike,
            SelectionType::TargetDependent => InducedBias::PrevalenceShiftLike,
            SelectionType::JointDependent => InducedBias::SpuriousAssociation,
            SelectionType::OtherDependent => other_bias(diagram, s, recoverable),
        };
        out.push(SelectionFinding {
            selection_node: diagram.id(s).to_string(),
            selection_type,
            recoverable_predictive_relation: recoverable,
            induced_bias,
            parents: parents.iter().map(|&p| diagram.id(p).to_string()).collect(),
        });
    }
    Ok(out)
}

/// Bias of a selection driven by non-role variables, judged by which role
/// nodes those variables influence.
fn other_bias(diagram: &CausalDiagram, s: usize, recoverable: bool) -> InducedBias {
    if !recoverable {
        return InducedBias::SpuriousAssociation;
    }
    let ancestors = diagram.ancestor_mask(s);
    let mut influenced = Vec::new();
    for (a, _) in ancestors.iter().enumerate().filter(|(_, &m)| m) {
        influenced.extend(direct_role_reach(diagram, a, true));
    }
    if influenced.contains(&NodeRole::Anatomy) {
        InducedBias::PopulationShiftLike
    } else if influenced.contains(&NodeRole::Image) {
        InducedBias::AcquisitionShiftLike
    } else if influenced.contains(&NodeRole::Target) {
        InducedBias::PrevalenceShiftLike
    } else {
        InducedBias::None
    }
}
