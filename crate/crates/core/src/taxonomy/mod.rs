//! Predictive direction, dataset-shift and sample-selection taxonomy.
//!
//! Everything here is a pure function of diagram structure. Numerical checks
//! of the resulting claims live in [`crate::bn::verify`].

mod advisory;
mod direction;
mod plan;
mod selection;
mod shift;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::diagram::{CausalDiagram, Edge, NodeKind, NodeRole};

pub use advisory::{advise_learning_strategies, Advisory, AugmentationAdvice, SslAdvice};
pub use direction::{classify_direction, DirectionEvidence, DirectionKind, PredictiveDirection};
pub use plan::{plan_corrections, CorrectionPlan, FindingRef, PlanItem, Strategy, WeightFormula};
pub use selection::{analyze_selection, InducedBias, SelectionFinding, SelectionType};
pub use shift::{detect_dataset_shifts, ShiftFinding, ShiftScan, ShiftType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("MISSING_ROLE: diagram has no node with role `{0}`")]
    MissingRole(&'static str),
}

/// Factors of the joint distribution named by the shift taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Factor {
    #[serde(rename = "P(Z)")]
    AnatomyMarginal,
    #[serde(rename = "P(Y|X)")]
    TargetGivenImage,
    #[serde(rename = "P(Y)")]
    TargetMarginal,
    #[serde(rename = "P(Z|Y)")]
    AnatomyGivenTarget,
    #[serde(rename = "P(X|Z)")]
    ImageGivenAnatomy,
    #[serde(rename = "other")]
    Other,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Factor::AnatomyMarginal => "P(Z)",
            Factor::TargetGivenImage => "P(Y|X)",
            Factor::TargetMarginal => "P(Y)",
            Factor::AnatomyGivenTarget => "P(Z|Y)",
            Factor::ImageGivenAnatomy => "P(X|Z)",
            Factor::Other => "other",
        })
    }
}

/// Image and target node indices; both roles are required for analysis.
pub(crate) fn prediction_roles(diagram: &CausalDiagram) -> Result<(usize, usize), TaxonomyError> {
    let image = diagram
        .node_with_role(NodeRole::Image)
        .ok_or(TaxonomyError::MissingRole("image"))?;
    let target = diagram
        .node_with_role(NodeRole::Target)
        .ok_or(TaxonomyError::MissingRole("target"))?;
    Ok((
        diagram.index_of(&image.id).unwrap(),
        diagram.index_of(&target.id).unwrap(),
    ))
}

/// Role nodes reachable from `start` along directed paths whose interior
/// avoids every role node. `forward` follows children, otherwise parents.
pub(crate) fn direct_role_reach(diagram: &CausalDiagram, start: usize, forward: bool) -> BTreeSet<NodeRole> {
    let mut seen = vec![false; diagram.len()];
    let mut stack = vec![start];
    let mut roles = BTreeSet::new();
    seen[start] = true;
    while let Some(v) = stack.pop() {
        let next = if forward {
            diagram.child_indices(v)
        } else {
            diagram.parent_indices(v)
        };
        for &w in next {
            if seen[w] {
                continue;
            }
            seen[w] = true;
            let node = &diagram.nodes()[w];
            if node.role != NodeRole::None {
                roles.insert(node.role);
            } else if node.kind != NodeKind::DomainIndicator {
                stack.push(w);
            }
        }
    }
    roles
}

pub(crate) fn edge_between(diagram: &CausalDiagram, from: usize, to: usize) -> Edge {
    Edge::new(diagram.id(from), diagram.id(to))
}
