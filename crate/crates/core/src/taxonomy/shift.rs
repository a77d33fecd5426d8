use std::fmt;

use serde::Serialize;

use super::{
    classify_direction, direct_role_reach, edge_between, DirectionKind, Factor, PredictiveDirection,
    TaxonomyError,
};
use crate::diagram::{CausalDiagram, Edge, NodeKind, NodeRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftType {
    PopulationShift,
    AnnotationShift,
    PrevalenceShift,
    ManifestationShift,
    AcquisitionShift,
    UnclassifiedExogenous,
}

impl ShiftType {
    /// The factor of the joint that differs between domains.
    pub fn changed_factor(self) -> Factor {
        match self {
            ShiftType::PopulationShift => Factor::AnatomyMarginal,
            ShiftType::AnnotationShift => Factor::TargetGivenImage,
            ShiftType::PrevalenceShift => Factor::TargetMarginal,
            ShiftType::ManifestationShift => Factor::AnatomyGivenTarget,
            ShiftType::AcquisitionShift => Factor::ImageGivenAnatomy,
            ShiftType::UnclassifiedExogenous => Factor::Other,
        }
    }
}

impl fmt::Display for ShiftType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShiftType::PopulationShift => "population shift",
            ShiftType::AnnotationShift => "annotation shift",
            ShiftType::PrevalenceShift => "prevalence shift",
            ShiftType::ManifestationShift => "manifestation shift",
            ShiftType::AcquisitionShift => "acquisition shift",
            ShiftType::UnclassifiedExogenous => "unclassified exogenous shift",
        })
    }
}

/// One domain-indicator edge and the mechanism change it represents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShiftFinding {
    pub shift_type: ShiftType,
    pub domain_node: String,
    pub mechanism_edge: Edge,
    pub changed_factor: Factor,
    /// A predictor fitted in one domain stays valid in the other.
    pub transportable: bool,
    /// The edge head is the image or one of its ancestors.
    pub affects_image: bool,
    /// The edge head is the target or one of its ancestors.
    pub affects_target: bool,
    /// Role node through which a non-role edge head was classified.
    pub via_role: Option<NodeRole>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShiftScan {
    pub direction: PredictiveDirection,
    pub findings: Vec<ShiftFinding>,
    pub warnings: Vec<String>,
}

/// Classifies every outgoing edge of every domain indicator.
///
/// The edge head's role, together with the predictive direction, decides the
/// type. Heads without a role are classified by the single kind of role node
/// they reach along role-free directed paths; anything else is reported as
/// unclassified.
pub fn detect_dataset_shifts(diagram: &CausalDiagram) -> Result<ShiftScan, TaxonomyError> {
    let direction = classify_direction(diagram)?;
    let image = diagram.index_of(&diagram.node_with_role(NodeRole::Image).unwrap().id).unwrap();
    let target = diagram.index_of(&diagram.node_with_role(NodeRole::Target).unwrap().id).unwrap();

    let mut findings = Vec::new();
    let mut warnings = Vec::new();
    let domains: Vec<usize> = (0..diagram.len())
        .filter(|&i| diagram.nodes()[i].kind == NodeKind::DomainIndicator)
        .collect();
    if domains.is_empty() {
        warnings.push("NO_DOMAIN_NODE: diagram has no domain indicator; no dataset shift analysed".to_string());
    }

    for &d in &domains {
        for &head in diagram.child_indices(d) {
            let node = &diagram.nodes()[head];
            let affects_image = head == image || diagram.descendant_mask(head)[image];
            let affects_target = head == target || diagram.descendant_mask(head)[target];
            let mut note = None;

            let (role, via_role) = if node.kind == NodeKind::Selection {
                note = Some("domain indicator points at a selection node; no taxonomy entry applies".to_string());
                (None, None)
            } else if node.kind == NodeKind::DomainIndicator {
                note = Some("domain indicator points at another domain indicator".to_string());
                (None, None)
            } else if node.role != NodeRole::None {
                (Some(node.role), None)
            } else {
                let reach = direct_role_reach(diagram, head, true);
                if reach.len() == 1 {
                    let r = *reach.iter().next().unwrap();
                    (Some(r), Some(r))
                } else {
                    if reach.len() > 1 {
                        let names: Vec<&str> = reach.iter().filter_map(|r| r.keyword()).collect();
                        note = Some(format!(
                            "`{}` directly influences several role nodes ({}); mechanisms overlap",
                            node.id,
                            names.join(", ")
                        ));
                    } else {
                        note = Some(format!("`{}` does not reach image, target or anatomy", node.id));
                    }
                    (None, None)
                }
            };

            let shift_type = match (role, direction.kind) {
                (Some(NodeRole::Image), _) => ShiftType::AcquisitionShift,
                (Some(NodeRole::Anatomy), DirectionKind::Causal) => ShiftType::PopulationShift,
                (Some(NodeRole::Anatomy), DirectionKind::Anticausal | DirectionKind::Confounded) => {
                    ShiftType::ManifestationShift
                }
                (Some(NodeRole::Target), DirectionKind::Causal) => ShiftType::AnnotationShift,
                (Some(NodeRole::Target), DirectionKind::Anticausal | DirectionKind::Confounded) => {
                    ShiftType::PrevalenceShift
                }
                (Some(_), DirectionKind::Unrelated) => {
                    note = Some("image and target are causally unrelated; no direction-specific label".to_string());
                    ShiftType::UnclassifiedExogenous
                }
                _ => ShiftType::UnclassifiedExogenous,
            };
            if direction.kind == DirectionKind::Confounded
                && matches!(shift_type, ShiftType::ManifestationShift | ShiftType::PrevalenceShift)
            {
                note = Some("image and target are confounded; labelled as in the anticausal case".to_string());
            }

            findings.push(ShiftFinding {
                shift_type,
                domain_node: diagram.id(d).to_string(),
                mechanism_edge: edge_between(diagram, d, head),
                changed_factor: shift_type.changed_factor(),
                transportable: shift_type == ShiftType::PopulationShift,
                affects_image,
                affects_target,
                via_role,
                note,
            });
        }
    }
    Ok(ShiftScan {
        direction,
        findings,
        warnings,
    })
}
