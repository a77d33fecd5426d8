use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use super::{prediction_roles, TaxonomyError};
use crate::diagram::{mask_to_indices, CausalDiagram, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionKind {
    /// Image causes target: predicting effect from cause.
    Causal,
    /// Target causes image: predicting cause from effect.
    Anticausal,
    /// No directed path either way, but a shared ancestor.
    Confounded,
    Unrelated,
}

impl fmt::Display for DirectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DirectionKind::Causal => "causal",
            DirectionKind::Anticausal => "anticausal",
            DirectionKind::Confounded => "confounded",
            DirectionKind::Unrelated => "unrelated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DirectionEvidence {
    DirectedPath { nodes: Vec<String> },
    CommonAncestor { node: String },
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredictiveDirection {
    pub kind: DirectionKind,
    pub evidence: DirectionEvidence,
}

/// Shortest directed path `from => to`, preferring smaller ids on ties.
fn directed_path(diagram: &CausalDiagram, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; diagram.len()];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &c in diagram.child_indices(v) {
            if prev[c] == usize::MAX {
                prev[c] = v;
                queue.push_back(c);
            }
        }
    }
    None
}

/// Classifies the image → target prediction task.
///
/// Domain indicators are ignored as common ancestors: they mark environment
/// changes, not shared causes.
pub fn classify_direction(diagram: &CausalDiagram) -> Result<PredictiveDirection, TaxonomyError> {
    let (image, target) = prediction_roles(diagram)?;
    let ids = |p: Vec<usize>| p.into_iter().map(|i| diagram.id(i).to_string()).collect();

    if let Some(path) = directed_path(diagram, image, target) {
        return Ok(PredictiveDirection {
            kind: DirectionKind::Causal,
            evidence: DirectionEvidence::DirectedPath { nodes: ids(path) },
        });
    }
    if let Some(path) = directed_path(diagram, target, image) {
        return Ok(PredictiveDirection {
            kind: DirectionKind::Anticausal,
            evidence: DirectionEvidence::DirectedPath { nodes: ids(path) },
        });
    }
    let image_anc = diagram.ancestor_mask(image);
    let target_anc = diagram.ancestor_mask(target);
    let shared: Vec<usize> = mask_to_indices(
        &image_anc
            .iter()
            .zip(&target_anc)
            .map(|(a, b)| *a && *b)
            .collect::<Vec<_>>(),
    );
    // node indices follow id order, so the first match is the smallest id
    if let Some(&c) = shared
        .iter()
        .find(|&&c| diagram.nodes()[c].kind != NodeKind::DomainIndicator)
    {
        return Ok(PredictiveDirection {
            kind: DirectionKind::Confounded,
            evidence: DirectionEvidence::CommonAncestor {
                node: diagram.id(c).to_string(),
            },
        });
    }
    Ok(PredictiveDirection {
        kind: DirectionKind::Unrelated,
        evidence: DirectionEvidence::None,
    })
}
