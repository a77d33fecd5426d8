use crate::diagram::{CausalDiagram, NodeKind};

use super::quote;

/// Renders the diagram as a Graphviz digraph.
///
/// Shapes: ellipse for observed, dashed ellipse for unobserved, box for
/// domain indicators and doublecircle for selection nodes.
pub fn export_dot(diagram: &CausalDiagram) -> String {
    let mut out = format!("digraph {} {{\n", quote(diagram.name()));
    for node in diagram.nodes() {
        let shape = match node.kind {
            NodeKind::Observed | NodeKind::Unobserved => "ellipse",
            NodeKind::DomainIndicator => "box",
            NodeKind::Selection => "doublecircle",
        };
        let label = node.label.as_deref().unwrap_or(&node.id);
        let mut attrs = vec![format!("shape={shape}")];
        if node.kind == NodeKind::Unobserved {
            attrs.push("style=dashed".to_string());
        }
        attrs.push(format!("label={}", quote(label)));
        out.push_str(&format!("  {} [{}];\n", quote(&node.id), attrs.join(", ")));
    }
    for edge in diagram.edges() {
        out.push_str(&format!("  {} -> {};\n", quote(&edge.from), quote(&edge.to)));
    }
    out.push_str("}\n");
    out
}
