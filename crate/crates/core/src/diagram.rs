//! Typed causal diagrams and their structural validation.
//!
//! A [`CausalDiagram`] is an immutable DAG over typed nodes. Construction goes
//! through [`build_diagram`], which collects every structural violation into a
//! [`ValidationReport`] instead of stopping at the first one.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Observed,
    Unobserved,
    DomainIndicator,
    Selection,
}

impl NodeKind {
    /// Keyword used by the diagram DSL.
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Observed => "observed",
            NodeKind::Unobserved => "unobserved",
            NodeKind::DomainIndicator => "domain",
            NodeKind::Selection => "selection",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "observed" => Some(NodeKind::Observed),
            "unobserved" => Some(NodeKind::Unobserved),
            "domain" => Some(NodeKind::DomainIndicator),
            "selection" => Some(NodeKind::Selection),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    /// The acquired image (model input).
    Image,
    /// The prediction target.
    Target,
    /// The unobserved true anatomy the image measures.
    Anatomy,
    None,
}

impl NodeRole {
    pub fn keyword(self) -> Option<&'static str> {
        match self {
            NodeRole::Image => Some("image"),
            NodeRole::Target => Some("target"),
            NodeRole::Anatomy => Some("anatomy"),
            NodeRole::None => None,
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "image" => Some(NodeRole::Image),
            "target" => Some(NodeRole::Target),
            "anatomy" => Some(NodeRole::Anatomy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub role: NodeRole,
    pub label: Option<String>,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Node {
            id: id.into(),
            kind,
            role: NodeRole::None,
            label: None,
        }
    }

    pub fn observed(id: impl Into<String>) -> Self {
        Node::new(id, NodeKind::Observed)
    }

    pub fn with_role(mut self, role: NodeRole) -> Self {
        self.role = role;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

impl Edge {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Edge {
            from: from.into(),
            to: to.into(),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    #[default]
    Strict,
    /// Downgrades incoming edges on domain indicators to warnings.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueCode {
    #[serde(rename = "CYCLE")]
    Cycle,
    #[serde(rename = "DUP_ID")]
    DupId,
    #[serde(rename = "DANGLING_EDGE")]
    DanglingEdge,
    #[serde(rename = "SELECTION_OUT_EDGE")]
    SelectionOutEdge,
    #[serde(rename = "DOMAIN_IN_EDGE")]
    DomainInEdge,
    #[serde(rename = "DUP_ROLE")]
    DupRole,
    #[serde(rename = "INVALID_ID")]
    InvalidId,
    #[serde(rename = "ROLE_KIND")]
    RoleKind,
    #[serde(rename = "SELF_LOOP")]
    SelfLoop,
    #[serde(rename = "DUP_EDGE")]
    DupEdge,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::Cycle => "CYCLE",
            IssueCode::DupId => "DUP_ID",
            IssueCode::DanglingEdge => "DANGLING_EDGE",
            IssueCode::SelectionOutEdge => "SELECTION_OUT_EDGE",
            IssueCode::DomainInEdge => "DOMAIN_IN_EDGE",
            IssueCode::DupRole => "DUP_ROLE",
            IssueCode::InvalidId => "INVALID_ID",
            IssueCode::RoleKind => "ROLE_KIND",
            IssueCode::SelfLoop => "SELF_LOOP",
            IssueCode::DupEdge => "DUP_EDGE",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One validation problem and the element it concerns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub message: String,
    /// Offending node id or rendered edge (`a -> b`).
    pub element: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.code, self.element, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|e| e.code == code)
    }

    fn error(&mut self, code: IssueCode, element: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue {
            code,
            message: message.into(),
            element: element.into(),
        });
    }

    fn warning(&mut self, code: IssueCode, element: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue {
            code,
            message: message.into(),
            element: element.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error[{}] {}: {}", e.code, e.element, e.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning[{}] {}: {}", w.code, w.element, w.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("UNKNOWN_NODE: no node with id `{0}`")]
    UnknownNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Parents,
    Children,
    Ancestors,
    Descendants,
}

/// Returns true when `s` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An immutable, validated causal diagram.
///
/// Nodes are stored sorted by id, so node indices follow lexicographic id
/// order. Equality is structural: name, node ids with kinds and roles, and the
/// edge set. Labels and warnings do not participate.
#[derive(Debug, Clone)]
pub struct CausalDiagram {
    name: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    warnings: Vec<Issue>,
}

impl PartialEq for CausalDiagram {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.edges == other.edges
            && self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| a.id == b.id && a.kind == b.kind && a.role == b.role)
    }
}

impl Eq for CausalDiagram {}

/// Validates nodes and edges and builds a diagram.
///
/// All violations are collected. On success any warnings (lenient mode) are
/// kept on the diagram and exposed through [`CausalDiagram::warnings`].
pub fn build_diagram(
    name: impl Into<String>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    mode: ValidationMode,
) -> Result<CausalDiagram, ValidationReport> {
    let name = name.into();
    let mut report = ValidationReport::default();

    let mut seen: HashMap<&str, &Node> = HashMap::new();
    for node in &nodes {
        if !is_identifier(&node.id) {
            report.error(
                IssueCode::InvalidId,
                &node.id,
                format!("`{}` is not a valid identifier", node.id),
            );
        }
        if seen.insert(node.id.as_str(), node).is_some() {
            report.error(IssueCode::DupId, &node.id, format!("node `{}` declared more than once", node.id));
        }
        if node.role != NodeRole::None
            && !matches!(node.kind, NodeKind::Observed | NodeKind::Unobserved)
        {
            report.error(
                IssueCode::RoleKind,
                &node.id,
                format!(
                    "node `{}` of kind {} cannot carry a role",
                    node.id,
                    node.kind.keyword()
                ),
            );
        }
    }

    for role in [NodeRole::Image, NodeRole::Target, NodeRole::Anatomy] {
        let holders: Vec<&str> = nodes
            .iter()
            .filter(|n| n.role == role)
            .map(|n| n.id.as_str())
            .collect();
        if holders.len() > 1 {
            report.error(
                IssueCode::DupRole,
                holders.join(", "),
                format!(
                    "role `{}` assigned to {} nodes",
                    role.keyword().unwrap_or("none"),
                    holders.len()
                ),
            );
        }
    }

    let mut edge_set: HashSet<(&str, &str)> = HashSet::new();
    let mut usable_edges: Vec<&Edge> = Vec::new();
    for edge in &edges {
        let mut usable = true;
        for end in [&edge.from, &edge.to] {
            if !seen.contains_key(end.as_str()) {
                report.error(
                    IssueCode::DanglingEdge,
                    edge.to_string(),
                    format!("edge endpoint `{end}` is not a declared node"),
                );
                usable = false;
            }
        }
        if edge.from == edge.to {
            report.error(IssueCode::SelfLoop, edge.to_string(), "edge connects a node to itself");
            usable = false;
        }
        if !edge_set.insert((edge.from.as_str(), edge.to.as_str())) {
            report.error(IssueCode::DupEdge, edge.to_string(), "edge declared more than once");
            usable = false;
        }
        if let Some(src) = seen.get(edge.from.as_str()) {
            if src.kind == NodeKind::Selection {
                report.error(
                    IssueCode::SelectionOutEdge,
                    edge.to_string(),
                    format!("selection node `{}` cannot have outgoing edges", edge.from),
                );
            }
        }
        if let Some(dst) = seen.get(edge.to.as_str()) {
            if dst.kind == NodeKind::DomainIndicator {
                let msg = format!("domain indicator `{}` should be a root node", edge.to);
                match mode {
                    ValidationMode::Strict => report.error(IssueCode::DomainInEdge, edge.to_string(), msg),
                    ValidationMode::Lenient => report.warning(IssueCode::DomainInEdge, edge.to_string(), msg),
                }
            }
        }
        if usable {
            usable_edges.push(edge);
        }
    }

    if let Some(cycle) = find_cycle(&usable_edges) {
        report.error(
            IssueCode::Cycle,
            cycle.join(" -> "),
            "edge set contains a directed cycle",
        );
    }

    if !report.is_accepted() {
        return Err(report);
    }

    let mut nodes = nodes;
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let mut edges = edges;
    edges.sort();
    let index: HashMap<String, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.clone(), i))
        .collect();
    let mut parents = vec![Vec::new(); nodes.len()];
    let mut children = vec![Vec::new(); nodes.len()];
    for e in &edges {
        let (f, t) = (index[&e.from], index[&e.to]);
        children[f].push(t);
        parents[t].push(f);
    }
    for list in parents.iter_mut().chain(children.iter_mut()) {
        list.sort_unstable();
    }

    let diagram = CausalDiagram {
        name,
        nodes,
        edges,
        index,
        parents,
        children,
        warnings: report.warnings,
    };
    debug_assert_eq!(diagram.topological_order().len(), diagram.nodes.len());
    Ok(diagram)
}

/// Finds one directed cycle, returned as a closed node sequence.
fn find_cycle(edges: &[&Edge]) -> Option<Vec<String>> {
    let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut verts: BTreeSet<&str> = BTreeSet::new();
    for e in edges {
        adj.entry(e.from.as_str()).or_default().push(e.to.as_str());
        verts.insert(&e.from);
        verts.insert(&e.to);
    }
    for list in adj.values_mut() {
        list.sort_unstable();
    }

    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: HashMap<&str, u8> = HashMap::new();
    for &start in &verts {
        if state.get(start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
        state.insert(start, 1);
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let succ = adj.get(v).map(Vec::as_slice).unwrap_or(&[]);
            if *next < succ.len() {
                let w = succ[*next];
                *next += 1;
                match state.get(w).copied().unwrap_or(0) {
                    0 => {
                        state.insert(w, 1);
                        stack.push((w, 0));
                    }
                    1 => {
                        let pos = stack.iter().position(|&(u, _)| u == w).unwrap();
                        let mut cycle: Vec<String> =
                            stack[pos..].iter().map(|&(u, _)| u.to_string()).collect();
                        cycle.push(w.to_string());
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state.insert(v, 2);
                stack.pop();
            }
        }
    }
    None
}

impl CausalDiagram {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Nodes sorted by id.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Edges sorted by `(from, to)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn warnings(&self) -> &[Issue] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn require(&self, id: &str) -> Result<usize, DiagramError> {
        self.index_of(id)
            .ok_or_else(|| DiagramError::UnknownNode(id.to_string()))
    }

    pub fn id(&self, index: usize) -> &str {
        &self.nodes[index].id
    }

    pub fn parent_indices(&self, index: usize) -> &[usize] {
        &self.parents[index]
    }

    pub fn child_indices(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children[from].binary_search(&to).is_ok()
    }

    /// The node carrying `role`, if any.
    pub fn node_with_role(&self, role: NodeRole) -> Option<&Node> {
        if role == NodeRole::None {
            return None;
        }
        self.nodes.iter().find(|n| n.role == role)
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }

    /// Ancestors of `index` as a membership mask, excluding `index` itself.
    pub fn ancestor_mask(&self, index: usize) -> Vec<bool> {
        self.closure(index, &self.parents)
    }

    /// Descendants of `index` as a membership mask, excluding `index` itself.
    pub fn descendant_mask(&self, index: usize) -> Vec<bool> {
        self.closure(index, &self.children)
    }

    fn closure(&self, start: usize, adj: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = adj[start].clone();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend_from_slice(&adj[v]);
            }
        }
        seen
    }

    pub fn relatives(&self, id: &str, relation: Relation) -> Result<BTreeSet<String>, DiagramError> {
        let i = self.require(id)?;
        let members: Vec<usize> = match relation {
            Relation::Parents => self.parents[i].clone(),
            Relation::Children => self.children[i].clone(),
            Relation::Ancestors => mask_to_indices(&self.ancestor_mask(i)),
            Relation::Descendants => mask_to_indices(&self.descendant_mask(i)),
        };
        Ok(members.into_iter().map(|j| self.nodes[j].id.clone()).collect())
    }

    /// Topological order; ties broken by smallest node id.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    fn parts(&self) -> (Vec<Node>, Vec<Edge>) {
        (self.nodes.clone(), self.edges.clone())
    }

    /// Returns a new diagram with `node` added.
    pub fn with_node(&self, node: Node, mode: ValidationMode) -> Result<CausalDiagram, ValidationReport> {
        let (mut nodes, edges) = self.parts();
        nodes.push(node);
        build_diagram(self.name.clone(), nodes, edges, mode)
    }

    /// Returns a new diagram with `edge` added.
    pub fn with_edge(&self, edge: Edge, mode: ValidationMode) -> Result<CausalDiagram, ValidationReport> {
        let (nodes, mut edges) = self.parts();
        edges.push(edge);
        build_diagram(self.name.clone(), nodes, edges, mode)
    }

    /// Returns a new diagram with `edge` removed (no-op when absent).
    pub fn without_edge(&self, edge: &Edge, mode: ValidationMode) -> Result<CausalDiagram, ValidationReport> {
        let (nodes, mut edges) = self.parts();
        edges.retain(|e| e != edge);
        build_diagram(self.name.clone(), nodes, edges, mode)
    }
}

pub(crate) fn mask_to_indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect()
}
