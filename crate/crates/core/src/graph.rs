//! Path semantics and d-separation.
//!
//! The boolean d-separation answer comes from a linear-time reachability pass
//! over `(node, direction)` states. Explicit path enumeration is only used to
//! produce witness paths for reports, and is capped.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::diagram::{CausalDiagram, DiagramError, NodeKind};

/// Default number of witness paths reported by [`d_separated`].
pub const DEFAULT_WITNESS_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("UNKNOWN_NODE: no node with id `{0}`")]
    UnknownNode(String),
    #[error("OVERLAPPING_SETS: `{0}` appears in more than one of the query sets")]
    OverlappingSets(String),
    #[error("EMPTY_SET: the {0} set must not be empty")]
    EmptySet(&'static str),
}

impl From<DiagramError> for GraphError {
    fn from(e: DiagramError) -> Self {
        match e {
            DiagramError::UnknownNode(id) => GraphError::UnknownNode(id),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrow {
    /// The edge points from `nodes[i]` to `nodes[i + 1]`.
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Path {
    pub nodes: Vec<String>,
    pub arrows: Vec<Arrow>,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.nodes[0])?;
        for (node, arrow) in self.nodes[1..].iter().zip(&self.arrows) {
            let sym = match arrow {
                Arrow::Forward => "->",
                Arrow::Backward => "<-",
            };
            write!(f, " {sym} {node}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathList {
    pub paths: Vec<Path>,
    /// More open paths exist beyond the cap.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeparationResult {
    pub separated: bool,
    /// Open paths witnessing d-connection; empty when separated.
    pub witnesses: Vec<Path>,
    pub truncated: bool,
}

/// A pairwise d-separation statement `a ⊥ b | given`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Independence {
    pub a: String,
    pub b: String,
    pub given: Vec<String>,
}

impl fmt::Display for Independence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} _||_ {} | {{{}}}", self.a, self.b, self.given.join(", "))
    }
}

fn resolve<S: AsRef<str>>(diagram: &CausalDiagram, ids: &[S]) -> Result<Vec<usize>, GraphError> {
    let mut out: Vec<usize> = ids
        .iter()
        .map(|s| diagram.require(s.as_ref()).map_err(GraphError::from))
        .collect::<Result<_, _>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Marks every node that is in `given` or has a descendant in `given`.
fn activation_mask(diagram: &CausalDiagram, given: &[bool]) -> Vec<bool> {
    let mut mask = given.to_vec();
    let mut queue: Vec<usize> = (0..diagram.len()).filter(|&i| given[i]).collect();
    while let Some(v) = queue.pop() {
        for &p in diagram.parent_indices(v) {
            if !mask[p] {
                mask[p] = true;
                queue.push(p);
            }
        }
    }
    mask
}

/// Nodes reachable from `sources` along trails that are active given `given`.
///
/// Sources themselves are included. Runs in O(V + E).
pub fn reachable(diagram: &CausalDiagram, sources: &[usize], given: &[bool]) -> Vec<bool> {
    let n = diagram.len();
    let active = activation_mask(diagram, given);
    // visited[2 * v] = arrived from a child (moving up), [2 * v + 1] = from a parent
    let mut visited = vec![false; 2 * n];
    let mut reached = vec![false; n];
    let mut queue: VecDeque<(usize, bool)> = sources.iter().map(|&s| (s, true)).collect();

    while let Some((v, up)) = queue.pop_front() {
        let slot = 2 * v + usize::from(!up);
        if visited[slot] {
            continue;
        }
        visited[slot] = true;
        if !given[v] {
            reached[v] = true;
        }
        if up {
            if !given[v] {
                queue.extend(diagram.parent_indices(v).iter().map(|&p| (p, true)));
                queue.extend(diagram.child_indices(v).iter().map(|&c| (c, false)));
            }
        } else {
            if !given[v] {
                queue.extend(diagram.child_indices(v).iter().map(|&c| (c, false)));
            }
            if active[v] {
                queue.extend(diagram.parent_indices(v).iter().map(|&p| (p, true)));
            }
        }
    }
    reached
}

/// Boolean d-separation on node indices.
pub fn is_d_separated(diagram: &CausalDiagram, a: &[usize], b: &[usize], given: &[usize]) -> bool {
    let mut mask = vec![false; diagram.len()];
    for &c in given {
        mask[c] = true;
    }
    let reached = reachable(diagram, a, &mask);
    !b.iter().any(|&v| reached[v])
}

fn check_disjoint(diagram: &CausalDiagram, sets: [&[usize]; 3]) -> Result<(), GraphError> {
    let mut owner = vec![usize::MAX; diagram.len()];
    for (k, set) in sets.iter().enumerate() {
        for &v in *set {
            if owner[v] != usize::MAX && owner[v] != k {
                return Err(GraphError::OverlappingSets(diagram.id(v).to_string()));
            }
            owner[v] = k;
        }
    }
    Ok(())
}

/// Decides whether `a` and `b` are d-separated given `given`.
///
/// When they are not, up to [`DEFAULT_WITNESS_CAP`] open paths are attached,
/// ordered by `(a, b)` pair and then lexicographically.
pub fn d_separated<S: AsRef<str>>(
    diagram: &CausalDiagram,
    a: &[S],
    b: &[S],
    given: &[S],
) -> Result<SeparationResult, GraphError> {
    d_separated_with_cap(diagram, a, b, given, DEFAULT_WITNESS_CAP)
}

pub fn d_separated_with_cap<S: AsRef<str>>(
    diagram: &CausalDiagram,
    a: &[S],
    b: &[S],
    given: &[S],
    cap: usize,
) -> Result<SeparationResult, GraphError> {
    let (a, b, c) = (resolve(diagram, a)?, resolve(diagram, b)?, resolve(diagram, given)?);
    if a.is_empty() {
        return Err(GraphError::EmptySet("A"));
    }
    if b.is_empty() {
        return Err(GraphError::EmptySet("B"));
    }
    check_disjoint(diagram, [&a, &b, &c])?;

    if is_d_separated(diagram, &a, &b, &c) {
        return Ok(SeparationResult {
            separated: true,
            witnesses: Vec::new(),
            truncated: false,
        });
    }
    let mut mask = vec![false; diagram.len()];
    for &v in &c {
        mask[v] = true;
    }
    let active = activation_mask(diagram, &mask);
    let mut witnesses = Vec::new();
    let mut truncated = false;
    'outer: for &x in &a {
        for &y in &b {
            let remaining = cap - witnesses.len();
            let (found, more) = enumerate_open_paths(diagram, x, y, &mask, &active, remaining);
            witnesses.extend(found);
            if more {
                truncated = true;
                break 'outer;
            }
        }
    }
    Ok(SeparationResult {
        separated: false,
        witnesses,
        truncated,
    })
}

/// All open paths between `a` and `b` given `given`, lexicographic, up to `cap`.
pub fn open_paths<S: AsRef<str>>(
    diagram: &CausalDiagram,
    a: &str,
    b: &str,
    given: &[S],
    cap: usize,
) -> Result<PathList, GraphError> {
    let x = diagram.require(a)?;
    let y = diagram.require(b)?;
    let c = resolve(diagram, given)?;
    if x == y {
        return Err(GraphError::OverlappingSets(a.to_string()));
    }
    check_disjoint(diagram, [&[x], &[y], &c])?;
    let mut mask = vec![false; diagram.len()];
    for &v in &c {
        mask[v] = true;
    }
    let active = activation_mask(diagram, &mask);
    let (paths, truncated) = enumerate_open_paths(diagram, x, y, &mask, &active, cap);
    Ok(PathList { paths, truncated })
}

/// Depth-first enumeration of simple open paths, pruning at blocked nodes.
///
/// Neighbours are visited in ascending id order, which yields paths in
/// lexicographic order of their node-id sequences.
fn enumerate_open_paths(
    diagram: &CausalDiagram,
    from: usize,
    to: usize,
    given: &[bool],
    active: &[bool],
    cap: usize,
) -> (Vec<Path>, bool) {
    let n = diagram.len();
    let neighbours: Vec<Vec<(usize, Arrow)>> = (0..n)
        .map(|v| {
            let mut list: Vec<(usize, Arrow)> = diagram
                .child_indices(v)
                .iter()
                .map(|&c| (c, Arrow::Forward))
                .chain(diagram.parent_indices(v).iter().map(|&p| (p, Arrow::Backward)))
                .collect();
            list.sort_unstable_by_key(|&(w, _)| w);
            list
        })
        .collect();

    let mut found = Vec::new();
    let mut on_path = vec![false; n];
    let mut nodes = vec![from];
    let mut arrows: Vec<Arrow> = Vec::new();
    let mut cursor = vec![0usize];
    on_path[from] = true;

    while let Some(&v) = nodes.last() {
        let depth = nodes.len() - 1;
        let i = cursor[depth];
        if i >= neighbours[v].len() {
            on_path[v] = false;
            nodes.pop();
            arrows.pop();
            cursor.pop();
            continue;
        }
        cursor[depth] += 1;
        let (w, arrow) = neighbours[v][i];
        if on_path[w] {
            continue;
        }
        if let Some(&prev_arrow) = arrows.last() {
            // v is interior: collider iff both edges point into v
            let collider = prev_arrow == Arrow::Forward && arrow == Arrow::Backward;
            let open = if collider { active[v] } else { !given[v] };
            if !open {
                continue;
            }
        }
        if w == to {
            if found.len() == cap {
                return (found, true);
            }
            let mut ids: Vec<String> = nodes.iter().map(|&u| diagram.id(u).to_string()).collect();
            ids.push(diagram.id(w).to_string());
            let mut arr = arrows.clone();
            arr.push(arrow);
            found.push(Path { nodes: ids, arrows: arr });
            continue;
        }
        on_path[w] = true;
        nodes.push(w);
        arrows.push(arrow);
        cursor.push(0);
    }
    (found, false)
}

/// Pairwise d-separation statements entailed by the diagram.
///
/// Endpoints range over all nodes; conditioning sets range over subsets of
/// observed nodes of size at most `max_conditioning`. Ordered by pair, then
/// set size, then lexicographically.
pub fn implied_independencies(diagram: &CausalDiagram, max_conditioning: usize) -> Vec<Independence> {
    let n = diagram.len();
    let observed: Vec<usize> = (0..n)
        .filter(|&i| diagram.nodes()[i].kind == NodeKind::Observed)
        .collect();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let pool: Vec<usize> = observed.iter().copied().filter(|&v| v != a && v != b).collect();
            for size in 0..=max_conditioning.min(pool.len()) {
                for subset in combinations(&pool, size) {
                    if is_d_separated(diagram, &[a], &[b], &subset) {
                        out.push(Independence {
                            a: diagram.id(a).to_string(),
                            b: diagram.id(b).to_string(),
                            given: subset.iter().map(|&v| diagram.id(v).to_string()).collect(),
                        });
                    }
                }
            }
        }
    }
    out
}

/// k-subsets of `pool` in lexicographic order.
pub(crate) fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = pool.len();
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| pool[i]).collect());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_dsl;

    fn diagram(body: &str) -> CausalDiagram {
        parse_dsl(&format!("diagram \"t\" {{ {body} }}")).unwrap()
    }

    fn sep(d: &CausalDiagram, a: &str, b: &str, c: &[&str]) -> bool {
        d_separated(d, &[a], &[b], c).unwrap().separated
    }

    #[test]
    fn chain_screening() {
        let d = diagram("node A node B node C edge A -> B edge B -> C");
        assert!(sep(&d, "A", "C", &["B"]));
        assert!(!sep(&d, "A", "C", &[]));
    }

    #[test]
    fn collider_rules() {
        let d = diagram("node A node B node C node E edge A -> B edge C -> B edge B -> E");
        assert!(sep(&d, "A", "C", &[]));
        assert!(!sep(&d, "A", "C", &["B"]));
        assert!(!sep(&d, "A", "C", &["E"]));
    }

    #[test]
    fn witnesses_present_only_when_connected() {
        let d = diagram("node A node B node C edge B -> A edge B -> C");
        let r = d_separated(&d, &["A"], &["C"], &[] as &[&str]).unwrap();
        assert!(!r.separated);
        assert_eq!(r.witnesses.len(), 1);
        assert_eq!(r.witnesses[0].to_string(), "A <- B -> C");
        let r = d_separated(&d, &["A"], &["C"], &["B"]).unwrap();
        assert!(r.separated && r.witnesses.is_empty());
    }

    #[test]
    fn errors() {
        let d = diagram("node A node B");
        assert_eq!(
            d_separated(&d, &["A"], &["Q"], &[] as &[&str]),
            Err(GraphError::UnknownNode("Q".into()))
        );
        assert_eq!(
            d_separated(&d, &["A"], &["B"], &["A"]),
            Err(GraphError::OverlappingSets("A".into()))
        );
        assert_eq!(
            d_separated(&d, &[] as &[&str], &["B"], &[]),
            Err(GraphError::EmptySet("A"))
        );
    }

    #[test]
    fn open_paths_examples() {
        let chain = diagram("node A node B node C edge A -> B edge B -> C");
        assert!(open_paths(&chain, "A", "C", &["B"], 16).unwrap().paths.is_empty());

        let fork = diagram("node A node B node C edge B -> A edge B -> C");
        let list = open_paths(&fork, "A", "C", &[] as &[&str], 16).unwrap();
        assert_eq!(list.paths.len(), 1);
        assert_eq!(list.paths[0].nodes, ["A", "B", "C"]);
        assert_eq!(list.paths[0].arrows, [Arrow::Backward, Arrow::Forward]);

        let berkson = diagram("node X node Y node S kind=selection edge X -> S edge Y -> S");
        let list = open_paths(&berkson, "X", "Y", &["S"], 16).unwrap();
        assert_eq!(list.paths.len(), 1);
        assert_eq!(list.paths[0].to_string(), "X -> S <- Y");
        assert!(!list.truncated);
    }

    #[test]
    fn open_paths_are_lexicographic_and_capped() {
        // a and b joined through three parallel mediators
        let d = diagram(
            "node a node b node m1 node m2 node m3 \
             edge a -> m1 edge a -> m2 edge a -> m3 edge m1 -> b edge m2 -> b edge m3 -> b",
        );
        let all = open_paths(&d, "a", "b", &[] as &[&str], 16).unwrap();
        let seqs: Vec<String> = all.paths.iter().map(|p| p.nodes.join(" ")).collect();
        assert_eq!(seqs, ["a m1 b", "a m2 b", "a m3 b"]);
        let capped = open_paths(&d, "a", "b", &[] as &[&str], 2).unwrap();
        assert_eq!(capped.paths.len(), 2);
        assert!(capped.truncated);
    }

    #[test]
    fn implied_independencies_examples() {
        let chain = diagram("node Z node X node Y edge Z -> X edge X -> Y");
        let ind = implied_independencies(&chain, 1);
        assert!(ind.contains(&Independence {
            a: "Y".into(),
            b: "Z".into(),
            given: vec!["X".into()]
        }));

        let complete = diagram("node a node b node c edge a -> b edge a -> c edge b -> c");
        assert!(implied_independencies(&complete, 2).is_empty());

        let annotation = diagram(
            "node D kind=domain node Z kind=unobserved role=anatomy node X role=image node Y role=target \
             edge Z -> X edge X -> Y edge D -> Y",
        );
        let ind = implied_independencies(&annotation, 1);
        for other in ["X", "Z"] {
            assert!(ind.contains(&Independence {
                a: "D".into(),
                b: other.into(),
                given: vec![]
            }));
        }
        // Z is unobserved, so it never appears in a conditioning set
        assert!(ind.iter().all(|i| !i.given.contains(&"Z".to_string())));
    }

    #[test]
    fn combinations_enumerates_subsets() {
        assert_eq!(combinations(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(&[1, 2], 0), vec![Vec::<usize>::new()]);
        assert!(combinations(&[1], 2).is_empty());
        assert_eq!(combinations(&[4, 5, 6], 3), vec![vec![4, 5, 6]]);
    }
}
