//! Helpers shared by the integration tests: corpus access and a
//! from-scratch enumeration oracle that only reads the raw tables.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use cdiag::bn::{attach_model, BnModel};
use cdiag::{parse_dsl, CausalDiagram};

pub const CORPUS: [&str; 14] = [
    "brain_tumour",
    "scaffold",
    "scaffold_aware",
    "selection_a",
    "selection_b",
    "selection_c",
    "selection_d",
    "shift_a",
    "shift_b",
    "shift_c",
    "shift_d",
    "shift_e",
    "shift_f",
    "skin_lesion",
];

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_text(name: &str, ext: &str) -> String {
    let p = corpus_dir().join(format!("{name}.{ext}"));
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn corpus_diagram(name: &str) -> CausalDiagram {
    parse_dsl(&corpus_text(name, "cdsl")).unwrap_or_else(|e| panic!("{name}: {e:?}"))
}

pub fn corpus_model(name: &str) -> BnModel {
    let d = corpus_diagram(name);
    attach_model(&d, &corpus_text(name, "cpt")).unwrap_or_else(|e| panic!("{name}: {e:?}"))
}

/// Joint distribution as a map from full assignment (state names keyed by
/// variable id) to probability, built by looping over every assignment and
/// multiplying the matching CPT rows found by name.
pub struct Oracle {
    pub vars: Vec<(String, Vec<String>)>,
    pub joint: Vec<(Vec<usize>, f64)>,
}

impl Oracle {
    pub fn new(model: &BnModel) -> Oracle {
        let vars: Vec<(String, Vec<String>)> =
            model.variables().iter().map(|v| (v.id.clone(), v.states.clone())).collect();
        let pos: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.0.as_str(), i)).collect();
        let mut joint = Vec::new();
        let mut a = vec![0usize; vars.len()];
        loop {
            let mut p = 1.0;
            for cpt in model.cpts() {
                let child = pos[cpt.node.as_str()];
                let want: Vec<&str> =
                    cpt.parents.iter().map(|q| vars[pos[q.as_str()]].1[a[pos[q.as_str()]]].as_str()).collect();
                let row = cpt
                    .rows
                    .iter()
                    .find(|r| r.parent_states.iter().map(String::as_str).eq(want.iter().copied()))
                    .expect("row for every parent configuration");
                p *= row.probs[a[child]];
            }
            joint.push((a.clone(), p));
            // odometer
            let mut i = vars.len();
            loop {
                if i == 0 {
                    return Oracle { vars, joint };
                }
                i -= 1;
                a[i] += 1;
                if a[i] < vars[i].1.len() {
                    break;
                }
                a[i] = 0;
            }
        }
    }

    pub fn index(&self, id: &str) -> usize {
        self.vars.iter().position(|v| v.0 == id).unwrap_or_else(|| panic!("no variable {id}"))
    }

    pub fn state(&self, id: &str, name: &str) -> usize {
        let i = self.index(id);
        self.vars[i].1.iter().position(|s| s == name).unwrap_or_else(|| panic!("no state {id}={name}"))
    }

    /// Unnormalised mass of assignments matching `evidence` (index, state).
    pub fn mass(&self, evidence: &[(usize, usize)]) -> f64 {
        self.joint
            .iter()
            .filter(|(a, _)| evidence.iter().all(|&(v, s)| a[v] == s))
            .map(|(_, p)| p)
            .sum()
    }

    /// P(target | evidence) as a vector over the target's states.
    pub fn conditional(&self, target: usize, evidence: &[(usize, usize)]) -> Vec<f64> {
        let z = self.mass(evidence);
        (0..self.vars[target].1.len())
            .map(|s| {
                let mut ev = evidence.to_vec();
                ev.push((target, s));
                self.mass(&ev) / z
            })
            .collect()
    }

    /// I(a; b | c) in nats, straight from the definition.
    pub fn cmi(&self, a: usize, b: usize, c: &[usize]) -> f64 {
        let mut pabc: BTreeMap<(usize, usize, Vec<usize>), f64> = BTreeMap::new();
        for (x, p) in &self.joint {
            let key = (x[a], x[b], c.iter().map(|&v| x[v]).collect());
            *pabc.entry(key).or_default() += p;
        }
        let mut pc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut pac: BTreeMap<(usize, Vec<usize>), f64> = BTreeMap::new();
        let mut pbc: BTreeMap<(usize, Vec<usize>), f64> = BTreeMap::new();
        for ((x, y, z), p) in &pabc {
            *pc.entry(z.clone()).or_default() += p;
            *pac.entry((*x, z.clone())).or_default() += p;
            *pbc.entry((*y, z.clone())).or_default() += p;
        }
        pabc.iter()
            .filter(|(_, &p)| p > 0.0)
            .map(|((x, y, z), &p)| p * (p * pc[z] / (pac[&(*x, z.clone())] * pbc[&(*y, z.clone())])).ln())
            .sum()
    }
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Every simple path between `a` and `b` in the skeleton, checked for being
/// blocked by `z` node by node. `parents[v]` lists v's parents.
pub fn brute_force_separated(parents: &[Vec<usize>], a: usize, b: usize, z: &[usize]) -> bool {
    let n = parents.len();
    let has_edge = |u: usize, v: usize| parents[v].contains(&u);
    // descendants including self
    let mut desc = vec![vec![false; n]; n];
    for (s, row) in desc.iter_mut().enumerate() {
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            if !row[v] {
                row[v] = true;
                stack.extend((0..n).filter(|&c| has_edge(v, c)));
            }
        }
    }
    let in_z = |v: usize| z.contains(&v);
    let open = |path: &[usize]| {
        path.windows(3).all(|w| {
            let (p, m, q) = (w[0], w[1], w[2]);
            if has_edge(p, m) && has_edge(q, m) {
                (0..n).any(|d| desc[m][d] && in_z(d))
            } else {
                !in_z(m)
            }
        })
    };
    fn walk(
        v: usize,
        b: usize,
        path: &mut Vec<usize>,
        adj: &dyn Fn(usize, usize) -> bool,
        n: usize,
        open: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        if v == b {
            return open(path);
        }
        for w in 0..n {
            if adj(v, w) && !path.contains(&w) {
                path.push(w);
                if walk(w, b, path, adj, n, open) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    let adj = |u: usize, v: usize| has_edge(u, v) || has_edge(v, u);
    !walk(a, b, &mut vec![a], &adj, n, &open)
}

/// DSL text for a DAG over nodes `N0..N{n-1}` with the given parents.
pub fn dag_dsl(parents: &[Vec<usize>]) -> String {
    let mut s = String::from("diagram \"g\" {\n");
    for i in 0..parents.len() {
        s += &format!("  node N{i}\n");
    }
    for (v, ps) in parents.iter().enumerate() {
        for p in ps {
            s += &format!("  edge N{p} -> N{v}\n");
        }
    }
    s + "}\n"
}

/// Binary CPT text for the same DAG; `probs[v][row]` is P(N_v = 1 | row).
pub fn dag_cpt(parents: &[Vec<usize>], probs: &[Vec<f64>]) -> String {
    let mut s = String::from("model for \"g\"\n");
    for i in 0..parents.len() {
        s += &format!("var N{i} states 0, 1\n");
    }
    for (v, ps) in parents.iter().enumerate() {
        s += &format!("cpt N{v}");
        if !ps.is_empty() {
            let names: Vec<String> = ps.iter().map(|p| format!("N{p}")).collect();
            s += &format!(" given {}", names.join(", "));
        }
        s.push('\n');
        for (r, &p1) in probs[v].iter().enumerate() {
            let bits: Vec<String> =
                (0..ps.len()).map(|k| ((r >> (ps.len() - 1 - k)) & 1).to_string()).collect();
            s += &format!("  row {} : {} {}\n", bits.join(", "), 1.0 - p1, p1);
        }
    }
    s
}
