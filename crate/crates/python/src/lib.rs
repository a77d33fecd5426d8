//! Python bindings. Reports cross the boundary as JSON and are decoded with
//! the standard `json` module, so Python sees plain dicts and lists.

use std::collections::HashMap;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};

use cdiag::bn::{self, BnModel, VerifyOptions};
use cdiag::graph;
use cdiag::report;
use cdiag::{CausalDiagram, Relation, ValidationMode};

fn value_error(lines: impl IntoIterator<Item = String>) -> PyErr {
    PyValueError::new_err(lines.into_iter().collect::<Vec<_>>().join("\n"))
}

fn from_json<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A validated causal diagram.
#[pyclass(name = "Diagram", module = "cdiag", frozen)]
struct PyDiagram {
    inner: CausalDiagram,
}

#[pymethods]
impl PyDiagram {
    /// Parses `.cdsl` text. `lenient` downgrades the domain-root and
    /// selection-sink rules to warnings.
    #[staticmethod]
    #[pyo3(signature = (text, lenient = false))]
    fn parse(text: &str, lenient: bool) -> PyResult<Self> {
        let mode = if lenient {
            ValidationMode::Lenient
        } else {
            ValidationMode::Strict
        };
        cdiag::parse_dsl_with(text, mode)
            .map(|inner| PyDiagram { inner })
            .map_err(|errs| value_error(errs.iter().map(|e| e.to_string())))
    }

    #[staticmethod]
    #[pyo3(signature = (path, lenient = false))]
    fn from_file(path: &str, lenient: bool) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Self::parse(&text, lenient)
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    /// Node ids in sorted order.
    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.inner.nodes().iter().map(|n| n.id.clone()).collect()
    }

    #[getter]
    fn edges(&self) -> Vec<(String, String)> {
        self.inner.edges().iter().map(|e| (e.from.clone(), e.to.clone())).collect()
    }

    /// `relation` is one of parents, children, ancestors, descendants.
    fn relatives(&self, node: &str, relation: &str) -> PyResult<Vec<String>> {
        let rel = match relation {
            "parents" => Relation::Parents,
            "children" => Relation::Children,
            "ancestors" => Relation::Ancestors,
            "descendants" => Relation::Descendants,
            other => return Err(PyValueError::new_err(format!("unknown relation `{other}`"))),
        };
        self.inner
            .relatives(node, rel)
            .map(|s| s.into_iter().collect())
            .map_err(|e| PyKeyError::new_err(e.to_string()))
    }

    #[pyo3(signature = (a, b, given = Vec::new()))]
    fn d_separated(&self, a: Vec<String>, b: Vec<String>, given: Vec<String>) -> PyResult<bool> {
        graph::d_separated(&self.inner, &a, &b, &given)
            .map(|r| r.separated)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Open paths between two nodes, rendered like `X -> S <- Y`.
    #[pyo3(signature = (a, b, given = Vec::new(), cap = 16))]
    fn open_paths(&self, a: &str, b: &str, given: Vec<String>, cap: usize) -> PyResult<Vec<String>> {
        graph::open_paths(&self.inner, a, b, &given, cap)
            .map(|l| l.paths.iter().map(|p| p.to_string()).collect())
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[pyo3(signature = (max_conditioning = 2))]
    fn independencies(&self, max_conditioning: usize) -> Vec<(String, String, Vec<String>)> {
        graph::implied_independencies(&self.inner, max_conditioning)
            .into_iter()
            .map(|i| (i.a, i.b, i.given))
            .collect()
    }

    /// Full analysis report as a dict.
    fn analyze<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let r = report::analyze(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))?;
        from_json(py, &r.to_json())
    }

    /// Analysis report rendered as Markdown.
    fn report_markdown(&self) -> PyResult<String> {
        report::analyze(&self.inner)
            .map(|r| r.to_markdown())
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_dsl(&self) -> String {
        cdiag::serialize_dsl(&self.inner)
    }

    fn to_dot(&self) -> String {
        cdiag::export_dot(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Diagram({:?}, {} nodes, {} edges)",
            self.inner.name(),
            self.inner.len(),
            self.inner.edges().len()
        )
    }
}

/// A discrete Bayesian network attached to a diagram.
#[pyclass(name = "Model", module = "cdiag", frozen)]
struct PyModel {
    inner: BnModel,
}

fn evidence_pairs(evidence: &Option<HashMap<String, String>>) -> Vec<(&str, &str)> {
    let mut pairs: Vec<(&str, &str)> = evidence
        .iter()
        .flatten()
        .map(|(k, v)| (k.as_str(), v.as_str()))
        .collect();
    pairs.sort();
    pairs
}

fn bn_error(e: bn::BnError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(diagram: &PyDiagram, cpt_text: &str) -> PyResult<Self> {
        bn::attach_model(&diagram.inner, cpt_text)
            .map(|inner| PyModel { inner })
            .map_err(|errs| value_error(errs.iter().map(|e| e.to_string())))
    }

    #[staticmethod]
    fn from_file(diagram: &PyDiagram, path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Self::new(diagram, &text)
    }

    /// Exact `P(targets | evidence)`, keyed by tuples of state names.
    #[pyo3(signature = (targets, evidence = None))]
    fn query<'py>(
        &self,
        py: Python<'py>,
        targets: Vec<String>,
        evidence: Option<HashMap<String, String>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let t: Vec<&str> = targets.iter().map(String::as_str).collect();
        let dist = self.inner.query(&t, &evidence_pairs(&evidence)).map_err(bn_error)?;
        let out = PyDict::new(py);
        for (states, p) in dist.entries() {
            out.set_item(PyTuple::new(py, states)?, p)?;
        }
        Ok(out)
    }

    /// Conditional mutual information in nats.
    #[pyo3(signature = (a, b, given = Vec::new()))]
    fn cmi(&self, a: &str, b: &str, given: Vec<String>) -> PyResult<f64> {
        let g: Vec<&str> = given.iter().map(String::as_str).collect();
        self.inner.conditional_mutual_information(a, b, &g).map_err(bn_error)
    }

    /// Seeded ancestral samples as CSV text (header first).
    #[pyo3(signature = (n, seed, evidence = None))]
    fn sample_csv(&self, n: usize, seed: u64, evidence: Option<HashMap<String, String>>) -> PyResult<String> {
        self.inner
            .sample(n, seed, &evidence_pairs(&evidence))
            .map(|d| d.to_csv())
            .map_err(bn_error)
    }

    /// Analysis plus numeric verification, as a dict.
    #[pyo3(signature = (delta = bn::verify::DEFAULT_DELTA))]
    fn verify<'py>(&self, py: Python<'py>, delta: f64) -> PyResult<Bound<'py, PyAny>> {
        let options = VerifyOptions {
            delta,
            ..VerifyOptions::default()
        };
        let r = report::analyze_and_verify(&self.inner, &options).map_err(|e| PyValueError::new_err(e.to_string()))?;
        from_json(py, &r.to_json())
    }

    #[getter]
    fn joint_size(&self) -> usize {
        self.inner.joint_size()
    }
}

#[pymodule(name = "cdiag")]
fn cdiag_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDiagram>()?;
    m.add_class::<PyModel>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
