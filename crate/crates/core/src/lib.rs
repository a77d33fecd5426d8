//! Causal and selection diagram analysis for predictive imaging studies.
//!
//! The pipeline is: parse a `.cdsl` diagram ([`dsl`]), validate it
//! ([`diagram`]), query conditional independencies ([`graph`]), classify the
//! prediction task and any dataset-shift or selection mechanisms
//! ([`taxonomy`]), and optionally check every claim numerically against a
//! discrete Bayesian network attached to the same diagram ([`bn`]).

pub mod bn;
pub mod cli;
pub mod diagram;
pub mod dsl;
pub mod graph;
pub mod report;
pub mod taxonomy;

pub use diagram::{build_diagram, CausalDiagram, Edge, Node, NodeKind, NodeRole, Relation, ValidationMode};
pub use dsl::{export_dot, parse_dsl, parse_dsl_with, serialize_dsl, ParseError};
pub use graph::{d_separated, implied_independencies, open_paths, Path, SeparationResult};
