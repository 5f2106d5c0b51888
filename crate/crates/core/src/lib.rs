//! Spectral theory of graphs with a prescribed equitable partition.
//!
//! A graph is *S-regular* when its vertices split into cells `V_1..V_k` such
//! that every vertex of `V_i` has exactly `s_ij` neighbours in `V_j`. The
//! crate covers the whole pipeline around such graphs:
//!
//! | module | purpose |
//! |--------|---------|
//! | [`quotient`] | parse and validate `S` (with optional edge weights `F`, vertex weights `b`), balance equations, quotient eigenpairs |
//! | [`graphs`] | deterministic construction, configuration-model sampling, equitable-partition checks, color refinement, ball statistics, tree balls |
//! | [`matrices`] | S-regular matrices, dense eigendecomposition, S/bulk classification, empirical spectral statistics |
//! | [`treewalks`] | closed-walk counts on the universal cover, generating functions by Newton continuation, Stieltjes inversion |
//! | [`bounds`] | expander-mixing, induced-subgraph, walk-avoidance, Alon–Boppana and diameter inequalities |
//!
//! Data-parallel loops (ensembles, grid evaluations, fuzz trials) go through
//! [`exec::Execution`]; with the default `parallel` feature they run on rayon,
//! otherwise everything is sequential.

pub mod bounds;
pub mod catalog;
pub mod error;
pub mod exec;
pub mod graphs;
mod linalg;
pub mod matrices;
pub mod output;
pub mod quotient;
pub mod rng;
pub mod treewalks;

pub use error::{Error, Result};
pub use exec::Execution;
pub use graphs::{Graph, PartitionedGraph, TreeBall};
pub use matrices::{ClassifiedSpectrum, MatrixKind, SRegularMatrix};
pub use quotient::{QuotientEigen, QuotientSpec, RawQuotientSpec, ValidationReport};
pub use treewalks::{DensityCurve, GfEvaluator, WalkTable, Weights};
