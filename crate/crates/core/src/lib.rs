//! Hard-instance construction, solution model and embedding diagnostics for
//! 0-Extension with Steiner nodes.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: multigraph representation, shortest paths, girth, diameter,
//!   conductance estimates, BFS trees and max-flow.
//! - [`instance`]: the random three-permutation expander with short cycles
//!   removed, its terminal set and terminal metric.
//! - [`metric`]: semi-metric values, terminal preservation, the average
//!   distance feasibility check and tight-span membership.
//! - [`solution`]: partitions, solutions, canonical solutions, their cost and
//!   the friendship / large-cluster diagnostics.
//! - [`projection`]: projection of graph vertices onto the tight span of the
//!   terminal metric and the tightness graph of a point.
//! - [`continuization`]: the continuous metric space of a graph, the tree and
//!   high-girth embeddings of a solution and rounding back to a canonical one.
//! - [`solvers`]: exhaustive oracles for tiny instances and a local search for
//!   canonical solutions.
//! - [`harness`]: gap-measurement sweeps and report emission.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.

pub mod continuization;
pub mod error;
pub mod graph;
pub mod harness;
pub mod instance;
pub mod io;
pub mod metric;
pub mod par;
pub mod projection;
pub mod solution;
pub mod solvers;

pub use error::{Error, Result};
pub use graph::{DistanceMatrix, Edge, Graph};
pub use instance::{Instance, InstanceConfig, TerminalRule};
pub use metric::{SemiMetric, TightSpanPoint};
pub use solution::{CanonicalSolution, Partition, Solution};

/// Absolute tolerance used for every real-valued comparison.
pub const EPS: f64 = 1e-9;
