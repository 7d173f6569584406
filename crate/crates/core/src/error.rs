use thiserror::Error;

use crate::metric::MetricError;
use crate::metric::Membership;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected: vertex {vertex} is unreachable from {from}")]
    DisconnectedGraph { from: usize, vertex: usize },

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("n = {0} is too small, at least 16 vertices are required")]
    InvalidN(usize),

    #[error("short cycle {cycle:?} consists only of tree edges")]
    NoRemovableEdge { cycle: Vec<usize> },

    #[error("invalid semi-metric: {0}")]
    Metric(#[from] MetricError),

    #[error("terminals {first} and {second} share cluster {cluster}")]
    TerminalsMerged {
        first: usize,
        second: usize,
        cluster: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("distances violate the triangle bounds at terminal pair ({i}, {j})")]
    InfeasibleDistances { i: usize, j: usize },

    #[error("point is not a tight-span member: {0:?}")]
    NotAMember(Membership),

    #[error("offset {offset} outside [0, {length}] on edge {edge}")]
    InvalidOffset { edge: usize, offset: f64, length: f64 },

    #[error("graph is not a tree")]
    NotATree,

    #[error("shortest path between {from} and {to} is not unique")]
    NonUniqueShortestPath { from: usize, to: usize },

    #[error("cluster {cluster} violates the near-pair bound delta(F,t1) + delta(F,t2) <= 4 A_F")]
    GTreeViolated { cluster: usize },

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("search needs {required} evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
