use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("vertex enumeration needs {needed} active sets, budget is {budget}")]
    TooLarge { needed: u128, budget: u128 },
    #[error("polyhedron is nonempty but has no vertices (it contains a line)")]
    Unbounded,
    #[error("polytope is empty")]
    EmptyPolytope,
    #[error("polytope is unbounded")]
    UnboundedPolytope,
    #[error(
        "instance has an x-dependent follower cost; reformulations require a fixed follower cost"
    )]
    NonstandardInstance,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("joint region D is unbounded")]
    UnboundedJointRegion,
    #[error("follower dual polyhedron is empty (follower LP unbounded for every x)")]
    DualInfeasible,
    #[error("big-M constant must be positive, got {0}")]
    NonpositiveM(f64),
    #[error("node budget of {limit} exceeded")]
    BudgetExceeded { limit: usize },
    #[error("follower problem is infeasible at x = {x:?}")]
    FollowerInfeasible { x: Vec<f64> },
    #[error("follower problem is unbounded at x = {x:?}")]
    FollowerUnbounded { x: Vec<f64> },
    #[error("follower solution set is unbounded at x = {x:?}")]
    UnboundedFace { x: Vec<f64> },
    #[error("leader dimension is {0}, expected 1")]
    NotOneDimensional(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("opponent quantity {q_other} exceeds capacity {capacity}")]
    InfeasibleOpponent { q_other: f64, capacity: f64 },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
}
