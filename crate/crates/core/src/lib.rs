//! Linear bilevel programming: single-level reformulations, exact
//! branch-and-bound, follower response maps and duopoly games.

pub mod bnb;
pub mod duopoly;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod polytope;
pub mod reformulation;
pub mod response;
pub mod tol;

pub use bnb::{
    check_bilevel_feasible, mip_branch_and_bound, solve_bigm, solve_bigm_with, solve_sos1,
    sos1_branch_and_bound, BnbOptions, SolveResult, SolveStats, SolveStatus, Strategy,
};
pub use duopoly::{DuopolyParams, EquilibriumReport};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use lp::{solve_lp, LpProblem, LpSolution, LpStatus};
pub use model::{
    gen_knapsack_blp, gen_random_bounded, validate, BilevelInstance, Diagnostic, KnapsackSpec,
    Penalty, RandomSpec,
};
pub use polytope::Polytope;
pub use reformulation::{
    build_bigm_mip, build_mpcc, compute_bigm, BigMCertificate, BigMModel, MpccModel,
};
pub use response::{approach_value, approach_values, Approach, ApproachValues};
