//! Numeric policy shared by every module.

/// Feasibility, pivot and rank tolerance.
pub const FEAS: f64 = 1e-9;

/// Tolerance for cross-checks between independent computations.
pub const CHECK: f64 = 1e-7;

/// Two vertices closer than this in the sup-norm are the same vertex.
pub const DEDUP: f64 = 1e-7;

/// Relative slack test: `lhs <= rhs` up to `tol` scaled by the magnitude of `rhs`.
pub(crate) fn leq(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + tol * (1.0 + rhs.abs())
}
