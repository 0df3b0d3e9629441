//! Pointwise evaluation of the follower's reaction at a fixed leader decision.
//!
//! For a fixed `x` the follower's optimal set `S(x)` is a face of
//! `K(x) = {y : B_f y ≤ b_f − A_f x}`, carved out by the cut
//! `c_f(x)ᵀy ≤ V(x)`. Relaxing the cut by `ε` gives the ε-optimal set.
//!
//! The leader's value under each way of resolving the follower's choice:
//!
//! * optimistic: `c_lᵀx + min {d_lᵀy : y ∈ S(x)}`
//! * pessimistic: `c_lᵀx + max {d_lᵀy : y ∈ S(x)}`
//! * neutral: `c_lᵀx + d_lᵀ𝔠(S(x))`, the expectation under the uniform
//!   measure on `S(x)`, which for a linear objective is the value at the
//!   centroid.

use serde::Serialize;

use crate::bnb::{
    serialize_extended, sos1_branch_and_bound, BnbOptions, SolveResult, SolveStats, SolveStatus,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, Vector};
use crate::lp::{solve_lp, LpStatus};
use crate::model::BilevelInstance;
use crate::polytope::{
    affine_dimension, centroid_of_vertices, enumerate_vertices, is_bounded, Polytope,
};
use crate::reformulation::build_mpcc;

/// Follower optimal value `V(x)`; `+∞` when `K(x)` is empty, `−∞` when the
/// follower is unbounded.
pub fn value_function(inst: &BilevelInstance, x: &[f64]) -> Result<f64> {
    inst.ensure_valid()?;
    check_leader_dim(inst, x)?;
    Ok(solve_lp(&inst.follower_lp(x))?.value)
}

fn check_leader_dim(inst: &BilevelInstance, x: &[f64]) -> Result<()> {
    if x.len() != inst.p {
        return Err(Error::InvalidInstance(format!(
            "x has length {}, expected {}",
            x.len(),
            inst.p
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionPolytope {
    pub x: Vector,
    pub eps: f64,
    /// Follower optimal value at `x`.
    pub value: f64,
    /// `K(x)` with the optimality cut as its last row.
    pub polytope: Polytope,
    pub vertices: Vec<Vector>,
    pub affine_dim: i32,
}

/// `S_ε(x) = {y ∈ K(x) : c_f(x)ᵀy ≤ V(x) + ε}`; `ε = 0` gives `S(x)`.
pub fn reaction_polytope(inst: &BilevelInstance, x: &[f64], eps: f64) -> Result<ReactionPolytope> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "eps must be a finite nonnegative number, got {eps}"
        )));
    }
    inst.ensure_valid()?;
    check_leader_dim(inst, x)?;
    let follower = inst.follower_lp(x);
    let sol = solve_lp(&follower)?;
    match sol.status {
        LpStatus::Infeasible => return Err(Error::FollowerInfeasible { x: x.to_vec() }),
        LpStatus::Unbounded => return Err(Error::FollowerUnbounded { x: x.to_vec() }),
        LpStatus::Optimal => {}
    }
    let mut a = follower.a_in;
    let mut b = follower.b_in;
    a.push_row(&follower.objective);
    b.push(sol.value + eps);
    let polytope = Polytope::new(a, b);
    let vertices = match enumerate_vertices(&polytope) {
        Ok(v) => v,
        // The face contains a line; it is still a valid (unbounded) set.
        Err(Error::Unbounded) => Vec::new(),
        Err(e) => return Err(e),
    };
    let affine_dim = affine_dimension(&vertices);
    Ok(ReactionPolytope {
        x: x.to_vec(),
        eps,
        value: sol.value,
        polytope,
        vertices,
        affine_dim,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Optimistic,
    Pessimistic,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproachValues {
    pub x: Vector,
    #[serde(serialize_with = "serialize_extended")]
    pub phi_o: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub phi_p: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub phi_n: f64,
    pub centroid_point: Vector,
}

fn face_extreme(inst: &BilevelInstance, face: &ReactionPolytope, maximise: bool) -> Result<f64> {
    let sign = if maximise { -1.0 } else { 1.0 };
    let c: Vector = inst.d_l.iter().map(|v| sign * v).collect();
    let s = solve_lp(&face.polytope.as_lp(c))?;
    Ok(match s.status {
        LpStatus::Optimal => sign * s.value,
        LpStatus::Unbounded => sign * f64::NEG_INFINITY,
        // Round-off can make the ε = 0 cut look infeasible; fall back on the vertices.
        LpStatus::Infeasible => {
            let vals = face.vertices.iter().map(|v| dot(&inst.d_l, v));
            if maximise {
                vals.fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.fold(f64::INFINITY, f64::min)
            }
        }
    })
}

/// Optimistic, pessimistic and neutral leader values at `x`.
pub fn approach_values(inst: &BilevelInstance, x: &[f64]) -> Result<ApproachValues> {
    let face = reaction_polytope(inst, x, 0.0)?;
    if !is_bounded(&face.polytope)? {
        return Err(Error::UnboundedFace { x: x.to_vec() });
    }
    let base = dot(&inst.c_l, x);
    let lo = face_extreme(inst, &face, false)?;
    let hi = face_extreme(inst, &face, true)?;
    let c = centroid_of_vertices(&face.polytope, &face.vertices)?;
    Ok(ApproachValues {
        x: x.to_vec(),
        phi_o: base + lo,
        phi_p: base + hi,
        phi_n: base + dot(&inst.d_l, &c),
        centroid_point: c,
    })
}

/// One approach at `x`. Only the neutral value needs a bounded face.
pub fn approach_value(inst: &BilevelInstance, x: &[f64], approach: Approach) -> Result<f64> {
    let face = reaction_polytope(inst, x, 0.0)?;
    let base = dot(&inst.c_l, x);
    match approach {
        Approach::Optimistic => Ok(base + face_extreme(inst, &face, false)?),
        Approach::Pessimistic => Ok(base + face_extreme(inst, &face, true)?),
        Approach::Neutral => {
            if !is_bounded(&face.polytope)? {
                return Err(Error::UnboundedFace { x: x.to_vec() });
            }
            let c = centroid_of_vertices(&face.polytope, &face.vertices)?;
            Ok(base + dot(&inst.d_l, &c))
        }
    }
}

/// Evaluates `approach` on `n_points` evenly spaced leader values in
/// `[x_lo, x_hi]`. Points where the follower is infeasible carry `+∞`.
pub fn scan_leader_1d(
    inst: &BilevelInstance,
    x_lo: f64,
    x_hi: f64,
    n_points: usize,
    approach: Approach,
) -> Result<Vec<(f64, f64)>> {
    if inst.p != 1 {
        return Err(Error::NotOneDimensional(inst.p));
    }
    if n_points < 2 {
        return Err(Error::InvalidParams(
            "a scan needs at least two points".into(),
        ));
    }
    let step = (x_hi - x_lo) / (n_points - 1) as f64;
    (0..n_points)
        .map(|k| {
            let x = if k == n_points - 1 {
                x_hi
            } else {
                x_lo + step * k as f64
            };
            match approach_value(inst, &[x], approach) {
                Ok(v) => Ok((x, v)),
                Err(Error::FollowerInfeasible { .. }) => Ok((x, f64::INFINITY)),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// CSV with header `x,value` and 17 significant digits per number.
pub fn scan_to_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("x,value\n");
    for (x, v) in points {
        out.push_str(&format!("{},{}\n", fmt17(*x), fmt17(*v)));
    }
    out
}

fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v > 0.0 {
        "inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

// ---------------------------------------------------------------------------
// Leader-integer enumeration

pub const DEFAULT_GRID_BUDGET: u128 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegerLeaderSpec {
    pub instance: BilevelInstance,
    /// Leader coordinates required to be integer.
    pub integer_indices: Vec<usize>,
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
    pub grid_budget: u128,
}

impl IntegerLeaderSpec {
    pub fn new(
        instance: BilevelInstance,
        integer_indices: Vec<usize>,
        lower: Vec<i64>,
        upper: Vec<i64>,
    ) -> Self {
        Self {
            instance,
            integer_indices,
            lower,
            upper,
            grid_budget: DEFAULT_GRID_BUDGET,
        }
    }

    fn grid_size(&self) -> Result<u128> {
        let k = self.integer_indices.len();
        if self.lower.len() != k || self.upper.len() != k {
            return Err(Error::InvalidParams(
                "one bound pair per integer index".into(),
            ));
        }
        if self.integer_indices.iter().any(|&i| i >= self.instance.p) {
            return Err(Error::InvalidParams("integer index out of range".into()));
        }
        let mut size: u128 = 1;
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            if lo > hi {
                return Err(Error::InvalidParams(format!(
                    "empty bound range [{lo}, {hi}]"
                )));
            }
            size = size.saturating_mul((hi - lo) as u128 + 1);
        }
        Ok(size)
    }
}

/// Solves the bilevel program with some leader coordinates integer by
/// enumerating every integer assignment and solving the continuous
/// restriction for each. The best restriction wins; ties keep the first in
/// lexicographic order.
pub fn solve_mibp_leader_integer(
    spec: &IntegerLeaderSpec,
    options: &BnbOptions,
) -> Result<SolveResult> {
    let size = spec.grid_size()?;
    if size > spec.grid_budget {
        return Err(Error::BudgetExceeded {
            limit: spec.grid_budget as usize,
        });
    }
    let p = spec.instance.p;
    let mut assignment = spec.lower.clone();
    let mut stats = SolveStats::default();
    let mut best: Option<SolveResult> = None;
    loop {
        let mut inst = spec.instance.clone();
        for (&i, &v) in spec.integer_indices.iter().zip(&assignment) {
            let mut r = vec![0.0; p];
            r[i] = 1.0;
            inst.a_l.push_row(&r);
            inst.b_l.push(v as f64);
            r[i] = -1.0;
            inst.a_l.push_row(&r);
            inst.b_l.push(-(v as f64));
            inst.m_l += 2;
        }
        let r = sos1_branch_and_bound(&build_mpcc(&inst)?, options)?;
        stats.absorb(&r.stats);
        match r.status {
            SolveStatus::Unbounded => {
                return Ok(SolveResult { stats, ..r });
            }
            SolveStatus::Optimal if best.as_ref().is_none_or(|b| r.value < b.value) => {
                best = Some(r)
            }
            _ => {}
        }

        // Odometer increment over the grid.
        let mut k = assignment.len();
        loop {
            if k == 0 {
                return Ok(match best {
                    Some(b) => SolveResult {
                        stats,
                        incumbents: Vec::new(),
                        ..b
                    },
                    None => SolveResult::infeasible(stats),
                });
            }
            k -= 1;
            if assignment[k] < spec.upper[k] {
                assignment[k] += 1;
                break;
            }
            assignment[k] = spec.lower[k];
        }
    }
}
