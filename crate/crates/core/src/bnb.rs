//! Exact optimistic solvers.
//!
//! [`sos1_branch_and_bound`] branches directly on the complementarity pairs
//! of the MPCC: each node fixes some pairs to `μᵢ = 0` or `sᵢ = 0` and solves
//! the remaining linear relaxation. [`mip_branch_and_bound`] runs a textbook
//! binary branch-and-bound on the Big-M model.
//!
//! Both use the same node loop: pop a node, solve its LP, prune by
//! infeasibility, bound or feasibility, otherwise branch. Node selection is
//! best-first on the parent bound (FIFO among ties) or depth-first.

use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::linalg::{dot, Vector};
use crate::lp::{solve_lp, LpSolution, LpStatus};
use crate::model::BilevelInstance;
use crate::reformulation::{
    build_bigm_mip, build_mpcc, compute_bigm, BigMCertificate, BigMModel, MpccModel,
};
use crate::tol;

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// Complementarity is satisfied when one factor of the pair is at most this.
const COMPLEMENTARITY_TOL: f64 = 1e-8;
const INTEGRALITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Strategy {
    #[default]
    BestFirst,
    DepthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbOptions {
    pub strategy: Strategy,
    pub node_budget: usize,
    /// When false, nodes are never pruned by bound or feasibility and every
    /// non-infeasible branch is explored down to its leaves.
    pub pruning: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::BestFirst,
            node_budget: DEFAULT_NODE_BUDGET,
            pruning: true,
        }
    }
}

impl BnbOptions {
    pub fn with_strategy(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SolveStats {
    pub nodes_explored: usize,
    pub pruned_infeasible: usize,
    pub pruned_bound: usize,
    /// Nodes whose relaxation point was already feasible (complementary for
    /// the SOS1 search, integral for the MIP search).
    pub pruned_sos1: usize,
    /// Nodes that ended without branching.
    pub leaves: usize,
}

impl SolveStats {
    pub fn absorb(&mut self, other: &SolveStats) {
        self.nodes_explored += other.nodes_explored;
        self.pruned_infeasible += other.pruned_infeasible;
        self.pruned_bound += other.pruned_bound;
        self.pruned_sos1 += other.pruned_sos1;
        self.leaves += other.leaves;
    }
}

/// An incumbent update, in the order it happened.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Incumbent {
    pub node: usize,
    #[serde(serialize_with = "serialize_extended")]
    pub value: f64,
    pub x: Vector,
    pub y: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vector,
    pub y: Vector,
    pub mu: Vector,
    #[serde(serialize_with = "serialize_extended")]
    pub value: f64,
    pub stats: SolveStats,
    #[serde(skip)]
    pub incumbents: Vec<Incumbent>,
}

impl SolveResult {
    pub fn infeasible(stats: SolveStats) -> Self {
        Self {
            status: SolveStatus::Infeasible,
            x: Vec::new(),
            y: Vec::new(),
            mu: Vec::new(),
            value: f64::INFINITY,
            stats,
            incumbents: Vec::new(),
        }
    }
}

/// Serialises `±∞` as the strings `"inf"` / `"-inf"`, finite values as numbers.
pub fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else if *v < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

/// Value-function test: `A_l x ≤ b_l`, `A_f x + B_f y ≤ b_f` and
/// `c_f(x)ᵀy ≤ V(x)`, each within `tol`.
///
/// Returns [`Error::FollowerInfeasible`] when the follower has no feasible
/// point at `x`.
pub fn check_bilevel_feasible(
    inst: &BilevelInstance,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<bool> {
    inst.ensure_valid()?;
    if x.len() != inst.p || y.len() != inst.q {
        return Err(Error::InvalidInstance(format!(
            "point has shape ({}, {}), instance expects ({}, {})",
            x.len(),
            y.len(),
            inst.p,
            inst.q
        )));
    }
    let follower = inst.follower_lp(x);
    let v = solve_lp(&follower)?;
    if v.status == LpStatus::Infeasible {
        return Err(Error::FollowerInfeasible { x: x.to_vec() });
    }
    let leader_ok = inst
        .a_l
        .iter_rows()
        .zip(&inst.b_l)
        .all(|(r, &b)| dot(r, x) <= b + tol);
    let follower_ok = follower
        .a_in
        .iter_rows()
        .zip(&follower.b_in)
        .all(|(r, &b)| dot(r, y) <= b + tol);
    let optimal = dot(&follower.objective, y) <= v.value + tol;
    Ok(leader_ok && follower_ok && optimal)
}

// ---------------------------------------------------------------------------
// Node queue

struct Queued<T> {
    bound: f64,
    seq: usize,
    node: T,
}

impl<T> PartialEq for Queued<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Queued<T> {}
impl<T> PartialOrd for Queued<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Queued<T> {
    // BinaryHeap is a max-heap: smaller bound, then smaller seq, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

enum Frontier<T> {
    Best(BinaryHeap<Queued<T>>),
    Depth(Vec<T>),
}

impl<T> Frontier<T> {
    fn new(strategy: Strategy) -> Self {
        match strategy {
            Strategy::BestFirst => Frontier::Best(BinaryHeap::new()),
            Strategy::DepthFirst => Frontier::Depth(Vec::new()),
        }
    }

    fn push(&mut self, bound: f64, seq: usize, node: T) {
        match self {
            Frontier::Best(h) => h.push(Queued { bound, seq, node }),
            Frontier::Depth(v) => v.push(node),
        }
    }

    fn pop(&mut self) -> Option<T> {
        match self {
            Frontier::Best(h) => h.pop().map(|q| q.node),
            Frontier::Depth(v) => v.pop(),
        }
    }
}

fn bound_prunes(v: f64, incumbent: f64) -> bool {
    v.is_finite() && incumbent.is_finite() && v >= incumbent - tol::FEAS * (1.0 + incumbent.abs())
}

// ---------------------------------------------------------------------------
// SOS1 branch-and-bound

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fix {
    Free,
    MuZero,
    SlackZero,
}

/// Branch-and-bound over the complementarity pairs of `model`.
pub fn sos1_branch_and_bound(model: &MpccModel, options: &BnbOptions) -> Result<SolveResult> {
    let m = model.layout.m_f;
    let mut stats = SolveStats::default();
    let mut frontier = Frontier::new(options.strategy);
    let mut seq = 0;
    frontier.push(f64::NEG_INFINITY, seq, vec![Fix::Free; m]);

    let mut best_value = f64::INFINITY;
    let mut best_point: Option<Vector> = None;
    let mut incumbents = Vec::new();

    while let Some(fixes) = frontier.pop() {
        if stats.nodes_explored >= options.node_budget {
            return Err(Error::BudgetExceeded {
                limit: options.node_budget,
            });
        }
        stats.nodes_explored += 1;
        let node_id = stats.nodes_explored;

        let zero_mu: Vec<usize> = (0..m).filter(|&i| fixes[i] == Fix::MuZero).collect();
        let zero_slack: Vec<usize> = (0..m).filter(|&i| fixes[i] == Fix::SlackZero).collect();
        let free: Vec<usize> = (0..m).filter(|&i| fixes[i] == Fix::Free).collect();
        let sol: LpSolution = solve_lp(&model.restricted(&zero_mu, &zero_slack))?;
        let v = sol.value;

        // (a) infeasible
        if sol.status == LpStatus::Infeasible {
            stats.pruned_infeasible += 1;
            stats.leaves += 1;
            continue;
        }
        // (b) bound
        if options.pruning && bound_prunes(v, best_value) {
            stats.pruned_bound += 1;
            stats.leaves += 1;
            continue;
        }
        let feasible = sol.is_optimal() && model.is_feasible(&sol.point, COMPLEMENTARITY_TOL);
        if feasible && v < best_value {
            best_value = v;
            let (x, y, _) = model.split(&sol.point);
            incumbents.push(Incumbent {
                node: node_id,
                value: v,
                x: x.to_vec(),
                y: y.to_vec(),
            });
            best_point = Some(sol.point.clone());
        }
        // (c) complementary point
        if feasible && options.pruning {
            stats.pruned_sos1 += 1;
            stats.leaves += 1;
            continue;
        }
        // (d) leaf
        if free.is_empty() {
            stats.leaves += 1;
            if sol.status == LpStatus::Unbounded {
                best_value = f64::NEG_INFINITY;
                best_point = None;
                break;
            }
            if !feasible && v < best_value {
                // All pairs are fixed, so the point is complementary up to
                // round-off even when the tolerance test above missed it.
                best_value = v;
                let (x, y, _) = model.split(&sol.point);
                incumbents.push(Incumbent {
                    node: node_id,
                    value: v,
                    x: x.to_vec(),
                    y: y.to_vec(),
                });
                best_point = Some(sol.point.clone());
            }
            continue;
        }

        // Branch on the most violated free pair; an unbounded relaxation
        // has no point, so take the lowest free index.
        let branch = if sol.is_optimal() {
            let viol = model.violations(&sol.point);
            free.iter()
                .copied()
                .fold((free[0], -1.0), |acc, i| {
                    if viol[i] > acc.1 {
                        (i, viol[i])
                    } else {
                        acc
                    }
                })
                .0
        } else {
            free[0]
        };
        for fix in [Fix::MuZero, Fix::SlackZero] {
            let mut child = fixes.clone();
            child[branch] = fix;
            seq += 1;
            frontier.push(v, seq, child);
        }
    }

    Ok(finish(model, best_value, best_point, stats, incumbents))
}

fn finish(
    model: &MpccModel,
    value: f64,
    point: Option<Vector>,
    stats: SolveStats,
    incumbents: Vec<Incumbent>,
) -> SolveResult {
    match point {
        Some(point) => {
            let (x, y, mu) = model.split(&point);
            SolveResult {
                status: SolveStatus::Optimal,
                x: x.to_vec(),
                y: y.to_vec(),
                mu: mu.to_vec(),
                value,
                stats,
                incumbents,
            }
        }
        None if value == f64::NEG_INFINITY => SolveResult {
            status: SolveStatus::Unbounded,
            x: Vec::new(),
            y: Vec::new(),
            mu: Vec::new(),
            value,
            stats,
            incumbents,
        },
        None => SolveResult {
            incumbents,
            ..SolveResult::infeasible(stats)
        },
    }
}

// ---------------------------------------------------------------------------
// Big-M binary branch-and-bound

/// Binary branch-and-bound on the Big-M model, branching on the most
/// fractional `zᵢ`.
pub fn mip_branch_and_bound(model: &BigMModel, options: &BnbOptions) -> Result<SolveResult> {
    let m = model.mpcc.layout.m_f;
    let mut stats = SolveStats::default();
    let mut frontier = Frontier::new(options.strategy);
    let mut seq = 0;
    frontier.push(f64::NEG_INFINITY, seq, vec![None::<f64>; m]);

    let mut best_value = f64::INFINITY;
    let mut best_point: Option<Vector> = None;
    let mut incumbents = Vec::new();

    while let Some(fixed) = frontier.pop() {
        if stats.nodes_explored >= options.node_budget {
            return Err(Error::BudgetExceeded {
                limit: options.node_budget,
            });
        }
        stats.nodes_explored += 1;
        let node_id = stats.nodes_explored;

        let pins: Vec<(usize, f64)> = fixed
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .collect();
        let sol = solve_lp(&model.restricted(&pins))?;
        let v = sol.value;
        let unfixed: Vec<usize> = (0..m).filter(|&i| fixed[i].is_none()).collect();

        if sol.status == LpStatus::Infeasible {
            stats.pruned_infeasible += 1;
            stats.leaves += 1;
            continue;
        }
        if options.pruning && bound_prunes(v, best_value) {
            stats.pruned_bound += 1;
            stats.leaves += 1;
            continue;
        }
        if sol.status == LpStatus::Unbounded && unfixed.is_empty() {
            stats.leaves += 1;
            best_value = f64::NEG_INFINITY;
            best_point = None;
            break;
        }

        let branch = if sol.is_optimal() {
            let z = model.z(&sol.point);
            let frac = |i: usize| z[i].min(1.0 - z[i]).max(0.0);
            let integral = (0..m).all(|i| frac(i) <= INTEGRALITY_TOL);
            if integral {
                if v < best_value {
                    best_value = v;
                    let (x, y, _) = model.mpcc.split(&sol.point[..model.mpcc.layout.len()]);
                    incumbents.push(Incumbent {
                        node: node_id,
                        value: v,
                        x: x.to_vec(),
                        y: y.to_vec(),
                    });
                    best_point = Some(sol.point[..model.mpcc.layout.len()].to_vec());
                }
                if options.pruning || unfixed.is_empty() {
                    stats.pruned_sos1 += 1;
                    stats.leaves += 1;
                    continue;
                }
                unfixed[0]
            } else {
                unfixed
                    .iter()
                    .copied()
                    .fold((unfixed[0], -1.0), |acc, i| {
                        if frac(i) > acc.1 {
                            (i, frac(i))
                        } else {
                            acc
                        }
                    })
                    .0
            }
        } else {
            unfixed[0]
        };

        for val in [0.0, 1.0] {
            let mut child = fixed.clone();
            child[branch] = Some(val);
            seq += 1;
            frontier.push(v, seq, child);
        }
    }

    Ok(finish(
        &model.mpcc,
        best_value,
        best_point,
        stats,
        incumbents,
    ))
}

// ---------------------------------------------------------------------------
// Entry points

/// Builds the MPCC of `inst` and solves it with [`sos1_branch_and_bound`].
pub fn solve_sos1(inst: &BilevelInstance, options: &BnbOptions) -> Result<SolveResult> {
    sos1_branch_and_bound(&build_mpcc(inst)?, options)
}

/// Solves the Big-M model with a certified constant.
///
/// A certificate of zero (no follower row can be slack and every dual vertex
/// is zero) is replaced by 1, which is equally valid.
pub fn solve_bigm(
    inst: &BilevelInstance,
    options: &BnbOptions,
) -> Result<(SolveResult, BigMCertificate)> {
    let cert = compute_bigm(inst)?;
    let model = build_bigm_mip(inst, cert.m.max(1.0))?;
    Ok((mip_branch_and_bound(&model, options)?, cert))
}

/// Solves the Big-M model with a caller-supplied constant, which may be too
/// small to be exact.
pub fn solve_bigm_with(
    inst: &BilevelInstance,
    m: f64,
    options: &BnbOptions,
) -> Result<SolveResult> {
    mip_branch_and_bound(&build_bigm_mip(inst, m)?, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{gen_knapsack_blp, KnapsackSpec};
    use crate::reformulation::{build_bigm_mip, build_mpcc, compute_bigm};

    fn knapsack() -> BilevelInstance {
        gen_knapsack_blp(&KnapsackSpec::new(vec![3, 5, 7], 9))
            .unwrap()
            .instance
    }

    #[test]
    fn knapsack_sos1() {
        let r = sos1_branch_and_bound(&build_mpcc(&knapsack()).unwrap(), &BnbOptions::default())
            .unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.value + 8.0).abs() < 1e-9, "value {}", r.value);
        for (xi, want) in r.x.iter().zip([1.0, 1.0, 0.0]) {
            assert!((xi - want).abs() < 1e-6);
        }
        assert!(r.y.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn knapsack_mip_agrees() {
        let inst = knapsack();
        let m = compute_bigm(&inst).unwrap().m;
        let r = mip_branch_and_bound(&build_bigm_mip(&inst, m).unwrap(), &BnbOptions::default())
            .unwrap();
        assert!((r.value + 8.0).abs() < 1e-9);
    }

    #[test]
    fn depth_first_same_value() {
        let model = build_mpcc(&knapsack()).unwrap();
        let r = sos1_branch_and_bound(&model, &BnbOptions::with_strategy(Strategy::DepthFirst))
            .unwrap();
        assert!((r.value + 8.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_leader_set() {
        let mut inst = knapsack();
        inst.b_l[0] = -1.0; // Σ aᵢxᵢ ≤ −1 with x ≥ 0
        let r = sos1_branch_and_bound(&build_mpcc(&inst).unwrap(), &BnbOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert_eq!(r.value, f64::INFINITY);
        assert_eq!(r.stats.nodes_explored, 1);
    }

    #[test]
    fn unbounded_leaf() {
        // min x over x ≤ 0 with the follower y ∈ [0, 1] ignoring x.
        let inst = BilevelInstance {
            p: 1,
            q: 1,
            m_l: 1,
            m_f: 2,
            c_l: vec![1.0],
            d_l: vec![0.0],
            a_l: Matrix::from_rows(1, &[[1.0]]).unwrap(),
            b_l: vec![0.0],
            c_f: vec![1.0],
            a_f: Matrix::zeros(2, 1),
            b_f_mat: Matrix::from_rows(1, &[[1.0], [-1.0]]).unwrap(),
            b_f: vec![1.0, 0.0],
            c_f_x: None,
            meta: None,
        };
        let r = sos1_branch_and_bound(&build_mpcc(&inst).unwrap(), &BnbOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
        assert_eq!(r.value, f64::NEG_INFINITY);
        let r = mip_branch_and_bound(&build_bigm_mip(&inst, 5.0).unwrap(), &BnbOptions::default())
            .unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn budget_exceeded() {
        let model = build_mpcc(&knapsack()).unwrap();
        let opts = BnbOptions {
            node_budget: 1,
            ..BnbOptions::default()
        };
        assert_eq!(
            sos1_branch_and_bound(&model, &opts),
            Err(Error::BudgetExceeded { limit: 1 })
        );
    }

    #[test]
    fn feasibility_check() {
        let inst = knapsack();
        assert!(check_bilevel_feasible(&inst, &[1.0, 1.0, 0.0], &[0.0; 3], 1e-9).unwrap());
        assert!(!check_bilevel_feasible(&inst, &[1.0, 1.0, 0.0], &[0.5, 0.0, 0.0], 1e-9).unwrap());
        // x = 0.5 makes y = 0.5 the follower's choice.
        assert!(check_bilevel_feasible(&inst, &[0.5, 0.0, 0.0], &[0.5, 0.0, 0.0], 1e-9).unwrap());
        // x outside [0, 1] leaves the follower without a feasible point.
        assert!(matches!(
            check_bilevel_feasible(&inst, &[2.0, 0.0, 0.0], &[0.0; 3], 1e-9),
            Err(Error::FollowerInfeasible { .. })
        ));
    }

    #[test]
    fn json_encodes_infinities() {
        let r = SolveResult::infeasible(SolveStats::default());
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["value"], "inf");
        assert_eq!(v["status"], "Infeasible");
    }
}
