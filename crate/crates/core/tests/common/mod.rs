//! Reference oracles shared by the integration tests.
//!
//! Each oracle is deliberately naive: it enumerates instead of searching, so
//! it can be trusted on the tiny instances the tests feed it.

#![allow(dead_code)]

use std::path::PathBuf;

use blp_core::{solve_lp, BilevelInstance, LpProblem, LpStatus};

pub fn fixture(name: &str) -> BilevelInstance {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    BilevelInstance::from_json(&text).expect("fixture parses")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Optimistic bilevel value by enumerating all `2^{m_f}` active-row patterns.
///
/// For pattern `P` the LP over `(x, y, μ)` imposes leader and follower rows,
/// `−B_fᵀμ = c_f`, `μ ≥ 0`, equality on the rows in `P` and `μ = 0` off `P`.
/// Every bilevel-feasible point satisfies the KKT system for some pattern and
/// every pattern-feasible point is bilevel feasible, so the minimum over
/// patterns is the optimistic value.
pub fn complementarity_brute_force(inst: &BilevelInstance) -> Outcome {
    let (p, q, m) = (inst.p, inst.q, inst.m_f);
    assert!(m <= 16, "pattern oracle is exponential in m_f");
    let n = p + q + m;
    let mut objective = inst.c_l.clone();
    objective.extend_from_slice(&inst.d_l);
    objective.resize(n, 0.0);

    let mut best: Option<f64> = None;
    for pattern in 0u32..(1 << m) {
        let mut lp = LpProblem::new(n).with_objective(objective.clone());
        for i in 0..inst.m_l {
            let mut row = inst.a_l.row(i).to_vec();
            row.resize(n, 0.0);
            lp.add_ineq(&row, inst.b_l[i]);
        }
        for i in 0..m {
            let mut row = inst.a_f.row(i).to_vec();
            row.extend_from_slice(inst.b_f_mat.row(i));
            row.resize(n, 0.0);
            if pattern & (1 << i) != 0 {
                lp.add_eq(&row, inst.b_f[i]);
            } else {
                lp.add_ineq(&row, inst.b_f[i]);
                let mut z = vec![0.0; n];
                z[p + q + i] = 1.0;
                lp.add_eq(&z, 0.0);
            }
            let mut sign = vec![0.0; n];
            sign[p + q + i] = -1.0;
            lp.add_ineq(&sign, 0.0);
        }
        for j in 0..q {
            let mut row = vec![0.0; n];
            for i in 0..m {
                row[p + q + i] = -inst.b_f_mat[(i, j)];
            }
            lp.add_eq(&row, inst.c_f[j]);
        }
        let sol = solve_lp(&lp).expect("pattern LP");
        match sol.status {
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => return Outcome::Unbounded,
            LpStatus::Optimal => best = Some(best.map_or(sol.value, |b: f64| b.min(sol.value))),
        }
    }
    best.map_or(Outcome::Infeasible, Outcome::Optimal)
}

/// Best knapsack value `max Σ aᵢxᵢ` over subsets with `Σ aᵢxᵢ ≤ capacity`.
pub fn knapsack_brute_force(weights: &[u64], capacity: u64) -> u64 {
    let n = weights.len();
    (0u32..(1 << n))
        .map(|s| {
            (0..n)
                .filter(|i| s & (1 << i) != 0)
                .map(|i| weights[i])
                .sum::<u64>()
        })
        .filter(|&w| w <= capacity)
        .max()
        .unwrap_or(0)
}

/// Maximiser of a unimodal function on `[a, b]` by golden-section search.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while (b - a).abs() > tol {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    (a + b) / 2.0
}

/// Vertices of `{y : Ay ≤ b}` by solving every `n × n` subsystem with
/// Gaussian elimination and keeping the feasible, distinct solutions.
pub fn brute_vertices(a: &[Vec<f64>], b: &[f64], n: usize) -> Vec<Vec<f64>> {
    let m = a.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    if n == 0 || n > m {
        return out;
    }
    loop {
        let sys: Vec<Vec<f64>> = idx.iter().map(|&i| a[i].clone()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
        if let Some(y) = gauss(sys, rhs) {
            let feasible = (0..m).all(|i| {
                let lhs: f64 = a[i].iter().zip(&y).map(|(u, v)| u * v).sum();
                lhs <= b[i] + 1e-9 * (1.0 + b[i].abs())
            });
            let fresh = out
                .iter()
                .all(|v| v.iter().zip(&y).any(|(s, t)| (s - t).abs() > 1e-7));
            if feasible && fresh {
                out.push(y);
            }
        }
        // Next combination in lexicographic order.
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] < m - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let pivot = a[col].clone();
        for r in 0..n {
            if r != col {
                let f = a[r][col] / pivot[col];
                for (v, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                    *v -= f * p;
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}
