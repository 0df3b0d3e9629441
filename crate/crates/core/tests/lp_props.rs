mod common;

use blp_core::{solve_lp, LpProblem, LpStatus};
use proptest::prelude::*;

/// A random LP over the box `|yⱼ| ≤ 5` plus rows that keep the origin
/// strictly feasible, optionally with one equality through a box point.
fn bounded_lp() -> impl Strategy<Value = (LpProblem, Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=3, 0usize..=4, any::<bool>()).prop_flat_map(|(n, extra, with_eq)| {
        (
            proptest::collection::vec(-5i32..=5, n),
            proptest::collection::vec((proptest::collection::vec(-4i32..=4, n), 1i32..=8), extra),
            proptest::collection::vec(-3i32..=3, n),
            proptest::collection::vec(-2i32..=2, n),
        )
            .prop_map(move |(c, rows, eq_row, eq_pt)| {
                let mut lp =
                    LpProblem::new(n).with_objective(c.iter().map(|&v| v as f64).collect());
                let mut a = Vec::new();
                let mut b = Vec::new();
                for j in 0..n {
                    for s in [1.0, -1.0] {
                        let mut r = vec![0.0; n];
                        r[j] = s;
                        a.push(r);
                        b.push(5.0);
                    }
                }
                for (r, rhs) in rows {
                    a.push(r.iter().map(|&v| v as f64).collect());
                    b.push(rhs as f64);
                }
                for (r, &rhs) in a.iter().zip(&b) {
                    lp.add_ineq(r, rhs);
                }
                if with_eq && eq_row.iter().any(|&v| v != 0) {
                    // Passes through a point of the box scaled down so it
                    // stays inside the extra rows too.
                    let row: Vec<f64> = eq_row.iter().map(|&v| v as f64).collect();
                    let pt: Vec<f64> = eq_pt.iter().map(|&v| v as f64 * 0.05).collect();
                    let rhs: f64 = row.iter().zip(&pt).map(|(u, v)| u * v).sum();
                    lp.add_eq(&row, rhs);
                }
                (lp, a, b)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn strong_duality_and_dual_feasibility((lp, _, _) in bounded_lp()) {
        let s = solve_lp(&lp).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        prop_assert!(lp.max_violation(&s.point) <= 1e-9);
        let gap = (s.value - s.dual_value(&lp)).abs();
        prop_assert!(gap <= 1e-7, "duality gap {gap}");
        prop_assert!(s.dual_ineq.iter().all(|&l| l >= -1e-9));
        // Stationarity: c + A_inᵀλ + A_eqᵀν = 0.
        for j in 0..lp.num_vars() {
            let mut g = lp.objective[j];
            for (i, l) in s.dual_ineq.iter().enumerate() {
                g += lp.a_in[(i, j)] * l;
            }
            for (i, v) in s.dual_eq.iter().enumerate() {
                g += lp.a_eq[(i, j)] * v;
            }
            prop_assert!(g.abs() <= 1e-7, "stationarity residual {g}");
        }
        // Complementary slackness.
        for (i, l) in s.dual_ineq.iter().enumerate() {
            let slack = lp.b_in[i] - (0..lp.num_vars()).map(|j| lp.a_in[(i, j)] * s.point[j]).sum::<f64>();
            prop_assert!((l * slack).abs() <= 1e-7);
        }
    }

    #[test]
    fn optimum_matches_vertex_oracle((lp, a, b) in bounded_lp()) {
        prop_assume!(lp.b_eq.is_empty());
        let s = solve_lp(&lp).unwrap();
        let verts = common::brute_vertices(&a, &b, lp.num_vars());
        let best = verts
            .iter()
            .map(|v| v.iter().zip(&lp.objective).map(|(x, c)| x * c).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((s.value - best).abs() <= 1e-7, "{} vs {}", s.value, best);
    }

    #[test]
    fn deterministic((lp, _, _) in bounded_lp()) {
        prop_assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp).unwrap());
    }

    #[test]
    fn unconstrained_objective_is_unbounded((lp, _, _) in bounded_lp()) {
        // Dropping every row leaves only the objective: unbounded unless c = 0.
        let free = LpProblem::new(lp.num_vars()).with_objective(lp.objective.clone());
        let s = solve_lp(&free).unwrap();
        if lp.objective.iter().all(|&c| c == 0.0) {
            prop_assert_eq!(s.status, LpStatus::Optimal);
        } else {
            prop_assert_eq!(s.status, LpStatus::Unbounded);
        }
    }
}

#[test]
fn contradictory_rows_are_infeasible() {
    let mut lp = LpProblem::new(2).with_objective(vec![1.0, 1.0]);
    lp.add_ineq(&[1.0, 1.0], 1.0);
    lp.add_ineq(&[-1.0, -1.0], -2.0);
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn degenerate_vertex_with_many_tight_rows() {
    // Five rows through the optimum (0, 0) of a 2-D problem.
    let mut lp = LpProblem::new(2).with_objective(vec![1.0, 1.0]);
    for (a, b) in [
        (-1.0, 0.0),
        (0.0, -1.0),
        (-1.0, -1.0),
        (-2.0, -1.0),
        (-1.0, -3.0),
    ] {
        lp.add_ineq(&[a, b], 0.0);
    }
    lp.add_ineq(&[1.0, 1.0], 4.0);
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    common::assert_close(s.value, 0.0, 1e-12);
    common::assert_close(s.dual_value(&lp), 0.0, 1e-12);
}
