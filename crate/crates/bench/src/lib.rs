//! Benchmark fixtures.

use blp_core::{
    gen_knapsack_blp, gen_random_bounded, BilevelInstance, KnapsackSpec, LpProblem, Matrix,
    Polytope, RandomSpec,
};

pub fn knapsack(weights: &[u64], capacity: u64) -> BilevelInstance {
    gen_knapsack_blp(&KnapsackSpec::new(weights.to_vec(), capacity))
        .expect("valid knapsack")
        .instance
}

pub fn random(p: usize, q: usize, extra_rows: usize, seed: u64) -> BilevelInstance {
    gen_random_bounded(&RandomSpec {
        p,
        q,
        m_f: extra_rows,
        seed,
        radius: 2.0,
    })
    .expect("valid parameters")
}

/// The follower LP of a random instance at the leader origin, which has a
/// few dozen rows once `extra_rows` is large.
pub fn follower_lp(q: usize, extra_rows: usize, seed: u64) -> LpProblem {
    let inst = random(2, q, extra_rows, seed);
    inst.follower_lp(&[0.0, 0.0])
}

/// Unit cube `[0, 1]ᵈ` with its corner near the origin cut off.
pub fn cut_cube(d: usize) -> Polytope {
    let mut rows = Vec::new();
    let mut b = Vec::new();
    for j in 0..d {
        for (s, rhs) in [(1.0, 1.0), (-1.0, 0.0)] {
            let mut r = vec![0.0; d];
            r[j] = s;
            rows.push(r);
            b.push(rhs);
        }
    }
    rows.push(vec![-1.0; d]);
    b.push(-0.5);
    Polytope::new(Matrix::from_rows(d, &rows).expect("rectangular"), b)
}
