//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use blp_core::bnb::check_bilevel_feasible;
use blp_core::duopoly::{
    cournot_best_response, cournot_equilibrium, gnep_best_response, gnep_equilibria,
    is_gnep_equilibrium, stackelberg_equilibrium,
};
use blp_core::polytope::centroid;
use blp_core::response::{reaction_polytope, scan_leader_1d};
use blp_core::{
    approach_values, gen_knapsack_blp, gen_random_bounded, solve_bigm, solve_lp, solve_sos1,
    Approach, BilevelInstance, BnbOptions, DuopolyParams, KnapsackSpec, LpProblem, LpStatus,
    Matrix, Polytope, RandomSpec, SolveStatus, Strategy,
};
use common::{complementarity_brute_force, golden_section_max, knapsack_brute_force, Outcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn near(label: &str, got: f64, want: f64, tol: f64) -> Check {
    ensure((got - want).abs() <= tol, || {
        format!("{label}: got {got}, want {want} (tol {tol})")
    })
}

fn near_pair(label: &str, got: Option<(f64, f64)>, want: (f64, f64), tol: f64) -> Check {
    let (a, b) = got.ok_or_else(|| format!("{label}: missing"))?;
    near(label, a, want.0, tol)?;
    near(label, b, want.1, tol)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn duopoly_table() -> Check {
    let p = DuopolyParams::new(10.0, 1.0, 1.0);
    let c = cournot_equilibrium(&p).map_err(err)?;
    let s = stackelberg_equilibrium(&p).map_err(err)?;
    near_pair("Cournot quantities", c.quantities, (3.0, 3.0), 1e-9)?;
    near_pair("Cournot profits", c.profits, (9.0, 9.0), 1e-9)?;
    near_pair("Stackelberg quantities", s.quantities, (4.5, 2.25), 1e-9)?;
    near_pair("Stackelberg profits", s.profits, (10.125, 5.0625), 1e-9)
}

fn gnep_segment() -> Check {
    let p = DuopolyParams::new(10.0, 1.0, 1.0).with_capacity(5.0);
    let [a, b] = gnep_equilibria(&p)
        .map_err(err)?
        .segment
        .ok_or("no segment reported")?;
    near_pair("first endpoint", Some(a), (1.0, 4.0), 1e-9)?;
    near_pair("second endpoint", Some(b), (4.0, 1.0), 1e-9)?;
    ensure(
        is_gnep_equilibrium(&p, 2.5, 2.5, 1e-9).map_err(err)?,
        || "(2.5, 2.5) rejected".into(),
    )?;
    ensure(
        !is_gnep_equilibrium(&p, 0.5, 4.5, 1e-9).map_err(err)?,
        || "(0.5, 4.5) accepted".into(),
    )?;
    ensure(
        !is_gnep_equilibrium(&p, 4.5, 0.5, 1e-9).map_err(err)?,
        || "(4.5, 0.5) accepted".into(),
    )?;
    // Numerical cross-check: each endpoint is a mutual golden-section best response.
    for (q1, q2) in [a, b, (2.5, 2.5)] {
        let b1 = golden_section_max(|q| p.profit(q, q2), 0.0, 5.0 - q2, 1e-12);
        let b2 = golden_section_max(|q| p.profit(q, q1), 0.0, 5.0 - q1, 1e-12);
        near("numeric response 1", b1, q1, 1e-6)?;
        near("numeric response 2", b2, q2, 1e-6)?;
        near(
            "closed-form response",
            gnep_best_response(&p, q2).map_err(err)?,
            q1,
            1e-9,
        )?;
    }
    Ok(())
}

fn three_approaches(polygon: &BilevelInstance) -> Check {
    near(
        "phi_o(8)",
        approach_values(polygon, &[8.0]).map_err(err)?.phi_o,
        0.0,
        1e-7,
    )?;
    near(
        "phi_p(0)",
        approach_values(polygon, &[0.0]).map_err(err)?.phi_p,
        4.0,
        1e-7,
    )?;
    near(
        "phi_n(10)",
        approach_values(polygon, &[10.0]).map_err(err)?.phi_n,
        3.0,
        1e-7,
    )?;
    let scan = scan_leader_1d(polygon, 0.0, 10.0, 101, Approach::Neutral).map_err(err)?;
    let (x_min, _) = scan
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or("empty scan")?;
    near("neutral scan argmin", x_min, 10.0, 1e-12)?;
    let s = solve_sos1(polygon, &BnbOptions::default()).map_err(err)?;
    ensure(s.status == SolveStatus::Optimal, || {
        format!("sos1 status {:?}", s.status)
    })?;
    near("sos1 value", s.value, 0.0, 1e-7)?;
    near("sos1 x", s.x[0], 8.0, 1e-7)?;
    let (b, _) = solve_bigm(polygon, &BnbOptions::default()).map_err(err)?;
    ensure(b.status == SolveStatus::Optimal, || {
        format!("bigm status {:?}", b.status)
    })?;
    near("bigm value", b.value, 0.0, 1e-7)?;
    near("bigm x", b.x[0], 8.0, 1e-7)
}

fn centroid_map() -> Check {
    for x in [0.0, 0.1, 0.5, 1.0] {
        let a = Matrix::from_rows(
            2,
            &[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-x, 1.0]],
        )
        .ok_or("matrix")?;
        let c = centroid(&Polytope::new(a, vec![1.0, 0.0, 1.0, 0.0, 0.0])).map_err(err)?;
        let want = if x == 0.0 {
            (0.5, 0.0)
        } else {
            (2.0 / 3.0, x / 3.0)
        };
        near_pair(
            &format!("centroid at x={x}"),
            Some((c[0], c[1])),
            want,
            1e-9,
        )?;
    }
    Ok(())
}

fn knapsack_instances() -> Vec<(Vec<u64>, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..10)
        .map(|k| {
            let n = 1 + k % 4;
            let w: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
            let total: u64 = w.iter().sum();
            let cap = rng.gen_range(0..=total);
            (w, cap)
        })
        .collect()
}

fn knapsack_reduction() -> Check {
    for (weights, capacity) in knapsack_instances() {
        let tag = format!("weights {weights:?} capacity {capacity}");
        let spec = KnapsackSpec::new(weights.clone(), capacity);
        let inst = gen_knapsack_blp(&spec).map_err(err)?.instance;
        let s = solve_sos1(&inst, &BnbOptions::default()).map_err(err)?;
        ensure(s.status == SolveStatus::Optimal, || {
            format!("{tag}: sos1 status {:?}", s.status)
        })?;
        ensure(s.x.iter().all(|v| (v - v.round()).abs() <= 1e-6), || {
            format!("{tag}: x = {:?}", s.x)
        })?;
        ensure(s.y.iter().all(|v| v.abs() <= 1e-6), || {
            format!("{tag}: y = {:?}", s.y)
        })?;
        let picked: f64 =
            s.x.iter()
                .zip(&weights)
                .map(|(x, &w)| x.round() * w as f64)
                .sum();
        let best = knapsack_brute_force(&weights, capacity) as f64;
        near(&format!("{tag}: knapsack value"), picked, best, 1e-6)?;
        near(&format!("{tag}: objective"), -s.value, best, 1e-6)?;
        let (b, _) = solve_bigm(&inst, &BnbOptions::default()).map_err(err)?;
        near(&format!("{tag}: bigm value"), b.value, s.value, 1e-6)?;
    }
    Ok(())
}

fn random_instance(seed: u64) -> BilevelInstance {
    let p = 1 + (seed % 2) as usize;
    let q = 1 + (seed / 2 % 2) as usize;
    let extra = (seed as usize) % (7 - 2 * q);
    gen_random_bounded(&RandomSpec {
        p,
        q,
        m_f: extra,
        seed,
        radius: 2.0,
    })
    .expect("generator")
}

fn as_outcome(status: SolveStatus, value: f64) -> Outcome {
    match status {
        SolveStatus::Optimal => Outcome::Optimal(value),
        SolveStatus::Infeasible => Outcome::Infeasible,
        SolveStatus::Unbounded => Outcome::Unbounded,
    }
}

fn same(a: Outcome, b: Outcome) -> bool {
    match (a, b) {
        (Outcome::Optimal(u), Outcome::Optimal(v)) => (u - v).abs() <= 1e-6,
        _ => a == b,
    }
}

fn cross_validation() -> Check {
    for seed in 0..50 {
        let inst = random_instance(seed);
        let oracle = complementarity_brute_force(&inst);
        let s = solve_sos1(&inst, &BnbOptions::default()).map_err(err)?;
        let (b, _) = solve_bigm(&inst, &BnbOptions::default()).map_err(err)?;
        let (so, bo) = (as_outcome(s.status, s.value), as_outcome(b.status, b.value));
        ensure(same(so, oracle) && same(bo, oracle), || {
            format!("seed {seed}: sos1 {so:?}, bigm {bo:?}, oracle {oracle:?}")
        })?;
    }
    Ok(())
}

fn eps_argmin(mult_sol: &BilevelInstance) -> Check {
    let eps = 1.0;
    for x in [-2.0, -0.5, 0.5, 2.0] {
        let r = reaction_polytope(mult_sol, &[x], eps).map_err(err)?;
        let ys = r.vertices.iter().map(|v| v[0]);
        let lo = ys.clone().fold(f64::INFINITY, f64::min);
        let hi = ys.fold(f64::NEG_INFINITY, f64::max);
        let want = if x < 0.0 {
            (0.0, f64::min(1.0, -eps / x))
        } else {
            (f64::max(0.0, 1.0 - eps / x), 1.0)
        };
        near_pair(&format!("S_eps({x})"), Some((lo, hi)), want, 1e-9)?;
    }
    let v = approach_values(mult_sol, &[0.0]).map_err(err)?;
    near("phi_o(0)", v.phi_o, 0.0, 1e-9)?;
    near("phi_p(0)", v.phi_p, 1.0, 1e-9)
}

fn duality_gap(lp: &LpProblem, label: &str) -> Check {
    let s = solve_lp(lp).map_err(err)?;
    if s.status == LpStatus::Optimal {
        let gap = (s.value - s.dual_value(lp)).abs();
        ensure(gap <= 1e-7, || format!("{label}: duality gap {gap}"))?;
    }
    Ok(())
}

fn property_suites(polygon: &BilevelInstance) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 100..160 {
        let inst = random_instance(seed);
        let x: Vec<f64> = (0..inst.p).map(|_| rng.gen_range(-2.0..=2.0)).collect();

        // Duality gap on follower LPs and on the root relaxation.
        duality_gap(&inst.follower_lp(&x), &format!("seed {seed} follower"))?;
        let model = blp_core::build_mpcc(&inst).map_err(err)?;
        duality_gap(&model.relaxation, &format!("seed {seed} relaxation"))?;

        // Sandwich on the approach values.
        let v = approach_values(&inst, &x).map_err(err)?;
        ensure(
            v.phi_o <= v.phi_n + 1e-9 && v.phi_n <= v.phi_p + 1e-9,
            || format!("seed {seed}: {} {} {}", v.phi_o, v.phi_n, v.phi_p),
        )?;

        // ε-argmin monotonicity.
        let (e1, e2) = (rng.gen_range(0.0..1.0), rng.gen_range(1.0..3.0));
        let small = reaction_polytope(&inst, &x, e1).map_err(err)?;
        let large = reaction_polytope(&inst, &x, e2).map_err(err)?;
        ensure(
            small
                .vertices
                .iter()
                .all(|y| large.polytope.contains(y, 1e-9)),
            || format!("seed {seed}: S_{e1} not inside S_{e2}"),
        )?;

        // Incumbent feasibility at every update, under both search orders.
        for strategy in [Strategy::BestFirst, Strategy::DepthFirst] {
            let r = solve_sos1(&inst, &BnbOptions::with_strategy(strategy)).map_err(err)?;
            for inc in &r.incumbents {
                ensure(
                    check_bilevel_feasible(&inst, &inc.x, &inc.y, 1e-7).map_err(err)?,
                    || format!("seed {seed}: infeasible incumbent at node {}", inc.node),
                )?;
            }
        }

        // Determinism.
        let a = serde_json::to_string(&solve_sos1(&inst, &BnbOptions::default()).map_err(err)?)
            .map_err(err)?;
        let b = serde_json::to_string(&solve_sos1(&inst, &BnbOptions::default()).map_err(err)?)
            .map_err(err)?;
        ensure(a == b, || format!("seed {seed}: nondeterministic output"))?;
    }

    for approach in [
        Approach::Optimistic,
        Approach::Neutral,
        Approach::Pessimistic,
    ] {
        scan_leader_1d(polygon, 0.0, 10.0, 5, approach).map_err(err)?;
    }
    let o = scan_leader_1d(polygon, 0.0, 10.0, 101, Approach::Optimistic).map_err(err)?;
    let n = scan_leader_1d(polygon, 0.0, 10.0, 101, Approach::Neutral).map_err(err)?;
    let p = scan_leader_1d(polygon, 0.0, 10.0, 101, Approach::Pessimistic).map_err(err)?;
    for ((o, n), p) in o.iter().zip(&n).zip(&p) {
        ensure(o.1 <= n.1 + 1e-9 && n.1 <= p.1 + 1e-9, || {
            format!("polygon sandwich at x={}", o.0)
        })?;
    }

    // Closed-form best responses are fixed points of the Cournot map.
    let d = DuopolyParams::new(10.0, 1.0, 1.0);
    near(
        "Cournot fixed point",
        cournot_best_response(&d, 3.0).map_err(err)?,
        3.0,
        1e-12,
    )
}

fn main() -> ExitCode {
    let polygon = common::fixture("polygon.json");
    let mult_sol = common::fixture("mult_sol.json");

    let criteria: Vec<Criterion> = vec![
        (
            "duopoly table",
            Duration::from_millis(1),
            Box::new(duopoly_table),
        ),
        (
            "GNEP segment",
            Duration::from_millis(10),
            Box::new(gnep_segment),
        ),
        (
            "three-approach polygon",
            Duration::from_secs(1),
            Box::new(|| three_approaches(&polygon)),
        ),
        (
            "centroid map",
            Duration::from_millis(10),
            Box::new(centroid_map),
        ),
        (
            "knapsack reduction",
            Duration::from_secs(5),
            Box::new(knapsack_reduction),
        ),
        (
            "method cross-validation",
            Duration::from_secs(30),
            Box::new(cross_validation),
        ),
        (
            "eps-argmin formulas",
            Duration::from_millis(10),
            Box::new(|| eps_argmin(&mult_sol)),
        ),
        (
            "property suites",
            Duration::from_secs(60),
            Box::new(|| property_suites(&polygon)),
        ),
    ];

    let mut failures = 0;
    for (k, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            ensure(elapsed <= *limit, || {
                format!("took {elapsed:?}, limit {limit:?}")
            })
        });
        match outcome {
            Ok(()) => println!("PASS criterion {}: {name} ({elapsed:.2?})", k + 1),
            Err(msg) => {
                failures += 1;
                println!("FAIL criterion {}: {name} ({elapsed:.2?}): {msg}", k + 1);
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
