use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use blp_core::duopoly::{cournot_equilibrium, gnep_equilibria, stackelberg_equilibrium};
use blp_core::model::{has_errors, Severity};
use blp_core::response::reaction_polytope;
use blp_core::{
    approach_value, approach_values, gen_knapsack_blp, gen_random_bounded, solve_bigm,
    solve_bigm_with, solve_sos1, validate, Approach, BigMCertificate, BilevelInstance, BnbOptions,
    DuopolyParams, EquilibriumReport, Error, KnapsackSpec, Penalty, RandomSpec, SolveResult,
    SolveStatus, Strategy,
};
use serde_json::{json, Value};

use crate::output::{g6, num, nums, print_json, vec6};
use crate::{
    ApproachArg, CompareArgs, DuopolyArgs, EvalArgs, KnapsackArgs, Method, RandomArgs, SearchOrder,
    SolveArgs,
};

const EXIT_OK: u8 = 0;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_UNBOUNDED: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_DIVERGED: u8 = 5;

/// Two solver values are considered equal within this absolute tolerance.
const AGREEMENT_TOL: f64 = 1e-6;

fn load(path: &Path) -> Result<BilevelInstance> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let inst = BilevelInstance::from_json(&text)
        .with_context(|| format!("cannot load {}", path.display()))?;
    let diags = validate(&inst);
    for d in diags.iter().filter(|d| d.severity() == Severity::Warning) {
        eprintln!("warning: {d}");
    }
    if has_errors(&diags) {
        let msgs: Vec<String> = diags
            .iter()
            .filter(|d| d.severity() == Severity::Error)
            .map(ToString::to_string)
            .collect();
        bail!("invalid instance {}: {}", path.display(), msgs.join("; "));
    }
    Ok(inst)
}

fn bnb_options(order: SearchOrder) -> Result<BnbOptions> {
    let strategy = match order {
        SearchOrder::Best => Strategy::BestFirst,
        SearchOrder::Dfs => Strategy::DepthFirst,
    };
    let mut options = BnbOptions::with_strategy(strategy);
    if let Ok(raw) = std::env::var("BLP_NODE_BUDGET") {
        options.node_budget = raw.trim().parse().with_context(|| {
            format!("BLP_NODE_BUDGET must be a nonnegative integer, got {raw:?}")
        })?;
    }
    Ok(options)
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::Unbounded => EXIT_UNBOUNDED,
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, raw: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .with_context(|| format!("invalid {flag} entry {s:?}"))
        })
        .collect()
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n"))
            .with_context(|| format!("cannot write {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn certificate_json(cert: &BigMCertificate) -> Value {
    json!({
        "m": num(cert.m.max(1.0)),
        "m1": num(cert.m1),
        "m2": num(cert.m2),
        "extreme_points": cert.extreme_points,
    })
}

fn print_stats(r: &SolveResult) {
    let s = &r.stats;
    println!(
        "nodes: {} explored, {} infeasible, {} pruned by bound, {} feasible, {} leaves",
        s.nodes_explored, s.pruned_infeasible, s.pruned_bound, s.pruned_sos1, s.leaves
    );
}

// ---------------------------------------------------------------------------
// solve

pub fn solve(a: &SolveArgs) -> Result<u8> {
    let inst = load(&a.file)?;
    let options = bnb_options(a.strategy)?;
    let mut bigm_info = Value::Null;
    let outcome = match a.method {
        Method::Sos1 => {
            if a.bigm.is_some() {
                bail!("--bigm only applies to --method bigm");
            }
            solve_sos1(&inst, &options)
        }
        Method::Bigm => match a.bigm.as_deref().unwrap_or("auto") {
            "auto" => solve_bigm(&inst, &options).map(|(r, cert)| {
                bigm_info = certificate_json(&cert);
                r
            }),
            raw => {
                let m: f64 = raw
                    .parse()
                    .with_context(|| format!("--bigm must be a number or auto, got {raw:?}"))?;
                bigm_info = json!({ "m": num(m) });
                solve_bigm_with(&inst, m, &options)
            }
        },
    };
    let method = match a.method {
        Method::Sos1 => "sos1",
        Method::Bigm => "bigm",
    };

    let result = match outcome {
        Ok(r) => r,
        Err(Error::BudgetExceeded { limit }) => {
            if a.json {
                print_json(
                    &json!({ "method": method, "status": "BudgetExceeded", "node_budget": limit }),
                );
            } else {
                println!("status: BudgetExceeded (node budget {limit})");
            }
            return Ok(EXIT_BUDGET);
        }
        Err(e) => return Err(e.into()),
    };

    if a.json {
        let mut doc = serde_json::to_value(&result)?;
        doc["method"] = json!(method);
        if !bigm_info.is_null() {
            doc["bigm"] = bigm_info;
        }
        print_json(&doc);
    } else {
        println!("status: {:?}", result.status);
        if result.status == SolveStatus::Optimal {
            println!("value: {}", g6(result.value));
            println!("x: {}", vec6(&result.x));
            println!("y: {}", vec6(&result.y));
        }
        print_stats(&result);
        if let Some(m) = bigm_info.get("m").and_then(Value::as_f64) {
            match (bigm_info["m1"].as_f64(), bigm_info["m2"].as_f64()) {
                (Some(m1), Some(m2)) => {
                    println!("big-M: {} (M1 = {}, M2 = {})", g6(m), g6(m1), g6(m2))
                }
                _ => println!("big-M: {}", g6(m)),
            }
        }
    }
    Ok(status_code(result.status))
}

// ---------------------------------------------------------------------------
// eval

/// Maps evaluator errors on a well-formed input to exit codes.
fn eval_failure(e: Error) -> Result<u8> {
    match e {
        Error::FollowerInfeasible { .. } => {
            eprintln!("error: {e}");
            Ok(EXIT_INFEASIBLE)
        }
        Error::FollowerUnbounded { .. } => {
            eprintln!("error: {e}");
            Ok(EXIT_UNBOUNDED)
        }
        other => Err(other.into()),
    }
}

pub fn eval(a: &EvalArgs) -> Result<u8> {
    let inst = load(&a.file)?;
    let x: Vec<f64> = parse_list("--x", &a.x)?;
    if x.len() != inst.p {
        bail!(
            "--x has {} entries, the instance has p = {}",
            x.len(),
            inst.p
        );
    }

    let mut doc = json!({ "x": nums(&x) });
    let mut lines = Vec::new();
    let single = |approach| approach_value(&inst, &x, approach);
    match a.approach {
        ApproachArg::All => match approach_values(&inst, &x) {
            Ok(v) => {
                doc["phi_o"] = num(v.phi_o);
                doc["phi_p"] = num(v.phi_p);
                doc["phi_n"] = num(v.phi_n);
                doc["centroid"] = nums(&v.centroid_point);
                lines.push(format!("phi_o = {}", g6(v.phi_o)));
                lines.push(format!("phi_p = {}", g6(v.phi_p)));
                lines.push(format!("phi_n = {}", g6(v.phi_n)));
                lines.push(format!("centroid = {}", vec6(&v.centroid_point)));
            }
            Err(Error::UnboundedFace { .. }) => {
                // The neutral value needs a bounded face; the other two do not.
                let o = match single(Approach::Optimistic) {
                    Ok(v) => v,
                    Err(e) => return eval_failure(e),
                };
                let p = match single(Approach::Pessimistic) {
                    Ok(v) => v,
                    Err(e) => return eval_failure(e),
                };
                doc["phi_o"] = num(o);
                doc["phi_p"] = num(p);
                doc["phi_n"] = Value::Null;
                lines.push(format!("phi_o = {}", g6(o)));
                lines.push(format!("phi_p = {}", g6(p)));
                lines.push("phi_n = undefined (unbounded reaction set)".into());
            }
            Err(e) => return eval_failure(e),
        },
        arg => {
            let (approach, key) = match arg {
                ApproachArg::Optimistic => (Approach::Optimistic, "phi_o"),
                ApproachArg::Pessimistic => (Approach::Pessimistic, "phi_p"),
                _ => (Approach::Neutral, "phi_n"),
            };
            match single(approach) {
                Ok(v) => {
                    doc[key] = num(v);
                    lines.push(format!("{key} = {}", g6(v)));
                }
                Err(e) => return eval_failure(e),
            }
        }
    }

    if let Some(eps) = a.eps {
        let r = match reaction_polytope(&inst, &x, eps) {
            Ok(r) => r,
            Err(e) => return eval_failure(e),
        };
        let mut verts = r.vertices.clone();
        verts.sort_by(|u, v| {
            u.iter()
                .zip(v)
                .map(|(s, t)| s.total_cmp(t))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        doc["eps"] = num(eps);
        doc["value_function"] = num(r.value);
        doc["eps_vertices"] = Value::Array(verts.iter().map(|v| nums(v)).collect());
        doc["eps_dimension"] = json!(r.affine_dim);
        lines.push(format!(
            "S_eps at eps = {}: {} vertices, dimension {}",
            g6(eps),
            verts.len(),
            r.affine_dim
        ));
        for v in &verts {
            lines.push(format!("  {}", vec6(v)));
        }
        if inst.q == 1 && !verts.is_empty() {
            let (lo, hi) = (verts[0][0], verts[verts.len() - 1][0]);
            doc["eps_segment"] = json!([num(lo), num(hi)]);
            lines.push(format!("segment [{}, {}]", g6(lo), g6(hi)));
        }
    }

    if a.json {
        print_json(&doc);
    } else {
        for l in lines {
            println!("{l}");
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// gen

pub fn gen_knapsack(a: &KnapsackArgs) -> Result<u8> {
    let weights: Vec<u64> = parse_list("--weights", &a.weights)?;
    let penalty = match a.penalty.as_str() {
        "auto" => Penalty::Auto,
        raw => Penalty::Value(
            raw.parse()
                .with_context(|| format!("--penalty must be a number or auto, got {raw:?}"))?,
        ),
    };
    let spec = KnapsackSpec {
        weights,
        capacity: a.cap,
        penalty,
    };
    let generated = gen_knapsack_blp(&spec)?;
    for d in &generated.diagnostics {
        eprintln!("warning: {d}");
    }
    write_output(a.output.as_deref(), &generated.instance.to_json())?;
    let line = format!("penalty M = {}", g6(generated.penalty));
    if a.output.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(EXIT_OK)
}

pub fn gen_random(a: &RandomArgs) -> Result<u8> {
    let inst = gen_random_bounded(&RandomSpec {
        p: a.p,
        q: a.q,
        m_f: a.mf,
        seed: a.seed,
        radius: a.radius,
    })?;
    write_output(a.output.as_deref(), &inst.to_json())?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// compare

pub fn compare(a: &CompareArgs) -> Result<u8> {
    let inst = load(&a.file)?;
    let options = bnb_options(a.strategy)?;
    let budget = |e: &Error| matches!(e, Error::BudgetExceeded { .. });
    let sos1 = solve_sos1(&inst, &options);
    let bigm = solve_bigm(&inst, &options);
    let (sos1, (bigm, cert)) = match (sos1, bigm) {
        (Ok(s), Ok(b)) => (s, b),
        (Err(e), _) | (_, Err(e)) if budget(&e) => {
            if a.json {
                print_json(
                    &json!({ "status": "BudgetExceeded", "node_budget": options.node_budget }),
                );
            } else {
                println!(
                    "status: BudgetExceeded (node budget {})",
                    options.node_budget
                );
            }
            return Ok(EXIT_BUDGET);
        }
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    };

    let delta = match (sos1.status, bigm.status) {
        (SolveStatus::Optimal, SolveStatus::Optimal) => (sos1.value - bigm.value).abs(),
        (s, b) if s == b => 0.0,
        _ => f64::INFINITY,
    };
    let agree = delta <= AGREEMENT_TOL;

    if a.json {
        print_json(&json!({
            "agree": agree,
            "delta": num(delta),
            "sos1": serde_json::to_value(&sos1)?,
            "bigm": serde_json::to_value(&bigm)?,
            "certificate": certificate_json(&cert),
        }));
    } else {
        for (name, r) in [("sos1", &sos1), ("bigm", &bigm)] {
            println!(
                "{name}: {:?}, value {}, {} nodes explored",
                r.status,
                g6(r.value),
                r.stats.nodes_explored
            );
        }
        println!(
            "big-M: {} (M1 = {}, M2 = {})",
            g6(cert.m.max(1.0)),
            g6(cert.m1),
            g6(cert.m2)
        );
        println!(
            "|delta| = {}: {}",
            g6(delta),
            if agree { "agree" } else { "DIVERGE" }
        );
    }
    Ok(if agree { EXIT_OK } else { EXIT_DIVERGED })
}

// ---------------------------------------------------------------------------
// duopoly

fn report_json(r: &EquilibriumReport) -> Result<Value> {
    Ok(serde_json::to_value(r)?)
}

fn pair(p: (f64, f64)) -> String {
    format!("({}, {})", g6(p.0), g6(p.1))
}

pub fn duopoly(a: &DuopolyArgs) -> Result<u8> {
    let mut params = DuopolyParams::new(a.p0, a.alpha, a.c);
    if let Some(k) = a.capacity {
        params = params.with_capacity(k);
    }
    params.validate()?;
    let cournot = cournot_equilibrium(&params)?;
    let stackelberg = stackelberg_equilibrium(&params)?;
    let gnep = a.capacity.map(|_| gnep_equilibria(&params)).transpose()?;

    if a.json {
        let mut doc = json!({
            "params": { "p0": num(a.p0), "alpha": num(a.alpha), "c": num(a.c) },
            "cournot": report_json(&cournot)?,
            "stackelberg": report_json(&stackelberg)?,
        });
        if let (Some(g), Some(k)) = (&gnep, a.capacity) {
            doc["params"]["capacity"] = num(k);
            doc["gnep"] = report_json(g)?;
        }
        print_json(&doc);
        return Ok(EXIT_OK);
    }

    println!("{:<12} {:<20} {:<20}", "model", "quantities", "profits");
    for (name, r) in [("Cournot", &cournot), ("Stackelberg", &stackelberg)] {
        let q = r.quantities.map(pair).unwrap_or_default();
        let p = r.profits.map(pair).unwrap_or_default();
        println!("{name:<12} {q:<20} {p:<20}");
    }
    if let (Some(g), Some(k)) = (gnep, a.capacity) {
        match (g.segment, g.quantities) {
            (Some([lo, hi]), _) => {
                println!("GNEP (K = {}): segment {} to {}", g6(k), pair(lo), pair(hi))
            }
            (None, Some(q)) => println!("GNEP (K = {}): capacity slack, point {}", g6(k), pair(q)),
            _ => {}
        }
    }
    Ok(EXIT_OK)
}
