//! Linear bilevel instances.
//!
//! ```text
//! min_{x,y}  c_lᵀx + d_lᵀy
//! s.t.       A_l x ≤ b_l
//!            y solves  min_y (c_f + C_fᵀx)ᵀy  s.t.  A_f x + B_f y ≤ b_f
//! ```
//!
//! Both levels minimise. `C_f` is optional and only the pointwise evaluators
//! accept it; reformulations require a follower cost independent of `x`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::polytope::{is_bounded, Polytope};

#[derive(Debug, Clone, PartialEq)]
pub struct BilevelInstance {
    pub p: usize,
    pub q: usize,
    pub m_l: usize,
    pub m_f: usize,
    pub c_l: Vector,
    pub d_l: Vector,
    pub a_l: Matrix,
    pub b_l: Vector,
    pub c_f: Vector,
    pub a_f: Matrix,
    pub b_f_mat: Matrix,
    pub b_f: Vector,
    pub c_f_x: Option<Matrix>,
    pub meta: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    ShapeMismatch {
        field: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    NonFinite {
        field: &'static str,
    },
    EmptyJointRegion,
    UnboundedJointRegion,
    /// Knapsack weights all equal to 1; the reduction assumes max weight ≥ 2.
    TrivialKnapsack,
}

impl Diagnostic {
    pub fn severity(&self) -> Severity {
        match self {
            Diagnostic::UnboundedJointRegion | Diagnostic::TrivialKnapsack => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::ShapeMismatch {
                field,
                expected,
                found,
            } => write!(
                f,
                "{field}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Diagnostic::NonFinite { field } => write!(f, "{field}: non-finite entry"),
            Diagnostic::EmptyJointRegion => f.write_str("joint region D is empty"),
            Diagnostic::UnboundedJointRegion => f.write_str("joint region D is unbounded"),
            Diagnostic::TrivialKnapsack => f.write_str("trivial case: all weights equal 1"),
        }
    }
}

impl BilevelInstance {
    pub fn is_standard(&self) -> bool {
        self.c_f_x.is_none()
    }

    /// Joint region `D = {A_l x ≤ b_l, A_f x + B_f y ≤ b_f}` over `(x, y)`.
    pub fn joint_region(&self) -> Polytope {
        let n = self.p + self.q;
        let mut a = Matrix::zeros(0, n);
        let mut b = Vec::with_capacity(self.m_l + self.m_f);
        for i in 0..self.m_l {
            let mut r = vec![0.0; n];
            r[..self.p].copy_from_slice(self.a_l.row(i));
            a.push_row(&r);
            b.push(self.b_l[i]);
        }
        for i in 0..self.m_f {
            let mut r = vec![0.0; n];
            r[..self.p].copy_from_slice(self.a_f.row(i));
            r[self.p..].copy_from_slice(self.b_f_mat.row(i));
            a.push_row(&r);
            b.push(self.b_f[i]);
        }
        Polytope::new(a, b)
    }

    /// Follower cost at `x`: `c_f + C_fᵀx`.
    pub fn follower_cost(&self, x: &[f64]) -> Vector {
        let mut c = self.c_f.clone();
        if let Some(cx) = &self.c_f_x {
            for (i, xi) in x.iter().enumerate() {
                for (cj, v) in c.iter_mut().zip(cx.row(i)) {
                    *cj += xi * v;
                }
            }
        }
        c
    }

    /// Follower LP at `x`: `min c_f(x)ᵀy  s.t.  B_f y ≤ b_f − A_f x`.
    pub fn follower_lp(&self, x: &[f64]) -> LpProblem {
        let ax = self.a_f.mul_vec(x);
        LpProblem {
            objective: self.follower_cost(x),
            a_in: self.b_f_mat.clone(),
            b_in: self.b_f.iter().zip(&ax).map(|(b, a)| b - a).collect(),
            a_eq: Matrix::zeros(0, self.q),
            b_eq: Vec::new(),
        }
    }

    pub fn leader_value(&self, x: &[f64], y: &[f64]) -> f64 {
        crate::linalg::dot(&self.c_l, x) + crate::linalg::dot(&self.d_l, y)
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let errors: Vec<String> = shape_diagnostics(self)
            .iter()
            .map(ToString::to_string)
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(errors.join("; ")))
        }
    }

    pub(crate) fn ensure_standard(&self) -> Result<()> {
        self.ensure_valid()?;
        if self.is_standard() {
            Ok(())
        } else {
            Err(Error::NonstandardInstance)
        }
    }
}

fn shape_diagnostics(inst: &BilevelInstance) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut vec_check = |field, v: &Vector, len: usize| {
        if v.len() != len {
            out.push(Diagnostic::ShapeMismatch {
                field,
                expected: (len, 1),
                found: (v.len(), 1),
            });
        } else if v.iter().any(|x| !x.is_finite()) {
            out.push(Diagnostic::NonFinite { field });
        }
    };
    vec_check("c_l", &inst.c_l, inst.p);
    vec_check("d_l", &inst.d_l, inst.q);
    vec_check("b_l", &inst.b_l, inst.m_l);
    vec_check("c_f", &inst.c_f, inst.q);
    vec_check("b_f", &inst.b_f, inst.m_f);
    let mut mat_check = |field, m: &Matrix, shape: (usize, usize)| {
        if (m.rows(), m.cols()) != shape {
            out.push(Diagnostic::ShapeMismatch {
                field,
                expected: shape,
                found: (m.rows(), m.cols()),
            });
        } else if !m.is_finite() {
            out.push(Diagnostic::NonFinite { field });
        }
    };
    mat_check("A_l", &inst.a_l, (inst.m_l, inst.p));
    mat_check("A_f", &inst.a_f, (inst.m_f, inst.p));
    mat_check("B_f", &inst.b_f_mat, (inst.m_f, inst.q));
    if let Some(c) = &inst.c_f_x {
        mat_check("C_f", c, (inst.p, inst.q));
    }
    out
}

/// Shape, finiteness and joint-region checks. Errors and warnings are both
/// reported; the instance is usable iff no entry has [`Severity::Error`].
pub fn validate(inst: &BilevelInstance) -> Vec<Diagnostic> {
    let mut out = shape_diagnostics(inst);
    if !out.is_empty() {
        return out;
    }
    let d = inst.joint_region();
    match solve_lp(&d.as_lp(vec![0.0; inst.p + inst.q])) {
        Ok(s) if s.status == LpStatus::Infeasible => out.push(Diagnostic::EmptyJointRegion),
        Ok(_) => {
            if !is_bounded(&d).unwrap_or(false) {
                out.push(Diagnostic::UnboundedJointRegion);
            }
        }
        Err(_) => out.push(Diagnostic::EmptyJointRegion),
    }
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity() == Severity::Error)
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    p: usize,
    q: usize,
    m_l: usize,
    m_f: usize,
    c_l: Vec<f64>,
    d_l: Vec<f64>,
    #[serde(rename = "A_l")]
    a_l: Vec<Vec<f64>>,
    b_l: Vec<f64>,
    c_f: Vec<f64>,
    #[serde(rename = "A_f")]
    a_f: Vec<Vec<f64>>,
    #[serde(rename = "B_f")]
    b_f_mat: Vec<Vec<f64>>,
    b_f: Vec<f64>,
    #[serde(rename = "C_f", default, skip_serializing_if = "Option::is_none")]
    c_f_x: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

fn matrix_from_json(field: &str, cols: usize, rows: &[Vec<f64>]) -> Result<Matrix> {
    // Ragged rows are a schema problem; a consistent but wrong width is left
    // for `validate` to report as a shape mismatch.
    let width = rows.first().map_or(cols, Vec::len);
    Matrix::from_rows(width, rows)
        .ok_or_else(|| Error::Schema(format!("{field}: rows have different lengths")))
}

impl BilevelInstance {
    pub fn to_json(&self) -> String {
        let raw = RawInstance {
            p: self.p,
            q: self.q,
            m_l: self.m_l,
            m_f: self.m_f,
            c_l: self.c_l.clone(),
            d_l: self.d_l.clone(),
            a_l: self.a_l.to_rows(),
            b_l: self.b_l.clone(),
            c_f: self.c_f.clone(),
            a_f: self.a_f.to_rows(),
            b_f_mat: self.b_f_mat.to_rows(),
            b_f: self.b_f.clone(),
            c_f_x: self.c_f_x.as_ref().map(Matrix::to_rows),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("instance serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            if let Some(rest) = msg.strip_prefix("missing field `") {
                let key = rest.split('`').next().unwrap_or_default();
                return Error::Schema(format!("missing key {key}"));
            }
            if msg.starts_with("unknown field") {
                return Error::Schema(msg.split(" at line").next().unwrap_or(&msg).to_string());
            }
            Error::Parse {
                line: e.line(),
                column: e.column(),
                message: msg,
            }
        })?;
        Ok(Self {
            p: raw.p,
            q: raw.q,
            m_l: raw.m_l,
            m_f: raw.m_f,
            a_l: matrix_from_json("A_l", raw.p, &raw.a_l)?,
            a_f: matrix_from_json("A_f", raw.p, &raw.a_f)?,
            b_f_mat: matrix_from_json("B_f", raw.q, &raw.b_f_mat)?,
            c_f_x: raw
                .c_f_x
                .as_deref()
                .map(|r| matrix_from_json("C_f", raw.q, r))
                .transpose()?,
            c_l: raw.c_l,
            d_l: raw.d_l,
            b_l: raw.b_l,
            c_f: raw.c_f,
            b_f: raw.b_f,
            meta: raw.meta,
        })
    }
}

// ---------------------------------------------------------------------------
// Generators

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSpec {
    pub weights: Vec<u64>,
    pub capacity: u64,
    pub penalty: Penalty,
}

impl KnapsackSpec {
    pub fn new(weights: Vec<u64>, capacity: u64) -> Self {
        Self {
            weights,
            capacity,
            penalty: Penalty::Auto,
        }
    }

    pub fn max_weight(&self) -> u64 {
        self.weights.iter().copied().max().unwrap_or(0)
    }

    /// `β² + 1` for `Auto`, where `β` is the largest weight.
    pub fn resolved_penalty(&self) -> f64 {
        match self.penalty {
            Penalty::Auto => {
                let beta = self.max_weight() as f64;
                beta * beta + 1.0
            }
            Penalty::Value(m) => m,
        }
    }

    fn check(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::InvalidParams(
                "knapsack needs at least one weight".into(),
            ));
        }
        if self.weights.contains(&0) {
            return Err(Error::InvalidParams("knapsack weights must be ≥ 1".into()));
        }
        if let Penalty::Value(m) = self.penalty {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "penalty must be positive, got {m}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedKnapsack {
    pub instance: BilevelInstance,
    pub penalty: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Bilevel encoding of a 0-1 knapsack instance, in minimise form.
///
/// Leader: `min −Σaᵢxᵢ + M·Σyᵢ` over `Σaᵢxᵢ ≤ δ`, `0 ≤ x ≤ 1`.
/// Follower: `min −Σyᵢ` over `y ≤ x`, `y ≤ 1 − x`, `y ≥ 0`, so that
/// `yᵢ = min{xᵢ, 1 − xᵢ}` penalises fractional choices.
pub fn gen_knapsack_blp(spec: &KnapsackSpec) -> Result<GeneratedKnapsack> {
    spec.check()?;
    let n = spec.weights.len();
    let m = spec.resolved_penalty();
    let a: Vector = spec.weights.iter().map(|&w| w as f64).collect();

    let mut a_l = Matrix::zeros(0, n);
    let mut b_l = Vec::new();
    a_l.push_row(&a);
    b_l.push(spec.capacity as f64);
    for i in 0..n {
        let mut r = vec![0.0; n];
        r[i] = 1.0;
        a_l.push_row(&r);
        b_l.push(1.0);
    }
    for i in 0..n {
        let mut r = vec![0.0; n];
        r[i] = -1.0;
        a_l.push_row(&r);
        b_l.push(0.0);
    }

    let mut a_f = Matrix::zeros(0, n);
    let mut b_f_mat = Matrix::zeros(0, n);
    let mut b_f = Vec::new();
    let unit = |i: usize, s: f64| {
        let mut r = vec![0.0; n];
        r[i] = s;
        r
    };
    // y − x ≤ 0
    for i in 0..n {
        a_f.push_row(&unit(i, -1.0));
        b_f_mat.push_row(&unit(i, 1.0));
        b_f.push(0.0);
    }
    // y + x ≤ 1
    for i in 0..n {
        a_f.push_row(&unit(i, 1.0));
        b_f_mat.push_row(&unit(i, 1.0));
        b_f.push(1.0);
    }
    // −y ≤ 0
    for i in 0..n {
        a_f.push_row(&vec![0.0; n]);
        b_f_mat.push_row(&unit(i, -1.0));
        b_f.push(0.0);
    }

    let mut diagnostics = Vec::new();
    if spec.max_weight() < 2 {
        diagnostics.push(Diagnostic::TrivialKnapsack);
    }
    let mut meta = serde_json::json!({
        "generator": "knapsack",
        "weights": spec.weights,
        "capacity": spec.capacity,
        "penalty": m,
    });
    if !diagnostics.is_empty() {
        meta["note"] = "trivial case".into();
    }

    let instance = BilevelInstance {
        p: n,
        q: n,
        m_l: 2 * n + 1,
        m_f: 3 * n,
        c_l: a.iter().map(|v| -v).collect(),
        d_l: vec![m; n],
        a_l,
        b_l,
        c_f: vec![-1.0; n],
        a_f,
        b_f_mat,
        b_f,
        c_f_x: None,
        meta: Some(meta),
    };
    Ok(GeneratedKnapsack {
        instance,
        penalty: m,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub p: usize,
    pub q: usize,
    /// Random follower rows added on top of the `2q` box rows.
    pub m_f: usize,
    pub seed: u64,
    pub radius: f64,
}

/// Seeded random instance with a compact joint region.
///
/// Leader rows are the box `|x| ≤ R`. Follower rows are the box `|y| ≤ R`
/// followed by `m_f` random rows with integer coefficients in `[−5, 5]`. A
/// hidden point `y₀` with `‖y₀‖∞ ≤ R/2` satisfies every random row strictly
/// for every leader-feasible `x`, so the follower is always feasible.
pub fn gen_random_bounded(spec: &RandomSpec) -> Result<BilevelInstance> {
    if spec.p == 0 || spec.q == 0 {
        return Err(Error::InvalidParams("dimensions must be at least 1".into()));
    }
    if !(spec.radius > 0.0 && spec.radius.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "radius must be positive, got {}",
            spec.radius
        )));
    }
    let (p, q, r) = (spec.p, spec.q, spec.radius);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let int_vec = |rng: &mut ChaCha8Rng, n: usize| -> Vector {
        (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect()
    };

    let c_l = int_vec(&mut rng, p);
    let d_l = int_vec(&mut rng, q);
    let c_f = int_vec(&mut rng, q);

    let box_rows = |n: usize| {
        let mut m = Matrix::zeros(0, n);
        for j in 0..n {
            for s in [1.0, -1.0] {
                let mut row = vec![0.0; n];
                row[j] = s;
                m.push_row(&row);
            }
        }
        m
    };
    let a_l = box_rows(p);
    let b_l = vec![r; 2 * p];

    let mut a_f = Matrix::zeros(2 * q, p);
    let mut b_f_mat = box_rows(q);
    let mut b_f = vec![r; 2 * q];
    let y0: Vector = (0..q).map(|_| rng.gen_range(-0.5..=0.5) * r).collect();
    for _ in 0..spec.m_f {
        let ax = int_vec(&mut rng, p);
        let mut ay = int_vec(&mut rng, q);
        if ay.iter().all(|&v| v == 0.0) {
            let j = rng.gen_range(0..q);
            ay[j] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
        let pad = rng.gen_range(0.5..=2.0);
        let worst_x: f64 = ax.iter().map(|v| v.abs() * r).sum();
        let rhs = crate::linalg::dot(&ay, &y0) + worst_x + pad;
        a_f.push_row(&ax);
        b_f_mat.push_row(&ay);
        b_f.push(rhs);
    }

    Ok(BilevelInstance {
        p,
        q,
        m_l: 2 * p,
        m_f: 2 * q + spec.m_f,
        c_l,
        d_l,
        a_l,
        b_l,
        c_f,
        a_f,
        b_f_mat,
        b_f,
        c_f_x: None,
        meta: Some(serde_json::json!({
            "generator": "random",
            "seed": spec.seed,
            "radius": r,
        })),
    })
}
