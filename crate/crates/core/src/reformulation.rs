//! Single-level reformulations of a linear bilevel instance.
//!
//! Replacing the follower problem by its optimality conditions gives the
//! linear MPCC over `(x, y, μ)`:
//!
//! ```text
//! min  c_lᵀx + d_lᵀy
//! s.t. −B_fᵀμ = c_f                     (dual rows)
//!      A_l x ≤ b_l,  A_f x + B_f y ≤ b_f (primal rows)
//!      μ ≥ 0                            (sign rows)
//!      μᵢ · sᵢ = 0,  sᵢ = (b_f − A_f x − B_f y)ᵢ
//! ```
//!
//! Dropping the complementarity pairs leaves an LP. The Big-M model decouples
//! each pair with a binary `zᵢ`: `μ ≤ M(1 − z)` and `s ≤ M z`.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Matrix, Vector};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::BilevelInstance;
use crate::polytope::{enumerate_vertices, is_bounded, Polytope};

/// Column layout of the lifted `(x, y, μ)` vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub p: usize,
    pub q: usize,
    pub m_f: usize,
}

impl Layout {
    pub fn x(&self) -> std::ops::Range<usize> {
        0..self.p
    }
    pub fn y(&self) -> std::ops::Range<usize> {
        self.p..self.p + self.q
    }
    pub fn mu(&self) -> std::ops::Range<usize> {
        self.p + self.q..self.len()
    }
    pub fn mu_index(&self, i: usize) -> usize {
        self.p + self.q + i
    }
    pub fn len(&self) -> usize {
        self.p + self.q + self.m_f
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One complementarity pair: `μᵢ ≥ 0` against follower slack `sᵢ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplementarityPair {
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpccModel {
    pub instance: BilevelInstance,
    pub layout: Layout,
    pub pairs: Vec<ComplementarityPair>,
    /// The relaxation `P₀`: every linear constraint, no complementarity.
    pub relaxation: LpProblem,
}

impl MpccModel {
    /// Coefficients of the follower row `i` over the lifted vector, i.e.
    /// `(A_f)ᵢ x + (B_f)ᵢ y`.
    pub fn follower_row(&self, i: usize) -> Vector {
        let mut r = vec![0.0; self.layout.len()];
        r[self.layout.x()].copy_from_slice(self.instance.a_f.row(i));
        r[self.layout.y()].copy_from_slice(self.instance.b_f_mat.row(i));
        r
    }

    pub fn slack(&self, i: usize, point: &[f64]) -> f64 {
        self.instance.b_f[i] - dot(&self.follower_row(i), point)
    }

    pub fn mu<'a>(&self, point: &'a [f64]) -> &'a [f64] {
        &point[self.layout.mu()]
    }

    /// `P₀` plus `μᵢ = 0` for `i ∈ zero_mu` and `sᵢ = 0` for `i ∈ zero_slack`.
    pub fn restricted(&self, zero_mu: &[usize], zero_slack: &[usize]) -> LpProblem {
        let mut lp = self.relaxation.clone();
        let n = self.layout.len();
        for &i in zero_mu {
            let mut r = vec![0.0; n];
            r[self.layout.mu_index(i)] = 1.0;
            lp.add_eq(&r, 0.0);
        }
        for &i in zero_slack {
            lp.add_eq(&self.follower_row(i), self.instance.b_f[i]);
        }
        lp
    }

    /// `|μᵢ · sᵢ|` for every pair, with both factors clamped at zero.
    pub fn violations(&self, point: &[f64]) -> Vec<f64> {
        let mu = self.mu(point);
        (0..self.layout.m_f)
            .map(|i| mu[i].max(0.0) * self.slack(i, point).max(0.0))
            .collect()
    }

    /// Whether every pair has a factor within `tol` of zero, on top of the
    /// linear constraints holding within `tol`.
    pub fn is_feasible(&self, point: &[f64], tol: f64) -> bool {
        if self.relaxation.max_violation(point) > tol * (1.0 + norm_inf(point)) {
            return false;
        }
        let mu = self.mu(point);
        (0..self.layout.m_f).all(|i| mu[i].min(self.slack(i, point)) <= tol)
    }

    pub fn split<'a>(&self, point: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        (
            &point[self.layout.x()],
            &point[self.layout.y()],
            &point[self.layout.mu()],
        )
    }
}

/// Builds the MPCC. Rows are ordered dual rows (equalities), then leader and
/// follower primal rows, then the sign rows `−μ ≤ 0`.
pub fn build_mpcc(inst: &BilevelInstance) -> Result<MpccModel> {
    inst.ensure_standard()?;
    let layout = Layout {
        p: inst.p,
        q: inst.q,
        m_f: inst.m_f,
    };
    let n = layout.len();
    let mut objective = vec![0.0; n];
    objective[layout.x()].copy_from_slice(&inst.c_l);
    objective[layout.y()].copy_from_slice(&inst.d_l);
    let mut lp = LpProblem::new(n).with_objective(objective);

    for j in 0..inst.q {
        let mut r = vec![0.0; n];
        for i in 0..inst.m_f {
            r[layout.mu_index(i)] = -inst.b_f_mat[(i, j)];
        }
        lp.add_eq(&r, inst.c_f[j]);
    }
    for i in 0..inst.m_l {
        let mut r = vec![0.0; n];
        r[layout.x()].copy_from_slice(inst.a_l.row(i));
        lp.add_ineq(&r, inst.b_l[i]);
    }
    for i in 0..inst.m_f {
        let mut r = vec![0.0; n];
        r[layout.x()].copy_from_slice(inst.a_f.row(i));
        r[layout.y()].copy_from_slice(inst.b_f_mat.row(i));
        lp.add_ineq(&r, inst.b_f[i]);
    }
    for i in 0..inst.m_f {
        let mut r = vec![0.0; n];
        r[layout.mu_index(i)] = -1.0;
        lp.add_ineq(&r, 0.0);
    }

    Ok(MpccModel {
        instance: inst.clone(),
        layout,
        pairs: (0..inst.m_f)
            .map(|row| ComplementarityPair { row })
            .collect(),
        relaxation: lp,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BigMCertificate {
    /// `max ‖μ‖∞` over the extreme points of `Λ = {μ ≥ 0 : −B_fᵀμ = c_f}`.
    pub m1: f64,
    /// `max_i max_D (b_f − A_f x − B_f y)ᵢ`.
    pub m2: f64,
    pub m: f64,
    pub extreme_points: usize,
}

/// The dual polyhedron `Λ = {μ ≥ 0 : −B_fᵀμ = c_f}`.
pub fn dual_polyhedron(inst: &BilevelInstance) -> Polytope {
    let m = inst.m_f;
    let mut sign = Matrix::identity(m);
    for i in 0..m {
        sign[(i, i)] = -1.0;
    }
    let mut eq = inst.b_f_mat.transpose();
    for i in 0..eq.rows() {
        for v in eq.row_mut(i) {
            *v = -*v;
        }
    }
    Polytope::new(sign, vec![0.0; m]).with_equalities(eq, inst.c_f.clone())
}

/// Computes a valid Big-M constant. Requires a compact joint region.
pub fn compute_bigm(inst: &BilevelInstance) -> Result<BigMCertificate> {
    inst.ensure_standard()?;
    let d = inst.joint_region();
    if !is_bounded(&d)? {
        return Err(Error::UnboundedJointRegion);
    }
    let lambda = dual_polyhedron(inst);
    if lambda.is_empty()? {
        return Err(Error::DualInfeasible);
    }
    let ext = enumerate_vertices(&lambda)?;
    let m1 = ext.iter().map(|v| norm_inf(v)).fold(0.0, f64::max);

    let mut m2 = 0.0_f64;
    for i in 0..inst.m_f {
        // max (b − A_f x − B_f y)ᵢ  ⇔  min (A_f x + B_f y)ᵢ − bᵢ
        let mut c = inst.a_f.row(i).to_vec();
        c.extend_from_slice(inst.b_f_mat.row(i));
        let s = solve_lp(&d.as_lp(c))?;
        match s.status {
            LpStatus::Optimal => m2 = m2.max(inst.b_f[i] - s.value),
            LpStatus::Infeasible => break,
            LpStatus::Unbounded => return Err(Error::UnboundedJointRegion),
        }
    }
    Ok(BigMCertificate {
        m1,
        m2,
        m: m1.max(m2),
        extreme_points: ext.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BigMModel {
    pub mpcc: MpccModel,
    pub m: f64,
    /// LP relaxation over `(x, y, μ, z)` with `z ∈ [0, 1]`.
    pub relaxation: LpProblem,
}

impl BigMModel {
    pub fn z_index(&self, i: usize) -> usize {
        self.mpcc.layout.len() + i
    }

    pub fn num_vars(&self) -> usize {
        self.mpcc.layout.len() + self.mpcc.layout.m_f
    }

    /// Relaxation with `z_i` fixed to the given values.
    pub fn restricted(&self, fixed: &[(usize, f64)]) -> LpProblem {
        let mut lp = self.relaxation.clone();
        for &(i, v) in fixed {
            let mut r = vec![0.0; self.num_vars()];
            r[self.z_index(i)] = 1.0;
            lp.add_eq(&r, v);
        }
        lp
    }

    pub fn z<'a>(&self, point: &'a [f64]) -> &'a [f64] {
        &point[self.mpcc.layout.len()..]
    }
}

/// Big-M mixed-integer model with linking rows `μ ≤ M(1 − z)` and
/// `b_f − A_f x − B_f y ≤ M z`.
pub fn build_bigm_mip(inst: &BilevelInstance, m: f64) -> Result<BigMModel> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::NonpositiveM(m));
    }
    let mpcc = build_mpcc(inst)?;
    let base = mpcc.layout.len();
    let n = base + inst.m_f;
    let widen = |r: &[f64]| {
        let mut w = r.to_vec();
        w.resize(n, 0.0);
        w
    };

    let mut lp = LpProblem::new(n).with_objective(widen(&mpcc.relaxation.objective));
    for (r, &b) in mpcc.relaxation.a_eq.iter_rows().zip(&mpcc.relaxation.b_eq) {
        lp.add_eq(&widen(r), b);
    }
    for (r, &b) in mpcc.relaxation.a_in.iter_rows().zip(&mpcc.relaxation.b_in) {
        lp.add_ineq(&widen(r), b);
    }
    for i in 0..inst.m_f {
        let z = base + i;
        let mut r = vec![0.0; n];
        r[mpcc.layout.mu_index(i)] = 1.0;
        r[z] = m;
        lp.add_ineq(&r, m);

        let mut r = widen(&mpcc.follower_row(i));
        r.iter_mut().for_each(|v| *v = -*v);
        r[z] = -m;
        lp.add_ineq(&r, -inst.b_f[i]);
    }
    for i in 0..inst.m_f {
        let mut r = vec![0.0; n];
        r[base + i] = 1.0;
        lp.add_ineq(&r, 1.0);
        r[base + i] = -1.0;
        lp.add_ineq(&r, 0.0);
    }
    Ok(BigMModel {
        mpcc,
        m,
        relaxation: lp,
    })
}
