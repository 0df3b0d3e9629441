//! H-polyhedra `{y : A y ≤ b, A_eq y = b_eq}`: vertex enumeration,
//! affine dimension, boundedness and the centroid of the uniform measure.

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm_inf, sub, Matrix, Vector};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::tol;

/// Default cap on the number of active sets tried by [`enumerate_vertices`].
pub const DEFAULT_VERTEX_BUDGET: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub a: Matrix,
    pub b: Vector,
    pub a_eq: Matrix,
    pub b_eq: Vector,
}

impl Polytope {
    pub fn new(a: Matrix, b: Vector) -> Self {
        let n = a.cols();
        Self {
            a,
            b,
            a_eq: Matrix::zeros(0, n),
            b_eq: Vec::new(),
        }
    }

    pub fn with_equalities(mut self, a_eq: Matrix, b_eq: Vector) -> Self {
        self.a_eq = a_eq;
        self.b_eq = b_eq;
        self
    }

    /// The box `lo ≤ y ≤ hi`.
    pub fn cube(lo: &[f64], hi: &[f64]) -> Self {
        let n = lo.len();
        let mut a = Matrix::zeros(0, n);
        let mut b = Vec::new();
        for j in 0..n {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            a.push_row(&r);
            b.push(hi[j]);
            r[j] = -1.0;
            a.push_row(&r);
            b.push(-lo[j]);
        }
        Self::new(a, b)
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.a
            .iter_rows()
            .zip(&self.b)
            .all(|(r, &b)| tol::leq(dot(r, y), b, tol))
            && self
                .a_eq
                .iter_rows()
                .zip(&self.b_eq)
                .all(|(r, &b)| (dot(r, y) - b).abs() <= tol * (1.0 + b.abs()))
    }

    pub(crate) fn as_lp(&self, objective: Vector) -> LpProblem {
        LpProblem {
            objective,
            a_in: self.a.clone(),
            b_in: self.b.clone(),
            a_eq: self.a_eq.clone(),
            b_eq: self.b_eq.clone(),
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        let s = solve_lp(&self.as_lp(vec![0.0; self.dim()]))?;
        Ok(s.status == LpStatus::Infeasible)
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.dim();
        if self.a_eq.cols() != n
            || self.a.rows() != self.b.len()
            || self.a_eq.rows() != self.b_eq.len()
        {
            return Err(Error::MalformedProblem("polytope shape mismatch".into()));
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All extreme points of `poly`, by brute force over active sets.
///
/// An empty list means the polyhedron is empty. A nonempty polyhedron with
/// no extreme points (one containing a line) yields [`Error::Unbounded`].
pub fn enumerate_vertices(poly: &Polytope) -> Result<Vec<Vector>> {
    enumerate_vertices_with_budget(poly, DEFAULT_VERTEX_BUDGET)
}

pub fn enumerate_vertices_with_budget(poly: &Polytope, budget: u128) -> Result<Vec<Vector>> {
    poly.check_shape()?;
    let n = poly.dim();
    let m = poly.a.rows();
    let eq_rank = linalg::rank(&poly.a_eq, tol::FEAS);
    if eq_rank > n {
        return Ok(Vec::new());
    }
    let k = n - eq_rank;
    let needed = binomial(m, k);
    if needed > budget {
        return Err(Error::TooLarge { needed, budget });
    }

    let mut vertices: Vec<Vector> = Vec::new();
    let mut try_subset = |subset: &[usize]| {
        let mut sys = poly.a_eq.clone();
        let mut rhs = poly.b_eq.clone();
        for &i in subset {
            sys.push_row(poly.a.row(i));
            rhs.push(poly.b[i]);
        }
        if let Some(v) = linalg::solve_full_rank(&sys, &rhs, tol::FEAS) {
            if poly.contains(&v, tol::FEAS)
                && !vertices.iter().any(|w| norm_inf(&sub(w, &v)) <= tol::DEDUP)
            {
                vertices.push(v);
            }
        }
    };

    if k == 0 {
        try_subset(&[]);
    } else if m >= k {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            try_subset(&idx);
            if !next_combination(&mut idx, m) {
                break;
            }
        }
    }

    if vertices.is_empty() && !poly.is_empty()? {
        return Err(Error::Unbounded);
    }
    Ok(vertices)
}

/// Affine dimension of a point set; `-1` for the empty set.
pub fn affine_dimension(vertices: &[Vector]) -> i32 {
    let Some(first) = vertices.first() else {
        return -1;
    };
    let diffs: Vec<Vector> = vertices[1..].iter().map(|v| sub(v, first)).collect();
    if diffs.is_empty() {
        return 0;
    }
    let m = Matrix::from_rows(first.len(), &diffs).expect("vertices share a dimension");
    linalg::rank(&m, tol::FEAS) as i32
}

/// Recession-cone test: maximises `±d_j` over `{A d ≤ 0, A_eq d = 0, ‖d‖∞ ≤ 1}`.
pub fn is_bounded(poly: &Polytope) -> Result<bool> {
    poly.check_shape()?;
    let n = poly.dim();
    let mut lp = LpProblem::new(n);
    lp.a_in = poly.a.clone();
    lp.b_in = vec![0.0; poly.a.rows()];
    lp.a_eq = poly.a_eq.clone();
    lp.b_eq = vec![0.0; poly.a_eq.rows()];
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        lp.add_ineq(&r, 1.0);
        r[j] = -1.0;
        lp.add_ineq(&r, 1.0);
    }
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; n];
            c[j] = -sign;
            lp.objective = c;
            let s = solve_lp(&lp)?;
            if s.status != LpStatus::Optimal || -s.value > tol::FEAS {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Centroid of the uniform (Hausdorff) measure on a nonempty bounded polytope.
///
/// The polytope is triangulated inside its affine hull by a recursive fan:
/// the apex is the first vertex and the fan is taken over the facets not
/// containing it. Each simplex contributes its barycenter weighted by its
/// `d`-dimensional volume.
pub fn centroid(poly: &Polytope) -> Result<Vector> {
    if !is_bounded(poly)? {
        return Err(Error::UnboundedPolytope);
    }
    let vertices = enumerate_vertices(poly)?;
    centroid_of_vertices(poly, &vertices)
}

/// As [`centroid`], with a vertex list already at hand (in any order).
pub fn centroid_of_vertices(poly: &Polytope, vertices: &[Vector]) -> Result<Vector> {
    let d = affine_dimension(vertices);
    if d < 0 {
        return Err(Error::EmptyPolytope);
    }
    if d == 0 {
        return Ok(vertices[0].clone());
    }
    let d = d as usize;
    // Tightness of every inequality row at every vertex.
    let tight: Vec<Vec<bool>> = poly
        .a
        .iter_rows()
        .zip(&poly.b)
        .map(|(r, &b)| {
            let scale = 1.0 + b.abs() + norm_inf(r);
            vertices
                .iter()
                .map(|v| (dot(r, v) - b).abs() <= tol::CHECK * scale)
                .collect()
        })
        .collect();

    let all: Vec<usize> = (0..vertices.len()).collect();
    let simplices = fan(&all, d, vertices, &tight);

    let n = poly.dim();
    let mut total = 0.0;
    let mut acc = vec![0.0; n];
    for s in &simplices {
        let vol = simplex_volume(
            s.iter()
                .map(|&i| &vertices[i])
                .collect::<Vec<_>>()
                .as_slice(),
        );
        total += vol;
        for &i in s {
            for (a, v) in acc.iter_mut().zip(&vertices[i]) {
                *a += vol * v / (d + 1) as f64;
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::NumericalFailure(
            "triangulation has zero volume".into(),
        ));
    }
    Ok(acc.into_iter().map(|a| a / total).collect())
}

/// Triangulates the face spanned by `face` (of affine dimension `dim`) into
/// simplices given as vertex-index lists.
fn fan(face: &[usize], dim: usize, vertices: &[Vector], tight: &[Vec<bool>]) -> Vec<Vec<usize>> {
    if dim == 0 {
        return vec![vec![face[0]]];
    }
    let apex = face[0];
    let mut facets: Vec<Vec<usize>> = Vec::new();
    for row in tight {
        if row[apex] {
            continue;
        }
        let sub_face: Vec<usize> = face.iter().copied().filter(|&i| row[i]).collect();
        if sub_face.len() < dim || facets.contains(&sub_face) {
            continue;
        }
        let pts: Vec<Vector> = sub_face.iter().map(|&i| vertices[i].clone()).collect();
        if affine_dimension(&pts) == dim as i32 - 1 {
            facets.push(sub_face);
        }
    }
    let mut out = Vec::new();
    for f in &facets {
        for mut s in fan(f, dim - 1, vertices, tight) {
            s.insert(0, apex);
            out.push(s);
        }
    }
    out
}

/// `d`-volume of the simplex with `d+1` vertices, via the Gram determinant.
fn simplex_volume(pts: &[&Vector]) -> f64 {
    let d = pts.len() - 1;
    let diffs: Vec<Vector> = pts[1..].iter().map(|p| sub(p, pts[0])).collect();
    let mut gram = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            gram[(i, j)] = dot(&diffs[i], &diffs[j]);
        }
    }
    let factorial: f64 = (1..=d).map(|k| k as f64).product();
    linalg::determinant(&gram).max(0.0).sqrt() / factorial
}
