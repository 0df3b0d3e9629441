//! Small dense linear algebra used by the LP and polytope code.
//!
//! Everything here is desk scale: a few dozen rows and columns at most, so
//! plain row-major storage and Gaussian elimination are all we need.

use std::fmt;
use std::ops::{Index, IndexMut};

/// Dense real vector.
pub type Vector = Vec<f64>;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices. `cols` is needed so that a matrix
    /// with zero rows still knows its width.
    ///
    /// Returns `None` when a row has the wrong length.
    pub fn from_rows<R: AsRef<[f64]>>(cols: usize, rows: &[R]) -> Option<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return None;
            }
            data.extend_from_slice(r);
        }
        Some(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vector {
        debug_assert_eq!(v.len(), self.cols);
        self.iter_rows().map(|r| dot(r, v)).collect()
    }

    /// Appends the rows of `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Self {
        assert_eq!(self.cols, other.cols, "vstack width mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row width mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{}x{} ", self.rows, self.cols)?;
        f.debug_list().entries(self.iter_rows()).finish()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Row-echelon reduction in place with partial pivoting. Returns the pivot
/// columns. Entries with magnitude at most `tol * scale` count as zero, where
/// `scale` is the largest absolute entry of the input.
fn row_reduce(m: &mut Matrix, ncols: usize, tol: f64) -> Vec<usize> {
    let scale = m.max_abs().max(1.0);
    let eps = tol * scale;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.rows {
            break;
        }
        let (best, best_val) = (r..m.rows)
            .map(|i| (i, m[(i, c)].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_val <= eps {
            continue;
        }
        if best != r {
            for j in 0..m.cols {
                m.data.swap(best * m.cols + j, r * m.cols + j);
            }
        }
        let p = m[(r, c)];
        for i in 0..m.rows {
            if i == r {
                continue;
            }
            let f = m[(i, c)] / p;
            if f == 0.0 {
                continue;
            }
            for j in c..m.cols {
                let v = m[(r, j)];
                m[(i, j)] -= f * v;
            }
            m[(i, c)] = 0.0;
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Numerical rank with a relative tolerance.
pub fn rank(m: &Matrix, tol: f64) -> usize {
    let mut work = m.clone();
    let cols = work.cols;
    row_reduce(&mut work, cols, tol).len()
}

/// Solves `a * x = b` when `a` has full column rank and the system is
/// consistent. Returns `None` otherwise. `a` may have more rows than columns.
pub fn solve_full_rank(a: &Matrix, b: &[f64], tol: f64) -> Option<Vector> {
    let n = a.cols;
    let mut aug = Matrix::zeros(a.rows, n + 1);
    for i in 0..a.rows {
        aug.row_mut(i)[..n].copy_from_slice(a.row(i));
        aug[(i, n)] = b[i];
    }
    let scale = aug.max_abs().max(1.0);
    let pivots = row_reduce(&mut aug, n, tol);
    if pivots.len() < n {
        return None;
    }
    // Leftover rows must be consistent.
    for i in n..aug.rows {
        if aug[(i, n)].abs() > 1e3 * tol * scale {
            return None;
        }
    }
    let mut x = vec![0.0; n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[(r, n)] / aug[(r, c)];
    }
    Some(x)
}

/// Determinant of a square matrix via elimination.
pub fn determinant(m: &Matrix) -> f64 {
    assert_eq!(m.rows, m.cols, "determinant of a non-square matrix");
    let n = m.rows;
    let mut a = m.clone();
    let mut det = 1.0;
    for c in 0..n {
        let (best, best_val) = (c..n)
            .map(|i| (i, a[(i, c)].abs()))
            .fold((c, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_val == 0.0 {
            return 0.0;
        }
        if best != c {
            for j in 0..n {
                a.data.swap(best * n + j, c * n + j);
            }
            det = -det;
        }
        let p = a[(c, c)];
        det *= p;
        for i in c + 1..n {
            let f = a[(i, c)] / p;
            for j in c..n {
                let v = a[(c, j)];
                a[(i, j)] -= f * v;
            }
        }
    }
    det
}
