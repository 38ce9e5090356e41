//! Dense least squares by Householder QR with column pivoting.
//!
//! Rank-deficient systems get the minimum-norm solution through a complete
//! orthogonal decomposition: after `AP = Q [R11 R12; 0 0]`, the trapezoid
//! `[R11 R12]` is factored once more from the right (QR of its transpose) and
//! the resulting triangular system is solved in the row space.
//!
//! Cosine design matrices become exactly rank deficient whenever two
//! frequencies alias on the integer lattice (`k ≡ ±k' mod 2T+1`), which is
//! routine for small periods, so this path is not an afterthought.

use crate::{Error, Result};

/// Columns whose remaining norm falls below this fraction of the largest
/// column norm are treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::validation("columns have unequal lengths"));
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data: columns.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.column(j)) {
                *o += a * xj;
            }
        }
        out
    }

    /// `Aᵀ y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols).map(|j| dot(self.column(j), y)).collect()
    }

    fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    /// `‖A x - b‖²`, evaluated directly from the solution.
    pub residual: f64,
    pub rank: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Reflector {
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    /// Reflector mapping `x` onto a multiple of `e1`. Returns the reflector
    /// and the resulting leading entry.
    fn annihilate(x: &[f64]) -> (Option<Reflector>, f64) {
        let norm = dot(x, x).sqrt();
        if norm == 0.0 {
            return (None, 0.0);
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        (Some(Reflector { v, beta: 2.0 / vv }), alpha)
    }

    fn apply(&self, y: &mut [f64]) {
        let s = self.beta * dot(&self.v, y);
        for (yi, vi) in y.iter_mut().zip(&self.v) {
            *yi -= s * vi;
        }
    }
}

/// In-place QR of `work`. Reflector `k` acts on rows `k..`.
struct Factorization {
    reflectors: Vec<Option<Reflector>>,
    perm: Vec<usize>,
    rank: usize,
}

fn factor(work: &mut Matrix, pivot: bool, tol: f64) -> Factorization {
    let (m, n) = (work.rows, work.cols);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors = Vec::new();
    let mut rank = 0;
    for k in 0..m.min(n) {
        if pivot {
            // Remaining norms are recomputed rather than downdated; n is small.
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let c = &work.column(j)[k..];
                let nrm = dot(c, c);
                if nrm > best_norm {
                    best = j;
                    best_norm = nrm;
                }
            }
            if best_norm.sqrt() <= tol {
                break;
            }
            if best != k {
                for i in 0..m {
                    let tmp = work.get(i, k);
                    work.set(i, k, work.get(i, best));
                    work.set(i, best, tmp);
                }
                perm.swap(k, best);
            }
        }
        let (h, alpha) = Reflector::annihilate(&work.column(k)[k..]);
        if let Some(h) = &h {
            for j in k + 1..n {
                h.apply(&mut work.column_mut(j)[k..]);
            }
        }
        let col = work.column_mut(k);
        col[k] = alpha;
        col[k + 1..].iter_mut().for_each(|v| *v = 0.0);
        reflectors.push(h);
        rank += 1;
    }
    Factorization {
        reflectors,
        perm,
        rank,
    }
}

/// Minimum-norm least-squares solution of `A x ≈ b`.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<LeastSquares> {
    let (m, n) = (a.rows, a.cols);
    if b.len() != m {
        return Err(Error::validation(format!(
            "right-hand side has length {}, matrix has {m} rows",
            b.len()
        )));
    }
    if n == 0 {
        return Err(Error::validation("matrix has no columns"));
    }
    if a.data.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entry in least-squares system".into()));
    }

    let max_col = (0..n)
        .map(|j| dot(a.column(j), a.column(j)).sqrt())
        .fold(0.0, f64::max);
    let mut work = a.clone();
    let qr = factor(&mut work, true, RANK_TOL * max_col);
    let r = qr.rank;

    let mut qtb = b.to_vec();
    for (k, h) in qr.reflectors.iter().enumerate() {
        if let Some(h) = h {
            h.apply(&mut qtb[k..]);
        }
    }

    let z = if r == 0 {
        vec![0.0; n]
    } else if r == n {
        back_substitute(&work, &qtb[..r])
    } else {
        // [R11 R12] = R2ᵀ Q2ᵀ; minimum-norm z = Q2 R2⁻ᵀ y.
        let trap = Matrix::from_fn(r, n, |i, j| work.get(i, j));
        let mut lt = trap.transpose();
        let q2 = factor(&mut lt, false, 0.0);
        let mut w = vec![0.0; n];
        for i in 0..r {
            let s: f64 = (0..i).map(|j| lt.get(j, i) * w[j]).sum();
            w[i] = (qtb[i] - s) / lt.get(i, i);
        }
        for (k, h) in q2.reflectors.iter().enumerate().rev() {
            if let Some(h) = h {
                h.apply(&mut w[k..]);
            }
        }
        w
    };

    let mut x = vec![0.0; n];
    for (j, &p) in qr.perm.iter().enumerate() {
        x[p] = z[j];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("least-squares solution is not finite".into()));
    }
    let residual = a
        .mul_vec(&x)
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    Ok(LeastSquares {
        solution: x,
        residual,
        rank: r,
    })
}

fn back_substitute(r: &Matrix, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| r.get(i, j) * x[j]).sum();
        x[i] = (y[i] - s) / r.get(i, i);
    }
    x
}
