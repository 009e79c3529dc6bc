//! Dense row-major matrices and the factorizations the rest of the crate
//! needs: singular values (one-sided Jacobi), numerical rank, symmetric
//! inverse, and Householder QR with column pivoting for projections and
//! least squares.
//!
//! Everything here targets small matrices (a few hundred rows at most), so
//! the implementations favor robustness and determinism over asymptotics.

use crate::error::{Error, Result};

/// Default relative cutoff for the singular-value rank test.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Gram matrix `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..self.cols {
                    out[(a, b)] += ra * r[b];
                }
            }
        }
        for a in 0..self.cols {
            for b in 0..a {
                out[(a, b)] = out[(b, a)];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        Matrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        Matrix::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)]
            } else {
                other[(i - self.rows, j)]
            }
        })
    }

    /// Singular values in descending order, via one-sided Jacobi on the
    /// narrower orientation. Exact enough for rank decisions on the small
    /// integer-entry matrices used throughout.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.is_empty() {
            return Vec::new();
        }
        // Work on the orientation with fewer columns.
        let work = if self.cols > self.rows { self.transpose() } else { self.clone() };
        let n = work.rows;
        let k = work.cols;
        // Column-major copy for cache-friendly column rotations.
        let mut cols: Vec<Vec<f64>> = (0..k).map(|j| work.col(j)).collect();
        let eps = 1e-15;
        let max_sweeps = 60;
        for _ in 0..max_sweeps {
            let mut rotated = false;
            for p in 0..k {
                for q in (p + 1)..k {
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for i in 0..n {
                        app += cols[p][i] * cols[p][i];
                        aqq += cols[q][i] * cols[q][i];
                        apq += cols[p][i] * cols[q][i];
                    }
                    if apq.abs() <= eps * (app * aqq).sqrt() || apq == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let zeta = (aqq - app) / (2.0 * apq);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..n {
                        let vp = cols[p][i];
                        let vq = cols[q][i];
                        cols[p][i] = c * vp - s * vq;
                        cols[q][i] = s * vp + c * vq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<f64> = cols
            .iter()
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }

    /// Numerical rank: singular values exceeding
    /// `tol_factor · max(rows, cols) · σ_max`.
    pub fn rank_with_tol(&self, tol_factor: f64) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::Dimension("rank of an empty matrix".into()));
        }
        let sv = self.singular_values();
        let smax = sv[0];
        if smax == 0.0 {
            return Ok(0);
        }
        let cutoff = tol_factor * self.rows.max(self.cols) as f64 * smax;
        Ok(sv.iter().filter(|&&s| s > cutoff).count())
    }

    pub fn rank(&self) -> Result<usize> {
        self.rank_with_tol(DEFAULT_RANK_TOL)
    }

    /// Inverse of a square symmetric matrix via Gauss-Jordan with partial
    /// pivoting. Fails with the numerical rank when a pivot collapses or the
    /// residual check `‖M·M⁻¹ − I‖_max < 1e−8` does not hold.
    pub fn sym_inverse(&self) -> Result<Matrix> {
        let n = self.rows;
        if n != self.cols {
            return Err(Error::Dimension(format!(
                "sym_inverse needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if n == 0 {
            return Err(Error::Dimension("sym_inverse of an empty matrix".into()));
        }
        let scale = self.max_abs();
        let asym = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (self[(i, j)] - self[(j, i)]).abs())
            .fold(0.0f64, f64::max);
        if asym > 1e-8 * scale.max(1.0) {
            return Err(Error::Domain("sym_inverse input is not symmetric".into()));
        }

        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[(r, col)].abs() > a[(piv, col)].abs() {
                    piv = r;
                }
            }
            if a[(piv, col)].abs() <= 1e-13 * scale.max(1.0) {
                let rank = self.rank().unwrap_or(0);
                return Err(Error::Singular { rank, dim: n });
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let acj = a[(col, j)];
                    let icj = inv[(col, j)];
                    a[(r, j)] -= f * acj;
                    inv[(r, j)] -= f * icj;
                }
            }
        }

        // Residual check backs the advertised accuracy contract.
        let prod = self.matmul(&inv);
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((prod[(i, j)] - target).abs());
            }
        }
        if err >= 1e-8 {
            let rank = self.rank().unwrap_or(0);
            return Err(Error::Singular { rank, dim: n });
        }
        Ok(inv)
    }

    /// Diagonal as a vector (square matrices).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Householder QR with column pivoting.
    pub fn qr_pivot(&self) -> PivotedQr {
        PivotedQr::new(self)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Compact Householder QR factorization with column pivoting of an n×k
/// matrix. Supports rank detection, orthogonal projection onto the column
/// space, and least-squares solves for full-column-rank inputs.
pub struct PivotedQr {
    /// Packed factor: R in the upper triangle, Householder vectors below.
    qr: Matrix,
    taus: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
    rows: usize,
    cols: usize,
}

impl PivotedQr {
    fn new(a: &Matrix) -> Self {
        let n = a.rows();
        let k = a.cols();
        let mut qr = a.clone();
        let mut perm: Vec<usize> = (0..k).collect();
        let steps = n.min(k);
        let mut taus = vec![0.0; steps];
        let mut colnorm2: Vec<f64> = (0..k)
            .map(|j| (0..n).map(|i| qr[(i, j)] * qr[(i, j)]).sum())
            .collect();
        let mut rank = 0;
        let mut r00 = 0.0f64;
        for step in 0..steps {
            // Pivot the column with the largest remaining norm to the front.
            let mut best = step;
            for j in step + 1..k {
                if colnorm2[j] > colnorm2[best] {
                    best = j;
                }
            }
            if best != step {
                for i in 0..n {
                    let tmp = qr[(i, step)];
                    qr[(i, step)] = qr[(i, best)];
                    qr[(i, best)] = tmp;
                }
                colnorm2.swap(step, best);
                perm.swap(step, best);
            }
            let mut norm2 = 0.0;
            for i in step..n {
                norm2 += qr[(i, step)] * qr[(i, step)];
            }
            let norm = norm2.sqrt();
            if step == 0 {
                r00 = norm;
            }
            // Relative cutoff; well separated for the integer-entry designs here.
            if norm <= 1e-10 * r00.max(1.0) {
                break;
            }
            rank += 1;
            let alpha = if qr[(step, step)] >= 0.0 { -norm } else { norm };
            let mut v = vec![0.0; n - step];
            v[0] = qr[(step, step)] - alpha;
            for i in step + 1..n {
                v[i - step] = qr[(i, step)];
            }
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 == 0.0 {
                taus[step] = 0.0;
                qr[(step, step)] = alpha;
                continue;
            }
            let tau = 2.0 / vnorm2;
            // Apply the reflector to the remaining columns.
            for j in step..k {
                let mut dot = 0.0;
                for i in step..n {
                    dot += v[i - step] * qr[(i, j)];
                }
                let f = tau * dot;
                for i in step..n {
                    qr[(i, j)] -= f * v[i - step];
                }
            }
            // Store R's diagonal entry, then the reflector below the diagonal
            // normalized to head 1 (LAPACK convention) with tau rescaled.
            qr[(step, step)] = alpha;
            for i in step + 1..n {
                qr[(i, step)] = v[i - step] / v[0];
            }
            taus[step] = 2.0 * v[0] * v[0] / vnorm2;
            for j in step + 1..k {
                colnorm2[j] -= qr[(step, j)] * qr[(step, j)];
                if colnorm2[j] < 0.0 {
                    colnorm2[j] = 0.0;
                }
            }
        }
        PivotedQr { qr, taus, perm, rank, rows: n, cols: k }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Applies Qᵀ to a vector, over a copy.
    fn qt_apply(&self, y: &[f64]) -> Vec<f64> {
        let mut w = y.to_vec();
        for step in 0..self.rank {
            let tau = self.taus[step];
            if tau == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for i in step..self.rows {
                dot += self.house_elem(step, i) * w[i];
            }
            let f = tau * dot;
            for i in step..self.rows {
                w[i] -= f * self.house_elem(step, i);
            }
        }
        w
    }

    /// Householder vector element; vectors are stored below the diagonal
    /// with an implicit head of 1.
    fn house_elem(&self, step: usize, i: usize) -> f64 {
        if i == step {
            1.0
        } else {
            self.qr[(i, step)]
        }
    }

    /// Fitted values of the orthogonal projection of `y` onto the column
    /// space (first `rank` pivoted columns).
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut w = self.qt_apply(y);
        for wi in w.iter_mut().skip(self.rank) {
            *wi = 0.0;
        }
        // Apply Q to the truncated coefficients.
        for step in (0..self.rank).rev() {
            let tau = self.taus[step];
            if tau == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for i in step..self.rows {
                dot += self.house_elem(step, i) * w[i];
            }
            let f = tau * dot;
            for i in step..self.rows {
                w[i] -= f * self.house_elem(step, i);
            }
        }
        w
    }

    /// Residual sum of squares after projecting `y` onto the column space.
    pub fn rss(&self, y: &[f64]) -> f64 {
        let w = self.qt_apply(y);
        w.iter().skip(self.rank).map(|x| x * x).sum()
    }

    /// Least-squares coefficients. Only available when the factorization is
    /// full column rank; rank-deficient systems are reported as singular.
    pub fn solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        if self.rank < self.cols {
            return Err(Error::Singular { rank: self.rank, dim: self.cols });
        }
        let w = self.qt_apply(y);
        let mut beta_p = vec![0.0; self.cols];
        for i in (0..self.cols).rev() {
            let mut s = w[i];
            for j in i + 1..self.cols {
                s -= self.qr[(i, j)] * beta_p[j];
            }
            beta_p[i] = s / self.qr[(i, i)];
        }
        let mut beta = vec![0.0; self.cols];
        for (pos, &orig) in self.perm.iter().enumerate() {
            beta[orig] = beta_p[pos];
        }
        Ok(beta)
    }
}
