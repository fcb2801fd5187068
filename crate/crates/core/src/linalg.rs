//! Small linear-algebra kit: CSR matrices with a shared pattern, a banded LU
//! factorisation with partial pivoting, and a cyclic Jacobi eigensolver for
//! dense symmetric matrices.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Inner product on coefficient vectors.
pub trait InnerProduct {
    fn inner(&self, a: &[f64], b: &[f64]) -> f64;

    fn norm(&self, a: &[f64]) -> f64 {
        libm::sqrt(self.inner(a, a).max(0.0))
    }
}

/// The Euclidean inner product.
#[derive(Clone, Copy, Debug, Default)]
pub struct Euclidean;

impl InnerProduct for Euclidean {
    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, b)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// every listed position is kept in the pattern even if its sum is zero.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    /// A matrix with the same pattern and all values zero.
    pub fn zeros_like(&self) -> Self {
        Self { values: alloc::vec![0.0; self.values.len()], ..self.clone() }
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.nrows == other.nrows && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }

    /// `self += alpha * other` for matrices with an identical pattern.
    pub fn add_scaled(&mut self, alpha: f64, other: &Self) {
        assert!(self.same_pattern(other), "pattern mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    /// `alpha A + beta B`; the result carries the union of both patterns.
    pub fn combine(alpha: f64, a: &Self, beta: f64, b: &Self) -> Self {
        assert!(a.nrows == b.nrows && a.ncols == b.ncols, "shape mismatch");
        if a.same_pattern(b) {
            let values = a.values.iter().zip(&b.values).map(|(x, y)| alpha * x + beta * y).collect();
            return Self { values, ..a.clone() };
        }
        let mut t = Vec::with_capacity(a.values.len() + b.values.len());
        for (m, s) in [(a, alpha), (b, beta)] {
            for r in 0..m.nrows {
                for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                    t.push((r, m.col_idx[k], s * m.values[k]));
                }
            }
        }
        Self::from_triplets(a.nrows, a.ncols, &t)
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yr = s;
        }
    }

    /// `y += alpha A x`.
    pub fn mul_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yr += alpha * s;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        (self.row_ptr[r]..self.row_ptr[r + 1])
            .find(|&k| self.col_idx[k] == c)
            .map_or(0.0, |k| self.values[k])
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.push((self.col_idx[k], r, self.values[k]));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Half bandwidths `(lower, upper)`.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for r in 0..self.nrows {
            for &c in &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]] {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }
}

/// `(a, b) ↦ aᵀ M b` for a symmetric matrix `M`.
impl InnerProduct for Csr {
    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for r in 0..self.nrows {
            let mut t = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                t += self.values[k] * b[self.col_idx[k]];
            }
            s += a[r] * t;
        }
        s
    }
}

/// LU factors of a banded matrix with row partial pivoting (LAPACK `gbtrf`
/// layout: `kl` extra superdiagonals hold pivoting fill).
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Factorises a square CSR matrix.
    pub fn factor(a: &Csr) -> Result<Self> {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let (kl, ku) = a.bandwidths();
        let ldab = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, ldab, ab: alloc::vec![0.0; ldab * n], pivots: alloc::vec![0; n] };
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                *lu.at(r, a.col_idx[k]) = a.values[k];
            }
        }
        lu.decompose()?;
        Ok(lu)
    }

    // column-major band storage: entry (i, j) at row kl + ku + i - j of column j
    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.ab[j * self.ldab + self.kl + self.ku + i - j]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.ab[j * self.ldab + self.kl + self.ku + i - j]
    }

    fn decompose(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.ab.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in j + 1..=last {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || best <= scale * 1e-300 {
                return Err(Error::Singular(j));
            }
            self.pivots[j] = p;
            let ucol = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=ucol {
                    let a = self.get(j, c);
                    let b = self.get(p, c);
                    *self.at(j, c) = b;
                    *self.at(p, c) = a;
                }
            }
            let piv = self.get(j, j);
            for i in j + 1..=last {
                let l = self.get(i, j) / piv;
                *self.at(i, j) = l;
                if l != 0.0 {
                    for c in j + 1..=ucol {
                        let u = self.get(j, c);
                        *self.at(i, c) -= l * u;
                    }
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                for i in j + 1..=(j + kl).min(n - 1) {
                    b[i] -= self.get(i, j) * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let mut s = b[j];
            for c in j + 1..=(j + kl + ku).min(n - 1) {
                s -= self.get(j, c) * b[c];
            }
            b[j] = s / self.get(j, j);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in nonincreasing order and the matching
/// unit eigenvectors as columns (`vectors[row][col]`).
pub fn symmetric_eigen(a: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..n {
        if m[i].len() != n {
            return Err(Error::Eigen(alloc::format!("row {i} has wrong length")));
        }
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > 1e-12 * scale {
                return Err(Error::Eigen(alloc::format!("matrix not symmetric at ({i},{j})")));
            }
        }
    }
    let mut v = alloc::vec![alloc::vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if libm::sqrt(off) <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap_or(core::cmp::Ordering::Equal).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    Ok((values, vectors))
}
