//! Karhunen–Loève modes of the stream-function covariance
//! `C(x, x') = σ₀² Π_j (1 − x_j²)(1 − x_j'²) · exp(−‖x − x'‖² / L²)`.
//!
//! The kernel factorises over the two coordinates, so the Nyström matrix on a
//! tensor midpoint grid is a Kronecker product of two copies of the 1D
//! matrix. Eigenpairs are products of 1D eigenpairs, which are computed once
//! and extended off the grid by the Nyström formula.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::symmetric_eigen;

/// Covariance parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Covariance {
    pub sigma0_sq: f64,
    pub corr_length: f64,
}

impl Default for Covariance {
    fn default() -> Self {
        Self { sigma0_sq: 5.0, corr_length: 1.0 }
    }
}

impl Covariance {
    /// The one-dimensional factor `k(s, t)`.
    pub fn factor(&self, s: f64, t: f64) -> f64 {
        let r = (s - t) / self.corr_length;
        (1.0 - s * s) * (1.0 - t * t) * libm::exp(-r * r)
    }

    /// `∂k/∂s`.
    pub fn factor_ds(&self, s: f64, t: f64) -> f64 {
        let l2 = self.corr_length * self.corr_length;
        let e = libm::exp(-(s - t) * (s - t) / l2);
        (1.0 - t * t) * e * (-2.0 * s - (1.0 - s * s) * 2.0 * (s - t) / l2)
    }

    pub fn eval(&self, x: [f64; 2], xp: [f64; 2]) -> f64 {
        self.sigma0_sq * self.factor(x[0], xp[0]) * self.factor(x[1], xp[1])
    }
}

/// Midpoint nodes and weight of the `n`-point rule on `(-1, 1)`.
pub fn midpoint_grid(n: usize) -> (Vec<f64>, f64) {
    let h = 2.0 / n as f64;
    ((0..n).map(|j| -1.0 + (j as f64 + 0.5) * h).collect(), h)
}

/// Eigenpairs of the 1D Nyström operator.
#[derive(Clone, Debug)]
struct OneDimModes {
    nodes: Vec<f64>,
    weight: f64,
    values: Vec<f64>,
    /// `vectors[k][j]` is mode `k` at node `j`, normalised so that
    /// `Σ_j w φ_k(t_j)² = 1`.
    vectors: Vec<Vec<f64>>,
}

fn one_dim_modes(cov: &Covariance, n: usize) -> Result<OneDimModes> {
    let (nodes, w) = midpoint_grid(n);
    let a: Vec<Vec<f64>> = nodes.iter().map(|&s| nodes.iter().map(|&t| w * cov.factor(s, t)).collect()).collect();
    let (values, vecs) = symmetric_eigen(&a)?;
    let scale = 1.0 / libm::sqrt(w);
    let vectors = (0..n)
        .map(|k| {
            let mut v: Vec<f64> = (0..n).map(|j| vecs[j][k] * scale).collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(OneDimModes { nodes, weight: w, values, vectors })
}

/// Makes the first entry of non-negligible size positive.
fn fix_sign(v: &mut [f64]) {
    let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * big) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Leading KL modes `(λ_i, ψ_i)`, `ψ_i(x) = φ_a(x₁) φ_b(x₂)`.
#[derive(Clone, Debug)]
pub struct KlModes {
    cov: Covariance,
    one: OneDimModes,
    /// Eigenvalues, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// 1D mode pair of each 2D mode.
    pub pairs: Vec<(usize, usize)>,
}

impl KlModes {
    /// Computes the `d` leading modes on an `n_grid × n_grid` midpoint grid.
    pub fn new(cov: Covariance, n_grid: usize, d: usize) -> Result<Self> {
        if !(cov.sigma0_sq > 0.0) || !(cov.corr_length > 0.0) {
            return Err(invalid("covariance parameters must be positive"));
        }
        if n_grid < 2 || d == 0 || d > n_grid * n_grid {
            return Err(invalid("need 0 < d ≤ n_grid² and n_grid ≥ 2"));
        }
        let one = one_dim_modes(&cov, n_grid)?;
        // Candidates: d leading 1D modes per axis suffice.
        let m = d.min(n_grid);
        let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                cand.push((cov.sigma0_sq * one.values[a] * one.values[b], a, b));
            }
        }
        cand.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        cand.truncate(d);
        let tol = 1e-12 * cand[0].0.abs();
        if cand.iter().any(|c| !(c.0 > tol)) {
            return Err(Error::Eigen("requested mode has a non-positive eigenvalue".into()));
        }
        Ok(Self {
            cov,
            one,
            eigenvalues: cand.iter().map(|c| c.0).collect(),
            pairs: cand.iter().map(|c| (c.1, c.2)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn covariance(&self) -> Covariance {
        self.cov
    }

    /// Nyström extension of 1D mode `k` and its derivative at `s`.
    fn one_dim(&self, k: usize, s: f64) -> (f64, f64) {
        let o = &self.one;
        let (mut v, mut dv) = (0.0, 0.0);
        for (t, p) in o.nodes.iter().zip(&o.vectors[k]) {
            v += self.cov.factor(s, *t) * p;
            dv += self.cov.factor_ds(s, *t) * p;
        }
        let c = o.weight / o.values[k];
        (c * v, c * dv)
    }

    /// `ψ_i(x)` and its gradient.
    pub fn mode(&self, i: usize, x: [f64; 2]) -> (f64, [f64; 2]) {
        let (a, b) = self.pairs[i];
        let (fa, da) = self.one_dim(a, x[0]);
        let (fb, db) = self.one_dim(b, x[1]);
        (fa * fb, [da * fb, fa * db])
    }

    /// Mode `i` on the quadrature grid, `x₁` fastest.
    pub fn grid_values(&self, i: usize) -> Vec<f64> {
        let (a, b) = self.pairs[i];
        let n = self.one.nodes.len();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                out.push(self.one.vectors[a][k] * self.one.vectors[b][j]);
            }
        }
        out
    }

    /// Quadrature weight of each grid node.
    pub fn grid_weight(&self) -> f64 {
        self.one.weight * self.one.weight
    }
}

/// Dense Nyström eigenpairs of the full 2D kernel, nonincreasing, with
/// eigenvectors scaled to unit weighted norm. Cost grows as `n_grid⁶`.
pub fn dense_kl(cov: &Covariance, n_grid: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (nodes, h) = midpoint_grid(n_grid);
    let w = h * h;
    let pts: Vec<[f64; 2]> =
        (0..n_grid).flat_map(|j| nodes.iter().map(move |&x| (x, j))).map(|(x, j)| [x, nodes[j]]).collect();
    let a: Vec<Vec<f64>> = pts.iter().map(|p| pts.iter().map(|q| w * cov.eval(*p, *q)).collect()).collect();
    let (vals, vecs) = symmetric_eigen(&a)?;
    let n = pts.len();
    let scale = 1.0 / libm::sqrt(w);
    let modes = (0..n)
        .map(|k| {
            let mut v: Vec<f64> = (0..n).map(|j| vecs[j][k] * scale).collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok((vals, modes))
}
