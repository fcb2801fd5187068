//! Orthonormal-Legendre coefficients of sparse-grid polynomials.
//!
//! Each tensor interpolant `U^ν[f]` is converted to coefficients in the
//! product basis `Π_i p_{k_i}(y_i)`, orthonormal under the uniform density;
//! signed sums of such terms are accumulated per degree tuple `k`. Because
//! the basis is orthonormal, `‖·‖_{L²_ρ ⊗ X}² = Σ_k ‖C_k‖_X²`, which is the
//! pairwise Gram sum of the combination representation evaluated without
//! cancellation between large terms.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::gauss::{gauss_legendre, orthonormal_legendre};
use super::grid::{check_point, for_each_tensor_point, tensor_size, RuleCache, SparseGrid};
use super::rule::{num_points, NodeId};
use crate::error::{Error, Result};
use crate::linalg::InnerProduct;
use crate::multi_index::MultiIndex;

/// Nodal-to-Legendre transforms per level, `P[k][j] = ∫ ℓ_j p_k ρ dy`.
#[derive(Clone, Debug, Default)]
pub struct LegendreTransforms {
    rules: RuleCache,
    mats: BTreeMap<u32, Vec<f64>>,
}

impl LegendreTransforms {
    pub fn new() -> Self {
        Self::default()
    }

    /// Row-major `m × m` transform of level `level`.
    pub fn get(&mut self, level: u32) -> &[f64] {
        if !self.mats.contains_key(&level) {
            let m = num_points(level);
            let rule = self.rules.get(level).clone();
            let (x, w) = gauss_legendre(m);
            let mut l = alloc::vec![0.0; m];
            let mut p = alloc::vec![0.0; m];
            let mut mat = alloc::vec![0.0; m * m];
            for (xq, wq) in x.iter().zip(&w) {
                rule.lagrange_values(*xq, &mut l);
                orthonormal_legendre(m, *xq, &mut p);
                for k in 0..m {
                    let s = 0.5 * wq * p[k];
                    for j in 0..m {
                        mat[k * m + j] += s * l[j];
                    }
                }
            }
            self.mats.insert(level, mat);
        }
        &self.mats[&level]
    }
}

/// A vector-valued polynomial on `[-1,1]^d` stored by its orthonormal
/// Legendre coefficients.
#[derive(Clone, Debug)]
pub struct LegendreExpansion {
    dim: usize,
    width: usize,
    keys: BTreeMap<Vec<u16>, usize>,
    coeffs: Vec<f64>,
}

impl LegendreExpansion {
    /// An empty expansion of `dim` parameters and values in `R^width`.
    pub fn new(dim: usize, width: usize) -> Self {
        Self { dim, width, keys: BTreeMap::new(), coeffs: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_coefficients(&self) -> usize {
        self.keys.len()
    }

    /// Adds `weight · U^ν[f]`; `values(p, out)` writes `f(p)` into `out`.
    pub fn add_tensor(
        &mut self,
        weight: f64,
        index: &MultiIndex,
        transforms: &mut LegendreTransforms,
        mut values: impl FnMut(&[NodeId], &mut [f64]) -> Result<()>,
    ) -> Result<()> {
        if index.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: index.dim() });
        }
        let w = self.width;
        let mut t = alloc::vec![0.0; tensor_size(index) * w];
        let mut k = 0;
        let mut err = Ok(());
        for_each_tensor_point(index, |p| {
            if err.is_ok() {
                err = values(p, &mut t[k * w..(k + 1) * w]);
            }
            k += 1;
        });
        err?;
        self.add_nodal_tensor(weight, index, transforms, t);
        Ok(())
    }

    /// Adds `weight · S_I[f]` for grid data `values[i] = f(z_i)`.
    pub fn add_grid<V: AsRef<[f64]>>(
        &mut self,
        weight: f64,
        grid: &SparseGrid,
        values: &[V],
        transforms: &mut LegendreTransforms,
    ) -> Result<()> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        let w = self.width;
        for term in grid.terms() {
            let mut t = alloc::vec![0.0; term.points.len() * w];
            for (k, &i) in term.points.iter().enumerate() {
                let v = values[i].as_ref();
                if v.len() != w {
                    return Err(Error::DimensionMismatch { expected: w, found: v.len() });
                }
                t[k * w..(k + 1) * w].copy_from_slice(v);
            }
            self.add_nodal_tensor(weight * term.coeff as f64, &term.index, transforms, t);
        }
        Ok(())
    }

    fn add_nodal_tensor(&mut self, weight: f64, index: &MultiIndex, transforms: &mut LegendreTransforms, mut t: Vec<f64>) {
        let w = self.width;
        let sizes: Vec<usize> = index.levels().iter().map(|&l| num_points(l)).collect();
        let mut scratch = alloc::vec![0.0; t.len()];
        for (axis, &level) in index.levels().iter().enumerate() {
            let m = sizes[axis];
            if m == 1 {
                continue;
            }
            let p = transforms.get(level);
            let outer: usize = sizes[..axis].iter().product();
            let inner: usize = sizes[axis + 1..].iter().product::<usize>() * w;
            scratch.fill(0.0);
            for o in 0..outer {
                let base = o * m * inner;
                for k in 0..m {
                    let dst = base + k * inner;
                    for j in 0..m {
                        let c = p[k * m + j];
                        if c == 0.0 {
                            continue;
                        }
                        let src = base + j * inner;
                        for i in 0..inner {
                            scratch[dst + i] += c * t[src + i];
                        }
                    }
                }
            }
            core::mem::swap(&mut t, &mut scratch);
        }
        let d = self.dim;
        let mut degree = alloc::vec![0u16; d];
        let total = t.len() / w.max(1);
        for k in 0..total {
            let row = match self.keys.get(&degree) {
                Some(&r) => r,
                None => {
                    let r = self.keys.len();
                    self.keys.insert(degree.clone(), r);
                    self.coeffs.resize(self.coeffs.len() + w, 0.0);
                    r
                }
            };
            for (c, v) in self.coeffs[row * w..(row + 1) * w].iter_mut().zip(&t[k * w..(k + 1) * w]) {
                *c += weight * v;
            }
            for j in (0..d).rev() {
                degree[j] += 1;
                if (degree[j] as usize) < sizes[j] {
                    break;
                }
                degree[j] = 0;
            }
        }
    }

    /// `‖·‖` in `L²_ρ(Γ) ⊗ X` where `X` carries the given inner product.
    pub fn norm(&self, ip: &impl InnerProduct) -> f64 {
        libm::sqrt(self.norm_squared(ip))
    }

    pub fn norm_squared(&self, ip: &impl InnerProduct) -> f64 {
        let w = self.width;
        self.coeffs.chunks(w.max(1)).map(|c| ip.inner(c, c).max(0.0)).sum()
    }

    /// The mean `∫ u ρ dy`, i.e. the degree-zero coefficient.
    pub fn mean(&self) -> Vec<f64> {
        let zero = alloc::vec![0u16; self.dim];
        match self.keys.get(&zero) {
            Some(&r) => self.coeffs[r * self.width..(r + 1) * self.width].to_vec(),
            None => alloc::vec![0.0; self.width],
        }
    }

    /// Componentwise variance `Σ_{k≠0} C_k²`.
    pub fn variance(&self) -> Vec<f64> {
        let w = self.width;
        let mut out = alloc::vec![0.0; w];
        for (key, &r) in &self.keys {
            if key.iter().all(|&k| k == 0) {
                continue;
            }
            for (o, c) in out.iter_mut().zip(&self.coeffs[r * w..(r + 1) * w]) {
                *o += c * c;
            }
        }
        out
    }

    /// Point evaluation.
    pub fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_point(y, self.dim)?;
        let maxdeg = self.keys.keys().flat_map(|k| k.iter().copied()).max().unwrap_or(0) as usize + 1;
        let mut tables = alloc::vec![alloc::vec![0.0; maxdeg]; self.dim];
        for (t, yi) in tables.iter_mut().zip(y) {
            orthonormal_legendre(maxdeg, *yi, t);
        }
        let w = self.width;
        let mut out = alloc::vec![0.0; w];
        for (key, &r) in &self.keys {
            let b: f64 = key.iter().enumerate().map(|(j, &k)| tables[j][k as usize]).product();
            for (o, c) in out.iter_mut().zip(&self.coeffs[r * w..(r + 1) * w]) {
                *o += b * c;
            }
        }
        Ok(out)
    }
}
