//! Exact `L²_ρ` inner products of sparse Lagrange polynomials.
//!
//! The one-dimensional Gram factors `∫ ℓ^α_a ℓ^β_b ρ dy` are computed with
//! Gauss–Legendre rules that are exact for the product degree; products of
//! these factors give inner products of tensor Lagrange polynomials, and the
//! combination coefficients assemble them into sparse-grid quantities.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::gauss::gauss_legendre;
use super::grid::{for_each_tensor_point, RuleCache, SparseGrid};
use super::rule::{num_points, NodeId};
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;

/// Parameter density of one coordinate. Only the uniform density on
/// `[-1, 1]` is provided.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Density {
    #[default]
    Uniform,
}

impl Density {
    pub(crate) fn weight(self) -> f64 {
        match self {
            Density::Uniform => 0.5,
        }
    }
}

/// Lazily filled table of one-dimensional Gram matrices between Lagrange
/// bases of CC levels `α` and `β`.
#[derive(Clone, Debug, Default)]
pub struct GramTable {
    density: Density,
    rules: RuleCache,
    tables: BTreeMap<(u32, u32), Vec<f64>>,
}

impl GramTable {
    pub fn new(density: Density) -> Self {
        Self { density, rules: RuleCache::new(), tables: BTreeMap::new() }
    }

    /// Gram matrix for the level pair, row-major `m_α × m_β`.
    pub fn get(&mut self, a: u32, b: u32) -> &[f64] {
        if !self.tables.contains_key(&(a, b)) {
            let t = self.compute(a, b);
            self.tables.insert((a, b), t);
        }
        &self.tables[&(a, b)]
    }

    fn compute(&mut self, a: u32, b: u32) -> Vec<f64> {
        let (ma, mb) = (num_points(a), num_points(b));
        let q = (ma - 1 + mb - 1) / 2 + 1;
        let (x, w) = gauss_legendre(q);
        let rho = self.density.weight();
        let ra = self.rules.get(a).clone();
        let rb = self.rules.get(b).clone();
        let mut la = alloc::vec![0.0; ma];
        let mut lb = alloc::vec![0.0; mb];
        let mut g = alloc::vec![0.0; ma * mb];
        for (xk, wk) in x.iter().zip(&w) {
            ra.lagrange_values(*xk, &mut la);
            rb.lagrange_values(*xk, &mut lb);
            for i in 0..ma {
                let s = rho * wk * la[i];
                for j in 0..mb {
                    g[i * mb + j] += s * lb[j];
                }
            }
        }
        g
    }

    fn entry(&mut self, a: u32, ia: usize, b: u32, ib: usize) -> f64 {
        let mb = num_points(b);
        self.get(a, b)[ia * mb + ib]
    }

    /// `⟨Π_i ℓ^{ν_i}_{p_i}, Π_i ℓ^{μ_i}_{q_i}⟩_ρ` for nodes `p ∈ X_ν`, `q ∈ X_μ`.
    pub fn tensor_entry(&mut self, nu: &MultiIndex, p: &[NodeId], mu: &MultiIndex, q: &[NodeId]) -> f64 {
        let mut prod = 1.0;
        for j in 0..nu.dim() {
            let (a, b) = (nu.get(j), mu.get(j));
            let ia = p[j].index_in(a).expect("node not in rule");
            let ib = q[j].index_in(b).expect("node not in rule");
            prod *= self.entry(a, ia, b, ib);
            if prod == 0.0 {
                break;
            }
        }
        prod
    }
}

/// A signed combination `Σ_T c_T U^{ν_T}` of tensor interpolation operators.
pub type SignedTerms = Vec<(f64, MultiIndex)>;

/// Combination terms of a grid, as floating-point coefficients.
pub fn grid_terms(g: &SparseGrid) -> SignedTerms {
    g.terms().iter().map(|t| (t.coeff as f64, t.index.clone())).collect()
}

/// Terms of `S_a − S_b`, merged and with cancelled indices dropped.
pub fn difference_terms(a: &SparseGrid, b: &SparseGrid) -> SignedTerms {
    let mut acc: BTreeMap<MultiIndex, i64> = BTreeMap::new();
    for t in a.terms() {
        *acc.entry(t.index.clone()).or_insert(0) += t.coeff;
    }
    for t in b.terms() {
        *acc.entry(t.index.clone()).or_insert(0) -= t.coeff;
    }
    acc.into_iter().filter(|(_, c)| *c != 0).map(|(m, c)| (c as f64, m)).collect()
}

fn contains_point(nu: &MultiIndex, p: &[NodeId]) -> bool {
    p.iter().zip(nu.levels()).all(|(n, &l)| n.level() <= l)
}

/// `‖Σ_T c_T [p ∈ X_T] Π_i ℓ^{T_i}_{p_i}‖_ρ`: the norm of the Lagrange
/// polynomial attached to `p` by a signed combination. For the terms of a
/// grid this is `‖L_p^I‖`; for [`difference_terms`] it is `‖L_p^{I⁺} − L_p^I‖`.
pub fn lagrange_norm_of_terms(terms: &SignedTerms, p: &[NodeId], gram: &mut GramTable) -> f64 {
    let active: Vec<&(f64, MultiIndex)> = terms.iter().filter(|(_, m)| contains_point(m, p)).collect();
    let mut s = 0.0;
    for (i, (ci, mi)) in active.iter().enumerate() {
        s += ci * ci * gram.tensor_entry(mi, p, mi, p);
        for (cj, mj) in &active[i + 1..] {
            s += 2.0 * ci * cj * gram.tensor_entry(mi, p, mj, p);
        }
    }
    libm::sqrt(s.max(0.0))
}

/// `‖L_z^I‖_{L²_ρ}` for a grid point `z`.
pub fn lagrange_norm(g: &SparseGrid, z: &[NodeId], gram: &mut GramTable) -> Result<f64> {
    if !g.contains(z) {
        return Err(Error::NotAGridPoint);
    }
    Ok(lagrange_norm_of_terms(&grid_terms(g), z, gram))
}

/// Dense matrix `G[i][j] = ⟨L_{p_i}^{A}, L_{q_j}^{B}⟩_ρ` over the points of
/// two grids, built term by term from the combination representations.
pub fn cross_gram(a: &SparseGrid, b: &SparseGrid, gram: &mut GramTable) -> Vec<Vec<f64>> {
    let mut g = alloc::vec![alloc::vec![0.0; b.len()]; a.len()];
    for ta in a.terms() {
        let mut pa: Vec<alloc::boxed::Box<[NodeId]>> = Vec::new();
        for_each_tensor_point(&ta.index, |p| pa.push(p.into()));
        for tb in b.terms() {
            let c = (ta.coeff * tb.coeff) as f64;
            let mut pb: Vec<alloc::boxed::Box<[NodeId]>> = Vec::new();
            for_each_tensor_point(&tb.index, |p| pb.push(p.into()));
            for (ia, p) in ta.points.iter().zip(&pa) {
                for (ib, q) in tb.points.iter().zip(&pb) {
                    let e = gram.tensor_entry(&ta.index, p, &tb.index, q);
                    g[*ia][*ib] += c * e;
                }
            }
        }
    }
    g
}
