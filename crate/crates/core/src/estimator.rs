//! Computable error estimates for the time-dependent sparse-grid
//! approximation: hierarchical interpolation estimate, per-index indicators,
//! correction and timestepping estimates, and their sum.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::InnerProduct;
use crate::multi_index::{MultiIndex, MultiIndexSet};
use crate::sparse_grid::{
    difference_norm, difference_terms, grid_terms, lagrange_norm_of_terms, GramTable,
    LegendreExpansion, LegendreTransforms, SparseGrid, SparseInterpolant,
};

/// Estimates at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorReport {
    pub time: f64,
    /// `π_I`, the hierarchical interpolation estimate.
    pub interpolation: f64,
    /// `π_{I,μ}` for each `μ` in the reduced margin.
    pub indicators: BTreeMap<MultiIndex, f64>,
    /// `π_{I,δ}`.
    pub correction: f64,
    /// `π_δ`.
    pub timestepping: f64,
    /// `π = π_I + π_{I,δ} + π_δ`.
    pub total: f64,
    /// Interpolation tolerance `η_I = c_safety · π_{I,δ}`.
    pub interp_tolerance: f64,
    pub n_colloc: usize,
    pub n_colloc_enhanced: usize,
}

/// `π = π_I + π_{I,δ} + π_δ`.
pub fn total_estimate(interpolation: f64, correction: f64, timestepping: f64) -> f64 {
    interpolation + correction + timestepping
}

/// Restriction of grid data to the sub-grid of `set`.
pub fn restrict(data: &SparseInterpolant, set: &MultiIndexSet) -> Result<SparseInterpolant> {
    let grid = SparseGrid::new(set)?;
    let values = grid
        .points()
        .iter()
        .map(|p| {
            data.grid
                .index_of(p)
                .map(|i| data.values[i].clone())
                .ok_or_else(|| Error::MissingValue(format!("{:?}", crate::sparse_grid::coordinates(p))))
        })
        .collect::<Result<Vec<_>>>()?;
    SparseInterpolant::new(Arc::new(grid), values, data.time)
}

/// `π_I = ‖S_{I⁺}[u] − S_I[u]‖`.
pub fn interpolation_estimate(
    u_i: &SparseInterpolant,
    u_iplus: &SparseInterpolant,
    mass: &impl InnerProduct,
    transforms: &mut LegendreTransforms,
) -> Result<f64> {
    if u_i.grid.index_set().enhance() != *u_iplus.grid.index_set() {
        return Err(invalid("second interpolant is not built on the enhanced index set"));
    }
    difference_norm(u_iplus, u_i, mass, transforms)
}

/// `π_{I,μ} = ‖S_{I∪{μ}}[u] − S_I[u]‖`, the norm of the hierarchical
/// surplus `Δ^μ`; values are taken from `data`, whose grid must contain
/// `X(I ∪ {μ})`.
pub fn indicator(
    data: &SparseInterpolant,
    set: &MultiIndexSet,
    mu: &MultiIndex,
    mass: &impl InnerProduct,
    transforms: &mut LegendreTransforms,
) -> Result<f64> {
    if !set.reduced_margin().contains(mu) {
        return Err(invalid(format!("({mu}) is not in the reduced margin")));
    }
    let d = mu.dim();
    let mut e = LegendreExpansion::new(d, data.width());
    for mask in 0u32..(1 << d) {
        let mut levels = mu.levels().to_vec();
        let mut ok = true;
        for (j, l) in levels.iter_mut().enumerate() {
            if mask >> j & 1 == 1 {
                if *l == 1 {
                    ok = false;
                    break;
                }
                *l -= 1;
            }
        }
        if !ok {
            continue;
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let nu = MultiIndex::new(levels)?;
        e.add_tensor(sign, &nu, transforms, |p, out| match data.grid.index_of(p) {
            Some(i) => {
                out.copy_from_slice(&data.values[i]);
                Ok(())
            }
            None => Err(Error::MissingValue(format!("{:?}", crate::sparse_grid::coordinates(p)))),
        })?;
    }
    Ok(e.norm(mass))
}

/// Indicators for every `μ` in the reduced margin of `set`.
pub fn indicators(
    data: &SparseInterpolant,
    set: &MultiIndexSet,
    mass: &impl InnerProduct,
    transforms: &mut LegendreTransforms,
) -> Result<BTreeMap<MultiIndex, f64>> {
    set.reduced_margin().into_iter().map(|mu| Ok((mu.clone(), indicator(data, set, &mu, mass, transforms)?))).collect()
}

/// Lagrange-basis norms needed by the correction and timestepping
/// estimates; they depend only on `I`.
#[derive(Clone, Debug)]
pub struct LagrangeNorms {
    pub grid: Arc<SparseGrid>,
    pub enhanced: Arc<SparseGrid>,
    /// `‖L_z^I‖` for each point of `X(I)`.
    pub base: Vec<f64>,
    /// `‖L_z^{I⁺}‖` for points of `X(I⁺) \ X(I)` and
    /// `‖L_z^{I⁺} − L_z^I‖` for points of `X(I)`, indexed by `X(I⁺)`.
    pub correction: Vec<f64>,
    /// Whether each point of `X(I⁺)` lies in `X(I)`.
    pub in_base: Vec<bool>,
}

impl LagrangeNorms {
    pub fn new(grid: Arc<SparseGrid>, enhanced: Arc<SparseGrid>, gram: &mut GramTable) -> Result<Self> {
        if grid.index_set().enhance() != *enhanced.index_set() {
            return Err(invalid("second grid is not the enhancement of the first"));
        }
        let base_terms = grid_terms(&grid);
        let plus_terms = grid_terms(&enhanced);
        let diff_terms = difference_terms(&enhanced, &grid);
        let base = grid.points().iter().map(|p| lagrange_norm_of_terms(&base_terms, p, gram)).collect();
        let mut correction = Vec::with_capacity(enhanced.len());
        let mut in_base = Vec::with_capacity(enhanced.len());
        for p in enhanced.points() {
            let old = grid.contains(p);
            in_base.push(old);
            let terms = if old { &diff_terms } else { &plus_terms };
            correction.push(lagrange_norm_of_terms(terms, p, gram));
        }
        Ok(Self { grid, enhanced, base, correction, in_base })
    }
}

/// `π_{I,δ} = Σ_{new z} π_ge(z) ‖L_z^{I⁺}‖ + Σ_{z ∈ X(I)} π_ge(z) ‖L_z^{I⁺} − L_z^I‖`
/// with `ge[i]` the global error estimate at point `i` of `X(I⁺)`.
pub fn correction_estimate(ge: &[f64], norms: &LagrangeNorms) -> Result<f64> {
    if ge.len() != norms.enhanced.len() {
        return Err(Error::DimensionMismatch { expected: norms.enhanced.len(), found: ge.len() });
    }
    Ok(ge.iter().zip(&norms.correction).map(|(g, n)| g * n).sum())
}

/// `π_δ = Σ_{z ∈ X(I)} π_ge(z) ‖L_z^I‖`, with `ge` indexed by `X(I⁺)`.
pub fn timestepping_estimate(ge: &[f64], norms: &LagrangeNorms) -> Result<f64> {
    if ge.len() != norms.enhanced.len() {
        return Err(Error::DimensionMismatch { expected: norms.enhanced.len(), found: ge.len() });
    }
    let mut s = 0.0;
    for (i, p) in norms.grid.points().iter().enumerate() {
        let j = norms.enhanced.index_of(p).ok_or(Error::NotAGridPoint)?;
        s += ge[j] * norms.base[i];
    }
    Ok(s)
}

/// All estimates at one time from the enhanced-grid data and per-point
/// global error estimates. Indicators are skipped unless requested.
pub fn estimate(
    data: &SparseInterpolant,
    ge: &[f64],
    norms: &LagrangeNorms,
    c_safety: f64,
    mass: &impl InnerProduct,
    transforms: &mut LegendreTransforms,
    with_indicators: bool,
) -> Result<EstimatorReport> {
    if !Arc::ptr_eq(&data.grid, &norms.enhanced) && data.grid.points() != norms.enhanced.points() {
        return Err(invalid("data does not live on the enhanced grid"));
    }
    let set = norms.grid.index_set();
    let u_i = restrict(data, set)?;
    let interpolation = difference_norm(data, &u_i, mass, transforms)?;
    let indicators = if with_indicators { indicators(data, set, mass, transforms)? } else { BTreeMap::new() };
    let correction = correction_estimate(ge, norms)?;
    let timestepping = timestepping_estimate(ge, norms)?;
    Ok(EstimatorReport {
        time: data.time,
        interpolation,
        indicators,
        correction,
        timestepping,
        total: total_estimate(interpolation, correction, timestepping),
        interp_tolerance: c_safety * correction,
        n_colloc: norms.grid.len(),
        n_colloc_enhanced: norms.enhanced.len(),
    })
}
