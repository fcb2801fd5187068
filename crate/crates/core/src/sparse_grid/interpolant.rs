use alloc::sync::Arc;
use alloc::vec::Vec;

use super::expansion::{LegendreExpansion, LegendreTransforms};
use super::grid::{RuleCache, SparseGrid};
use crate::error::{invalid, Error, Result};
use crate::linalg::InnerProduct;

/// Sparse-grid interpolant `S_I[u](t)` of vector data attached to every
/// collocation point of a grid at a fixed time.
#[derive(Clone, Debug)]
pub struct SparseInterpolant {
    pub grid: Arc<SparseGrid>,
    pub values: Vec<Vec<f64>>,
    pub time: f64,
}

impl SparseInterpolant {
    pub fn new(grid: Arc<SparseGrid>, values: Vec<Vec<f64>>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        let w = values.first().map_or(0, Vec::len);
        if values.iter().any(|v| v.len() != w) {
            return Err(invalid("values of unequal width"));
        }
        Ok(Self { grid, values, time })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Arc<SparseGrid>, time: f64, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coordinates(i))).collect();
        Self::new(grid, values, time)
    }

    pub fn width(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn interpolate(&self, y: &[f64], rules: &mut RuleCache) -> Result<Vec<f64>> {
        self.grid.interpolate(&self.values, y, rules)
    }

    pub fn expansion(&self, transforms: &mut LegendreTransforms) -> Result<LegendreExpansion> {
        let mut e = LegendreExpansion::new(self.grid.dim(), self.width());
        e.add_grid(1.0, &self.grid, &self.values, transforms)?;
        Ok(e)
    }
}

/// Exact `‖a − b‖` in `L²_ρ(Γ) ⊗ X`, where the spatial inner product of `X`
/// is `ip` (a mass matrix for finite-element coefficients).
pub fn difference_norm(
    a: &SparseInterpolant,
    b: &SparseInterpolant,
    ip: &impl InnerProduct,
    transforms: &mut LegendreTransforms,
) -> Result<f64> {
    if a.grid.dim() != b.grid.dim() {
        return Err(Error::DimensionMismatch { expected: a.grid.dim(), found: b.grid.dim() });
    }
    if a.width() != b.width() {
        return Err(Error::DimensionMismatch { expected: a.width(), found: b.width() });
    }
    if a.time != b.time {
        return Err(invalid("interpolants belong to different times"));
    }
    let mut e = LegendreExpansion::new(a.grid.dim(), a.width());
    e.add_grid(1.0, &a.grid, &a.values, transforms)?;
    e.add_grid(-1.0, &b.grid, &b.values, transforms)?;
    Ok(e.norm(ip))
}
