//! Nested Clenshaw–Curtis sparse grids: points, combination-technique
//! interpolation and exact `L²_ρ(Γ)` norms.

mod expansion;
mod gauss;
mod grid;
mod gram;
mod interpolant;
mod rule;

pub use expansion::{LegendreExpansion, LegendreTransforms};
pub use gauss::{gauss_legendre, orthonormal_legendre};
pub use grid::{
    combination_coefficients, coordinates, for_each_tensor_point, sparse_points, tensor_size, CombinationTerm,
    Point, RuleCache, SparseGrid,
};
pub use gram::{
    cross_gram, difference_terms, grid_terms, lagrange_norm, lagrange_norm_of_terms, Density, GramTable, SignedTerms,
};
pub use interpolant::{difference_norm, SparseInterpolant};
pub use rule::{cc_points, cc_weights, num_points, NodeId, OneDimRule, MAX_LEVEL};
