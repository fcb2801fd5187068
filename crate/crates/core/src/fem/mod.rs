//! Q1 finite elements for the double-glazing problem on `(-1,1)²`: uniform
//! mesh, parametric wind fields, KL stream-function modes and assembly.

mod assembly;
mod kl;
mod mesh;
mod wind;

pub use assembly::{FemModel, SemiDiscreteSystem};
pub use kl::{dense_kl, midpoint_grid, Covariance, KlModes};
pub use mesh::{Dof, SpatialMesh};
pub use wind::{mean_stream, mean_wind, WindModel};
