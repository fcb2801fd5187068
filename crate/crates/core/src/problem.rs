//! Parametric linear ODE systems `M u̇ + A(y) u = f(t, y)` seen by the
//! adaptive driver.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::analytic_ode::{ComplexOde, ComplexOdeSystem};
use crate::error::Result;
use crate::fem::{FemModel, SemiDiscreteSystem};
use crate::linalg::Csr;
use crate::timestepper::LinearSystem;

/// A family of linear ODE systems indexed by `y ∈ [-1,1]^d`.
pub trait ParametricProblem: Sync {
    type System: LinearSystem + Send + Sync;

    /// Parameter dimension `d`.
    fn param_dim(&self) -> usize;

    /// Length of a state vector.
    fn state_dim(&self) -> usize;

    fn system(&self, y: &[f64]) -> Result<Self::System>;

    fn initial_value(&self, y: &[f64]) -> Vec<f64>;

    /// Gram matrix of the spatial norm.
    fn space_mass(&self) -> &Csr;
}

/// The double-glazing advection–diffusion problem with zero initial data.
#[derive(Clone, Debug)]
pub struct DoubleGlazing {
    pub model: Arc<FemModel>,
}

impl DoubleGlazing {
    pub fn new(model: FemModel) -> Self {
        Self { model: Arc::new(model) }
    }
}

impl ParametricProblem for DoubleGlazing {
    type System = SemiDiscreteSystem;

    fn param_dim(&self) -> usize {
        self.model.param_dim()
    }

    fn state_dim(&self) -> usize {
        self.model.mesh().n_interior()
    }

    fn system(&self, y: &[f64]) -> Result<SemiDiscreteSystem> {
        self.model.system(y)
    }

    fn initial_value(&self, _y: &[f64]) -> Vec<f64> {
        alloc::vec![0.0; self.state_dim()]
    }

    fn space_mass(&self) -> &Csr {
        self.model.mass()
    }
}

impl ParametricProblem for ComplexOde {
    type System = ComplexOdeSystem;

    fn param_dim(&self) -> usize {
        1
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn system(&self, y: &[f64]) -> Result<ComplexOdeSystem> {
        self.system_at(y)
    }

    fn initial_value(&self, _y: &[f64]) -> Vec<f64> {
        alloc::vec![self.u0, 0.0]
    }

    fn space_mass(&self) -> &Csr {
        self.identity()
    }
}
