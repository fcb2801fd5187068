//! The scalar complex test ODE `u̇ = (−ε + iy) u`, `u(0) = u₀`, with
//! `y ~ U[-1, 1]`.
//!
//! Complex values are stored as `[re, im]`; the integrator sees the real
//! 2×2 system `u̇ + [[ε, y], [−y, ε]] u = 0`.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::Csr;
use crate::multi_index::MultiIndexSet;
use crate::sparse_grid::{cc_points, cc_weights, LegendreTransforms, RuleCache, SparseGrid, SparseInterpolant};
use crate::timestepper::{integrate_adaptive, tr_fixed, LinearSystem, Trajectory};

/// Level of the 1025-point Clenshaw–Curtis rule used to measure errors.
pub const ORACLE_LEVEL: u32 = 11;

/// Unnormalised `sin(t)/t`.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        1.0 - t * t / 6.0 + t * t * t * t / 120.0
    } else {
        libm::sin(t) / t
    }
}

#[derive(Clone, Debug)]
pub struct ComplexOde {
    pub epsilon: f64,
    pub u0: f64,
    identity: Csr,
}

impl Default for ComplexOde {
    fn default() -> Self {
        Self::new(0.1, 1.0)
    }
}

impl ComplexOde {
    pub fn new(epsilon: f64, u0: f64) -> Self {
        Self { epsilon, u0, identity: Csr::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]) }
    }

    /// `α(y) = −ε + iy`.
    pub fn alpha(&self, y: f64) -> [f64; 2] {
        [-self.epsilon, y]
    }

    /// `u₀ e^{−εt} e^{iyt}`.
    pub fn exact_solution(&self, t: f64, y: f64) -> [f64; 2] {
        let r = self.u0 * libm::exp(-self.epsilon * t);
        [r * libm::cos(y * t), r * libm::sin(y * t)]
    }

    /// `E[u] = u₀ e^{−εt} sinc t`.
    pub fn exact_mean(&self, t: f64) -> f64 {
        self.u0 * libm::exp(-self.epsilon * t) * sinc(t)
    }

    /// `(E|u − E u|²)^{1/2} = u₀ e^{−εt} (1 − sinc² t)^{1/2}`.
    pub fn exact_stddev(&self, t: f64) -> f64 {
        let s = sinc(t);
        self.u0 * libm::exp(-self.epsilon * t) * libm::sqrt((1.0 - s * s).max(0.0))
    }

    pub(crate) fn identity(&self) -> &Csr {
        &self.identity
    }

    pub fn system_at(&self, y: &[f64]) -> Result<ComplexOdeSystem> {
        let &[y] = y else {
            return Err(crate::Error::DimensionMismatch { expected: 1, found: y.len() });
        };
        let e = self.epsilon;
        Ok(ComplexOdeSystem {
            mass: self.identity.clone(),
            operator: Csr::from_triplets(2, 2, &[(0, 0, e), (0, 1, y), (1, 0, -y), (1, 1, e)]),
        })
    }

    /// Interpolant of the exact solution at time `t` on `I_k = {1, …, k+1}`
    /// (degree `2^k`).
    pub fn interpolant(&self, k: u32, t: f64) -> Result<SparseInterpolant> {
        let grid = alloc::sync::Arc::new(SparseGrid::new(&MultiIndexSet::chain(k + 1))?);
        SparseInterpolant::from_fn(grid, t, |y| self.exact_solution(t, y[0]).to_vec())
    }
}

/// `M = I`, `A = [[ε, y], [−y, ε]]`, no forcing.
#[derive(Clone, Debug)]
pub struct ComplexOdeSystem {
    mass: Csr,
    operator: Csr,
}

impl LinearSystem for ComplexOdeSystem {
    fn mass(&self) -> &Csr {
        &self.mass
    }

    fn operator(&self) -> &Csr {
        &self.operator
    }

    fn forcing(&self, _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
}

fn check_level(k: u32) -> Result<()> {
    if !(1..=9).contains(&k) {
        return Err(invalid("level exponent k must be between 1 and 9"));
    }
    Ok(())
}

/// `‖u(t,·) − u^{I_k}(t,·)‖_{L²_ρ}` at each time, by 1025-point CC quadrature.
pub fn interp_error_study(prob: &ComplexOde, k: u32, times: &[f64]) -> Result<Vec<f64>> {
    check_level(k)?;
    let y = cc_points(ORACLE_LEVEL).points;
    let w = cc_weights(ORACLE_LEVEL);
    let mut rules = RuleCache::new();
    times
        .iter()
        .map(|&t| {
            let s = prob.interpolant(k, t)?;
            let mut sum = 0.0f64;
            for (yj, wj) in y.iter().zip(&w) {
                let a = prob.exact_solution(t, *yj);
                let b = s.interpolate(&[*yj], &mut rules)?;
                sum += wj * ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]));
            }
            Ok(libm::sqrt(sum.max(0.0)))
        })
        .collect()
}

/// Mean (real part) and standard deviation of the interpolant on `I_k`,
/// integrated exactly.
pub fn interp_statistics(prob: &ComplexOde, k: u32, t: f64) -> Result<(f64, f64)> {
    check_level(k)?;
    let mut tr = LegendreTransforms::new();
    let e = prob.interpolant(k, t)?.expansion(&mut tr)?;
    let var = e.variance();
    Ok((e.mean()[0], libm::sqrt(var[0] + var[1])))
}

/// Step selection for [`timestepping_study`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stepping {
    Fixed { dt: f64 },
    Adaptive { delta: f64 },
}

/// Result of integrating the ODE at one `y`.
#[derive(Clone, Debug)]
pub struct StudyResult {
    pub trajectory: Trajectory,
    /// `|u(t_k) − u_k|` at every accepted step.
    pub global_error: Vec<f64>,
}

impl StudyResult {
    pub fn step_count(&self) -> usize {
        self.trajectory.step_count()
    }
}

/// Integrates the ODE at `y` on `[0, T]` and compares with the exact solution.
pub fn timestepping_study(prob: &ComplexOde, y: f64, stepping: Stepping, t_final: f64) -> Result<StudyResult> {
    let sys = prob.system_at(&[y])?;
    let u0 = [prob.u0, 0.0];
    let trajectory = match stepping {
        Stepping::Fixed { dt } => tr_fixed(&sys, &u0, 0.0, t_final, dt)?,
        Stepping::Adaptive { delta } => integrate_adaptive(&sys, &u0, 0.0, t_final, delta)?,
    };
    let global_error = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(t, u)| {
            let e = prob.exact_solution(*t, y);
            libm::hypot(e[0] - u[0], e[1] - u[1])
        })
        .collect();
    Ok(StudyResult { trajectory, global_error })
}

/// `n` logarithmically spaced times from `a` to `b` inclusive.
pub fn log_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![a];
    }
    let (la, lb) = (libm::log10(a), libm::log10(b));
    (0..n)
        .map(|i| match i {
            0 => a,
            _ if i == n - 1 => b,
            _ => libm::pow(10.0, la + (lb - la) * i as f64 / (n - 1) as f64),
        })
        .collect()
}
