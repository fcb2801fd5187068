//! Time integration of `M u̇ + A u = f(t)`: fixed-step trapezoidal rule and
//! the adaptive TR-AB2 pair, piecewise-linear reconstruction in time and the
//! tolerance-scaling global error estimate.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fem::SemiDiscreteSystem;
use crate::linalg::{BandedLu, Csr, InnerProduct};

/// Initial step of a cold start.
pub const COLD_START_STEP: f64 = 1e-9;
/// Steps below this size abort the integration.
pub const MIN_STEP: f64 = 1e-14;
/// Safety factor applied to the step after a rejection.
pub const REJECT_SAFETY: f64 = 0.9;

/// A linear ODE system `M u̇ + A u = f(t)` with constant matrices.
pub trait LinearSystem {
    fn mass(&self) -> &Csr;
    fn operator(&self) -> &Csr;
    fn forcing(&self, t: f64, out: &mut [f64]);

    fn dim(&self) -> usize {
        self.mass().nrows
    }
}

impl LinearSystem for SemiDiscreteSystem {
    fn mass(&self) -> &Csr {
        SemiDiscreteSystem::mass(self)
    }

    fn operator(&self) -> &Csr {
        SemiDiscreteSystem::operator(self)
    }

    fn forcing(&self, t: f64, out: &mut [f64]) {
        SemiDiscreteSystem::forcing(self, t, out)
    }
}

/// Accepted steps of one integration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    /// `t_0 < t_1 < … < t_N`.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Local error estimate of each accepted step (zero for fixed steps
    /// and the cold-start step).
    pub local_errors: Vec<f64>,
    /// Local tolerance, `None` for fixed-step runs.
    pub tolerance: Option<f64>,
    /// Rejected step attempts.
    pub rejections: usize,
}

impl Trajectory {
    fn start(t: f64, u: &[f64], tolerance: Option<f64>) -> Self {
        Self { times: alloc::vec![t], states: alloc::vec![u.to_vec()], local_errors: Vec::new(), tolerance, rejections: 0 }
    }

    fn push(&mut self, t: f64, u: &[f64], err: f64) {
        self.times.push(t);
        self.states.push(u.to_vec());
        self.local_errors.push(err);
    }

    /// Number of accepted steps `N`.
    pub fn step_count(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    /// Step sizes `Δt_k = t_{k+1} − t_k`.
    pub fn steps(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// Appends the points of `other` that lie after the end of `self`.
    pub fn append_after(&mut self, other: &Trajectory) {
        let end = self.end_time();
        let k = other.times.partition_point(|&s| s <= end);
        self.times.extend_from_slice(&other.times[k..]);
        self.states.extend_from_slice(&other.states[k..]);
        self.local_errors.extend_from_slice(&other.local_errors[k.max(1) - 1..]);
        self.rejections += other.rejections;
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn extend(&mut self, other: &Trajectory) {
        debug_assert_eq!(self.end_time(), other.start_time());
        self.times.extend_from_slice(&other.times[1..]);
        self.states.extend_from_slice(&other.states[1..]);
        self.local_errors.extend_from_slice(&other.local_errors);
        self.rejections += other.rejections;
    }
}

/// Piecewise-linear reconstruction `u(t)` from the accepted steps.
pub fn eval_in_time(traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
    let (t0, tn) = (traj.start_time(), traj.end_time());
    if !(t >= t0 && t <= tn) {
        return Err(Error::TimeOutOfRange { t, start: t0, end: tn });
    }
    let k = traj.times.partition_point(|&s| s <= t);
    if k == 0 || traj.times[k - 1] == t || k == traj.times.len() {
        let i = if k == 0 { 0 } else { k - 1 };
        return Ok(traj.states[i].clone());
    }
    let (ta, tb) = (traj.times[k - 1], traj.times[k]);
    let s = (t - ta) / (tb - ta);
    Ok(traj.states[k - 1].iter().zip(&traj.states[k]).map(|(a, b)| a + s * (b - a)).collect())
}

/// AB2 history carried between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    pub udot: Vec<f64>,
    pub udot_prev: Vec<f64>,
    pub dt_prev: f64,
}

/// Restartable state of an adaptive integration.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorState {
    pub t: f64,
    pub u: Vec<f64>,
    /// Next step proposed by the controller.
    pub dt: f64,
    /// `None` until the cold-start step has been taken.
    pub history: Option<History>,
    /// Accepted steps so far, including the cold-start step.
    pub steps: usize,
    pub rejections: usize,
    /// The accepted step point before `(t, u)`.
    pub previous: Option<(f64, Vec<f64>)>,
}

impl IntegratorState {
    /// A state at `t` that will begin with a cold-start step.
    pub fn cold(t: f64, u: Vec<f64>) -> Self {
        Self { t, u, dt: COLD_START_STEP, history: None, steps: 0, rejections: 0, previous: None }
    }
}

/// Factorisation of `M + (Δt/2) A`, kept while `Δt` is unchanged.
struct StepSolver {
    half_dt: f64,
    lu: Option<BandedLu>,
}

impl StepSolver {
    fn new() -> Self {
        Self { half_dt: f64::NAN, lu: None }
    }

    fn get<S: LinearSystem + ?Sized>(&mut self, sys: &S, half_dt: f64) -> Result<&BandedLu> {
        if self.lu.is_none() || self.half_dt != half_dt {
            let m = Csr::combine(1.0, sys.mass(), half_dt, sys.operator());
            self.lu = Some(BandedLu::factor(&m)?);
            self.half_dt = half_dt;
        }
        Ok(self.lu.as_ref().unwrap())
    }
}

/// One trapezoidal step from `(t, u)` of size `dt`; returns `u_{n+1}`.
fn tr_step<S: LinearSystem + ?Sized>(
    sys: &S,
    solver: &mut StepSolver,
    u: &[f64],
    dt: f64,
    f_now: &[f64],
    f_next: &[f64],
) -> Result<Vec<f64>> {
    let h = 0.5 * dt;
    let mut rhs = alloc::vec![0.0; u.len()];
    sys.mass().mul_vec(u, &mut rhs);
    sys.operator().mul_vec_add(-h, u, &mut rhs);
    for ((r, a), b) in rhs.iter_mut().zip(f_now).zip(f_next) {
        *r += h * (a + b);
    }
    solver.get(sys, h)?.solve(&mut rhs);
    Ok(rhs)
}

fn check_initial<S: LinearSystem + ?Sized>(sys: &S, u: &[f64]) -> Result<()> {
    if u.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: u.len() });
    }
    Ok(())
}

/// Fixed-step trapezoidal rule on `[t0, t1]`; the last step is shortened to
/// land on `t1`.
pub fn tr_fixed<S: LinearSystem + ?Sized>(sys: &S, u0: &[f64], t0: f64, t1: f64, dt: f64) -> Result<Trajectory> {
    check_initial(sys, u0)?;
    if !(dt > 0.0) || !(t1 >= t0) {
        return Err(invalid("need dt > 0 and t1 ≥ t0"));
    }
    let n_full = libm::floor((t1 - t0) / dt * (1.0 + 1e-12));
    let mut traj = Trajectory::start(t0, u0, None);
    let mut solver = StepSolver::new();
    let mut u = u0.to_vec();
    let mut f_now = alloc::vec![0.0; u.len()];
    let mut f_next = alloc::vec![0.0; u.len()];
    sys.forcing(t0, &mut f_now);
    let mut k = 0usize;
    let mut t = t0;
    while t < t1 {
        k += 1;
        let full = (k as f64) <= n_full;
        let t_next = if full { t0 + k as f64 * dt } else { t1 };
        let t_next = if t1 - t_next < 1e-9 * dt { t1 } else { t_next };
        let h = if full { dt } else { t_next - t };
        sys.forcing(t_next, &mut f_next);
        u = tr_step(sys, &mut solver, &u, h, &f_now, &f_next)?;
        traj.push(t_next, &u, 0.0);
        core::mem::swap(&mut f_now, &mut f_next);
        t = t_next;
    }
    Ok(traj)
}

/// `‖x‖_M`.
pub fn mass_norm<S: LinearSystem + ?Sized>(sys: &S, x: &[f64]) -> f64 {
    libm::sqrt(sys.mass().inner(x, x).max(0.0))
}

/// Adaptive TR-AB2 from `state` to `t1` with local tolerance `delta`.
///
/// `state` is advanced in place; the returned trajectory holds the accepted
/// steps of this call, starting at the initial state. The last step is
/// clipped to `t1`; the controller's unclipped proposal stays in `state.dt`.
pub fn tr_ab2_adaptive<S: LinearSystem + ?Sized>(
    sys: &S,
    state: &mut IntegratorState,
    t1: f64,
    delta: f64,
) -> Result<Trajectory> {
    tr_ab2(sys, state, t1, delta, true)
}

/// Adaptive TR-AB2 until the first accepted step at or beyond `t1`,
/// without shortening any step. The returned trajectory starts at the step
/// point preceding `state` when one exists, so it covers `[t, t1]` for any
/// `t` at which an earlier call to this function stopped.
pub fn tr_ab2_advance<S: LinearSystem + ?Sized>(
    sys: &S,
    state: &mut IntegratorState,
    t1: f64,
    delta: f64,
) -> Result<Trajectory> {
    let prev = state.previous.clone();
    let mut traj = tr_ab2(sys, state, t1, delta, false)?;
    if let Some((tp, up)) = prev {
        traj.times.insert(0, tp);
        traj.states.insert(0, up);
        traj.local_errors.insert(0, f64::NAN);
    }
    Ok(traj)
}

fn tr_ab2<S: LinearSystem + ?Sized>(
    sys: &S,
    state: &mut IntegratorState,
    t1: f64,
    delta: f64,
    clip: bool,
) -> Result<Trajectory> {
    check_initial(sys, &state.u)?;
    if !(delta > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if clip && !(t1 >= state.t) {
        return Err(Error::TimeOutOfRange { t: t1, start: state.t, end: f64::INFINITY });
    }
    let n = sys.dim();
    let mut traj = Trajectory::start(state.t, &state.u, Some(delta));
    let mut solver = StepSolver::new();
    let mut f_now = alloc::vec![0.0; n];
    let mut f_next = alloc::vec![0.0; n];
    sys.forcing(state.t, &mut f_now);

    if state.history.is_none() && state.t < t1 {
        // u̇₀ from M u̇₀ = f(t₀) − A u₀, then one TR step accepted as is.
        let mut udot0 = f_now.clone();
        sys.operator().mul_vec_add(-1.0, &state.u, &mut udot0);
        BandedLu::factor(sys.mass())?.solve(&mut udot0);
        let dt = if clip { COLD_START_STEP.min(t1 - state.t) } else { COLD_START_STEP };
        let t_next = state.t + dt;
        sys.forcing(t_next, &mut f_next);
        let u1 = tr_step(sys, &mut solver, &state.u, dt, &f_now, &f_next)?;
        let udot1: Vec<f64> = u1.iter().zip(&state.u).zip(&udot0).map(|((a, b), d)| 2.0 * (a - b) / dt - d).collect();
        state.history = Some(History { udot: udot1, udot_prev: udot0, dt_prev: dt });
        state.previous = Some((state.t, core::mem::replace(&mut state.u, u1)));
        state.t = t_next;
        state.dt = COLD_START_STEP;
        state.steps += 1;
        traj.push(state.t, &state.u, 0.0);
        core::mem::swap(&mut f_now, &mut f_next);
    }

    while state.t < t1 {
        let hist = state.history.as_ref().unwrap();
        let mut dt = state.dt;
        let remaining = t1 - state.t;
        let clipped = clip && (dt >= remaining || remaining - dt < 1e-2 * dt);
        if clipped {
            dt = remaining;
        }
        let t_next = if clipped { t1 } else { state.t + dt };
        sys.forcing(t_next, &mut f_next);
        let u_tr = tr_step(sys, &mut solver, &state.u, dt, &f_now, &f_next)?;
        let r = dt / hist.dt_prev;
        let diff: Vec<f64> = u_tr
            .iter()
            .zip(&state.u)
            .zip(hist.udot.iter().zip(&hist.udot_prev))
            .map(|((tr, u), (d, dp))| tr - (u + 0.5 * dt * ((2.0 + r) * d - r * dp)))
            .collect();
        let err = mass_norm(sys, &diff) / (3.0 * (1.0 + hist.dt_prev / dt));
        let ratio = if err > 0.0 && err.is_finite() { libm::cbrt(delta / err) } else { 10.0 };
        if err <= delta {
            let udot: Vec<f64> =
                u_tr.iter().zip(&state.u).zip(&hist.udot).map(|((a, b), d)| 2.0 * (a - b) / dt - d).collect();
            let old = state.history.take().unwrap();
            state.history = Some(History { udot, udot_prev: old.udot, dt_prev: dt });
            // A clipped step keeps the controller's unclipped proposal.
            if !clipped {
                state.dt = dt * ratio;
            }
            state.previous = Some((state.t, core::mem::replace(&mut state.u, u_tr)));
            state.t = t_next;
            state.steps += 1;
            traj.push(state.t, &state.u, err);
            core::mem::swap(&mut f_now, &mut f_next);
        } else {
            state.dt = dt * ratio * REJECT_SAFETY;
            state.rejections += 1;
            traj.rejections += 1;
            if state.dt < MIN_STEP {
                return Err(Error::StepUnderflow { t: state.t, dt: state.dt });
            }
        }
    }
    Ok(traj)
}

/// Cold-started adaptive solve on `[t0, t1]`.
pub fn integrate_adaptive<S: LinearSystem + ?Sized>(sys: &S, u0: &[f64], t0: f64, t1: f64, delta: f64) -> Result<Trajectory> {
    let mut st = IntegratorState::cold(t0, u0.to_vec());
    tr_ab2_adaptive(sys, &mut st, t1, delta)
}

/// Scale `(δ/δ₀)^{p/(p+1)}` of the global error estimate.
pub fn ge_scale(delta: f64, delta0: f64, order: u32) -> Result<f64> {
    if !(delta > 0.0) || !(delta0 >= 10.0 * delta) {
        return Err(invalid("coarse tolerance must be at least ten times the fine tolerance"));
    }
    let p = order as f64;
    Ok(libm::pow(delta / delta0, p / (p + 1.0)))
}

/// Global error estimate `π_ge(t) = (δ/δ₀)^{p/(p+1)} ‖u^δ(t) − u^{δ₀}(t)‖_M`.
pub fn global_error_estimate(
    fine: &Trajectory,
    coarse: &Trajectory,
    order: u32,
    mass: &impl InnerProduct,
    t: f64,
) -> Result<f64> {
    let (Some(d), Some(d0)) = (fine.tolerance, coarse.tolerance) else {
        return Err(invalid("global error estimate needs two adaptive trajectories"));
    };
    let s = ge_scale(d, d0, order)?;
    let a = eval_in_time(fine, t)?;
    let b = eval_in_time(coarse, t)?;
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(s * mass.norm(&diff))
}
