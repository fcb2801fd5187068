//! The time-adaptive collocation loop: integrate every point of the enhanced
//! grid over a synchronisation window, estimate, and either accept the
//! window or mark, refine and retry it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::estimator::{estimate, EstimatorReport, LagrangeNorms};
use crate::linalg::{Csr, InnerProduct};
use crate::multi_index::{MultiIndex, MultiIndexSet};
use crate::problem::ParametricProblem;
use crate::sparse_grid::{
    coordinates, Density, GramTable, LegendreTransforms, NodeId, Point, RuleCache, SparseGrid, SparseInterpolant,
};
use crate::timestepper::{eval_in_time, ge_scale, tr_ab2_advance, IntegratorState, Trajectory};

/// Order of TR-AB2 used in the global error estimate.
pub const METHOD_ORDER: u32 = 2;

/// Source of the per-point global error estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeMode {
    /// Every collocation point carries its own coarse-tolerance solve.
    PerPoint,
    /// One coarse solve at `y = 0` serves every point.
    SharedAtMean,
}

/// How points added by a refinement at time `t > 0` obtain their state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMode {
    /// Integrate from `0` to `t`.
    Reintegrate,
    /// Start at `t` from the current sparse interpolant.
    Interpolate,
}

/// What is kept of the per-point trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Retention {
    /// Every accepted step of every point; allows evaluation at any time.
    Full,
    /// Only the approximation at the observation times.
    Observations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveConfig {
    /// Local tolerance `δ`.
    pub delta: f64,
    /// Coarse tolerance `δ₀` of the global error estimate.
    pub delta0: f64,
    pub c_safety: f64,
    /// Marking parameter `θ`.
    pub theta: f64,
    /// Initial synchronisation step `Δτ₀`.
    pub dtau0: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub final_time: f64,
    pub ge_mode: GeMode,
    pub init_mode: InitMode,
    pub retention: Retention,
    /// Largest level allowed in any dimension.
    pub max_level: u32,
    /// Times at which estimates and the approximation are recorded.
    pub observation_times: Vec<f64>,
    /// Fixed synchronisation times; replaces the dynamic `Δτ` when set.
    pub schedule: Option<Vec<f64>>,
}

impl AdaptiveConfig {
    /// Defaults: `δ₀ = 100δ`, `c_safety = 10`, `θ = 0.1`, `c₊ = 1.2`,
    /// `c₋ = 0.5`, per-point estimates, interpolated initialisation.
    pub fn new(delta: f64, final_time: f64, dtau0: f64) -> Self {
        Self {
            delta,
            delta0: 100.0 * delta,
            c_safety: 10.0,
            theta: 0.1,
            dtau0,
            c_plus: 1.2,
            c_minus: 0.5,
            final_time,
            ge_mode: GeMode::PerPoint,
            init_mode: InitMode::Interpolate,
            retention: Retention::Observations,
            max_level: 8,
            observation_times: Vec::new(),
            schedule: None,
        }
    }

    /// `Δτ₀ = τ ln(1/0.9)`, the time at which the wall reaches 10% of its
    /// final temperature.
    pub fn default_dtau0(tau: f64) -> f64 {
        tau * libm::log(1.0 / 0.9)
    }

    /// Every violated constraint, as `(field, message)`.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        if !(self.delta > 0.0) {
            v.push(("delta", "must be positive".into()));
        }
        if !(self.delta0 >= 10.0 * self.delta) {
            v.push(("delta0", "must be at least 10 × delta".into()));
        }
        if !(self.c_safety > 1.0) {
            v.push(("c_safety", "must exceed 1".into()));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            v.push(("theta", "must lie in (0, 1)".into()));
        }
        if !(self.dtau0 > 0.0) {
            v.push(("dtau0", "must be positive".into()));
        }
        if !(self.c_plus >= 1.0) {
            v.push(("c_plus", "must be at least 1".into()));
        }
        if !(self.c_minus > 0.0 && self.c_minus < 1.0) {
            v.push(("c_minus", "must lie in (0, 1)".into()));
        }
        if !(self.final_time > 0.0) {
            v.push(("final_time", "must be positive".into()));
        }
        if !(1..=crate::sparse_grid::MAX_LEVEL).contains(&self.max_level) {
            v.push(("max_level", "must lie in 1..=30".into()));
        }
        if self.observation_times.iter().any(|t| !(*t >= 0.0 && *t <= self.final_time)) {
            v.push(("observation_times", "must lie in [0, final_time]".into()));
        }
        if let Some(s) = &self.schedule {
            if s.windows(2).any(|w| !(w[1] > w[0])) || s.iter().any(|t| !(*t > 0.0)) {
                v.push(("schedule", "must be positive and strictly increasing".into()));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().first() {
            None => Ok(()),
            Some((k, m)) => Err(invalid(format!("{k}: {m}"))),
        }
    }
}

/// Dörfler marking: the shortest prefix of the indicators, sorted by value
/// descending and then by multi-index, whose sum reaches `(1 − θ)` of the
/// total.
pub fn dorfler_mark(indicators: &BTreeMap<MultiIndex, f64>, theta: f64) -> Result<Vec<MultiIndex>> {
    if indicators.is_empty() {
        return Err(invalid("no indicators to mark"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid("theta must lie in (0, 1)"));
    }
    let mut sorted: Vec<(&MultiIndex, f64)> = indicators.iter().map(|(m, v)| (m, *v)).collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let total: f64 = sorted.iter().map(|e| e.1).sum();
    let target = (1.0 - theta) * total;
    let mut out = Vec::new();
    let mut acc = 0.0;
    for (m, v) in sorted {
        out.push(m.clone());
        acc += v;
        if acc >= target {
            break;
        }
    }
    Ok(out)
}

/// One synchronisation window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowRecord {
    pub start: f64,
    pub end: f64,
    pub accepted: bool,
    pub report: EstimatorReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementEvent {
    pub time: f64,
    pub marked: Vec<MultiIndex>,
    pub n_colloc: usize,
    pub n_colloc_enhanced: usize,
}

/// Estimates and approximation at an observation time.
#[derive(Clone, Debug)]
pub struct Observation {
    pub report: EstimatorReport,
    /// `u_A` at the observation time, on `X(I)`.
    pub approximation: SparseInterpolant,
}

/// Cumulative timestep counts at an accepted synchronisation time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostSample {
    pub time: f64,
    /// Steps at points of `X(I)`.
    pub approximation: u64,
    /// Steps at points only in `X(I⁺)` and all coarse-tolerance steps.
    pub estimator: u64,
    /// Points of the total-degree `w = 2` set times the steps at `y = 0`.
    pub naive: u64,
}

/// Integrator data of one collocation point.
#[derive(Clone, Debug)]
struct PointRun<S> {
    point: Point,
    y: Vec<f64>,
    system: S,
    fine: IntegratorState,
    coarse: Option<IntegratorState>,
    history: Option<Trajectory>,
}

#[derive(Clone, Debug)]
struct Checkpoint {
    fine: IntegratorState,
    coarse: Option<IntegratorState>,
    history_len: usize,
}

/// Output of [`run_adaptive`].
#[derive(Clone, Debug)]
pub struct AdaptiveRun {
    pub config: AdaptiveConfig,
    /// Final index set `I(T)`.
    pub index_set: MultiIndexSet,
    /// `(t, I)`: `I` is in force on windows starting at `t` or later.
    pub set_history: Vec<(f64, MultiIndexSet)>,
    pub windows: Vec<WindowRecord>,
    pub refinements: Vec<RefinementEvent>,
    pub observations: Vec<Observation>,
    pub costs: Vec<CostSample>,
    pub warnings: Vec<String>,
    /// Fine-tolerance data on `X(I⁺)` at `T`.
    pub final_data: SparseInterpolant,
    trajectories: Option<BTreeMap<Point, Trajectory>>,
}

impl AdaptiveRun {
    pub fn total_cost(&self) -> CostSample {
        self.costs.last().copied().unwrap_or_default()
    }

    /// `u_A(T)` on `X(I(T))`.
    pub fn final_approximation(&self) -> Result<SparseInterpolant> {
        crate::estimator::restrict(&self.final_data, &self.index_set)
    }

    /// The index set used for the approximation at time `t`.
    pub fn set_at(&self, t: f64) -> &MultiIndexSet {
        let mut cur = &self.set_history[0].1;
        for (s, set) in &self.set_history {
            if *s < t {
                cur = set;
            }
        }
        cur
    }

    /// `u_A(t, y)`. Needs full retention unless `t` is an observation time
    /// or the final time.
    pub fn evaluate(&self, t: f64, y: &[f64], rules: &mut RuleCache) -> Result<Vec<f64>> {
        self.approximation_at(t)?.interpolate(y, rules)
    }

    /// `u_A(t, ·)` as grid data on `X(I(t))`.
    pub fn approximation_at(&self, t: f64) -> Result<SparseInterpolant> {
        let end = self.config.final_time;
        if !(t >= 0.0 && t <= end) {
            return Err(Error::TimeOutOfRange { t, start: 0.0, end });
        }
        if let Some(tr) = &self.trajectories {
            let grid = Arc::new(SparseGrid::new(self.set_at(t))?);
            let values = grid
                .points()
                .iter()
                .map(|p| match tr.get(p) {
                    Some(traj) => eval_in_time(traj, t),
                    None => Err(Error::MissingValue(format!("{:?}", coordinates(p)))),
                })
                .collect::<Result<Vec<_>>>()?;
            return SparseInterpolant::new(grid, values, t);
        }
        if let Some(o) = self.observations.iter().find(|o| o.report.time == t) {
            return Ok(o.approximation.clone());
        }
        if t == end {
            return self.final_approximation();
        }
        Err(invalid("trajectories were not retained; only observation times can be evaluated"))
    }
}

/// Runs `f` on every item, in parallel with the `parallel` feature; the
/// first error in item order is returned.
fn for_each<T: Send>(items: &mut [T], f: impl Fn(&mut T) -> Result<()> + Sync + Send) -> Result<()> {
    #[cfg(feature = "parallel")]
    let results: Vec<Result<()>> = {
        use rayon::prelude::*;
        items.par_iter_mut().map(|x| f(x)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<()>> = items.iter_mut().map(|x| f(x)).collect();
    results.into_iter().collect()
}

fn point_error(y: &[f64], e: Error) -> Error {
    Error::PointFailure { point: format!("{y:?}"), source: alloc::boxed::Box::new(e) }
}

fn diff_norm(mass: &Csr, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mass.norm(&d)
}

/// Linear reconstruction at `t` between the last two step points.
fn state_at(st: &IntegratorState, t: f64) -> Vec<f64> {
    match &st.previous {
        Some((tp, up)) if t < st.t => {
            let s = (t - tp) / (st.t - tp);
            up.iter().zip(&st.u).map(|(a, b)| a + s * (b - a)).collect()
        }
        _ => st.u.clone(),
    }
}

fn is_root(p: &[NodeId]) -> bool {
    p.iter().all(|n| *n == NodeId::CENTER)
}

/// Window integration results of one point.
struct WindowOut {
    fine: Trajectory,
    coarse: Option<Trajectory>,
    fine_steps: usize,
    coarse_steps: usize,
}

struct Driver<'a, P: ParametricProblem> {
    problem: &'a P,
    cfg: &'a AdaptiveConfig,
    set: MultiIndexSet,
    grid: Arc<SparseGrid>,
    enhanced: Arc<SparseGrid>,
    norms: LagrangeNorms,
    runs: Vec<PointRun<P::System>>,
    gram: GramTable,
    transforms: LegendreTransforms,
    scale: f64,
    cost: CostSample,
    naive_points: u64,
    warnings: Vec<String>,
}

impl<'a, P: ParametricProblem> Driver<'a, P>
where
    P::System: Clone,
{
    fn new_run(&self, point: Point, t: f64, u: Vec<f64>, coarse_u: Option<Vec<f64>>) -> Result<PointRun<P::System>> {
        let y = coordinates(&point);
        let system = self.problem.system(&y).map_err(|e| point_error(&y, e))?;
        let needs_coarse = self.cfg.ge_mode == GeMode::PerPoint || is_root(&point);
        let coarse = needs_coarse.then(|| IntegratorState::cold(t, coarse_u.unwrap_or_else(|| u.clone())));
        let history = (self.cfg.retention == Retention::Full).then(|| Trajectory {
            times: alloc::vec![t],
            states: alloc::vec![u.clone()],
            tolerance: Some(self.cfg.delta),
            ..Default::default()
        });
        Ok(PointRun { point, y, system, fine: IntegratorState::cold(t, u), coarse, history })
    }

    fn rebuild_grids(&mut self) -> Result<()> {
        self.grid = Arc::new(SparseGrid::new(&self.set)?);
        self.enhanced = Arc::new(SparseGrid::new(&self.set.enhance())?);
        self.norms = LagrangeNorms::new(self.grid.clone(), self.enhanced.clone(), &mut self.gram)?;
        Ok(())
    }

    fn advance_all(&mut self, t_end: f64) -> Result<Vec<WindowOut>> {
        let (delta, delta0) = (self.cfg.delta, self.cfg.delta0);
        let mut outs: Vec<Option<WindowOut>> = (0..self.runs.len()).map(|_| None).collect();
        let mut pairs: Vec<(&mut PointRun<P::System>, &mut Option<WindowOut>)> =
            self.runs.iter_mut().zip(outs.iter_mut()).collect();
        for_each(&mut pairs, |(run, out)| {
            let (s0, c0) = (run.fine.steps, run.coarse.as_ref().map_or(0, |c| c.steps));
            let fine = tr_ab2_advance(&run.system, &mut run.fine, t_end, delta).map_err(|e| point_error(&run.y, e))?;
            let coarse = match run.coarse.as_mut() {
                Some(c) => Some(tr_ab2_advance(&run.system, c, t_end, delta0).map_err(|e| point_error(&run.y, e))?),
                None => None,
            };
            if let Some(h) = run.history.as_mut() {
                h.append_after(&fine);
            }
            **out = Some(WindowOut {
                fine,
                coarse,
                fine_steps: run.fine.steps - s0,
                coarse_steps: run.coarse.as_ref().map_or(0, |c| c.steps) - c0,
            });
            Ok(())
        })?;
        Ok(outs.into_iter().map(Option::unwrap).collect())
    }

    fn charge(&mut self, outs: &[WindowOut]) {
        for (run, o) in self.runs.iter().zip(outs) {
            if self.grid.contains(&run.point) {
                self.cost.approximation += o.fine_steps as u64;
            } else {
                self.cost.estimator += o.fine_steps as u64;
            }
            self.cost.estimator += o.coarse_steps as u64;
        }
    }

    /// Fine values and global error estimates at time `s` of the window.
    fn sample(&self, outs: &[WindowOut], s: f64) -> Result<(SparseInterpolant, Vec<f64>)> {
        let mass = self.problem.space_mass();
        let mut values = Vec::with_capacity(outs.len());
        let mut ge = Vec::with_capacity(outs.len());
        let mut shared = None;
        for o in outs {
            let f = eval_in_time(&o.fine, s)?;
            if let Some(c) = &o.coarse {
                ge.push(self.scale * diff_norm(mass, &f, &eval_in_time(c, s)?));
            } else {
                ge.push(f64::NAN);
            }
            values.push(f);
        }
        if self.cfg.ge_mode == GeMode::SharedAtMean {
            let i = self.runs.iter().position(|r| is_root(&r.point)).ok_or(Error::NotAGridPoint)?;
            shared = Some(ge[i]);
        }
        if let Some(g) = shared {
            ge.iter_mut().for_each(|x| *x = g);
        }
        Ok((SparseInterpolant::new(self.enhanced.clone(), values, s)?, ge))
    }

    fn report(&mut self, data: &SparseInterpolant, ge: &[f64], with_indicators: bool) -> Result<EstimatorReport> {
        let mass = self.problem.space_mass();
        estimate(data, ge, &self.norms, self.cfg.c_safety, mass, &mut self.transforms, with_indicators)
    }

    fn checkpoint(&self) -> Vec<Checkpoint> {
        self.runs
            .iter()
            .map(|r| Checkpoint {
                fine: r.fine.clone(),
                coarse: r.coarse.clone(),
                history_len: r.history.as_ref().map_or(0, |h| h.times.len()),
            })
            .collect()
    }

    fn restore(&mut self, cp: Vec<Checkpoint>) {
        for (r, c) in self.runs.iter_mut().zip(cp) {
            r.fine = c.fine;
            r.coarse = c.coarse;
            if let Some(h) = r.history.as_mut() {
                h.times.truncate(c.history_len);
                h.states.truncate(c.history_len);
                h.local_errors.truncate(c.history_len.saturating_sub(1));
            }
        }
    }

    /// Adds `marked` to `I` at time `t` and creates runs for the new points
    /// of the enhanced grid.
    fn refine(&mut self, t: f64, marked: &[MultiIndex]) -> Result<()> {
        let old_grid = self.grid.clone();
        let old_values: Vec<Vec<f64>> = old_grid
            .points()
            .iter()
            .map(|p| state_at(&self.runs.iter().find(|r| r.point == *p).unwrap().fine, t))
            .collect();
        let old_coarse: Option<Vec<Vec<f64>>> = (self.cfg.ge_mode == GeMode::PerPoint).then(|| {
            old_grid
                .points()
                .iter()
                .map(|p| state_at(self.runs.iter().find(|r| r.point == *p).unwrap().coarse.as_ref().unwrap(), t))
                .collect()
        });
        for m in marked {
            self.set.insert(m.clone())?;
        }
        self.rebuild_grids()?;

        let mut old: BTreeMap<Point, PointRun<P::System>> = self.runs.drain(..).map(|r| (r.point.clone(), r)).collect();
        let mut rules = RuleCache::new();
        let mut runs = Vec::with_capacity(self.enhanced.len());
        let mut fresh = Vec::new();
        for p in self.enhanced.points() {
            if let Some(r) = old.remove(p) {
                runs.push(r);
                continue;
            }
            let y = coordinates(p);
            let u0 = self.problem.initial_value(&y);
            let run = if t == 0.0 || self.cfg.init_mode == InitMode::Reintegrate {
                self.new_run(p.clone(), 0.0, u0, None)?
            } else {
                let u = old_grid.interpolate(&old_values, &y, &mut rules)?;
                let c = match &old_coarse {
                    Some(cv) => Some(old_grid.interpolate(cv, &y, &mut rules)?),
                    None => None,
                };
                self.new_run(p.clone(), t, u, c)?
            };
            fresh.push(runs.len());
            runs.push(run);
        }
        self.runs = runs;

        if t > 0.0 && self.cfg.init_mode == InitMode::Reintegrate {
            let mut newcomers: Vec<PointRun<P::System>> = Vec::new();
            for &i in fresh.iter().rev() {
                newcomers.push(self.runs.remove(i));
            }
            newcomers.reverse();
            let (delta, delta0) = (self.cfg.delta, self.cfg.delta0);
            for_each(&mut newcomers, |run| {
                let fine = tr_ab2_advance(&run.system, &mut run.fine, t, delta).map_err(|e| point_error(&run.y, e))?;
                if let Some(c) = run.coarse.as_mut() {
                    tr_ab2_advance(&run.system, c, t, delta0).map_err(|e| point_error(&run.y, e))?;
                }
                if let Some(h) = run.history.as_mut() {
                    h.append_after(&fine);
                }
                Ok(())
            })?;
            for run in &newcomers {
                let steps = run.fine.steps as u64;
                if self.grid.contains(&run.point) {
                    self.cost.approximation += steps;
                } else {
                    self.cost.estimator += steps;
                }
                self.cost.estimator += run.coarse.as_ref().map_or(0, |c| c.steps) as u64;
            }
            for (k, &i) in fresh.iter().enumerate() {
                self.runs.insert(i, newcomers[k].clone());
            }
        }
        Ok(())
    }

    fn root_steps(&self) -> u64 {
        self.runs.iter().find(|r| is_root(&r.point)).map_or(0, |r| r.fine.steps as u64)
    }
}

/// Runs the adaptive loop on `[0, T]`.
pub fn run_adaptive<P: ParametricProblem>(problem: &P, cfg: &AdaptiveConfig) -> Result<AdaptiveRun>
where
    P::System: Clone,
{
    cfg.validate()?;
    let d = problem.param_dim();
    let set = MultiIndexSet::root(d);
    let grid = Arc::new(SparseGrid::new(&set)?);
    let enhanced = Arc::new(SparseGrid::new(&set.enhance())?);
    let mut gram = GramTable::new(Density::Uniform);
    let norms = LagrangeNorms::new(grid.clone(), enhanced.clone(), &mut gram)?;
    let naive_points = SparseGrid::new(&MultiIndexSet::total_degree(d, 2))?.len() as u64;
    let mut drv = Driver {
        problem,
        cfg,
        set,
        grid,
        enhanced,
        norms,
        runs: Vec::new(),
        gram,
        transforms: LegendreTransforms::new(),
        scale: ge_scale(cfg.delta, cfg.delta0, METHOD_ORDER)?,
        cost: CostSample::default(),
        naive_points,
        warnings: Vec::new(),
    };
    for p in drv.enhanced.points().to_vec() {
        let u0 = problem.initial_value(&coordinates(&p));
        let r = drv.new_run(p, 0.0, u0, None)?;
        drv.runs.push(r);
    }

    let t_final = cfg.final_time;
    let mut obs: Vec<f64> = cfg.observation_times.clone();
    obs.sort_by(f64::total_cmp);
    obs.dedup();
    let mut observations = Vec::new();
    let mut windows = Vec::new();
    let mut refinements = Vec::new();
    let mut costs = Vec::new();
    let mut set_history = alloc::vec![(0.0, drv.set.clone())];

    let mut next_obs = 0;
    if obs.first() == Some(&0.0) {
        let outs: Vec<WindowOut> = drv
            .runs
            .iter()
            .map(|r| WindowOut {
                fine: Trajectory { times: alloc::vec![0.0], states: alloc::vec![r.fine.u.clone()], ..Default::default() },
                coarse: r.coarse.as_ref().map(|c| Trajectory {
                    times: alloc::vec![0.0],
                    states: alloc::vec![c.u.clone()],
                    ..Default::default()
                }),
                fine_steps: 0,
                coarse_steps: 0,
            })
            .collect();
        let (data, ge) = drv.sample(&outs, 0.0)?;
        let report = drv.report(&data, &ge, false)?;
        let approximation = crate::estimator::restrict(&data, &drv.set)?;
        observations.push(Observation { report, approximation });
        next_obs = 1;
    }

    let mut t = 0.0;
    let mut dtau = cfg.dtau0;
    let mut final_data = None;
    while t < t_final {
        let mut t_end = match &cfg.schedule {
            Some(s) => s.iter().copied().find(|&x| x > t).unwrap_or(t_final).min(t_final),
            None => t + dtau,
        };
        if t_end >= t_final || t_final - t_end < 1e-9 * t_final {
            t_end = t_final;
        }

        let cp = drv.checkpoint();
        let outs = drv.advance_all(t_end)?;
        drv.charge(&outs);
        let (data, ge) = drv.sample(&outs, t_end)?;
        let report = drv.report(&data, &ge, true)?;
        let eta = cfg.c_safety * if report.correction > 0.0 { report.correction } else { f64::EPSILON };
        let mut accept = report.interpolation <= eta;
        let mut marked = Vec::new();
        if !accept {
            let allowed: BTreeMap<MultiIndex, f64> = report
                .indicators
                .iter()
                .filter(|(m, _)| m.levels().iter().all(|&l| l <= cfg.max_level))
                .map(|(m, v)| (m.clone(), *v))
                .collect();
            if allowed.len() < report.indicators.len() {
                drv.warnings.push(format!("t = {t}: level cap {} reached; some indices not eligible", cfg.max_level));
            }
            if allowed.is_empty() {
                drv.warnings.push(format!("t = {t}: no eligible index to refine; window accepted"));
                accept = true;
            } else {
                marked = dorfler_mark(&allowed, cfg.theta)?;
            }
        }
        windows.push(WindowRecord { start: t, end: t_end, accepted: accept, report });
        if accept {
            while next_obs < obs.len() && obs[next_obs] <= t_end {
                let s = obs[next_obs];
                let (d_s, ge_s) = drv.sample(&outs, s)?;
                let r = drv.report(&d_s, &ge_s, false)?;
                let approximation = crate::estimator::restrict(&d_s, &drv.set)?;
                observations.push(Observation { report: r, approximation });
                next_obs += 1;
            }
            t = t_end;
            dtau *= cfg.c_plus;
            costs.push(CostSample { time: t, naive: drv.naive_points * drv.root_steps(), ..drv.cost });
            if t >= t_final {
                final_data = Some(data);
            }
        } else {
            drv.restore(cp);
            drv.refine(t, &marked)?;
            refinements.push(RefinementEvent {
                time: t,
                marked,
                n_colloc: drv.grid.len(),
                n_colloc_enhanced: drv.enhanced.len(),
            });
            set_history.push((t, drv.set.clone()));
            dtau *= cfg.c_minus;
        }
    }
    let trajectories = (cfg.retention == Retention::Full)
        .then(|| drv.runs.iter().map(|r| (r.point.clone(), r.history.clone().unwrap())).collect());
    Ok(AdaptiveRun {
        config: cfg.clone(),
        index_set: drv.set,
        set_history,
        windows,
        refinements,
        observations,
        costs,
        warnings: drv.warnings,
        final_data: final_data.expect("loop ends on an accepted window"),
        trajectories,
    })
}

/// Fixed-set, high-fidelity solve sampled at the given times.
#[derive(Clone, Debug)]
pub struct ReferenceRun {
    pub index_set: MultiIndexSet,
    pub delta: f64,
    pub times: Vec<f64>,
    /// Reference data on `X(I_ref)` at each time.
    pub snapshots: Vec<SparseInterpolant>,
    pub total_steps: u64,
}

/// Solves every point of `X(I_ref)` on `[0, max(times)]` with tolerance
/// `δ_ref` and samples the trajectories at `times`.
pub fn run_reference<P: ParametricProblem>(
    problem: &P,
    set: &MultiIndexSet,
    delta: f64,
    times: &[f64],
) -> Result<ReferenceRun> {
    if set.dim() != problem.param_dim() {
        return Err(Error::DimensionMismatch { expected: problem.param_dim(), found: set.dim() });
    }
    if times.is_empty() || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid("reference times must be nonempty and nonnegative"));
    }
    let grid = Arc::new(SparseGrid::new(set)?);
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let mut slots: Vec<(Vec<f64>, Option<(Vec<Vec<f64>>, usize)>)> =
        (0..grid.len()).map(|i| (grid.coordinates(i), None)).collect();
    for_each(&mut slots, |(y, out)| {
        let sys = problem.system(y).map_err(|e| point_error(y, e))?;
        let u0 = problem.initial_value(y);
        let mut st = IntegratorState::cold(0.0, u0);
        let traj = tr_ab2_advance(&sys, &mut st, t_end, delta).map_err(|e| point_error(y, e))?;
        let vals = times.iter().map(|&s| eval_in_time(&traj, s)).collect::<Result<Vec<_>>>()?;
        *out = Some((vals, traj.step_count()));
        Ok(())
    })?;
    let mut total_steps = 0;
    let mut per_time: Vec<Vec<Vec<f64>>> = alloc::vec![Vec::with_capacity(grid.len()); times.len()];
    for (_, out) in slots {
        let (vals, steps) = out.unwrap();
        total_steps += steps as u64;
        for (k, v) in vals.into_iter().enumerate() {
            per_time[k].push(v);
        }
    }
    let snapshots = per_time
        .into_iter()
        .zip(times)
        .map(|(v, &s)| SparseInterpolant::new(grid.clone(), v, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReferenceRun { index_set: set.clone(), delta, times: times.to_vec(), snapshots, total_steps })
}

/// `e_A(t) = ‖u_ref(t) − u_A(t)‖` for two grid data sets at a common time.
pub fn approximation_error(
    reference: &SparseInterpolant,
    approx: &SparseInterpolant,
    mass: &impl InnerProduct,
    transforms: &mut LegendreTransforms,
) -> Result<f64> {
    crate::sparse_grid::difference_norm(reference, approx, mass, transforms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn marking_examples() {
        let ind: BTreeMap<MultiIndex, f64> =
            [(mi(&[2, 1]), 0.5), (mi(&[1, 2]), 0.3), (mi(&[1, 1, 1][..2]), 0.2)].into_iter().collect();
        assert_eq!(dorfler_mark(&ind, 0.5).unwrap(), vec![mi(&[2, 1])]);
        assert_eq!(dorfler_mark(&ind, 0.1).unwrap().len(), 3);
        let one: BTreeMap<MultiIndex, f64> = [(mi(&[3]), 0.0)].into_iter().collect();
        assert_eq!(dorfler_mark(&one, 0.7).unwrap(), vec![mi(&[3])]);
        assert!(dorfler_mark(&BTreeMap::new(), 0.5).is_err());
    }

    #[test]
    fn ties_break_lexicographically() {
        let ind: BTreeMap<MultiIndex, f64> = [(mi(&[1, 2]), 0.4), (mi(&[2, 1]), 0.4), (mi(&[1, 3]), 0.2)].into_iter().collect();
        assert_eq!(dorfler_mark(&ind, 0.5).unwrap(), vec![mi(&[1, 2]), mi(&[2, 1])]);
    }

    #[test]
    fn config_validation() {
        let mut c = AdaptiveConfig::new(1e-3, 10.0, 0.01);
        assert!(c.validate().is_ok());
        c.theta = 1.5;
        c.c_minus = 2.0;
        let v = c.violations();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].0, "theta");
    }
}
