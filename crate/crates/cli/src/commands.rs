//! The subcommands and the artifacts they write.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::Path;
use std::sync::Arc;

use adaptsc_core::analytic_ode::{
    interp_error_study, interp_statistics, log_times, timestepping_study, ComplexOde, Stepping,
};
use adaptsc_core::driver::{
    approximation_error, run_adaptive, run_reference, AdaptiveConfig, AdaptiveRun, ReferenceRun,
};
use adaptsc_core::estimator::EstimatorReport;
use adaptsc_core::fem::{Covariance, FemModel, KlModes, SpatialMesh, WindModel};
use adaptsc_core::problem::{DoubleGlazing, ParametricProblem};
use adaptsc_core::linalg::InnerProduct;
use adaptsc_core::sparse_grid::LegendreTransforms;
use adaptsc_core::MultiIndexSet;
use anyhow::{Context, Result};

use crate::config::{ConfigError, ExperimentConfig, FemConfig, OdeConfig, WindConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    OdeDemo,
    RunAdaptive,
    Reference,
    Effectivity,
}

/// Runs `cmd` and writes its artifacts to `out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match cmd {
        Command::OdeDemo => ode_demo(cfg.ode.as_ref().cloned().unwrap_or_default(), out),
        Command::RunAdaptive | Command::Reference | Command::Effectivity => {
            if cmd != Command::Reference && cfg.adaptive.is_none() {
                return Err(missing("adaptive", "this subcommand needs an [adaptive] block").into());
            }
            if cmd != Command::RunAdaptive && cfg.reference.is_none() {
                return Err(missing("reference", "this subcommand needs a [reference] block").into());
            }
            match (&cfg.problem, &cfg.ode) {
                (Some(fem), _) => {
                    let p = double_glazing(fem)?;
                    dispatch(cmd, cfg, &p, out)
                }
                (None, Some(ode)) => dispatch(cmd, cfg, &ComplexOde::new(ode.epsilon, ode.u0), out),
                (None, None) => Err(missing("problem", "give a [problem] or an [ode] block").into()),
            }
        }
    }
}

fn missing(key: &str, message: &str) -> ConfigError {
    ConfigError { violations: vec![crate::config::Violation { key: key.into(), message: message.into() }] }
}

pub fn double_glazing(c: &FemConfig) -> Result<DoubleGlazing> {
    let wind = match &c.wind {
        WindConfig::FourQuadrant { sigma } => WindModel::FourQuadrant { sigma: *sigma },
        WindConfig::Kl { sigma0_sq, corr_length, d, n_grid } => {
            let cov = Covariance { sigma0_sq: *sigma0_sq, corr_length: *corr_length };
            WindModel::Kl(Arc::new(KlModes::new(cov, *n_grid, *d).context("KL eigenpairs")?))
        }
    };
    let mesh = SpatialMesh::new(c.grid_parameter)?;
    Ok(DoubleGlazing::new(FemModel::new(mesh, wind, c.epsilon, c.hot_wall_rate)?))
}

fn dispatch<P: ParametricProblem>(cmd: Command, cfg: &ExperimentConfig, p: &P, out: &Path) -> Result<()>
where
    P::System: Clone,
{
    let mut summary = String::new();
    writeln!(summary, "parameter dimension: {}", p.param_dim())?;
    writeln!(summary, "state dimension: {}", p.state_dim())?;
    let reference = match cmd {
        Command::RunAdaptive => None,
        _ => {
            let r = cfg.reference.as_ref().unwrap();
            let set = MultiIndexSet::total_degree(p.param_dim(), r.total_degree);
            let run = run_reference(p, &set, r.delta, &r.times).context("reference solve")?;
            write_reference(&run, p, out)?;
            writeln!(summary, "reference index set: total degree {} ({} indices)", r.total_degree, set.len())?;
            writeln!(summary, "reference collocation points: {}", run.snapshots[0].grid.len())?;
            writeln!(summary, "reference tolerance: {:e}", r.delta)?;
            writeln!(summary, "reference timesteps: {}", run.total_steps)?;
            Some(run)
        }
    };
    if cmd == Command::Reference {
        return write_summary(out, &summary);
    }

    let mut acfg = cfg.adaptive.clone().unwrap();
    let tau = cfg.hot_wall_rate();
    if let Some(r) = &reference {
        acfg.observation_times.extend(&r.times);
    } else if acfg.observation_times.is_empty() {
        acfg.observation_times = log_times(AdaptiveConfig::default_dtau0(tau).min(acfg.final_time), acfg.final_time, 50);
    }
    let run = run_adaptive(p, &acfg).context("adaptive run")?;
    write_run(&run, out)?;
    let last = &run.windows.last().unwrap().report;
    let cost = run.total_cost();
    writeln!(summary, "final time: {:e}", acfg.final_time)?;
    writeln!(summary, "final estimate pi: {:e}", last.total)?;
    writeln!(summary, "final pi_I: {:e}", last.interpolation)?;
    writeln!(summary, "final pi_I_delta: {:e}", last.correction)?;
    writeln!(summary, "final pi_delta: {:e}", last.timestepping)?;
    writeln!(summary, "index set size: {}", run.index_set.len())?;
    writeln!(summary, "collocation points: {}", last.n_colloc)?;
    writeln!(summary, "enhanced collocation points: {}", last.n_colloc_enhanced)?;
    writeln!(summary, "refinements: {}", run.refinements.len())?;
    writeln!(summary, "windows: {} ({} rejected)", run.windows.len(), run.windows.iter().filter(|w| !w.accepted).count())?;
    writeln!(summary, "approximation timesteps: {}", cost.approximation)?;
    writeln!(summary, "estimator timesteps: {}", cost.estimator)?;
    writeln!(summary, "naive Smolyak timesteps: {}", cost.naive)?;
    for w in &run.warnings {
        writeln!(summary, "warning: {w}")?;
    }

    if let Some(r) = &reference {
        let rows = effectivity_rows(&run, r, p)?;
        write_errors(&rows, out)?;
        let good = rows.iter().filter(|e| (0.5..=20.0).contains(&e.effectivity)).count();
        if let Some(e) = rows.last() {
            writeln!(summary, "final error e_A: {:e}", e.error)?;
        }
        writeln!(summary, "reference times with effectivity in [0.5, 20]: {good}/{}", rows.len())?;
    }
    write_summary(out, &summary)
}

/// One reference time of the effectivity study.
#[derive(Clone, Debug)]
pub struct ErrorRow {
    pub time: f64,
    pub error: f64,
    pub report: EstimatorReport,
    pub effectivity: f64,
}

pub fn effectivity_rows<P: ParametricProblem>(run: &AdaptiveRun, r: &ReferenceRun, p: &P) -> Result<Vec<ErrorRow>> {
    let mut tr = LegendreTransforms::new();
    r.times
        .iter()
        .zip(&r.snapshots)
        .map(|(&t, snap)| {
            let o = run
                .observations
                .iter()
                .find(|o| o.report.time == t)
                .with_context(|| format!("no observation at reference time {t}"))?;
            let error = approximation_error(snap, &o.approximation, p.space_mass(), &mut tr)?;
            Ok(ErrorRow { time: t, error, report: o.report.clone(), effectivity: o.report.total / error })
        })
        .collect()
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn writer(out: &Path, name: &str, header: &[&str]) -> Result<csv::Writer<File>> {
    let path = out.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    Ok(w)
}

fn write_summary(out: &Path, text: &str) -> Result<()> {
    fs::write(out.join("summary.txt"), text).context("writing summary.txt")
}

const REPORT_HEADER: [&str; 8] = [
    "pi_I [norm]",
    "pi_I_delta [norm]",
    "pi_delta [norm]",
    "pi_total [norm]",
    "eta_I [norm]",
    "n_colloc_I [points]",
    "n_colloc_Iplus [points]",
    "n_indicators [indices]",
];

fn report_fields(r: &EstimatorReport) -> Vec<String> {
    vec![
        num(r.interpolation),
        num(r.correction),
        num(r.timestepping),
        num(r.total),
        num(r.interp_tolerance),
        r.n_colloc.to_string(),
        r.n_colloc_enhanced.to_string(),
        r.indicators.len().to_string(),
    ]
}

fn write_run(run: &AdaptiveRun, out: &Path) -> Result<()> {
    let mut header = vec!["t [time]"];
    header.extend(REPORT_HEADER);
    let mut w = writer(out, "estimates.csv", &header)?;
    for o in &run.observations {
        let mut row = vec![num(o.report.time)];
        row.extend(report_fields(&o.report));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut header = vec!["t_start [time]", "t_end [time]", "accepted [bool]"];
    header.extend(REPORT_HEADER);
    let mut w = writer(out, "windows.csv", &header)?;
    for win in &run.windows {
        let mut row = vec![num(win.start), num(win.end), win.accepted.to_string()];
        row.extend(report_fields(&win.report));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = writer(
        out,
        "refinements.csv",
        &["t [time]", "marked [multi-indices]", "n_colloc_I [points]", "n_colloc_Iplus [points]"],
    )?;
    for e in &run.refinements {
        let marked: Vec<String> = e.marked.iter().map(|m| format!("({m})")).collect();
        w.write_record([num(e.time), marked.join(" "), e.n_colloc.to_string(), e.n_colloc_enhanced.to_string()])?;
    }
    w.flush()?;

    let mut w = writer(
        out,
        "cost.csv",
        &["t [time]", "approximation_steps [steps]", "estimator_steps [steps]", "naive_smolyak_steps [steps]"],
    )?;
    for c in &run.costs {
        w.write_record([num(c.time), c.approximation.to_string(), c.estimator.to_string(), c.naive.to_string()])?;
    }
    w.flush()?;

    fs::write(out.join("index_set.txt"), run.index_set.to_lines()).context("writing index_set.txt")
}

fn write_reference<P: ParametricProblem>(r: &ReferenceRun, p: &P, out: &Path) -> Result<()> {
    let mut w = writer(out, "reference.csv", &["t [time]", "mean_norm [norm]", "stddev_norm [norm]"])?;
    let mut tr = LegendreTransforms::new();
    for (t, s) in r.times.iter().zip(&r.snapshots) {
        let e = s.expansion(&mut tr)?;
        let mean = e.mean();
        let m = p.space_mass();
        let var_norm = e.norm(m).powi(2) - m.inner(&mean, &mean);
        w.write_record([num(*t), num(m.inner(&mean, &mean).max(0.0).sqrt()), num(var_norm.max(0.0).sqrt())])?;
    }
    w.flush()?;
    Ok(())
}

fn write_errors(rows: &[ErrorRow], out: &Path) -> Result<()> {
    let mut w = writer(
        out,
        "errors.csv",
        &[
            "t [time]",
            "e_A [norm]",
            "pi [norm]",
            "pi_I [norm]",
            "pi_I_delta [norm]",
            "pi_delta [norm]",
            "effectivity [ratio]",
        ],
    )?;
    for r in rows {
        w.write_record([
            num(r.time),
            num(r.error),
            num(r.report.total),
            num(r.report.interpolation),
            num(r.report.correction),
            num(r.report.timestepping),
            num(r.effectivity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn ode_demo(c: OdeConfig, out: &Path) -> Result<()> {
    let p = ComplexOde::new(c.epsilon, c.u0);
    let times = log_times(c.t_min, c.t_max, c.n_times);

    let mut w = writer(out, "ode_moments.csv", &["t [time]", "mean [-]", "stddev [-]"])?;
    for &t in &times {
        w.write_record([num(t), num(p.exact_mean(t)), num(p.exact_stddev(t))])?;
    }
    w.flush()?;

    let mut w = writer(out, "ode_moment_errors.csv", &["k [level exponent]", "t [time]", "mean_error [-]", "stddev_error [-]"])?;
    for k in 1..=c.k_max {
        for &t in &times {
            let (m, s) = interp_statistics(&p, k, t)?;
            w.write_record([k.to_string(), num(t), num((m - p.exact_mean(t)).abs()), num((s - p.exact_stddev(t)).abs())])?;
        }
    }
    w.flush()?;

    let itimes = log_times(c.t_min, c.interp_t_max, c.n_times);
    let mut w = writer(out, "ode_interpolation_error.csv", &["k [level exponent]", "t [time]", "l2_error [-]"])?;
    for k in 1..=c.k_max {
        for (t, e) in itimes.iter().zip(interp_error_study(&p, k, &itimes)?) {
            w.write_record([k.to_string(), num(*t), num(e)])?;
        }
    }
    w.flush()?;

    let mut summary = String::new();
    let mut w = writer(out, "ode_timestepping.csv", &["method [-]", "y [-]", "t [time]", "dt [time]", "global_error [-]"])?;
    for (name, stepping) in [("tr", Stepping::Fixed { dt: c.dt }), ("tr_ab2", Stepping::Adaptive { delta: c.delta })] {
        for y in [0.0, 1.0] {
            let r = timestepping_study(&p, y, stepping, c.final_time)?;
            let tr = &r.trajectory;
            for k in 1..tr.times.len() {
                w.write_record([
                    name.to_string(),
                    num(y),
                    num(tr.times[k]),
                    num(tr.times[k] - tr.times[k - 1]),
                    num(r.global_error[k]),
                ])?;
            }
            let max_err = r.global_error.iter().cloned().fold(0.0, f64::max);
            writeln!(summary, "{name} y={y}: {} steps, max global error {max_err:e}", r.step_count())?;
        }
    }
    w.flush()?;
    write_summary(out, &summary)
}
