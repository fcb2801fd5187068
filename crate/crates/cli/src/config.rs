//! Experiment configuration: TOML in, a fully validated [`ExperimentConfig`]
//! out, or every violation found.

use std::fmt;
use std::path::{Path, PathBuf};

use adaptsc_core::analytic_ode::log_times;
use adaptsc_core::driver::{AdaptiveConfig, GeMode, InitMode, Retention};
use serde::Deserialize;

/// One bad key, reported by its dotted path.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

/// A config that could not be read or did not validate.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    fn single(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { violations: vec![Violation { key: key.into(), message: message.into() }] }
    }

    pub fn mentions(&self, key: &str) -> bool {
        self.violations.iter().any(|v| v.key == key)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration")?;
        for v in &self.violations {
            write!(f, "\n  {}: {}", v.key, v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    problem: Option<RawProblem>,
    ode: Option<RawOde>,
    adaptive: Option<RawAdaptive>,
    reference: Option<RawReference>,
}

#[derive(Debug, Default, Deserialize)]
struct RawProblem {
    grid_parameter: Option<u32>,
    epsilon: Option<f64>,
    hot_wall_rate: Option<f64>,
    wind: Option<RawWind>,
    kl: Option<RawKl>,
}

#[derive(Debug, Default, Deserialize)]
struct RawWind {
    variant: Option<String>,
    sigma: Option<f64>,
    sigma0_sq: Option<f64>,
    corr_length: Option<f64>,
    d: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
struct RawKl {
    n_grid: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
struct RawOde {
    epsilon: Option<f64>,
    u0: Option<f64>,
    final_time: Option<f64>,
    dt: Option<f64>,
    delta: Option<f64>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    interp_t_max: Option<f64>,
    n_times: Option<usize>,
    k_max: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
struct RawAdaptive {
    delta: Option<f64>,
    delta0: Option<f64>,
    c_safety: Option<f64>,
    theta: Option<f64>,
    dtau0: Option<f64>,
    c_plus: Option<f64>,
    c_minus: Option<f64>,
    final_time: Option<f64>,
    ge_mode: Option<String>,
    init_mode: Option<String>,
    retention: Option<String>,
    max_level: Option<u32>,
    observation_times: Option<Vec<f64>>,
    schedule: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
struct RawReference {
    total_degree: Option<u32>,
    delta: Option<f64>,
    times: Option<Vec<f64>>,
    n_times: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WindConfig {
    FourQuadrant { sigma: f64 },
    Kl { sigma0_sq: f64, corr_length: f64, d: usize, n_grid: usize },
}

/// The double-glazing problem.
#[derive(Clone, Debug, PartialEq)]
pub struct FemConfig {
    pub grid_parameter: u32,
    pub epsilon: f64,
    pub hot_wall_rate: f64,
    pub wind: WindConfig,
}

/// The scalar complex ODE and its demo study.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeConfig {
    pub epsilon: f64,
    pub u0: f64,
    /// Horizon of the timestepping study.
    pub final_time: f64,
    /// Fixed TR step.
    pub dt: f64,
    /// TR-AB2 tolerance.
    pub delta: f64,
    /// Statistics are sampled at `n_times` log-spaced times in `[t_min, t_max]`.
    pub t_min: f64,
    pub t_max: f64,
    /// Interpolation errors use `[t_min, interp_t_max]`.
    pub interp_t_max: f64,
    pub n_times: usize,
    pub k_max: u32,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            u0: 1.0,
            final_time: 1e3,
            dt: 0.1,
            delta: 1e-7,
            t_min: 0.1,
            t_max: 100.0,
            interp_t_max: 20.0,
            n_times: 50,
            k_max: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceConfig {
    /// `I_ref` is the total-degree set of this weight.
    pub total_degree: u32,
    pub delta: f64,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub problem: Option<FemConfig>,
    pub ode: Option<OdeConfig>,
    pub adaptive: Option<AdaptiveConfig>,
    pub reference: Option<ReferenceConfig>,
}

impl ExperimentConfig {
    /// Hot-wall rate of whichever problem the adaptive run uses.
    pub fn hot_wall_rate(&self) -> f64 {
        self.problem.as_ref().map_or(0.1, |p| p.hot_wall_rate)
    }
}

/// Reads and validates a config file.
pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::single("config", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

/// Validates config text; every violation is collected.
pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut unknown = Vec::new();
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::single("config", e.to_string()))?;
    // Optional tables show up as `?` segments in the ignored-key path.
    let raw: RawConfig = serde_ignored::deserialize(de, |path| {
        unknown.push(path.to_string().split('.').filter(|s| *s != "?").collect::<Vec<_>>().join("."))
    })
        .map_err(|e| ConfigError::single("config", e.to_string()))?;
    let mut v = Checker::default();
    for k in unknown {
        v.push(k, "unknown key");
    }
    let problem = raw.problem.map(|p| fem(&mut v, p));
    let ode = raw.ode.map(|o| ode(&mut v, o));
    let tau = problem.as_ref().map_or(0.1, |p| p.hot_wall_rate);
    let adaptive = raw.adaptive.map(|a| adaptive(&mut v, a, tau));
    let reference = raw.reference.map(|r| reference(&mut v, r, adaptive.as_ref(), tau));
    if v.0.is_empty() {
        Ok(ExperimentConfig { output_dir: raw.output_dir, seed: raw.seed.unwrap_or(0), problem, ode, adaptive, reference })
    } else {
        Err(ConfigError { violations: v.0 })
    }
}

#[derive(Default)]
struct Checker(Vec<Violation>);

impl Checker {
    fn push(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation { key: key.into(), message: message.into() });
    }

    fn require(&mut self, key: &str, ok: bool, message: &str) {
        if !ok {
            self.push(key, message);
        }
    }

    fn required<T: Default>(&mut self, key: &str, value: Option<T>) -> T {
        value.unwrap_or_else(|| {
            self.push(key, "required");
            T::default()
        })
    }
}

fn fem(v: &mut Checker, p: RawProblem) -> FemConfig {
    let grid_parameter = p.grid_parameter.unwrap_or(3);
    v.require("problem.grid_parameter", (1..=8).contains(&grid_parameter), "must lie in 1..=8");
    let epsilon = p.epsilon.unwrap_or(0.1);
    v.require("problem.epsilon", epsilon > 0.0, "must be positive");
    let hot_wall_rate = p.hot_wall_rate.unwrap_or(0.1);
    v.require("problem.hot_wall_rate", hot_wall_rate > 0.0, "must be positive");
    let w = p.wind.unwrap_or_default();
    let n_grid = p.kl.and_then(|k| k.n_grid);
    let wind = match w.variant.as_deref().unwrap_or("four_quadrant") {
        "four_quadrant" => {
            for (key, set) in [
                ("problem.wind.sigma0_sq", w.sigma0_sq.is_some()),
                ("problem.wind.corr_length", w.corr_length.is_some()),
                ("problem.kl.n_grid", n_grid.is_some()),
            ] {
                v.require(key, !set, "only used by the kl wind");
            }
            v.require("problem.wind.d", w.d.map_or(true, |d| d == 4), "the four-quadrant wind has d = 4");
            let sigma = w.sigma.unwrap_or(0.5);
            v.require("problem.wind.sigma", sigma >= 0.0, "must be nonnegative");
            WindConfig::FourQuadrant { sigma }
        }
        "kl" => {
            v.require("problem.wind.sigma", w.sigma.is_none(), "only used by the four_quadrant wind");
            let sigma0_sq = w.sigma0_sq.unwrap_or(5.0);
            v.require("problem.wind.sigma0_sq", sigma0_sq > 0.0, "must be positive");
            let corr_length = w.corr_length.unwrap_or(1.0);
            v.require("problem.wind.corr_length", corr_length > 0.0, "must be positive");
            let n_grid = n_grid.unwrap_or(64);
            v.require("problem.kl.n_grid", (2..=512).contains(&n_grid), "must lie in 2..=512");
            let d = w.d.unwrap_or(8);
            v.require("problem.wind.d", d >= 1 && d <= n_grid * n_grid, "must lie in 1..=n_grid²");
            WindConfig::Kl { sigma0_sq, corr_length, d, n_grid }
        }
        other => {
            v.push("problem.wind.variant", format!("unknown variant {other:?}; expected four_quadrant or kl"));
            WindConfig::FourQuadrant { sigma: 0.5 }
        }
    };
    FemConfig { grid_parameter, epsilon, hot_wall_rate, wind }
}

fn ode(v: &mut Checker, o: RawOde) -> OdeConfig {
    let d = OdeConfig::default();
    let c = OdeConfig {
        epsilon: o.epsilon.unwrap_or(d.epsilon),
        u0: o.u0.unwrap_or(d.u0),
        final_time: o.final_time.unwrap_or(d.final_time),
        dt: o.dt.unwrap_or(d.dt),
        delta: o.delta.unwrap_or(d.delta),
        t_min: o.t_min.unwrap_or(d.t_min),
        t_max: o.t_max.unwrap_or(d.t_max),
        interp_t_max: o.interp_t_max.unwrap_or(d.interp_t_max),
        n_times: o.n_times.unwrap_or(d.n_times),
        k_max: o.k_max.unwrap_or(d.k_max),
    };
    v.require("ode.epsilon", c.epsilon >= 0.0, "must be nonnegative");
    v.require("ode.u0", c.u0.is_finite(), "must be finite");
    v.require("ode.final_time", c.final_time > 0.0, "must be positive");
    v.require("ode.dt", c.dt > 0.0, "must be positive");
    v.require("ode.delta", c.delta > 0.0, "must be positive");
    v.require("ode.t_min", c.t_min > 0.0, "must be positive");
    v.require("ode.t_max", c.t_max > c.t_min, "must exceed ode.t_min");
    v.require("ode.interp_t_max", c.interp_t_max > c.t_min, "must exceed ode.t_min");
    v.require("ode.n_times", c.n_times >= 2, "must be at least 2");
    v.require("ode.k_max", (1..=9).contains(&c.k_max), "must lie in 1..=9");
    c
}

fn parse_mode<T: Copy>(v: &mut Checker, key: &str, value: Option<String>, default: T, options: &[(&str, T)]) -> T {
    let Some(s) = value else { return default };
    match options.iter().find(|(name, _)| *name == s) {
        Some((_, m)) => *m,
        None => {
            let names: Vec<&str> = options.iter().map(|o| o.0).collect();
            v.push(key, format!("unknown value {s:?}; expected one of {}", names.join(", ")));
            default
        }
    }
}

fn adaptive(v: &mut Checker, a: RawAdaptive, tau: f64) -> AdaptiveConfig {
    let delta = v.required("adaptive.delta", a.delta);
    let final_time = v.required("adaptive.final_time", a.final_time);
    let mut c = AdaptiveConfig::new(delta, final_time, a.dtau0.unwrap_or(AdaptiveConfig::default_dtau0(tau)));
    c.delta0 = a.delta0.unwrap_or(c.delta0);
    c.c_safety = a.c_safety.unwrap_or(c.c_safety);
    c.theta = a.theta.unwrap_or(c.theta);
    c.c_plus = a.c_plus.unwrap_or(c.c_plus);
    c.c_minus = a.c_minus.unwrap_or(c.c_minus);
    c.max_level = a.max_level.unwrap_or(c.max_level);
    c.ge_mode = parse_mode(
        v,
        "adaptive.ge_mode",
        a.ge_mode,
        c.ge_mode,
        &[("per_point", GeMode::PerPoint), ("shared_at_mean", GeMode::SharedAtMean)],
    );
    c.init_mode = parse_mode(
        v,
        "adaptive.init_mode",
        a.init_mode,
        c.init_mode,
        &[("interpolate", InitMode::Interpolate), ("reintegrate", InitMode::Reintegrate)],
    );
    c.retention = parse_mode(
        v,
        "adaptive.retention",
        a.retention,
        c.retention,
        &[("observations", Retention::Observations), ("full", Retention::Full)],
    );
    c.observation_times = a.observation_times.unwrap_or_default();
    c.schedule = a.schedule;
    if a.delta.is_some() && a.final_time.is_some() {
        for (k, m) in c.violations() {
            v.push(format!("adaptive.{k}"), m);
        }
    }
    c
}

fn reference(v: &mut Checker, r: RawReference, adaptive: Option<&AdaptiveConfig>, tau: f64) -> ReferenceConfig {
    let total_degree = r.total_degree.unwrap_or(3);
    v.require("reference.total_degree", total_degree <= 12, "must be at most 12");
    let delta = r.delta.unwrap_or(1e-6);
    v.require("reference.delta", delta > 0.0, "must be positive");
    let times = match (r.times, r.n_times) {
        (Some(t), None) => t,
        (Some(_), Some(_)) => {
            v.push("reference.n_times", "give either reference.times or reference.n_times");
            Vec::new()
        }
        (None, n) => {
            let n = n.unwrap_or(50);
            v.require("reference.n_times", n >= 1, "must be positive");
            match adaptive {
                Some(a) if a.final_time > AdaptiveConfig::default_dtau0(tau) && n >= 1 => {
                    log_times(AdaptiveConfig::default_dtau0(tau), a.final_time, n)
                }
                _ => {
                    v.push("reference.times", "needed when there is no valid adaptive block to derive them from");
                    Vec::new()
                }
            }
        }
    };
    if let Some(a) = adaptive {
        v.require(
            "reference.times",
            times.iter().all(|t| *t >= 0.0 && *t <= a.final_time),
            "must lie in [0, adaptive.final_time]",
        );
    }
    v.require("reference.times", times.windows(2).all(|w| w[1] > w[0]), "must be strictly increasing");
    ReferenceConfig { total_degree, delta, times }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\n[adaptive]\ndelta = 1e-3\nfinal_time = 10.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        let a = c.adaptive.unwrap();
        assert_eq!((a.c_plus, a.c_minus, a.theta, a.c_safety), (1.2, 0.5, 0.1, 10.0));
        assert!((a.dtau0 - 0.1 * (1.0f64 / 0.9).ln()).abs() < 1e-15);
        assert_eq!(c.problem.unwrap().wind, WindConfig::FourQuadrant { sigma: 0.5 });
        assert!(c.reference.is_none());
    }

    #[test]
    fn theta_out_of_range_is_named() {
        let e = parse(&format!("{MINIMAL}theta = 1.5\n")).unwrap_err();
        assert!(e.mentions("adaptive.theta"), "{e}");
    }

    #[test]
    fn all_violations_are_reported() {
        let text = "[problem]\nepsilon = -1\nbogus = 2\n[problem.wind]\nvariant = \"kl\"\nsigma = 0.5\n[adaptive]\ndelta = 1e-3\nfinal_time = 1.0\ntheta = 2\nc_minus = 3\n";
        let e = parse(text).unwrap_err();
        for key in ["problem.epsilon", "problem.bogus", "problem.wind.sigma", "adaptive.theta", "adaptive.c_minus"] {
            assert!(e.mentions(key), "{key} missing from {e}");
        }
    }

    #[test]
    fn missing_required_keys() {
        let e = parse("[adaptive]\ntheta = 0.2\n").unwrap_err();
        assert!(e.mentions("adaptive.delta") && e.mentions("adaptive.final_time"));
    }

    #[test]
    fn reference_times_default_to_fifty() {
        let c = parse(&format!("{MINIMAL}[reference]\n")).unwrap();
        let r = c.reference.unwrap();
        assert_eq!(r.times.len(), 50);
        assert_eq!((r.total_degree, r.delta), (3, 1e-6));
        assert_eq!(*r.times.last().unwrap(), 10.0);
    }

    #[test]
    fn bad_enum_values() {
        let e = parse(&format!("{MINIMAL}init_mode = \"guess\"\n")).unwrap_err();
        assert!(e.mentions("adaptive.init_mode"));
    }
}
