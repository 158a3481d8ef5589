//! Experiment configuration: JSON parsing, defaults, overrides and
//! validation that reports every problem at once.

use crate::environment::valley::{schedule, Thresholds};
use crate::error::{Error, Result};
use crate::oracle::Alpha;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    RayKnight,
    Tanaka,
    Gamma,
    Sandwich,
    Localization,
    Ladder,
    Profile,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Simulate,
        Experiment::RayKnight,
        Experiment::Tanaka,
        Experiment::Gamma,
        Experiment::Sandwich,
        Experiment::Localization,
        Experiment::Ladder,
        Experiment::Profile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::RayKnight => "ray-knight",
            Experiment::Tanaka => "tanaka",
            Experiment::Gamma => "gamma",
            Experiment::Sandwich => "sandwich",
            Experiment::Localization => "localization",
            Experiment::Ladder => "ladder",
            Experiment::Profile => "profile",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    /// Experiments whose valley thresholds must be valid at every `v`.
    fn uses_thresholds(self) -> bool {
        matches!(self, Experiment::Gamma | Experiment::Sandwich | Experiment::Localization | Experiment::Profile)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the local-time level `r` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RPolicy {
    /// `r = 1`.
    Unit,
    /// `r = 1 / i_v`.
    IvScaled,
    /// `r = 1 / (I_v + 2 v^6 δ)`.
    BigIvScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionKind {
    Skeleton,
    Uniform,
}

/// Normalized configuration; every field is explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub base_seed: u64,
    pub replicates: u64,
    pub v_grid: Vec<f64>,
    pub env_step: f64,
    pub driver_step: f64,
    pub construction: ConstructionKind,
    pub bin_width: f64,
    pub delta: f64,
    pub r_policy: RPolicy,
    /// Schedule parameter; `c1..c3` derive from it unless given.
    pub c: Option<f64>,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Exponent slack in the four-interval widths.
    pub eps: f64,
    /// Ray–Knight: top level `a`, levels `y`, local-time level `r`.
    pub a: f64,
    pub y_grid: Vec<f64>,
    pub r: f64,
    /// Ray–Knight: paths for the barrier check of the dimension-0 process.
    pub barrier_replicates: u64,
    pub barrier: f64,
    pub n_max: usize,
    pub lambdas: Vec<f64>,
    pub slack: f64,
    pub alpha: Alpha,
    /// KS distance accepted by the Tanaka comparison.
    pub tolerance: f64,
    /// Ceiling for `P(not Γ)` at the largest `v`.
    pub ceiling: f64,
    /// Per-replicate floor (occupied fraction).
    pub floor: f64,
    /// Required frequency of replicates passing their check.
    pub min_frequency: f64,
    pub truncation_cap: f64,
    pub max_steps: u64,
    pub env_budget: usize,
    pub workers: usize,
    pub output: Option<String>,
}

/// Mirror of [`ExperimentConfig`] with every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    base_seed: Option<u64>,
    replicates: Option<u64>,
    v_grid: Option<Vec<f64>>,
    env_step: Option<f64>,
    driver_step: Option<f64>,
    construction: Option<ConstructionKind>,
    bin_width: Option<f64>,
    delta: Option<f64>,
    r_policy: Option<RPolicy>,
    c: Option<Option<f64>>,
    c0: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    c3: Option<f64>,
    eps: Option<f64>,
    a: Option<f64>,
    y_grid: Option<Vec<f64>>,
    r: Option<f64>,
    barrier_replicates: Option<u64>,
    barrier: Option<f64>,
    n_max: Option<usize>,
    lambdas: Option<Vec<f64>>,
    slack: Option<f64>,
    alpha: Option<Alpha>,
    tolerance: Option<f64>,
    ceiling: Option<f64>,
    floor: Option<f64>,
    min_frequency: Option<f64>,
    truncation_cap: Option<f64>,
    max_steps: Option<u64>,
    env_budget: Option<usize>,
    workers: Option<usize>,
    output: Option<Option<String>>,
}

pub const KEYS: [&str; 34] = [
    "experiment",
    "base_seed",
    "replicates",
    "v_grid",
    "env_step",
    "driver_step",
    "construction",
    "bin_width",
    "delta",
    "r_policy",
    "c",
    "c0",
    "c1",
    "c2",
    "c3",
    "eps",
    "a",
    "y_grid",
    "r",
    "barrier_replicates",
    "barrier",
    "n_max",
    "lambdas",
    "slack",
    "alpha",
    "tolerance",
    "ceiling",
    "floor",
    "min_frequency",
    "truncation_cap",
    "max_steps",
    "env_budget",
    "workers",
    "output",
];

const REQUIRED: [&str; 2] = ["experiment", "base_seed"];

impl ExperimentConfig {
    /// Defaults for an experiment. The base seed is 0 here but is a
    /// required field of every config file.
    pub fn defaults(experiment: Experiment) -> Self {
        let (c1, c2, c3) = (2.0, 2.0, 2.0);
        let mut cfg = ExperimentConfig {
            experiment,
            base_seed: 0,
            replicates: 100,
            v_grid: vec![8.0],
            env_step: 0.05,
            driver_step: 1e-4,
            construction: ConstructionKind::Skeleton,
            bin_width: 0.05,
            delta: 0.1,
            r_policy: RPolicy::IvScaled,
            c: None,
            c0: 1.0,
            c1,
            c2,
            c3,
            eps: 0.1,
            a: 1.0,
            y_grid: vec![0.25, 0.5, 0.75],
            r: 1.0,
            barrier_replicates: 20_000,
            barrier: 2.0,
            n_max: 6,
            lambdas: vec![4.0, 8.0],
            slack: 10.0,
            alpha: Alpha::P01,
            tolerance: 0.05,
            ceiling: 1.0,
            floor: 0.9,
            min_frequency: 0.9,
            truncation_cap: 0.2,
            max_steps: crate::diffusion::DEFAULT_MAX_STEPS,
            env_budget: crate::environment::DEFAULT_BUDGET,
            workers: 0,
            output: None,
        };
        match experiment {
            Experiment::Simulate => {
                cfg.v_grid = vec![6.0];
                cfg.replicates = 20;
            }
            Experiment::RayKnight => {
                cfg.replicates = 10_000;
            }
            Experiment::Tanaka => {
                cfg.v_grid = vec![4.0];
                cfg.replicates = 5000;
                cfg.env_step = 1e-3;
            }
            Experiment::Gamma => {
                cfg.v_grid = vec![10.0, 14.0];
                cfg.replicates = 2000;
                cfg.env_step = 0.01;
                cfg.c = Some(21.0);
                (cfg.c1, cfg.c2, cfg.c3) = schedule(21.0);
            }
            Experiment::Sandwich => {
                cfg.v_grid = vec![6.0, 8.0, 10.0];
                cfg.replicates = 300;
                cfg.min_frequency = 0.85;
            }
            Experiment::Localization => {
                cfg.replicates = 300;
            }
            Experiment::Ladder => {
                cfg.replicates = 2000;
                cfg.env_step = 0.01;
                cfg.env_budget = 4_000_000;
            }
            Experiment::Profile => {
                cfg.v_grid = vec![6.0, 8.0, 10.0];
                cfg.replicates = 500;
                cfg.delta = 0.3;
                (cfg.c1, cfg.c2, cfg.c3) = (0.5, 0.5, 0.5);
                cfg.min_frequency = 0.8;
            }
        }
        cfg
    }

    /// Valley thresholds at `v`.
    pub fn thresholds(&self, v: f64) -> Result<Thresholds> {
        Thresholds::new(v, self.c1, self.c2, self.c3)
    }

    /// Every problem with the normalized values.
    pub fn problems(&self) -> Vec<String> {
        let mut e = Vec::new();
        let mut positive = |name: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                e.push(format!("{name} must be positive and finite, got {x}"));
            }
        };
        positive("env_step", self.env_step);
        positive("driver_step", self.driver_step);
        positive("bin_width", self.bin_width);
        positive("a", self.a);
        positive("r", self.r);
        positive("barrier", self.barrier);
        positive("slack", self.slack);
        positive("tolerance", self.tolerance);
        positive("eps", self.eps);
        if self.replicates < 1 {
            e.push("replicates must be at least 1".into());
        }
        if self.v_grid.is_empty() {
            e.push("v_grid must not be empty".into());
        }
        if self.v_grid.iter().any(|v| !(v.is_finite() && *v > 1.0)) {
            e.push(format!("v_grid values must be finite and > 1, got {:?}", self.v_grid));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            e.push(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        for (name, x) in [
            ("ceiling", self.ceiling),
            ("floor", self.floor),
            ("min_frequency", self.min_frequency),
            ("truncation_cap", self.truncation_cap),
        ] {
            if !(0.0..=1.0).contains(&x) {
                e.push(format!("{name} must lie in [0, 1], got {x}"));
            }
        }
        if self.max_steps == 0 || self.env_budget == 0 {
            e.push("max_steps and env_budget must be positive".into());
        }
        match self.experiment {
            Experiment::RayKnight => {
                if self.y_grid.is_empty() || self.y_grid.iter().any(|&y| !(y > 0.0 && y <= self.a)) {
                    e.push(format!("y_grid values must lie in (0, a] with a = {}, got {:?}", self.a, self.y_grid));
                }
                if self.barrier <= 1.0 {
                    e.push(format!("barrier must exceed the start 1, got {}", self.barrier));
                }
            }
            Experiment::Gamma if self.v_grid.len() < 2 => {
                e.push("gamma needs at least two v_grid values".into());
            }
            Experiment::Ladder if self.n_max < 3 => {
                e.push(format!("n_max must be at least 3, got {}", self.n_max));
            }
            Experiment::Ladder if self.lambdas.iter().any(|l| !(*l > 0.0)) => {
                e.push("lambdas must be positive".into());
            }
            _ => {}
        }
        if self.experiment.uses_thresholds() {
            for &v in &self.v_grid {
                if let Err(err) = Thresholds::new(v, self.c1, self.c2, self.c3) {
                    e.push(format!("v_grid value {v}: {}", err_text(&err)));
                }
            }
        }
        e
    }
}

fn err_text(e: &Error) -> String {
    match e {
        Error::InvalidConfig(s) | Error::InvalidParams(s) | Error::Domain(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parse `key=value`; the value is JSON when it parses, a string otherwise.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("override `{s}` is not of the form key=value")))?;
    let k = k.trim().to_string();
    let v = v.trim();
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k, value))
}

/// Parse, fill defaults, apply overrides and validate. Every problem is
/// listed in the returned error, one per line.
pub fn validate_config(text: &str, overrides: &[(String, Value)]) -> Result<ExperimentConfig> {
    let mut errors = Vec::new();
    let mut map = if text.trim().is_empty() {
        Map::new()
    } else {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(Error::InvalidConfig("config must be a JSON object".into())),
            Err(e) => return Err(Error::InvalidConfig(format!("config is not valid JSON: {e}"))),
        }
    };
    for (k, v) in overrides {
        map.insert(k.clone(), v.clone());
    }
    let mut clean = Map::new();
    for (k, v) in &map {
        if !KEYS.contains(&k.as_str()) {
            errors.push(format!("unknown key `{k}`"));
            continue;
        }
        let mut one = Map::new();
        one.insert(k.clone(), v.clone());
        match serde_json::from_value::<RawConfig>(Value::Object(one)) {
            Ok(_) => {
                clean.insert(k.clone(), v.clone());
            }
            Err(e) => errors.push(format!("`{k}`: {e}")),
        }
    }
    for k in REQUIRED {
        if !map.contains_key(k) {
            errors.push(format!("missing required field `{k}`"));
        }
    }
    let raw: RawConfig = serde_json::from_value(Value::Object(clean)).unwrap_or_default();
    let experiment = match raw.experiment.as_deref() {
        Some(name) => match Experiment::from_name(name) {
            Some(e) => Some(e),
            None => {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                errors.push(format!("`experiment`: unknown experiment `{name}`, expected one of {names:?}"));
                None
            }
        },
        None => None,
    };
    let Some(experiment) = experiment else {
        return Err(Error::InvalidConfig(errors.join("\n")));
    };
    let cfg = normalize(experiment, raw);
    errors.extend(cfg.problems());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::InvalidConfig(errors.join("\n")))
    }
}

fn normalize(experiment: Experiment, raw: RawConfig) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(experiment);
    macro_rules! take {
        ($($f:ident),*) => { $( if let Some(x) = raw.$f { cfg.$f = x; } )* };
    }
    take!(
        base_seed, replicates, v_grid, env_step, driver_step, construction, bin_width, delta, r_policy, c0,
        eps, a, y_grid, r, barrier_replicates, barrier, n_max, lambdas, slack, alpha, tolerance, ceiling,
        floor, min_frequency, truncation_cap, max_steps, env_budget, workers, output
    );
    if let Some(c) = raw.c {
        cfg.c = c;
        if let Some(c) = c {
            (cfg.c1, cfg.c2, cfg.c3) = schedule(c);
        }
    }
    take!(c1, c2, c3);
    cfg
}

/// Read and validate a config file.
pub fn load_config(path: &std::path::Path, overrides: &[(String, Value)]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read config {}: {e}", path.display())))?;
    validate_config(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_lists_every_required_field() {
        let e = validate_config("", &[]).unwrap_err().to_string();
        for k in REQUIRED {
            assert!(e.contains(k), "{e}");
        }
    }

    #[test]
    fn ray_knight_defaults() {
        let c = validate_config(r#"{"experiment": "ray-knight", "base_seed": 1}"#, &[]).unwrap();
        assert_eq!(c.replicates, 10_000);
        assert_eq!(c.a, 1.0);
        assert_eq!(c.driver_step, 1e-4);
    }

    #[test]
    fn invalid_v_shows_inequality() {
        let e = validate_config(r#"{"experiment": "gamma", "base_seed": 1, "c": 21, "v_grid": [3, 4]}"#, &[])
            .unwrap_err()
            .to_string();
        assert!(e.contains("v_grid value 3"), "{e}");
        assert!(e.contains("50*log(3)") && e.contains("must be > 0"), "{e}");
    }

    #[test]
    fn all_problems_in_one_pass() {
        let e = validate_config(
            r#"{"experiment": "sandwich", "base_seed": -1, "bogus": 1, "delta": 2, "replicates": "x"}"#,
            &[],
        )
        .unwrap_err()
        .to_string();
        assert!(e.contains("bogus") && e.contains("base_seed") && e.contains("delta") && e.contains("replicates"), "{e}");
    }

    #[test]
    fn overrides_apply_after_file() {
        let o = vec![parse_override("replicates=7").unwrap(), parse_override("v_grid=[6,7]").unwrap()];
        let c = validate_config(r#"{"experiment": "sandwich", "base_seed": 3, "replicates": 2}"#, &o).unwrap();
        assert_eq!(c.replicates, 7);
        assert_eq!(c.v_grid, vec![6.0, 7.0]);
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn normalized_round_trip() {
        for e in Experiment::ALL {
            let text = format!(r#"{{"experiment": "{}", "base_seed": 11, "c3": 1.5}}"#, e.name());
            let c = match validate_config(&text, &[]) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let again = validate_config(&serde_json::to_string(&c).unwrap(), &[]).unwrap();
            assert_eq!(c, again);
        }
    }

    #[test]
    fn c_schedule_and_explicit_values() {
        let c = validate_config(r#"{"experiment": "simulate", "base_seed": 1, "c": 1}"#, &[]).unwrap();
        assert_eq!((c.c1, c.c2, c.c3), (10.0, 7.0, 3.0));
        let c = validate_config(r#"{"experiment": "simulate", "base_seed": 1, "c": 1, "c1": 0.5}"#, &[]).unwrap();
        assert_eq!((c.c1, c.c2, c.c3), (0.5, 7.0, 3.0));
    }
}
