//! Seeded, replicated Monte Carlo experiments and their reports.
//!
//! Replicate `k` at grid index `i` uses global index `i * replicates + k`;
//! every generator it touches is `rng_for(base_seed, index, stream)`.
//! Replicates run on a rayon pool and are collected in index order, so a
//! report does not depend on the number of workers.

pub mod config;
mod ladder;
mod localization;
mod profile;
mod ray_knight;
pub mod report;
mod sandwich;
mod simulate;
mod tanaka;
mod valleys;

pub use config::{
    load_config, parse_override, validate_config, ConstructionKind, Experiment, ExperimentConfig, RPolicy,
};
pub use ladder::run_ladder_stats;
pub use localization::run_localization;
pub use profile::run_profile;
pub use ray_knight::{run_bessel_barrier, run_ray_knight};
pub use report::{ExperimentReport, PerV, SeedLedger, Truncation};
pub use sandwich::run_sandwich;
pub use simulate::run_simulate;
pub use tanaka::run_tanaka;
pub use valleys::run_gamma_probability;

use crate::diffusion::{
    Construction, DiffusionRealization, Estimator, LocalTimeField, SkeletonRun, Stop,
};
use crate::environment::{Environment, SandwichIntegrals};
use crate::error::{Error, Result};
use crate::oracle::TestResult;
use crate::seed::{rng_for, Stream};
use rayon::prelude::*;
use std::time::Instant;

/// Run the configured experiment on a pool of `workers` threads (0 picks
/// the rayon default).
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems.join("\n")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let mut report = pool.install(|| match cfg.experiment {
        Experiment::Simulate => run_simulate(cfg),
        Experiment::RayKnight => run_ray_knight(cfg),
        Experiment::Tanaka => run_tanaka(cfg),
        Experiment::Gamma => run_gamma_probability(cfg),
        Experiment::Sandwich => run_sandwich(cfg),
        Experiment::Localization => run_localization(cfg),
        Experiment::Ladder => run_ladder_stats(cfg),
        Experiment::Profile => run_profile(cfg),
    })?;
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// `f(global_index)` for every replicate of grid index `vi`, in order.
pub(crate) fn replicates<T: Send>(
    cfg: &ExperimentConfig,
    vi: usize,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let base = vi as u64 * cfg.replicates;
    (0..cfg.replicates).into_par_iter().map(|k| f(base + k)).collect()
}

/// Budget exhaustion becomes `None`; other errors pass through.
pub(crate) fn horizon<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::Horizon(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn environment(cfg: &ExperimentConfig, index: u64) -> Result<Environment> {
    Environment::brownian_for(cfg.base_seed, index, cfg.env_step, cfg.env_budget)
}

impl ExperimentConfig {
    pub fn construction(&self) -> Construction {
        match self.construction {
            ConstructionKind::Skeleton => Construction::Skeleton,
            ConstructionKind::Uniform => Construction::Uniform { driver_step: self.driver_step },
        }
    }

    /// Local-time level `r` under the configured policy.
    pub fn r_value(&self, v: f64, ints: &SandwichIntegrals) -> f64 {
        match self.r_policy {
            RPolicy::Unit => 1.0,
            RPolicy::IvScaled => 1.0 / ints.min,
            RPolicy::BigIvScaled => 1.0 / (ints.sum + sandwich_slack(v, self.delta)),
        }
    }
}

/// The `2 v^6 δ` term of the lower sandwich bound.
pub fn sandwich_slack(v: f64, delta: f64) -> f64 {
    2.0 * v.powi(6) * delta
}

pub(crate) fn realization(cfg: &ExperimentConfig, env: Environment, index: u64) -> Result<DiffusionRealization> {
    Ok(DiffusionRealization::new(env, rng_for(cfg.base_seed, index, Stream::Driver), cfg.construction())?
        .with_max_steps(cfg.max_steps))
}

/// A realization driven up to a fixed time, for repeated queries.
#[allow(clippy::large_enum_variant)]
pub(crate) enum AtTime {
    Skeleton(SkeletonRun),
    Uniform { real: Box<DiffusionRealization>, t: f64, bin_width: f64 },
}

impl AtTime {
    /// `None` when the step or environment budget runs out first.
    pub fn drive(mut real: DiffusionRealization, t: f64, bin_width: f64) -> Result<Option<Self>> {
        match real.construction() {
            Construction::Skeleton => {
                let mut run = real.skeleton()?;
                let o = run.advance(&Stop::at_time(t));
                Ok(o.reason.reached().then_some(AtTime::Skeleton(run)))
            }
            Construction::Uniform { .. } => {
                if horizon(real.diffusion_value(t))?.is_none() {
                    return Ok(None);
                }
                Ok(Some(AtTime::Uniform { real: Box::new(real), t, bin_width }))
            }
        }
    }

    pub fn env(&self) -> &Environment {
        match self {
            AtTime::Skeleton(run) => run.env(),
            AtTime::Uniform { real, .. } => real.env(),
        }
    }

    pub fn l_star(&mut self) -> Result<f64> {
        match self {
            AtTime::Skeleton(run) => Ok(run.l_star()),
            AtTime::Uniform { real, t, bin_width } => real.l_star(*t, *bin_width),
        }
    }

    pub fn occupation(&mut self, lo: f64, hi: f64) -> Result<f64> {
        match self {
            AtTime::Skeleton(run) => Ok(run.occupation(lo, hi)),
            AtTime::Uniform { real, t, .. } => real.occupation(*t, lo, hi),
        }
    }

    pub fn occupation_of(&mut self, intervals: &[(f64, f64)]) -> Result<f64> {
        let mut total = 0.0;
        for &(lo, hi) in intervals {
            total += self.occupation(lo, hi)?;
        }
        Ok(total)
    }

    pub fn field(&mut self, estimator: Estimator, bin_width: f64) -> Result<LocalTimeField> {
        match self {
            AtTime::Skeleton(run) => run.field(bin_width, estimator),
            AtTime::Uniform { real, t, .. } => real.local_time_field(*t, bin_width, estimator),
        }
    }
}

/// A KS result, or a failing line when too few replicates survived to run it.
pub(crate) fn ks_named(name: String, r: Result<TestResult>) -> Result<TestResult> {
    match r {
        Ok(t) => Ok(TestResult { name, ..t }),
        Err(Error::InsufficientData { got, .. }) => Ok(TestResult::new(name, f64::NAN, f64::NAN, got, "insufficient data")),
        Err(e) => Err(e),
    }
}

/// Nondecreasing along the grid.
pub(crate) fn nondecreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0])
}

/// Finite entries only.
pub(crate) fn finite(xs: impl IntoIterator<Item = f64>) -> Vec<f64> {
    xs.into_iter().filter(|x| x.is_finite()).collect()
}

pub(crate) fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((v.len() - 1) as f64 * q).round() as usize;
    v[k]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_and_trends() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert!(quantile(&[], 0.5).is_nan());
        assert!(nondecreasing(&[0.1, 0.1, 0.3]));
        assert!(!nondecreasing(&[0.2, 0.1]));
        assert_eq!(finite([1.0, f64::NAN, 2.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn replicate_order_is_independent_of_workers() {
        let cfg = ExperimentConfig { replicates: 64, ..ExperimentConfig::defaults(Experiment::Simulate) };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let f = |i: u64| Ok(i * i);
        let a = one.install(|| replicates(&cfg, 1, f)).unwrap();
        let b = four.install(|| replicates(&cfg, 1, f)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], 64 * 64);
    }
}
