//! Occupation normalization of both estimators on random realizations.

use super::{environment, finite, realization, replicates, AtTime, ExperimentConfig, ExperimentReport, PerV};
use crate::diffusion::Estimator;
use crate::error::Result;
use crate::oracle::{mean_var, TestResult};

/// Relative tolerance standing in for "exact" on the direct estimator.
pub const DIRECT_TOLERANCE: f64 = 1e-9;
pub const FORMULA_TOLERANCE: f64 = 0.01;

struct Rep {
    direct: f64,
    formula: f64,
    l_star: f64,
    bins: usize,
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut per_v = Vec::new();
    let mut tests = Vec::new();
    let (mut truncated, mut total) = (0, 0);
    for (vi, &v) in cfg.v_grid.iter().enumerate() {
        let t = v.exp();
        let reps = replicates(cfg, vi, |i| {
            let env = environment(cfg, i)?;
            let Some(mut at) = AtTime::drive(realization(cfg, env, i)?, t, cfg.bin_width)? else {
                return Ok(None);
            };
            let direct = at.field(Estimator::Direct, cfg.bin_width)?;
            let formula = at.field(Estimator::Formula, cfg.bin_width)?;
            Ok(Some(Rep {
                direct: (direct.total() - t).abs() / t,
                formula: (formula.total() - t).abs() / t,
                l_star: at.l_star()?,
                bins: direct.bins.len(),
            }))
        })?;
        total += reps.len() as u64;
        let done: Vec<Rep> = reps.into_iter().flatten().collect();
        truncated += cfg.replicates - done.len() as u64;
        let direct = done.iter().map(|r| r.direct).fold(0.0, f64::max);
        let formula = done.iter().map(|r| r.formula).fold(0.0, f64::max);
        let (ls_mean, _) = mean_var(&finite(done.iter().map(|r| r.l_star)));
        let mut p = PerV::new(v, cfg.replicates);
        p.stat("completed", done.len() as f64);
        p.stat("max_rel_error_direct", direct);
        p.stat("max_rel_error_formula", formula);
        p.stat("mean_l_star", ls_mean);
        p.stat("mean_bins", done.iter().map(|r| r.bins as f64).sum::<f64>() / done.len().max(1) as f64);
        per_v.push(p);
        let n = done.len();
        tests.push(TestResult::at_most(format!("v={v}: direct normalization"), direct, DIRECT_TOLERANCE, n, "relative error"));
        tests.push(TestResult::at_most(format!("v={v}: formula normalization"), formula, FORMULA_TOLERANCE, n, "relative error"));
    }
    Ok(ExperimentReport::new(cfg, per_v, tests, truncated, total))
}
