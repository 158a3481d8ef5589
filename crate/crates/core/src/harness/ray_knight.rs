//! Local time of Brownian motion at first passage and at inverse local
//! time, plus the barrier probability of the dimension-0 squared Bessel
//! process.
//!
//! With `W = 0` the diffusion is the driver, so both checks run the
//! skeleton walk on a flat grid of spacing `sqrt(driver_step)`, where knot
//! local times are exact in law. A reflecting barrier below the region of
//! interest does not change local times inside it and keeps runs short.

use super::{ks_named, replicates, ExperimentConfig, ExperimentReport, PerV};
use crate::diffusion::{Reflect, SkeletonRun, Stop, StopReason};
use crate::environment::Environment;
use crate::error::Result;
use crate::oracle::{ks_test_law, ks_two_sample, mean_var, Frequency, Law, TestResult};
use crate::path::sample::{sq_bessel0_reaches, sq_bessel0_step, BarrierOptions};
use crate::seed::{rng_for, Stream};
use rayon::prelude::*;

/// Accepted distance of the barrier frequency from `1 / barrier`.
pub const BARRIER_TOLERANCE: f64 = 0.01;

fn flat_walk(cfg: &ExperimentConfig, extent: f64, reflect: Reflect, index: u64) -> Result<SkeletonRun> {
    let h = cfg.driver_step.sqrt();
    let env = Environment::flat(extent, h)?;
    SkeletonRun::new(env, rng_for(cfg.base_seed, index, Stream::Driver), reflect, cfg.max_steps)
}

pub fn run_ray_knight(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let h = cfg.driver_step.sqrt();
    let a = cfg.a;
    let ys = &cfg.y_grid;
    let mut tests = Vec::new();
    let mut per_v = Vec::new();

    // first passage at a, reflected at -a
    let first = replicates(cfg, 0, |i| {
        let mut run = flat_walk(cfg, a + 4.0 * h, Reflect { lo: Some(-a), hi: None }, i)?;
        let o = run.advance(&Stop { hit: Some(a), ..Default::default() });
        if o.reason != StopReason::Hit {
            return Ok(None);
        }
        let at: Vec<f64> = ys.iter().map(|&y| run.local_time_at(a - y)).collect();
        Ok(Some((at, run.local_time_at(a), o.steps)))
    })?;
    let first: Vec<_> = first.into_iter().flatten().collect();
    let trunc1 = cfg.replicates - first.len() as u64;
    let mut p = PerV::new(a, cfg.replicates);
    p.stat("first_passage_completed", first.len() as f64);
    p.stat("first_passage_mean_steps", first.iter().map(|r| r.2 as f64).sum::<f64>() / first.len().max(1) as f64);
    for (k, &y) in ys.iter().enumerate() {
        let xs: Vec<f64> = first.iter().map(|r| r.0[k]).collect();
        let (m, _) = mean_var(&xs);
        p.stat(format!("first_passage_mean_at_y={y}"), m);
        let name = format!("first passage: L(a - {y}) vs Exp(mean {})", 2.0 * y);
        tests.push(ks_named(name, ks_test_law(&xs, &Law::SqBessel2Marginal { v: y }, cfg.alpha))?);
    }
    let top: Vec<f64> = first.iter().map(|r| r.1).collect();
    let (top_mean, _) = mean_var(&top);
    p.stat("first_passage_mean_at_top", top_mean);
    tests.push(TestResult::at_most("first passage: mean L at a", top_mean, 2.0 * h, top.len(), "boundary"));

    // inverse local time at 0, reflected at +-k
    let r = cfg.r;
    let k_ref = ys.iter().copied().fold(0.0, f64::max) + 1.0;
    let second = replicates(cfg, 1, |i| {
        let mut run = flat_walk(cfg, k_ref, Reflect { lo: Some(-k_ref), hi: Some(k_ref) }, i)?;
        let o = run.advance(&Stop { local_time: vec![(0.0, r)], ..Default::default() });
        if !o.reason.reached() {
            return Ok(None);
        }
        let mut reference = rng_for(cfg.base_seed, i, Stream::Reference);
        let at: Vec<f64> = ys.iter().map(|&y| run.local_time_at(y)).collect();
        let exact: Vec<f64> = ys.iter().map(|&y| sq_bessel0_step(r, y, &mut reference)).collect();
        Ok(Some((at, exact, run.local_time_at(0.0), o.steps)))
    })?;
    let second: Vec<_> = second.into_iter().flatten().collect();
    let trunc2 = cfg.replicates - second.len() as u64;
    p.stat("inverse_local_time_completed", second.len() as f64);
    p.stat(
        "inverse_local_time_mean_steps",
        second.iter().map(|r| r.3 as f64).sum::<f64>() / second.len().max(1) as f64,
    );
    for (k, &y) in ys.iter().enumerate() {
        let xs: Vec<f64> = second.iter().map(|r| r.0[k]).collect();
        let exact: Vec<f64> = second.iter().map(|r| r.1[k]).collect();
        p.stat(format!("inverse_local_time_mean_at_y={y}"), mean_var(&xs).0);
        let name = format!("inverse local time: L({y}) vs dimension-0 squared Bessel at {y} from {r}");
        tests.push(ks_named(name, ks_two_sample(&xs, &exact, cfg.alpha))?);
    }
    let at0: Vec<f64> = second.iter().map(|r| r.2).collect();
    let (m0, var0) = mean_var(&at0);
    p.stat("inverse_local_time_mean_at_0", m0);
    tests.push(TestResult::at_most("inverse local time: variance of L(0)", var0, h, at0.len(), "definitional"));

    // barrier
    let barrier = run_bessel_barrier(cfg)?;
    p.freq("barrier_reached", barrier.0);
    p.stat("barrier_undecided", barrier.1 as f64);
    tests.push(barrier.2);
    per_v.push(p);

    let total = 2 * cfg.replicates + cfg.barrier_replicates;
    Ok(ExperimentReport::new(cfg, per_v, tests, trunc1 + trunc2 + barrier.1, total)
        .note(format!("flat grid spacing {h}; reflection at -a and at +-{k_ref}")))
}

/// Frequency with which a dimension-0 squared Bessel process from 1
/// reaches `cfg.barrier`, the number of undecided paths and the check
/// against `1 / barrier`.
pub fn run_bessel_barrier(cfg: &ExperimentConfig) -> Result<(Frequency, u64, TestResult)> {
    let base = 2 * cfg.replicates;
    let opts = BarrierOptions::default();
    let out: Vec<Option<bool>> = (0..cfg.barrier_replicates)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(cfg.base_seed, base + k, Stream::Bessel);
            Ok(sq_bessel0_reaches(1.0, cfg.barrier, &opts, &mut rng)?.reached)
        })
        .collect::<Result<_>>()?;
    let decided: Vec<bool> = out.iter().flatten().copied().collect();
    let undecided = (out.len() - decided.len()) as u64;
    let f = Frequency::from_flags(decided.iter().copied());
    let expected = 1.0 / cfg.barrier;
    let t = TestResult::at_most(
        format!("barrier: |P(sup >= {}) - {expected}|", cfg.barrier),
        (f.freq - expected).abs(),
        BARRIER_TOLERANCE,
        f.n,
        "sup of dimension-0 squared Bessel",
    );
    Ok((f, undecided, t))
}
