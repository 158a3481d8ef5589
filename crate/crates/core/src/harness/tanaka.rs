//! Shape of the environment around the bottom of the first valley of
//! height `v`, against 3-d Bessel functionals.

use super::{environment, replicates, ExperimentConfig, ExperimentReport, PerV};
use crate::environment::{Scan, Side};
use crate::error::Result;
use crate::oracle::{correlation, ks_two_sample_statistic, mean_var, TestResult};
use crate::path::functional::{first_at_or_above, oscillation_first_exceed, OscillationMode};
use crate::path::bessel::draw_bessel3_future_inf;
use crate::path::bessel_functionals_with_tail;
use crate::path::sample::bessel3_until;
use crate::path::SamplePath;
use crate::seed::{rng_for, Stream};
use rand::Rng;
use rand_distr::StandardNormal;

/// Each stage of the auxiliary Bessel run for `rho` rises `HORIZON_FACTOR * v`.
pub const HORIZON_FACTOR: f64 = 2.0;
/// Stages before a replicate counts as truncated.
const MAX_STAGES: usize = 64;

struct Rep {
    forward: f64,
    backward: f64,
    depth: f64,
    endpoint_error: f64,
    tau: f64,
    rho: f64,
}

/// `rho_R(v)` for a 3-d Bessel path from 0.
///
/// The path is sampled in stages. At the end of a stage, at level `r`,
/// the future infimum `I` is drawn exactly as Uniform(0, r) above the
/// previous floor. If that does not decide `zeta`, the continuation is
/// sampled conditionally on `I`: a Brownian motion from `r` until it hits
/// `I`, then `I` plus a fresh 3-d Bessel path from 0. While the Brownian
/// part runs the future infimum is `I`, so reaching `I + v` decides `zeta`
/// at once.
pub fn rho_sample<R: Rng>(v: f64, step: f64, max_knots: usize, rng: &mut R) -> Result<Option<f64>> {
    let (first, _) = bessel3_until(0.0, HORIZON_FACTOR * v, step, max_knots, rng)?;
    let mut xs = first.positions().to_vec();
    let mut ws = first.values().to_vec();
    let mut floor = 0.0;
    let sd = step.sqrt();
    for _ in 0..MAX_STAGES {
        let end = *ws.last().expect("nonempty");
        let inf = floor + draw_bessel3_future_inf(end - floor, rng);
        let path = SamplePath::new(xs.clone(), ws.clone())?;
        if let Some(rho) = bessel_functionals_with_tail(&path, v, inf)?.rho {
            return Ok(Some(rho));
        }
        // Brownian motion from `end` until it leaves (inf, inf + v)
        let (lo, hi) = (inf, inf + v);
        let (mut x, mut w) = (*xs.last().expect("nonempty"), end);
        let exited_low = loop {
            if xs.len() >= max_knots {
                return Ok(None);
            }
            let z: f64 = rng.sample(StandardNormal);
            let w1 = w + sd * z;
            if w1 <= lo || w1 >= hi {
                let level = if w1 <= lo { lo } else { hi };
                xs.push(x + step * (level - w) / (w1 - w));
                ws.push(level);
                break w1 <= lo;
            }
            x += step;
            w = w1;
            xs.push(x);
            ws.push(w);
        };
        if !exited_low {
            let path = SamplePath::new(xs, ws)?;
            return Ok(bessel_functionals_with_tail(&path, v, inf)?.rho);
        }
        floor = inf;
        let x0 = *xs.last().expect("nonempty");
        let (next, _) = bessel3_until(0.0, HORIZON_FACTOR * v, step, max_knots, rng)?;
        for (p, r) in next.knots().skip(1) {
            xs.push(x0 + p);
            ws.push(floor + r);
        }
    }
    Ok(None)
}

pub fn run_tanaka(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut per_v = Vec::new();
    let mut tests = Vec::new();
    let (mut truncated, mut total) = (0, 0);
    let max_knots = cfg.env_budget;
    for (vi, &v) in cfg.v_grid.iter().enumerate() {
        let reps = replicates(cfg, vi, |i| {
            let mut env = environment(cfg, i)?;
            let lazy = env.scan(Side::Right, |p| {
                match oscillation_first_exceed(p, 0.0, v, OscillationMode::AboveRunningMin) {
                    Ok(Some(h)) => Scan::Done(Some(h)),
                    _ => Scan::More(None),
                }
            });
            let Some(h) = lazy.value else { return Ok(None) };
            let path = env.side(Side::Right);
            let (m, wm) = path.argmin(0.0, h);

            let mut rng = rng_for(cfg.base_seed, i, Stream::Bessel);
            let (r, reached) = bessel3_until(0.0, v, cfg.env_step, max_knots, &mut rng)?;
            let tau = match first_at_or_above(&r, v, 0.0)? {
                Some(t) if reached => t,
                _ => return Ok(None),
            };

            let mut aux = rng_for(cfg.base_seed, i, Stream::BesselAux);
            let Some(rho) = rho_sample(v, cfg.env_step, max_knots, &mut aux)? else { return Ok(None) };

            Ok(Some(Rep {
                forward: h - m,
                backward: m,
                depth: -wm,
                endpoint_error: (path.value_at(h) - wm - v).abs(),
                tau,
                rho,
            }))
        })?;
        total += reps.len() as u64;
        let done: Vec<Rep> = reps.into_iter().flatten().collect();
        truncated += cfg.replicates - done.len() as u64;
        let n = done.len();
        let col = |f: fn(&Rep) -> f64| -> Vec<f64> { done.iter().map(f).collect() };
        let (forward, backward, depth) = (col(|r| r.forward), col(|r| r.backward), col(|r| r.depth));
        let (tau, rho) = (col(|r| r.tau), col(|r| r.rho));
        let d_fwd = ks_two_sample_statistic(&forward, &tau)?;
        let d_bwd = ks_two_sample_statistic(&backward, &rho)?;
        let c_dur = correlation(&forward, &backward);
        let c_depth = correlation(&forward, &depth);
        let endpoint = col(|r| r.endpoint_error).into_iter().fold(0.0, f64::max);
        let bound = 3.0 / (n as f64).sqrt();

        let mut p = PerV::new(v, cfg.replicates);
        p.stat("completed", n as f64);
        p.stat("mean_forward", mean_var(&forward).0);
        p.stat("mean_tau", mean_var(&tau).0);
        p.stat("mean_backward", mean_var(&backward).0);
        p.stat("mean_rho", mean_var(&rho).0);
        p.stat("mean_depth", mean_var(&depth).0);
        p.stat("ks_forward_vs_tau", d_fwd);
        p.stat("ks_backward_vs_rho", d_bwd);
        p.stat("corr_durations", c_dur);
        p.stat("corr_forward_depth", c_depth);
        per_v.push(p);

        tests.push(TestResult::new(format!("v={v}: H - m vs tau"), d_fwd, cfg.tolerance, n, "two-sample KS"));
        tests.push(TestResult::new(format!("v={v}: m vs rho"), d_bwd, cfg.tolerance, n, "two-sample KS"));
        tests.push(TestResult::new(format!("v={v}: |corr(H - m, m)|"), c_dur.abs(), bound, n, "independence"));
        tests.push(TestResult::new(format!("v={v}: |corr(H - m, -W(m))|"), c_depth.abs(), bound, n, "independence"));
        tests.push(TestResult::at_most(format!("v={v}: forward endpoint - v"), endpoint, 1e-9 * v, n, "definitional"));
    }
    Ok(ExperimentReport::new(cfg, per_v, tests, truncated, total))
}
