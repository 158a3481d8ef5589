//! Fraction of the time `e^v` spent near the four valley bottoms.

use super::{environment, quantile, realization, replicates, AtTime, ExperimentConfig, ExperimentReport, PerV};
use crate::environment::{decompose, localization, localization_sets, Side, WidthMode};
use crate::error::Result;
use crate::oracle::{Frequency, TestResult};

/// Normalization tolerance for the occupation of the whole line.
const FULL_TOLERANCE: f64 = 1e-9;

struct Rep {
    occupied: f64,
    wider: f64,
    full: f64,
    /// `(1 - ν(I)/t) (log t)^c0` with `I` the fixed-width intervals.
    window: f64,
    u_length: f64,
}

pub fn run_localization(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut per_v = Vec::new();
    let mut tests = Vec::new();
    let (mut truncated, mut total) = (0, 0);
    let delta = cfg.delta;
    for (vi, &v) in cfg.v_grid.iter().enumerate() {
        let th = cfg.thresholds(v)?;
        let t = v.exp();
        let reps = replicates(cfg, vi, |i| {
            let mut env = environment(cfg, i)?;
            let d = decompose(&mut env, &th)?;
            if d.truncated() {
                return Ok(None);
            }
            let u = localization::union(&localization_sets(&env, &d, v, delta, WidthMode::Valley, 0.0)?);
            let wide =
                localization::union(&localization_sets(&env, &d, v, delta / 2.0, WidthMode::Valley, 0.0)?);
            let fixed =
                localization::union(&localization_sets(&env, &d, v, delta, WidthMode::Window, cfg.eps)?);
            let Some(mut at) = AtTime::drive(realization(cfg, env, i)?, t, cfg.bin_width)? else {
                return Ok(None);
            };
            let lo = -at.env().extent(Side::Left) - 1.0;
            let hi = at.env().extent(Side::Right) + 1.0;
            Ok(Some(Rep {
                occupied: at.occupation_of(&u)? / t,
                wider: at.occupation_of(&wide)? / t,
                full: at.occupation(lo, hi)? / t,
                window: (1.0 - at.occupation_of(&fixed)? / t).max(0.0) * v.powf(cfg.c0),
                u_length: u.iter().map(|(a, b)| b - a).sum(),
            }))
        })?;
        total += reps.len() as u64;
        let done: Vec<Rep> = reps.into_iter().flatten().collect();
        truncated += cfg.replicates - done.len() as u64;
        let n = done.len();
        let above = Frequency::from_flags(done.iter().map(|r| r.occupied >= cfg.floor));
        let monotone = Frequency::from_flags(done.iter().map(|r| r.wider >= r.occupied * (1.0 - 1e-12)));
        let full_err = done.iter().map(|r| (r.full - 1.0).abs()).fold(0.0, f64::max);
        let occ: Vec<f64> = done.iter().map(|r| r.occupied).collect();
        let t2: Vec<f64> = done.iter().map(|r| r.window).collect();

        let mut p = PerV::new(v, cfg.replicates);
        p.freq("occupied_at_least_floor", above);
        p.freq("wider_sets_occupy_more", monotone);
        for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
            p.stat(format!("occupied_q{q}"), quantile(&occ, q));
            p.stat(format!("window_complement_q{q}"), quantile(&t2, q));
        }
        p.stat("mean_u_length", done.iter().map(|r| r.u_length).sum::<f64>() / n.max(1) as f64);
        p.stat("max_full_line_error", full_err);
        per_v.push(p);

        tests.push(TestResult::at_least(
            format!("v={v}: frequency of occupied fraction >= {}", cfg.floor),
            above.freq,
            cfg.min_frequency,
            n,
            "frequency",
        ));
        tests.push(TestResult::at_least(format!("v={v}: set monotonicity"), monotone.freq, 1.0, n, "definitional"));
        tests.push(TestResult::at_most(format!("v={v}: full-line occupation"), full_err, FULL_TOLERANCE, n, "normalization"));
    }
    let mut report = ExperimentReport::new(cfg, per_v, tests, truncated, total);
    report.tests.push(TestResult::at_most(
        "truncation rate",
        report.truncation.rate,
        cfg.truncation_cap,
        report.truncation.replicates as usize,
        "cap",
    ));
    report.pass = report.tests.iter().all(|t| t.pass);
    Ok(report)
}
