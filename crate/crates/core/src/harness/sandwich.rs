//! `L*` at the deterministic time `e^v` between the valley integrals, and
//! the bounds of the inverse-local-time event at `σ_v`.

use super::{
    environment, nondecreasing, realization, replicates, sandwich_slack, AtTime, ExperimentConfig,
    ExperimentReport, PerV,
};
use crate::diffusion::events::bottoms;
use crate::diffusion::{composite_sigma, Construction, DiffusionRealization, Stop, StopReason};
use crate::environment::{decompose, Decomposition, SandwichIntegrals};
use crate::error::Result;
use crate::oracle::{Frequency, TestResult};

/// Relative rounding allowed when comparing `L*(σ_v)` with its level.
const LEVEL_TIE: f64 = 1e-9;

/// `(sigma, L*(sigma))` when the targets are reached, and `L*(t)`.
type Walk = (Option<(f64, f64)>, f64);

struct Rep {
    lower: bool,
    lower_no_slack: bool,
    upper: bool,
    ratio: f64,
    sigma: Option<SigmaFlags>,
}

struct SigmaFlags {
    at_least_level: bool,
    within_level: bool,
    time_lower: bool,
    time_upper: bool,
}

/// `(σ_v, L*(σ_v))` when `σ_v` is reached, and `L*(e^v)`; `None` when a
/// budget runs out before `e^v`. The skeleton is walked once, past whichever
/// of the two times comes first.
fn walk(
    cfg: &ExperimentConfig,
    mut real: DiffusionRealization,
    d: &Decomposition,
    r: f64,
    v: f64,
    t: f64,
) -> Result<Option<Walk>> {
    if real.construction() != Construction::Skeleton {
        let comp = composite_sigma(&mut real, d, r, v, cfg.bin_width)?;
        let mut sigma = None;
        if comp.sigma.reached {
            let s = comp.sigma.value;
            if let Some(mut at) = AtTime::drive(real.clone(), s, cfg.bin_width)? {
                sigma = Some((s, at.l_star()?));
            }
        }
        let Some(mut at) = AtTime::drive(real, t, cfg.bin_width)? else { return Ok(None) };
        return Ok(Some((sigma, at.l_star()?)));
    }
    let level = r * v.exp();
    let targets: Vec<(f64, f64)> = bottoms(d)?.iter().map(|&x| (x, level)).collect();
    let mut run = real.skeleton()?;
    let first = run.advance(&Stop { time: Some(t), local_time: targets.clone(), ..Default::default() });
    if !first.reason.reached() {
        return Ok(None);
    }
    if let StopReason::LocalTime(_) = first.reason {
        let sigma = (first.time, run.l_star());
        if !run.advance(&Stop::at_time(t)).reason.reached() {
            return Ok(None);
        }
        return Ok(Some((Some(sigma), run.l_star())));
    }
    let ls = run.l_star();
    let o = run.advance(&Stop { local_time: targets, ..Default::default() });
    Ok(Some((o.reason.reached().then(|| (o.time, run.l_star())), ls)))
}

pub fn run_sandwich(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut per_v = Vec::new();
    let mut tests = Vec::new();
    let mut holds = Vec::new();
    let (mut truncated, mut total) = (0, 0);
    let delta = cfg.delta;
    for (vi, &v) in cfg.v_grid.iter().enumerate() {
        let th = cfg.thresholds(v)?;
        let t = v.exp();
        let slack = sandwich_slack(v, delta);
        let reps = replicates(cfg, vi, |i| {
            let mut env = environment(cfg, i)?;
            let d = decompose(&mut env, &th)?;
            if d.truncated() {
                return Ok(None);
            }
            let Some(ints) = SandwichIntegrals::compute(&env, &d)? else { return Ok(None) };
            let r = cfg.r_value(v, &ints);
            let real = realization(cfg, env, i)?;

            let level = r * t;
            let Some((at_sigma, ls)) = walk(cfg, real, &d, r, v, t)? else { return Ok(None) };
            let sigma = at_sigma.map(|(s, ls)| SigmaFlags {
                at_least_level: ls >= level * (1.0 - LEVEL_TIE),
                within_level: ls <= level * (1.0 + delta),
                time_lower: s / level >= ints.min * (1.0 - delta),
                time_upper: s / level <= ints.sum + slack,
            });
            let hi = t * (1.0 + delta) / (ints.min * (1.0 - delta));
            Ok(Some(Rep {
                lower: ls >= t / (ints.sum + slack),
                lower_no_slack: ls >= t / ints.sum,
                upper: ls <= hi,
                ratio: ls * ints.sum / t,
                sigma,
            }))
        })?;
        total += reps.len() as u64;
        let done: Vec<Rep> = reps.into_iter().flatten().collect();
        truncated += cfg.replicates - done.len() as u64;
        let n = done.len();
        let hold = Frequency::from_flags(done.iter().map(|r| r.lower && r.upper));
        let hold_raw = Frequency::from_flags(done.iter().map(|r| r.lower_no_slack && r.upper));
        let sig: Vec<&SigmaFlags> = done.iter().filter_map(|r| r.sigma.as_ref()).collect();

        let mut p = PerV::new(v, cfg.replicates);
        p.freq("sandwich", hold);
        p.freq("sandwich_without_slack", hold_raw);
        p.freq("lower_bound", Frequency::from_flags(done.iter().map(|r| r.lower)));
        p.freq("lower_bound_without_slack", Frequency::from_flags(done.iter().map(|r| r.lower_no_slack)));
        p.freq("upper_bound", Frequency::from_flags(done.iter().map(|r| r.upper)));
        p.freq("sigma_reached", Frequency::from_counts(sig.len(), n));
        let at_least = Frequency::from_flags(sig.iter().map(|s| s.at_least_level));
        p.freq("sigma_l_star_at_least_level", at_least);
        p.freq("sigma_l_star_within_level", Frequency::from_flags(sig.iter().map(|s| s.within_level)));
        p.freq("sigma_time_lower", Frequency::from_flags(sig.iter().map(|s| s.time_lower)));
        p.freq("sigma_time_upper", Frequency::from_flags(sig.iter().map(|s| s.time_upper)));
        p.freq(
            "sigma_event",
            Frequency::from_flags(sig.iter().map(|s| s.within_level && s.time_lower && s.time_upper)),
        );
        p.stat("slack", slack);
        let mut ratios: Vec<f64> = done.iter().map(|r| r.ratio).collect();
        ratios.sort_by(f64::total_cmp);
        p.stat("median_l_star_times_sum_over_t", super::quantile(&ratios, 0.5));
        per_v.push(p);

        tests.push(TestResult::at_least(
            format!("v={v}: L*(sigma) >= r e^v"),
            at_least.freq,
            1.0,
            at_least.n,
            "definitional",
        ));
        holds.push(hold);
    }
    let freqs: Vec<f64> = holds.iter().map(|f| f.freq).collect();
    if let (Some(last), Some(&v)) = (holds.last(), cfg.v_grid.last()) {
        tests.push(TestResult::at_least(
            format!("v={v}: sandwich frequency"),
            last.freq,
            cfg.min_frequency,
            last.n,
            "frequency",
        ));
    }
    tests.push(TestResult::at_least(
        "sandwich frequency nondecreasing in v",
        nondecreasing(&freqs) as u8 as f64,
        1.0,
        freqs.len(),
        "trend",
    ));
    Ok(ExperimentReport::new(cfg, per_v, tests, truncated, total)
        .note(format!("fixed delta = {delta}; frequencies per v: {freqs:?}")))
}
