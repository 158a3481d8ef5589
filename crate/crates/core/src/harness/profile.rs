//! Local-time profile at `σ_v` on environments where the good event holds.

use super::{environment, nondecreasing, realization, replicates, AtTime, ExperimentConfig, ExperimentReport, PerV};
use crate::diffusion::{composite_sigma, profile_events, Estimator, ProfileFlags, BOTTOM_LABELS};
use crate::environment::{gamma_events, SandwichIntegrals};
use crate::error::Result;
use crate::oracle::{Frequency, TestResult};

/// Required frequency of reaching `σ_v` within budget.
pub const REACHED_FLOOR: f64 = 0.95;

enum Rep {
    Rejected,
    Unreached,
    Done(ProfileFlags, Option<String>),
}

pub fn run_profile(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut per_v = Vec::new();
    let mut tests = Vec::new();
    let (mut truncated, mut accepted_total) = (0, 0);
    let mut trend: Vec<[Frequency; 12]> = Vec::new();
    for (vi, &v) in cfg.v_grid.iter().enumerate() {
        let th = cfg.thresholds(v)?;
        let reps = replicates(cfg, vi, |i| {
            let mut env = environment(cfg, i)?;
            let (d, g) = gamma_events(&mut env, &th)?;
            if g.gamma != Some(true) {
                return Ok(Rep::Rejected);
            }
            let Some(ints) = SandwichIntegrals::compute(&env, &d)? else { return Ok(Rep::Rejected) };
            let r = cfg.r_value(v, &ints);
            let mut real = realization(cfg, env, i)?;
            let comp = composite_sigma(&mut real, &d, r, v, cfg.bin_width)?;
            if !comp.sigma.reached {
                return Ok(Rep::Unreached);
            }
            let Some(mut at) = AtTime::drive(real, comp.sigma.value, cfg.bin_width)? else {
                return Ok(Rep::Unreached);
            };
            let field = at.field(Estimator::Direct, cfg.bin_width)?;
            Ok(Rep::Done(profile_events(&field, at.env(), &d, r, v, cfg.delta), comp.which))
        })?;
        let rejected = reps.iter().filter(|r| matches!(r, Rep::Rejected)).count();
        let unreached = reps.iter().filter(|r| matches!(r, Rep::Unreached)).count();
        let done: Vec<(&ProfileFlags, &Option<String>)> = reps
            .iter()
            .filter_map(|r| match r {
                Rep::Done(f, w) => Some((f, w)),
                _ => None,
            })
            .collect();
        let accepted = reps.len() - rejected;
        accepted_total += accepted as u64;
        truncated += unreached as u64;

        let mut p = PerV::new(v, cfg.replicates);
        p.stat("rejected_by_conditioning", rejected as f64);
        let reached = Frequency::from_counts(done.len(), accepted);
        p.freq("sigma_reached", reached);
        for label in BOTTOM_LABELS {
            let k = done.iter().filter(|(_, w)| w.as_deref() == Some(label)).count();
            p.stat(format!("achieved_by:{label}"), k as f64);
        }
        let freqs: [Frequency; 12] = std::array::from_fn(|k| {
            Frequency::from_flags(done.iter().filter_map(|(f, _)| f.values()[k]))
        });
        for (name, f) in ProfileFlags::NAMES.iter().zip(&freqs) {
            p.freq(*name, *f);
        }
        per_v.push(p);
        tests.push(TestResult::at_least(
            format!("v={v}: sigma reached within budget"),
            reached.freq,
            REACHED_FLOOR,
            reached.n,
            "frequency",
        ));
        trend.push(freqs);
    }

    let idx = |name: &str| ProfileFlags::NAMES.iter().position(|n| *n == name).expect("flag name");
    let (a1, c, d) = (idx("a1"), idx("c"), idx("d"));
    let at = cfg.v_grid.iter().position(|&v| v == 8.0).unwrap_or(cfg.v_grid.len() - 1);
    let f = trend[at][a1];
    tests.push(TestResult::at_least(
        format!("v={}: frequency of a1", cfg.v_grid[at]),
        f.freq,
        cfg.min_frequency,
        f.n,
        "frequency",
    ));
    for (k, name) in [(a1, "a1"), (c, "c"), (d, "d")] {
        let xs: Vec<f64> = trend.iter().map(|fs| fs[k].freq).collect();
        tests.push(TestResult::at_least(
            format!("frequency of {name} nondecreasing in v"),
            nondecreasing(&xs) as u8 as f64,
            1.0,
            xs.len(),
            "trend",
        ));
    }
    Ok(ExperimentReport::new(cfg, per_v, tests, truncated, accepted_total)
        .note("replicates failing the good event are rejected; truncation counts unreached sigma among the rest"))
}
