//! Pooled statistics of the ladder sequence.

use super::{environment, ks_named, replicates, ExperimentConfig, ExperimentReport, PerV};
use crate::environment::ladder::{Adaptive, Refine};
use crate::environment::{ladder_sequence, LadderOptions, Side};
use crate::error::Result;
use crate::oracle::{envelope, ks_test_law, mean_var, Frequency, Law, TestResult};

/// Levels for the lower-tail check of the bottom-to-height-2 integral,
/// compared with the envelope at slack 1.
pub const LOWER_LAMBDAS: [f64; 3] = [0.1, 0.2, 0.5];

pub fn ladder_options() -> LadderOptions {
    LadderOptions { adaptive: Some(Adaptive::default()), refine: Some(Refine::default()) }
}

pub fn run_ladder_stats(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let opts = ladder_options();
    let n_max = cfg.n_max;
    let reps = replicates(cfg, 0, |i| {
        let mut env = environment(cfg, i)?;
        let l = ladder_sequence(&mut env, Side::Right, n_max, &opts)?;
        Ok((!l.truncated && l.steps.len() >= n_max).then_some(l))
    })?;
    let total = reps.len() as u64;
    let done: Vec<_> = reps.into_iter().flatten().collect();
    let short = total - done.len() as u64;

    let ratios: Vec<f64> = done.iter().flat_map(|l| l.log_ratios()).collect();
    let upper: Vec<f64> = done.iter().flat_map(|l| l.int_gamma_m.iter().copied()).collect();
    let lower: Vec<f64> = done.iter().flat_map(|l| l.int_mu_eta.iter().copied()).collect();
    let monotone = Frequency::from_flags(
        done.iter().map(|l| (0..n_max).all(|n| l.h(n + 1).unwrap_or(f64::INFINITY) >= l.h(n).unwrap_or(0.0))),
    );

    let mut tests = Vec::new();
    let name = "pooled log(h_{n+1}/h_n) vs Exp(1)".to_string();
    tests.push(ks_named(name, ks_test_law(&ratios, &Law::Exponential { mean: 1.0 }, cfg.alpha))?);
    tests.push(TestResult::at_least("h nondecreasing", monotone.freq, 1.0, monotone.n, "definitional"));

    let mut p = PerV::new(n_max as f64, cfg.replicates);
    p.stat("ladders_completed", done.len() as f64);
    p.stat("pooled_ratios", ratios.len() as f64);
    p.stat("mean_log_ratio", mean_var(&ratios).0);
    p.stat("mean_int_gamma_m", mean_var(&upper).0);
    p.stat("mean_int_mu_eta", mean_var(&lower).0);
    for &lambda in &cfg.lambdas {
        let f = Frequency::from_flags(upper.iter().map(|&x| x >= lambda));
        let bound = envelope::integral_upper_tail(lambda, cfg.slack);
        p.freq(format!("upper_tail_at_{lambda}"), f);
        p.stat(format!("upper_envelope_at_{lambda}"), bound);
        tests.push(TestResult::at_most(
            format!("P(int gamma..M >= {lambda})"),
            f.freq,
            bound,
            f.n,
            format!("envelope, slack {}", cfg.slack),
        ));
    }
    for lambda in LOWER_LAMBDAS {
        let f = Frequency::from_flags(lower.iter().map(|&x| x <= lambda));
        let bound = envelope::integral_lower_tail(lambda, 1.0);
        p.freq(format!("lower_tail_at_{lambda}"), f);
        p.stat(format!("lower_envelope_at_{lambda}"), bound);
        tests.push(TestResult::at_most(format!("P(int mu..eta <= {lambda})"), f.freq, bound, f.n, "envelope, slack 1"));
    }
    Ok(ExperimentReport::new(cfg, vec![p], tests, short, total)
        .note("per_v is keyed by n_max; short or truncated ladders are excluded"))
}
