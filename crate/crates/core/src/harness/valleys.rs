//! Probability of the good-environment events along the `v` grid, and the
//! law of the first valley depth.

use super::{environment, ks_named, replicates, ExperimentConfig, ExperimentReport, PerV};
use crate::environment::{gamma_events, Side};
use crate::error::Result;
use crate::oracle::{ks_test_law, Frequency, Law, TestResult};
use std::collections::BTreeMap;

struct Rep {
    gamma: Option<bool>,
    gamma_prime: Option<bool>,
    implication: bool,
    failed: Vec<String>,
    depth: Option<f64>,
}

pub fn run_gamma_probability(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut per_v = Vec::new();
    let mut tests = Vec::new();
    let mut not_gamma = Vec::new();
    let (mut truncated, mut total) = (0, 0);
    for (vi, &v) in cfg.v_grid.iter().enumerate() {
        let th = cfg.thresholds(v)?;
        let reps = replicates(cfg, vi, |i| {
            let mut env = environment(cfg, i)?;
            let (d, g) = gamma_events(&mut env, &th)?;
            let depth = d.right.minus(1).map(|mv| -env.side(Side::Right).value_at(mv.m));
            Ok(Rep {
                gamma: g.gamma,
                gamma_prime: g.gamma_prime,
                implication: g.implication_holds(),
                failed: g.failed_clauses(),
                depth,
            })
        })?;
        total += reps.len() as u64;
        let indeterminate = reps.iter().filter(|r| r.gamma.is_none()).count();
        truncated += indeterminate as u64;
        let fail = Frequency::from_flags(reps.iter().filter_map(|r| r.gamma).map(|g| !g));
        let fail_prime = Frequency::from_flags(reps.iter().filter_map(|r| r.gamma_prime).map(|g| !g));
        let implication = Frequency::from_flags(reps.iter().map(|r| r.implication));

        // first failed clause per failing replicate; sums to the failures
        let mut first = BTreeMap::<String, usize>::new();
        let mut any = BTreeMap::<String, usize>::new();
        for r in reps.iter().filter(|r| r.gamma == Some(false)) {
            let primary = r.failed.first().cloned().unwrap_or_else(|| "unattributed".into());
            *first.entry(primary).or_default() += 1;
            for c in &r.failed {
                *any.entry(c.clone()).or_default() += 1;
            }
        }

        let mut p = PerV::new(v, cfg.replicates);
        p.freq("not_gamma", fail);
        p.freq("not_gamma_prime", fail_prime);
        p.freq("implication", implication);
        p.stat("indeterminate", indeterminate as f64);
        for (c, k) in &first {
            p.stat(format!("first_failed_clause:{c}"), *k as f64);
        }
        for (c, k) in &any {
            p.stat(format!("failed_clause:{c}"), *k as f64);
        }
        let attributed: usize = first.values().sum();
        tests.push(TestResult::at_most(
            format!("v={v}: clause histogram matches failures"),
            (attributed as f64 - fail.hits as f64).abs(),
            0.0,
            fail.n,
            "bookkeeping",
        ));
        tests.push(TestResult::at_least(
            format!("v={v}: event 3 implies event 1"),
            implication.freq,
            1.0,
            implication.n,
            "clause-wise",
        ));

        let depths: Vec<f64> = reps.iter().filter_map(|r| r.depth).collect();
        let mean = th.rises().b;
        let name = format!("v={v}: first valley depth vs Exp(mean {mean:.4})");
        let t = ks_named(name, ks_test_law(&depths, &Law::Exponential { mean }, cfg.alpha))?;
        p.stat("depth_mean_expected", mean);
        p.stat("depth_mean", depths.iter().sum::<f64>() / depths.len().max(1) as f64);
        tests.push(t);
        per_v.push(p);
        not_gamma.push(fail);
    }
    for (k, w) in not_gamma.windows(2).enumerate() {
        let (v0, v1) = (cfg.v_grid[k], cfg.v_grid[k + 1]);
        tests.push(TestResult::new(
            format!("P(not gamma) decreases from v={v0} to v={v1}"),
            w[1].freq,
            w[0].freq,
            w[1].n,
            "trend",
        ));
    }
    if let (Some(last), Some(&v)) = (not_gamma.last(), cfg.v_grid.last()) {
        tests.push(TestResult::at_most(format!("v={v}: P(not gamma) ceiling"), last.freq, cfg.ceiling, last.n, "ceiling"));
    }
    Ok(ExperimentReport::new(cfg, per_v, tests, truncated, total))
}
