//! Ladder heights of one environment, and the pooled log ratios of a few
//! dozen environments against Exp(1).
//!
//!     cargo run --release --example ladder

use broxlab::environment::ladder::H0;
use broxlab::environment::{ladder_sequence, Environment, LadderOptions, Side};
use broxlab::oracle::{ks_test_law, mean_var, Alpha, Law};

fn main() -> broxlab::Result<()> {
    let opts = LadderOptions { adaptive: Some(Default::default()), refine: Some(Default::default()) };
    let n_max = 6;

    let mut env = Environment::brownian_with_budget(1, 0.01, 4_000_000)?;
    let seq = ladder_sequence(&mut env, Side::Right, n_max, &opts)?;
    println!("n  gamma_n        h_n        int(mu,eta)  int(gamma,M)");
    println!("0  {:<12.4} {H0:<10.4}", 0.0);
    for (n, s) in seq.steps.iter().enumerate() {
        println!(
            "{}  {:<12.4} {:<10.4} {:<12.4} {:.4}",
            n + 1,
            s.gamma,
            s.h,
            seq.int_mu_eta[n],
            seq.int_gamma_m[n]
        );
    }

    let mut ratios = Vec::new();
    for seed in 100..160 {
        let mut env = Environment::brownian_with_budget(seed, 0.01, 4_000_000)?;
        let seq = ladder_sequence(&mut env, Side::Right, n_max, &opts)?;
        if !seq.truncated {
            ratios.extend(seq.log_ratios());
        }
    }
    let (m, _) = mean_var(&ratios);
    let ks = ks_test_law(&ratios, &Law::Exponential { mean: 1.0 }, Alpha::P01)?;
    println!("{} log ratios, mean {m:.3}", ratios.len());
    println!("{}", ks.line());
    Ok(())
}
