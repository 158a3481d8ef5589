//! Shape of the first deep valley against 3-d Bessel functionals: `H_v - m`
//! against the hitting time `tau` and `m` against `rho`.
//!
//!     cargo run --release --example tanaka -- [replicates]

use broxlab::harness::{run, Experiment, ExperimentConfig};

fn main() -> broxlab::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(500, |s| s.parse().expect("replicates must be an integer"));
    let mut cfg = ExperimentConfig::defaults(Experiment::Tanaka);
    cfg.replicates = n;
    let report = run(&cfg)?;
    print!("{}", report.summary());
    for p in &report.per_v {
        for (k, x) in &p.stats {
            println!("  {k} = {x:.4}");
        }
    }
    Ok(())
}
