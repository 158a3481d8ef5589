//! Both Ray-Knight checks for Brownian motion, run through the harness at
//! reduced size.
//!
//!     cargo run --release --example ray_knight -- [replicates]

use broxlab::harness::{run, Experiment, ExperimentConfig};

fn main() -> broxlab::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(2000, |s| s.parse().expect("replicates must be an integer"));
    let mut cfg = ExperimentConfig::defaults(Experiment::RayKnight);
    cfg.base_seed = 11;
    cfg.replicates = n;
    let report = run(&cfg)?;
    print!("{}", report.summary());
    Ok(())
}
