//! `L*` at the deterministic time `e^v` against the bounds built from the
//! valley integrals.
//!
//!     cargo run --release --example sandwich -- [replicates]

use broxlab::harness::{run, Experiment, ExperimentConfig};

fn main() -> broxlab::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(40, |s| s.parse().expect("replicates must be an integer"));
    let mut cfg = ExperimentConfig::defaults(Experiment::Sandwich);
    cfg.v_grid = vec![6.0, 8.0];
    cfg.replicates = n;
    let report = run(&cfg)?;
    print!("{}", report.summary());
    for p in &report.per_v {
        let f = &p.frequencies["sandwich"];
        println!("  v = {}: sandwich holds in {}/{} ({:.3})", p.v, f.hits, f.n, f.freq);
    }
    Ok(())
}
