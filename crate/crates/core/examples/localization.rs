//! Occupation of the four valley neighbourhoods by one diffusion path at
//! time `e^v`.
//!
//!     cargo run --release --example localization -- [seed] [v]

use broxlab::diffusion::{Construction, DiffusionRealization, Stop};
use broxlab::environment::localization::union;
use broxlab::environment::{decompose, localization_sets, Environment, Thresholds, WidthMode};
use broxlab::seed::{rng_for, Stream};

fn main() -> broxlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(2, |s| s.parse().expect("seed must be an integer"));
    let v: f64 = args.next().map_or(8.0, |s| s.parse().expect("v must be a number"));
    let delta = 0.1;

    let th = Thresholds::new(v, 2.0, 2.0, 2.0)?;
    let mut env = Environment::brownian_for(seed, 0, 0.05, 1_000_000)?;
    let d = decompose(&mut env, &th)?;
    if d.truncated() {
        println!("environment budget too small for v = {v}");
        return Ok(());
    }
    let sets = localization_sets(&env, &d, v, delta, WidthMode::Valley, 0.1)?;
    for s in &sets {
        println!("{:<14} centre {:8.3}  [{:8.3}, {:8.3}]", s.label, s.center, s.lo, s.hi);
    }

    let t = v.exp();
    let real = DiffusionRealization::new(env, rng_for(seed, 0, Stream::Driver), Construction::Skeleton)?;
    let mut run = real.skeleton()?;
    let o = run.advance(&Stop::at_time(t));
    if !o.reason.reached() {
        println!("step budget ran out before t = {t:.1}");
        return Ok(());
    }
    let inside = run.occupation_of(&union(&sets));
    println!("t = {t:.1}: fraction of time in the union {:.4}", inside / t);
    for s in &sets {
        println!("  {:<14} {:.4}", s.label, run.occupation(s.lo, s.hi) / t);
    }
    Ok(())
}
