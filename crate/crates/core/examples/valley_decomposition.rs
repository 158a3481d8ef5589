//! Decompose one sampled environment into valleys and evaluate the good
//! environment events.
//!
//!     cargo run --release --example valley_decomposition -- [seed] [v]

use broxlab::environment::{gamma_events, Environment, Side, Thresholds};

fn main() -> broxlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse()).expect("seed must be an integer");
    let v: f64 = args.next().map_or(Ok(10.0), |s| s.parse()).expect("v must be a number");

    // c1 = c2 = c3 = 1/2 keeps every threshold positive at moderate v.
    let th = Thresholds::new(v, 0.5, 0.5, 0.5)?;
    let mut env = Environment::brownian(seed, 0.01)?;
    let (d, report) = gamma_events(&mut env, &th)?;

    let r = th.rises();
    println!("v = {v}, rises a = {:.3}, b = {:.3}", r.a, r.b);
    for side in Side::BOTH {
        let s = d.side(side);
        println!("{side:?} side (extent {:.1})", env.extent(side));
        for (i, mv) in s.minus_sequence.iter().enumerate() {
            let depth = env.side(side).value_at(mv.b) - env.side(side).value_at(mv.m);
            println!("  minus {}: a = {:8.3}  m = {:8.3}  b = {:8.3}  rise {depth:.3}", i + 1, mv.a, mv.m, mv.b);
        }
        match s.plus {
            Some(p) => println!("  plus:    a = {:8.3}  m = {:8.3}  b = {:8.3}  c = {:.3}", p.a, p.m, p.b, p.c),
            None => println!("  plus:    not found"),
        }
    }
    println!("gamma = {:?}, gamma' = {:?}", report.gamma, report.gamma_prime);
    let failed = report.failed_clauses();
    if !failed.is_empty() {
        println!("failed clauses: {}", failed.join(", "));
    }
    Ok(())
}
