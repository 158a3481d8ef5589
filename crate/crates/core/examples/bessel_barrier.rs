//! A squared Bessel process of dimension 0 started at 1 reaches `b > 1`
//! before dying out with probability `1/b`.
//!
//!     cargo run --release --example bessel_barrier -- [barrier] [replicates]

use broxlab::path::sample::{sq_bessel0_reaches, BarrierOptions};
use broxlab::seed::{rng_for, Stream};

fn main() -> broxlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let b: f64 = args.next().map_or(2.0, |s| s.parse().expect("barrier must be a number"));
    let n: u64 = args.next().map_or(4000, |s| s.parse().expect("replicates must be an integer"));

    let opts = BarrierOptions::default();
    let (mut hits, mut decided) = (0u64, 0u64);
    for i in 0..n {
        let mut rng = rng_for(5, i, Stream::Bessel);
        match sq_bessel0_reaches(1.0, b, &opts, &mut rng)?.reached {
            Some(true) => {
                hits += 1;
                decided += 1;
            }
            Some(false) => decided += 1,
            None => {}
        }
    }
    let p = hits as f64 / decided as f64;
    let se = (p * (1.0 - p) / decided as f64).sqrt();
    println!("barrier {b}: frequency {p:.4} +- {se:.4}, exact {:.4} ({} undecided)", 1.0 / b, n - decided);
    Ok(())
}
