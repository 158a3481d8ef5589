//! Build one diffusion path in a Brownian environment, compare the two local
//! time estimators and write the field to CSV.
//!
//!     cargo run --release --example diffusion_local_time -- [out.csv]

use broxlab::diffusion::{Construction, DiffusionRealization, Estimator};
use broxlab::environment::Environment;
use broxlab::seed::{rng_for, Stream};

fn main() -> broxlab::Result<()> {
    let out = std::env::args().nth(1);
    let (seed, t, bin) = (3, 200.0, 0.05);

    let env = Environment::brownian_for(seed, 0, 0.01, 1_000_000)?;
    let real = DiffusionRealization::new(env, rng_for(seed, 0, Stream::Driver), Construction::Skeleton)?;
    let mut run = real.skeleton()?;
    let o = run.advance(&broxlab::diffusion::Stop::at_time(t));
    println!("stopped: {:?} at t = {:.3}, X = {:.4}, {} steps", o.reason, o.time, o.position, o.steps);

    let direct = run.field(bin, Estimator::Direct)?;
    let formula = run.field(bin, Estimator::Formula)?;
    println!("total mass: direct {:.6}, formula {:.6} (t = {t})", direct.total(), formula.total());
    println!("L*: direct {:.4}, formula {:.4}", direct.l_star(), formula.l_star());

    // Same law, different path: the uniform driver consumes the stream differently.
    let env = Environment::brownian_for(seed, 0, 0.01, 1_000_000)?;
    let mut uni = DiffusionRealization::new(
        env,
        rng_for(seed, 0, Stream::Driver),
        Construction::Uniform { driver_step: 1e-4 },
    )?;
    println!("uniform driver: X(t) = {:.4}, L* = {:.4}", uni.diffusion_value(t)?, uni.l_star(t, bin)?);

    if let Some(file) = out {
        direct.write_csv(std::path::Path::new(&file))?;
        println!("wrote {file}");
    }
    Ok(())
}
