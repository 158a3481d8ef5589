//! Samplers for Brownian motion and Bessel-type processes.

use super::functional::reflect;
use super::SamplePath;
use crate::error::{Error, Result};
use crate::seed::{rng_for, Stream};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub step: f64,
    pub seed: u64,
    pub horizon: f64,
}

impl SamplerConfig {
    pub fn new(step: f64, seed: u64, horizon: f64) -> Result<Self> {
        let c = SamplerConfig { step, seed, horizon };
        c.validate()?;
        Ok(c)
    }

    /// A zero horizon is accepted and yields the single knot at the origin.
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidConfig(format!("step must be positive, got {}", self.step)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "horizon must be non-negative, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Knot positions `0, step, 2 step, ...` ending exactly at the horizon.
    pub fn grid(&self) -> Vec<f64> {
        let n = (self.horizon / self.step * (1.0 + 1e-12)).floor() as usize;
        let mut xs: Vec<f64> = (0..=n).map(|k| k as f64 * self.step).collect();
        let last = *xs.last().unwrap();
        if self.horizon - last > 1e-9 * self.step {
            xs.push(self.horizon);
        } else if let Some(l) = xs.last_mut() {
            if n > 0 {
                *l = self.horizon;
            }
        }
        xs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesselKind {
    Bessel3,
    SqBesselDim2,
    SqBesselDim0,
}

/// Random walk from 0 over `xs`; regular gaps of `step` use the same
/// standard deviation as lazy environment extension.
pub(crate) fn gaussian_walk<R: Rng>(xs: &[f64], step: f64, rng: &mut R) -> Vec<f64> {
    let sd = step.sqrt();
    let mut ws = Vec::with_capacity(xs.len());
    ws.push(0.0);
    for k in 1..xs.len() {
        let dx = xs[k] - xs[k - 1];
        let s = if (dx - step).abs() <= 1e-9 * step { sd } else { dx.sqrt() };
        let z: f64 = rng.sample(StandardNormal);
        ws.push(ws[k - 1] + z * s);
    }
    ws
}

/// Gaussian random walk with variance `step` per knot. The right side uses
/// stream `EnvRight` and the left side `EnvLeft`, so a two-sided sample and
/// an [`Environment`](crate::environment::Environment) built from the same
/// seed and step agree knot for knot.
pub fn sample_brownian(config: &SamplerConfig, two_sided: bool) -> Result<SamplePath> {
    config.validate()?;
    let xs = config.grid();
    let mut rng = rng_for(config.seed, 0, Stream::EnvRight);
    let right = SamplePath::from_parts_unchecked(xs.clone(), gaussian_walk(&xs, config.step, &mut rng));
    if !two_sided {
        return Ok(right);
    }
    let mut rng = rng_for(config.seed, 0, Stream::EnvLeft);
    let left = reflect(&SamplePath::from_parts_unchecked(xs.clone(), gaussian_walk(&xs, config.step, &mut rng)));
    let mut pxs = left.positions().to_vec();
    let mut pws = left.values().to_vec();
    pxs.extend_from_slice(&right.positions()[1..]);
    pws.extend_from_slice(&right.values()[1..]);
    Ok(SamplePath::from_parts_unchecked(pxs, pws))
}

/// One exact transition of the dimension-0 squared Bessel process:
/// a Poisson(z / 2dt) number of Gamma(1, 2dt) summands, absorbed at 0.
pub fn sq_bessel0_step<R: Rng>(z: f64, dt: f64, rng: &mut R) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let lambda = z / (2.0 * dt);
    let n = Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(0.0);
    if n < 0.5 {
        return 0.0;
    }
    Gamma::new(n, 2.0 * dt).map(|g| g.sample(rng)).unwrap_or(0.0)
}

/// Sample a Bessel-type process on the grid of `config`.
pub fn sample_bessel(kind: BesselKind, start: f64, config: &SamplerConfig) -> Result<SamplePath> {
    if !(start >= 0.0) || !start.is_finite() {
        return Err(Error::Domain(format!("start must be non-negative, got {start}")));
    }
    config.validate()?;
    let xs = config.grid();
    let mut rng = rng_for(config.seed, 0, Stream::Bessel);
    let ws = match kind {
        BesselKind::Bessel3 => {
            let mut c = [start, 0.0, 0.0];
            bessel_norms(&xs, &mut c, &mut rng, false)
        }
        BesselKind::SqBesselDim2 => {
            let mut c = [start.sqrt(), 0.0];
            bessel_norms(&xs, &mut c, &mut rng, true)
        }
        BesselKind::SqBesselDim0 => {
            let mut ws = Vec::with_capacity(xs.len());
            ws.push(start);
            for k in 1..xs.len() {
                ws.push(sq_bessel0_step(ws[k - 1], xs[k] - xs[k - 1], &mut rng));
            }
            ws
        }
    };
    Ok(SamplePath::from_parts_unchecked(xs, ws))
}

fn bessel_norms<R: Rng, const D: usize>(
    xs: &[f64],
    c: &mut [f64; D],
    rng: &mut R,
    squared: bool,
) -> Vec<f64> {
    let norm = |c: &[f64; D]| {
        let s: f64 = c.iter().map(|v| v * v).sum();
        if squared {
            s
        } else {
            s.sqrt()
        }
    };
    let mut ws = Vec::with_capacity(xs.len());
    ws.push(norm(c));
    for k in 1..xs.len() {
        let sd = (xs[k] - xs[k - 1]).sqrt();
        for v in c.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += sd * z;
        }
        ws.push(norm(c));
    }
    ws
}

/// 3-d Bessel process from `start` sampled with spacing `step` until it
/// first reaches `level` at a knot, or until `max_knots` knots exist. The
/// flag tells whether the level was reached.
pub fn bessel3_until<R: Rng>(
    start: f64,
    level: f64,
    step: f64,
    max_knots: usize,
    rng: &mut R,
) -> Result<(SamplePath, bool)> {
    if !(start >= 0.0) || !(step > 0.0) {
        return Err(Error::InvalidParams("bessel3_until needs start >= 0 and step > 0".into()));
    }
    let sd = step.sqrt();
    let mut c = [start, 0.0, 0.0];
    let mut xs = vec![0.0];
    let mut ws = vec![start];
    let mut r = start;
    while r < level && xs.len() < max_knots {
        for v in c.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += sd * z;
        }
        r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        xs.push(xs.len() as f64 * step);
        ws.push(r);
    }
    Ok((SamplePath::from_parts_unchecked(xs, ws), r >= level))
}

/// Outcome of a barrier search for the dimension-0 squared Bessel process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierOutcome {
    /// `Some(true)` if the barrier was reached, `Some(false)` if the process
    /// was absorbed at 0 first, `None` if the step budget ran out.
    pub reached: Option<bool>,
    pub steps: usize,
    pub time: f64,
}

/// Options for [`sq_bessel0_reaches`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierOptions {
    /// Time step of the exact transitions.
    pub step: f64,
    pub max_steps: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions { step: 1e-3, max_steps: 10_000_000 }
    }
}

/// Whether a dimension-0 squared Bessel process from `start` ever reaches
/// `barrier`.
///
/// Transitions are exact on a fixed time grid. Between two knots below the
/// barrier a crossing is still declared with the Brownian-bridge
/// probability `exp(-2 d0 d1 / (4 b dt))`, the diffusion coefficient `4z`
/// frozen at the barrier. This removes the first-order monitoring bias of
/// a plain grid maximum.
pub fn sq_bessel0_reaches<R: Rng>(
    start: f64,
    barrier: f64,
    opts: &BarrierOptions,
    rng: &mut R,
) -> Result<BarrierOutcome> {
    if !(start >= 0.0) || !(barrier > 0.0) || !(opts.step > 0.0) {
        return Err(Error::InvalidParams("need start >= 0, barrier > 0 and step > 0".into()));
    }
    let dt = opts.step;
    let mut z = start;
    for steps in 0..opts.max_steps {
        if z >= barrier {
            return Ok(BarrierOutcome { reached: Some(true), steps, time: steps as f64 * dt });
        }
        if z <= 0.0 {
            return Ok(BarrierOutcome { reached: Some(false), steps, time: steps as f64 * dt });
        }
        let z1 = sq_bessel0_step(z, dt, rng);
        if z1 < barrier && z1 > 0.0 {
            let p = (-2.0 * (barrier - z) * (barrier - z1) / (4.0 * barrier * dt)).exp();
            let u: f64 = rng.random();
            if u < p {
                let time = (steps + 1) as f64 * dt;
                return Ok(BarrierOutcome { reached: Some(true), steps: steps + 1, time });
            }
        }
        z = z1;
    }
    Ok(BarrierOutcome { reached: None, steps: opts.max_steps, time: opts.max_steps as f64 * dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn degenerate_horizon() {
        let p = sample_brownian(&SamplerConfig { step: 1.0, seed: 3, horizon: 0.0 }, false).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.values(), &[0.0]);
        assert!(SamplerConfig::new(0.0, 1, 1.0).is_err());
        assert!(SamplerConfig::new(0.1, 1, -1.0).is_err());
    }

    #[test]
    fn grid_ends_at_horizon() {
        let c = SamplerConfig::new(0.3, 1, 1.0).unwrap();
        let g = c.grid();
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        let c = SamplerConfig::new(0.01, 1, 1.0).unwrap();
        assert_eq!(c.grid().len(), 101);
        assert_eq!(*c.grid().last().unwrap(), 1.0);
    }

    #[test]
    fn deterministic_and_two_sided() {
        let c = SamplerConfig::new(0.01, 99, 1.0).unwrap();
        let a = sample_brownian(&c, true).unwrap();
        let b = sample_brownian(&c, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.eval(0.0).unwrap(), 0.0);
        assert_eq!(a.start(), -1.0);
        assert_eq!(a.end(), 1.0);
        let r = sample_brownian(&c, false).unwrap();
        assert_eq!(r.values(), &a.values()[100..]);
    }

    #[test]
    fn sq_bessel0_zero_is_absorbing() {
        let c = SamplerConfig::new(0.1, 5, 10.0).unwrap();
        let p = sample_bessel(BesselKind::SqBesselDim0, 0.0, &c).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
        assert!(sample_bessel(BesselKind::Bessel3, -1.0, &c).is_err());
    }

    #[test]
    fn bessel_paths_are_nonnegative() {
        let c = SamplerConfig::new(0.01, 5, 3.0).unwrap();
        for kind in [BesselKind::Bessel3, BesselKind::SqBesselDim2, BesselKind::SqBesselDim0] {
            let p = sample_bessel(kind, 1.0, &c).unwrap();
            assert_eq!(p.values()[0], 1.0);
            assert!(p.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn bessel3_until_reaches_level() {
        let mut rng = rng_from_seed(4);
        let (p, ok) = bessel3_until(0.0, 2.0, 1e-3, 10_000_000, &mut rng).unwrap();
        assert!(ok);
        assert!(p.last_value() >= 2.0);
        assert!(p.values()[..p.len() - 1].iter().all(|&v| v < 2.0));
    }

    #[test]
    fn barrier_search_terminates() {
        let mut rng = rng_from_seed(8);
        let o = sq_bessel0_reaches(1.0, 2.0, &BarrierOptions::default(), &mut rng).unwrap();
        assert!(o.reached.is_some());
        let o = sq_bessel0_reaches(3.0, 2.0, &BarrierOptions::default(), &mut rng).unwrap();
        assert_eq!(o.reached, Some(true));
        assert_eq!(o.steps, 0);
    }
}
