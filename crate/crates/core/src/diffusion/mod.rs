//! The diffusion `X = S⁻¹ ∘ B ∘ T⁻¹` built from an environment and a driver.
//!
//! Two constructions share one interface. [`Construction::Uniform`] samples
//! the driver on a regular grid and integrates `T` by the trapezoid rule;
//! it is the literal recipe and works when the environment stays shallow.
//! [`Construction::Skeleton`] follows the driver between hits of the scale
//! images of the environment knots ([`skeleton`]), which keeps the cost per
//! unit of diffusion time bounded in deep valleys.

pub mod events;
pub mod field;
pub mod scale;
pub mod skeleton;
pub mod uniform;

pub use events::{composite_sigma, profile_events, Composite, ProfileFlags, BOTTOM_LABELS};
pub use field::{Bin, Estimator, LocalTimeField, Neumaier};
pub use scale::{scale, scale_inverse, ScaleTable};
pub use skeleton::{Outcome, Reflect, SkeletonRun, Stop, StopReason};
pub use uniform::UniformDriver;

use crate::environment::Environment;
use crate::error::{Error, Result};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default cap on skeleton steps per run.
pub const DEFAULT_MAX_STEPS: u64 = 400_000_000;
/// Default cap on uniform driver knots.
pub const DEFAULT_MAX_DRIVER_KNOTS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    Skeleton,
    Uniform { driver_step: f64 },
}

/// A stopping time with its status.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingTime {
    pub value: f64,
    pub reached: bool,
    /// Diffusion times bracketing the crossing.
    pub bracket: (f64, f64),
}

/// Realization metadata for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationMeta {
    pub construction: Construction,
    pub env_seed: Option<u64>,
    pub env_step: Option<f64>,
    pub max_steps: u64,
    pub horizon_diffusion_time: f64,
}

#[derive(Debug, Clone)]
pub struct DiffusionRealization {
    env: Environment,
    driver: ChaCha8Rng,
    construction: Construction,
    reflect: Reflect,
    max_steps: u64,
    table: ScaleTable,
    uniform: Option<UniformDriver>,
}

impl DiffusionRealization {
    pub fn new(env: Environment, driver: ChaCha8Rng, construction: Construction) -> Result<Self> {
        let uniform = match construction {
            Construction::Skeleton => None,
            Construction::Uniform { driver_step } => {
                Some(UniformDriver::new(driver_step, driver.clone(), DEFAULT_MAX_DRIVER_KNOTS)?)
            }
        };
        let table = ScaleTable::new(&env);
        Ok(DiffusionRealization {
            env,
            driver,
            construction,
            reflect: Reflect::default(),
            max_steps: DEFAULT_MAX_STEPS,
            table,
            uniform,
        })
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        if let Some(u) = &mut self.uniform {
            let step = u.step();
            *u = UniformDriver::new(step, self.driver.clone(), max_steps as usize).expect("step validated");
        }
        self
    }

    /// Reflecting barriers for the skeleton construction.
    pub fn with_reflect(mut self, reflect: Reflect) -> Result<Self> {
        if self.uniform.is_some() && reflect != Reflect::default() {
            return Err(Error::InvalidParams("barriers need the skeleton construction".into()));
        }
        self.reflect = reflect;
        Ok(self)
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn meta(&self) -> RealizationMeta {
        RealizationMeta {
            construction: self.construction,
            env_seed: self.env.seed(),
            env_step: self.env.step(),
            max_steps: self.max_steps,
            horizon_diffusion_time: self.uniform.as_ref().map_or(0.0, |u| u.horizon_diffusion()),
        }
    }

    /// A fresh skeleton walk replaying this realization from time 0.
    pub fn skeleton(&self) -> Result<SkeletonRun> {
        SkeletonRun::new(self.env.clone(), self.driver.clone(), self.reflect, self.max_steps)
    }

    fn run(&self, stop: &Stop) -> Result<(SkeletonRun, Outcome)> {
        let mut r = self.skeleton()?;
        let o = r.advance(stop);
        Ok((r, o))
    }

    fn refresh_table(&mut self) {
        self.table = ScaleTable::new(&self.env);
    }

    fn uniform_parts(&mut self) -> (&mut UniformDriver, &mut Environment, &mut ScaleTable) {
        (self.uniform.as_mut().expect("uniform construction"), &mut self.env, &mut self.table)
    }

    pub fn scale(&mut self, x: f64) -> Result<f64> {
        let s = scale(&mut self.env, x)?;
        self.refresh_table();
        Ok(s)
    }

    pub fn scale_inverse(&mut self, s: f64) -> Result<f64> {
        let x = scale_inverse(&mut self.env, s)?;
        self.refresh_table();
        Ok(x)
    }

    /// `T(s)`.
    pub fn time_change(&mut self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::Domain(format!("driver time must be nonnegative, got {s}")));
        }
        if self.uniform.is_some() {
            let (u, env, table) = self.uniform_parts();
            u.ensure_driver(env, table, s)?;
            return u.time_change(s);
        }
        let (_, o) = self.run(&Stop { driver_time: Some(s), ..Default::default() })?;
        if !o.reason.reached() {
            return Err(Error::Horizon(format!("driver time {s} not reached within budget")));
        }
        Ok(o.time)
    }

    /// `T⁻¹(t)`.
    pub fn time_change_inverse(&mut self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        if self.uniform.is_some() {
            let (u, env, table) = self.uniform_parts();
            u.ensure_time(env, table, t)?;
            return u.time_change_inverse(t);
        }
        let (_, o) = self.reached(t)?;
        Ok(o.driver_time)
    }

    fn reached(&self, t: f64) -> Result<(SkeletonRun, Outcome)> {
        let (r, o) = self.run(&Stop::at_time(t))?;
        if !o.reason.reached() {
            return Err(Error::Horizon(format!("time {t} not reached within budget")));
        }
        Ok((r, o))
    }

    /// `X(t)`.
    pub fn diffusion_value(&mut self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        if self.uniform.is_some() {
            let (u, env, table) = self.uniform_parts();
            u.ensure_time(env, table, t)?;
            return u.value(table, t);
        }
        Ok(self.reached(t)?.1.position)
    }

    /// Local-time field at time `t`.
    pub fn local_time_field(&mut self, t: f64, bin_width: f64, estimator: Estimator) -> Result<LocalTimeField> {
        if !(bin_width > 0.0) {
            return Err(Error::InvalidParams(format!("bin width must be positive, got {bin_width}")));
        }
        if self.uniform.is_some() {
            let (u, env, table) = self.uniform_parts();
            u.ensure_time(env, table, t)?;
            return u.field(table, t, bin_width, estimator);
        }
        self.reached(t)?.0.field(bin_width, estimator)
    }

    /// Occupation time of `[lo, hi]` up to `t`.
    pub fn occupation(&mut self, t: f64, lo: f64, hi: f64) -> Result<f64> {
        if self.uniform.is_some() {
            let (u, env, table) = self.uniform_parts();
            u.ensure_time(env, table, t)?;
            return u.occupation(table, t, lo, hi);
        }
        Ok(self.reached(t)?.0.occupation(lo, hi))
    }

    /// `sup_x L(t, x)`; on the skeleton this is the knot maximum, on the
    /// uniform driver the maximum of the direct field at `bin_width`.
    pub fn l_star(&mut self, t: f64, bin_width: f64) -> Result<f64> {
        if self.uniform.is_some() {
            return Ok(self.local_time_field(t, bin_width, Estimator::Direct)?.l_star());
        }
        Ok(self.reached(t)?.0.l_star())
    }

    /// `T(τ_B(S(x)))`.
    pub fn hitting_time_diffusion(&mut self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        if self.uniform.is_some() {
            let target = self.scale(x)?;
            let (u, env, table) = self.uniform_parts();
            let s = u.hitting_driver_time(env, table, target)?;
            return u.time_change(s);
        }
        let (_, o) = self.run(&Stop { hit: Some(x), ..Default::default() })?;
        if o.reason != StopReason::Hit {
            return Err(Error::Horizon(format!("level {x} not hit within budget")));
        }
        Ok(o.time)
    }

    /// `σ(r, y) = T(σ_B(r e^{W(y)}, S(y)))`. The skeleton uses the knot
    /// nearest to `y` and ignores `bin_width`.
    pub fn inverse_local_time(&mut self, r: f64, y: f64, bin_width: f64) -> Result<StoppingTime> {
        if !(r > 0.0) {
            return Err(Error::InvalidParams(format!("local-time level must be positive, got {r}")));
        }
        if self.uniform.is_some() {
            let c = self.scale(y)?;
            let wy = self.env.value(y);
            let h = bin_width * wy.exp();
            let (u, env, table) = self.uniform_parts();
            let (s, (b0, b1)) = u.inverse_local_time(env, table, c, h, r * wy.exp())?;
            let bracket = (u.time_change(b0)?, u.time_change(b1)?);
            return Ok(match s {
                Some(s) => StoppingTime { value: u.time_change(s)?, reached: true, bracket },
                None => StoppingTime { value: bracket.1, reached: false, bracket },
            });
        }
        let (_, o) = self.run(&Stop { local_time: vec![(y, r)], ..Default::default() })?;
        Ok(StoppingTime { value: o.time, reached: o.reason.reached(), bracket: (o.time, o.time) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Side;
    use crate::seed::rng_from_seed;

    fn uniform_flat(seed: u64) -> DiffusionRealization {
        let flat = Environment::flat(50.0, 0.01).unwrap();
        DiffusionRealization::new(flat, rng_from_seed(seed), Construction::Uniform { driver_step: 1e-4 }).unwrap()
    }

    #[test]
    fn flat_uniform_is_the_driver() {
        let mut d = uniform_flat(1);
        assert!((d.time_change(0.37).unwrap() - 0.37).abs() < 1e-12);
        assert!((d.time_change_inverse(0.5).unwrap() - 0.5).abs() < 1e-12);
        let x = d.diffusion_value(0.5).unwrap();
        let b = d.uniform.as_ref().unwrap().driver_at(0.5);
        assert!((x - b).abs() < 1e-9, "{x} {b}");
        assert_eq!(d.diffusion_value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn uniform_fields_normalize() {
        let mut d = uniform_flat(2);
        let f = d.local_time_field(1.0, 0.05, Estimator::Direct).unwrap();
        assert!((f.total() - 1.0).abs() < 1e-9);
        let g = d.local_time_field(1.0, 0.05, Estimator::Formula).unwrap();
        assert!((g.total() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_hitting_is_consistent() {
        let mut d = uniform_flat(3);
        let t = d.hitting_time_diffusion(0.3).unwrap();
        assert!((d.diffusion_value(t).unwrap() - 0.3).abs() < 1e-6);
    }

    #[test]
    fn plateau_time_change() {
        let w = -(2f64.ln()) / 2.0;
        let right = crate::path::SamplePath::from_knots(&[(0.0, 0.0), (1e-9, w), (100.0, w)]).unwrap();
        let left = crate::path::SamplePath::from_knots(&[(0.0, 0.0), (1e-9, w), (100.0, w)]).unwrap();
        let env = Environment::from_sides(right, left).unwrap();
        let mut d = DiffusionRealization::new(env, rng_from_seed(4), Construction::Uniform { driver_step: 1e-4 })
            .unwrap();
        let s = 0.5;
        let t = d.time_change(s).unwrap();
        assert!((t / s - (-2.0 * w).exp()).abs() < 1e-3, "{}", t / s);
    }

    #[test]
    fn skeleton_round_trips() {
        let mut env = Environment::brownian(5, 0.05).unwrap();
        env.ensure(Side::Right, 3.0);
        let mut d = DiffusionRealization::new(env, rng_from_seed(6), Construction::Skeleton).unwrap();
        let t = d.time_change(0.8).unwrap();
        let s = d.time_change_inverse(t).unwrap();
        assert!((s - 0.8).abs() < 1e-9 * 0.8_f64.max(1.0));
        let h = d.hitting_time_diffusion(0.5).unwrap();
        assert!((d.diffusion_value(h).unwrap() - 0.5).abs() < 1e-6);
        let a = d.inverse_local_time(0.5, 0.0, 0.05).unwrap();
        let b = d.inverse_local_time(0.9, 0.0, 0.05).unwrap();
        assert!(a.reached && b.reached && b.value >= a.value);
    }
}
