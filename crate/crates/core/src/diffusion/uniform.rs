//! The literal construction: the driver sampled on a regular grid, `X` at
//! driver knots through `S⁻¹`, and `T` by the trapezoid rule.

use super::field::{BinAcc, Estimator, LocalTimeField, Neumaier};
use super::scale::ScaleTable;
use crate::environment::{Environment, Side};
use crate::error::{Error, Result};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `(x0, x1, b0, b1, dt, ds)` of one driver segment.
type Segment = (f64, f64, f64, f64, f64, f64);

#[derive(Debug, Clone)]
pub struct UniformDriver {
    step: f64,
    rng: ChaCha8Rng,
    /// Driver values on the grid `k·step`.
    bs: Vec<f64>,
    /// `X` at driver knots.
    xs: Vec<f64>,
    /// `T` at driver knots.
    ts: Vec<f64>,
    /// `e^{-2W(X)}` at driver knots.
    rate: Vec<f64>,
    max_knots: usize,
}

/// Extend the environment until its scale range covers `s`.
fn cover_scale(env: &mut Environment, table: &mut ScaleTable, s: f64) -> Result<()> {
    loop {
        let (lo, hi) = table.range_s();
        if s >= lo && s <= hi {
            return Ok(());
        }
        let side = if s > hi { Side::Right } else { Side::Left };
        let chunk = env.side(side).len().max(4096);
        if !env.extend(side, chunk) {
            return Err(Error::Horizon(format!("environment budget exhausted before scale {s}")));
        }
        *table = ScaleTable::new(env);
    }
}

impl UniformDriver {
    pub fn new(step: f64, rng: ChaCha8Rng, max_knots: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParams(format!("driver step must be positive, got {step}")));
        }
        Ok(UniformDriver {
            step,
            rng,
            bs: vec![0.0],
            xs: vec![0.0],
            ts: vec![0.0],
            rate: vec![1.0],
            max_knots: max_knots.max(2),
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.bs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bs.is_empty()
    }

    pub fn horizon_driver(&self) -> f64 {
        (self.bs.len() - 1) as f64 * self.step
    }

    pub fn horizon_diffusion(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn driver_values(&self) -> &[f64] {
        &self.bs
    }

    /// Append up to `k` driver knots; false once the budget is spent.
    pub fn extend(&mut self, env: &mut Environment, table: &mut ScaleTable, k: usize) -> Result<bool> {
        let room = self.max_knots.saturating_sub(self.bs.len());
        if room == 0 {
            return Ok(false);
        }
        let sd = self.step.sqrt();
        for _ in 0..k.min(room) {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            let b = self.bs[self.bs.len() - 1] + sd * z;
            cover_scale(env, table, b)?;
            let x = table.scale_inverse(b)?;
            let rate = (-2.0 * env.value(x)).exp();
            let t = self.ts[self.ts.len() - 1] + 0.5 * self.step * (self.rate[self.rate.len() - 1] + rate);
            self.bs.push(b);
            self.xs.push(x);
            self.ts.push(t);
            self.rate.push(rate);
        }
        Ok(true)
    }

    fn chunk(&self) -> usize {
        self.bs.len().max(1024)
    }

    pub fn ensure_driver(&mut self, env: &mut Environment, table: &mut ScaleTable, s: f64) -> Result<()> {
        while self.horizon_driver() < s {
            if !self.extend(env, table, self.chunk())? {
                return Err(Error::Horizon(format!("driver budget exhausted before driver time {s}")));
            }
        }
        Ok(())
    }

    pub fn ensure_time(&mut self, env: &mut Environment, table: &mut ScaleTable, t: f64) -> Result<()> {
        while self.horizon_diffusion() < t {
            if !self.extend(env, table, self.chunk())? {
                return Err(Error::Horizon(format!("driver budget exhausted before time {t}")));
            }
        }
        Ok(())
    }

    /// `T(s)` on the covered range, linear between knots.
    pub fn time_change(&self, s: f64) -> Result<f64> {
        if s < 0.0 || s > self.horizon_driver() {
            return Err(Error::Horizon(format!("driver time {s} beyond {}", self.horizon_driver())));
        }
        let (k, u) = self.locate_s(s);
        Ok(self.ts[k] + u * (self.ts[k + 1] - self.ts[k]))
    }

    fn locate_s(&self, s: f64) -> (usize, f64) {
        let n = self.bs.len();
        if n < 2 {
            return (0, 0.0);
        }
        let f = s / self.step;
        let k = (f.floor() as usize).min(n - 2);
        (k, (f - k as f64).clamp(0.0, 1.0))
    }

    /// Segment and fraction at diffusion time `t`.
    fn locate_t(&self, t: f64) -> Result<(usize, f64)> {
        if t < 0.0 || t > self.horizon_diffusion() {
            return Err(Error::Horizon(format!("time {t} beyond {}", self.horizon_diffusion())));
        }
        if self.ts.len() < 2 {
            return Ok((0, 0.0));
        }
        let k = self.ts.partition_point(|&v| v <= t).saturating_sub(1).min(self.ts.len() - 2);
        let dt = self.ts[k + 1] - self.ts[k];
        Ok((k, if dt > 0.0 { ((t - self.ts[k]) / dt).clamp(0.0, 1.0) } else { 0.0 }))
    }

    pub fn time_change_inverse(&self, t: f64) -> Result<f64> {
        let (k, u) = self.locate_t(t)?;
        Ok((k as f64 + u) * self.step)
    }

    pub fn driver_at(&self, s: f64) -> f64 {
        let (k, u) = self.locate_s(s);
        if self.bs.len() < 2 {
            return self.bs[0];
        }
        self.bs[k] + u * (self.bs[k + 1] - self.bs[k])
    }

    pub fn value(&self, table: &ScaleTable, t: f64) -> Result<f64> {
        let s = self.time_change_inverse(t)?;
        table.scale_inverse(self.driver_at(s))
    }

    /// Walk the driver segments up to time `t`, yielding
    /// `(x0, x1, b0, b1, dt, ds)` with the last one cut at `t`.
    fn segments(&self, table: &ScaleTable, t: f64) -> Result<Vec<Segment>> {
        let (kt, u) = self.locate_t(t)?;
        let mut out = Vec::with_capacity(kt + 1);
        for k in 0..kt {
            out.push((
                self.xs[k],
                self.xs[k + 1],
                self.bs[k],
                self.bs[k + 1],
                self.ts[k + 1] - self.ts[k],
                self.step,
            ));
        }
        if u > 0.0 && kt + 1 < self.bs.len() {
            let b1 = self.bs[kt] + u * (self.bs[kt + 1] - self.bs[kt]);
            let x1 = table.scale_inverse(b1)?;
            out.push((self.xs[kt], x1, self.bs[kt], b1, t - self.ts[kt], u * self.step));
        }
        Ok(out)
    }

    pub fn field(&self, table: &ScaleTable, t: f64, bin_width: f64, est: Estimator) -> Result<LocalTimeField> {
        let mut acc = BinAcc::new(bin_width)?;
        let segs = self.segments(table, t)?;
        let mut spread = 0.0f64;
        match est {
            Estimator::Direct => {
                for &(x0, x1, _, _, dt, _) in &segs {
                    let (lo, hi) = (x0.min(x1), x0.max(x1));
                    spread = spread.max(hi - lo);
                    let e0 = table.neg_scale(lo)?;
                    acc.spread(lo, hi, dt, |x| table.neg_scale(x).map(|e| e - e0).unwrap_or(0.0));
                }
                Ok(acc.into_field(t, est, bin_width < spread))
            }
            Estimator::Formula => {
                // Driver occupation in the scale image of each x-bin.
                for &(x0, x1, _, _, _, ds) in &segs {
                    let (lo, hi) = (x0.min(x1), x0.max(x1));
                    spread = spread.max(hi - lo);
                    let s0 = table.scale(lo)?;
                    acc.spread(lo, hi, ds, |x| table.scale(x).map(|s| s - s0).unwrap_or(0.0));
                }
                let w = acc.width();
                let mut bins = Vec::new();
                for (k, occ) in acc.masses() {
                    let (lo, hi) = acc.bounds(k);
                    let (lo, hi) = (lo.max(table.range_x().0), hi.min(table.range_x().1));
                    let ds = table.scale(hi)? - table.scale(lo)?;
                    let de = table.neg_scale(hi)? - table.neg_scale(lo)?;
                    let lb = if ds > 0.0 { occ / ds } else { 0.0 };
                    bins.push(super::field::Bin { x_center: (k as f64 + 0.5) * w, width: w, l: lb * de / w });
                }
                Ok(LocalTimeField { t, estimator: est, bins, under_resolved: bin_width < spread })
            }
        }
    }

    /// Occupation time of `[lo, hi]` up to time `t`.
    pub fn occupation(&self, table: &ScaleTable, t: f64, lo: f64, hi: f64) -> Result<f64> {
        let mut acc = Neumaier::default();
        for (x0, x1, _, _, dt, _) in self.segments(table, t)? {
            let (a, b) = (x0.min(x1), x0.max(x1));
            if b == a {
                if a >= lo && a < hi {
                    acc.add(dt);
                }
                continue;
            }
            let (c, d) = (a.max(lo), b.min(hi));
            if d <= c {
                continue;
            }
            let total = table.neg_scale(b)? - table.neg_scale(a)?;
            acc.add(dt * (table.neg_scale(d)? - table.neg_scale(c)?) / total);
        }
        Ok(acc.value())
    }

    /// First driver time at which the driver reaches `target`.
    pub fn hitting_driver_time(&mut self, env: &mut Environment, table: &mut ScaleTable, target: f64) -> Result<f64> {
        if target == 0.0 {
            return Ok(0.0);
        }
        let mut k = 1;
        loop {
            while k < self.bs.len() {
                let (b0, b1) = (self.bs[k - 1], self.bs[k]);
                if (target > 0.0 && b1 >= target) || (target < 0.0 && b1 <= target) {
                    let u = (target - b0) / (b1 - b0);
                    return Ok((k as f64 - 1.0 + u) * self.step);
                }
                k += 1;
            }
            if !self.extend(env, table, self.chunk())? {
                return Err(Error::Horizon(format!("driver never reaches scale {target} within budget")));
            }
        }
    }

    /// Driver time at which the driver's occupation of `[c - h/2, c + h/2]`
    /// divided by `h` reaches `level`; `None` if the budget runs out.
    /// Also returns the bracketing driver knots.
    pub fn inverse_local_time(
        &mut self,
        env: &mut Environment,
        table: &mut ScaleTable,
        c: f64,
        h: f64,
        level: f64,
    ) -> Result<(Option<f64>, (f64, f64))> {
        let (lo, hi) = (c - 0.5 * h, c + 0.5 * h);
        let need = level * h;
        let mut occ = 0.0;
        let mut k = 1;
        loop {
            while k < self.bs.len() {
                let (b0, b1) = (self.bs[k - 1], self.bs[k]);
                let (a, b) = (b0.min(b1), b0.max(b1));
                let inside = if b > a {
                    ((b.min(hi) - a.max(lo)).max(0.0)) / (b - a)
                } else if a >= lo && a <= hi {
                    1.0
                } else {
                    0.0
                };
                let add = inside * self.step;
                if add > 0.0 && occ + add >= need {
                    // occupation grows linearly in the part of the segment
                    // inside the bin; locate the crossing there
                    let frac = ((need - occ) / add).clamp(0.0, 1.0);
                    let (enter, leave) = if b > a {
                        let p = |y: f64| ((y - b0) / (b1 - b0)).clamp(0.0, 1.0);
                        let (u0, u1) = (p(lo), p(hi));
                        (u0.min(u1), u0.max(u1))
                    } else {
                        (0.0, 1.0)
                    };
                    let u = enter + frac * (leave - enter);
                    let s0 = (k - 1) as f64 * self.step;
                    return Ok((Some(s0 + u * self.step), (s0, s0 + self.step)));
                }
                occ += add;
                k += 1;
            }
            if !self.extend(env, table, self.chunk())? {
                let s = self.horizon_driver();
                return Ok((None, (s, s)));
            }
        }
    }
}
