//! Piecewise-linear sample paths and the processes sampled onto them.
//!
//! A [`SamplePath`] is the common carrier for the environment, the driving
//! Brownian motion and the Bessel-type processes. Every functional in
//! [`functional`] is exact on the linear interpolation, so the knot spacing
//! is the only discretization parameter anywhere in the lab.

pub mod bessel;
pub mod functional;
pub mod io;
pub mod sample;

pub use bessel::{bessel_functionals, bessel_functionals_with_tail, BesselFunctionals};
pub use functional::{
    first_at_or_below, first_rise_after, hitting_time, last_at_or_below, last_rise_before, oscillation_first_exceed, reflect,
    OscillationMode,
};
pub use sample::{sample_bessel, sample_brownian, BesselKind, SamplerConfig};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Real path given by knots `(x_k, w_k)` with linear interpolation between
/// them. Positions are strictly increasing and values finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    xs: Vec<f64>,
    ws: Vec<f64>,
}

impl SamplePath {
    pub fn new(xs: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        if xs.len() != ws.len() {
            return Err(Error::Domain(format!(
                "{} positions but {} values",
                xs.len(),
                ws.len()
            )));
        }
        if xs.is_empty() {
            return Err(Error::Domain("a path needs at least one knot".into()));
        }
        for (i, (&x, &w)) in xs.iter().zip(&ws).enumerate() {
            if !x.is_finite() || !w.is_finite() {
                return Err(Error::Domain(format!("non-finite knot at index {i}")));
            }
            if i > 0 && x <= xs[i - 1] {
                return Err(Error::Domain(format!(
                    "positions not strictly increasing at index {i} ({} then {x})",
                    xs[i - 1]
                )));
            }
        }
        Ok(SamplePath { xs, ws })
    }

    pub fn from_knots(knots: &[(f64, f64)]) -> Result<Self> {
        let (xs, ws) = knots.iter().copied().unzip();
        Self::new(xs, ws)
    }

    pub fn single(x: f64, w: f64) -> Self {
        SamplePath { xs: vec![x], ws: vec![w] }
    }

    /// Constant path on `[0, extent]` with the given knot spacing.
    pub fn flat(extent: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(extent >= 0.0) {
            return Err(Error::InvalidParams("flat path needs step > 0, extent >= 0".into()));
        }
        let n = (extent / step).round() as usize;
        let xs: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
        let ws = vec![0.0; xs.len()];
        Ok(SamplePath { xs, ws })
    }

    // Caller guarantees the invariants.
    pub(crate) fn from_parts_unchecked(xs: Vec<f64>, ws: Vec<f64>) -> Self {
        debug_assert!(Self::new(xs.clone(), ws.clone()).is_ok());
        SamplePath { xs, ws }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ws
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ws.iter().copied())
    }

    pub fn start(&self) -> f64 {
        self.xs[0]
    }

    pub fn end(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn last_value(&self) -> f64 {
        *self.ws.last().unwrap()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start() && x <= self.end()
    }

    pub(crate) fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x, lo: self.start(), hi: self.end() })
        }
    }

    /// Index `k` of the segment `[x_k, x_{k+1}]` holding `x`; the right
    /// endpoint belongs to the last segment. Single-knot paths return 0.
    pub fn segment_index(&self, x: f64) -> usize {
        let n = self.xs.len();
        if n < 2 {
            return 0;
        }
        let k = self.xs.partition_point(|&p| p <= x);
        k.saturating_sub(1).min(n - 2)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.value_at(x))
    }

    /// Interpolated value; `x` is clamped into the domain.
    pub fn value_at(&self, x: f64) -> f64 {
        if self.xs.len() == 1 || x <= self.start() {
            return self.ws[0];
        }
        if x >= self.end() {
            return self.last_value();
        }
        let k = self.segment_index(x);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        if x == x0 {
            return self.ws[k];
        }
        let (w0, w1) = (self.ws[k], self.ws[k + 1]);
        w0 + (w1 - w0) * ((x - x0) / (x1 - x0))
    }

    pub(crate) fn push(&mut self, x: f64, w: f64) {
        debug_assert!(x > self.end() && w.is_finite());
        self.xs.push(x);
        self.ws.push(w);
    }

    /// Linear pieces covering `[from, end]`, the first one starting at `from`.
    pub fn pieces_from(&self, from: f64) -> impl Iterator<Item = Piece> + '_ {
        let n = self.xs.len();
        let k0 = self.segment_index(from);
        let w_from = self.value_at(from);
        (k0..n.saturating_sub(1)).filter_map(move |k| {
            let (x0, w0) = if k == k0 { (from, w_from) } else { (self.xs[k], self.ws[k]) };
            let (x1, w1) = (self.xs[k + 1], self.ws[k + 1]);
            (x1 > x0).then_some(Piece { x0, w0, x1, w1 })
        })
    }

    /// Linear pieces covering `[start, to]` walked from right to left; each
    /// piece is still reported with `x0 < x1`.
    pub fn pieces_back_from(&self, to: f64) -> impl Iterator<Item = Piece> + '_ {
        let k0 = self.segment_index(to);
        let w_to = self.value_at(to);
        let last = if self.xs.len() < 2 { None } else { Some(k0) };
        last.into_iter().flat_map(move |k0| {
            (0..=k0).rev().filter_map(move |k| {
                let (x1, w1) = if k == k0 { (to, w_to) } else { (self.xs[k + 1], self.ws[k + 1]) };
                let (x0, w0) = (self.xs[k], self.ws[k]);
                (x1 > x0).then_some(Piece { x0, w0, x1, w1 })
            })
        })
    }

    /// Minimum over `[a, b]`; `+inf` when `a > b`.
    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        if a > b {
            return f64::INFINITY;
        }
        self.argmin(a, b).1
    }

    /// Maximum over `[a, b]`; `-inf` when `a > b`.
    pub fn max_on(&self, a: f64, b: f64) -> f64 {
        if a > b {
            return f64::NEG_INFINITY;
        }
        self.argmax(a, b).1
    }

    /// Smallest position attaining the minimum over `[a, b]` (clamped to the
    /// domain), with the minimum value.
    pub fn argmin(&self, a: f64, b: f64) -> (f64, f64) {
        self.arg_extreme(a, b, |cand, best| cand < best)
    }

    /// Smallest position attaining the maximum over `[a, b]`.
    pub fn argmax(&self, a: f64, b: f64) -> (f64, f64) {
        self.arg_extreme(a, b, |cand, best| cand > best)
    }

    fn arg_extreme(&self, a: f64, b: f64, better: impl Fn(f64, f64) -> bool) -> (f64, f64) {
        let a = a.clamp(self.start(), self.end());
        let b = b.clamp(a, self.end());
        let mut best = (a, self.value_at(a));
        let lo = self.xs.partition_point(|&p| p <= a);
        let hi = self.xs.partition_point(|&p| p < b);
        for k in lo..hi {
            if better(self.ws[k], best.1) {
                best = (self.xs[k], self.ws[k]);
            }
        }
        let wb = self.value_at(b);
        if better(wb, best.1) {
            best = (b, wb);
        }
        best
    }

    /// Same path with positions multiplied by `factor > 0`.
    pub fn stretched(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidParams("stretch factor must be positive".into()));
        }
        Self::new(self.xs.iter().map(|x| x * factor).collect(), self.ws.clone())
    }

    /// Same path with every segment split into equal pieces no longer than
    /// `max_gap`.
    pub fn refined(&self, max_gap: f64) -> Result<Self> {
        if !(max_gap > 0.0) {
            return Err(Error::InvalidParams("refinement gap must be positive".into()));
        }
        let mut xs = vec![self.xs[0]];
        let mut ws = vec![self.ws[0]];
        for k in 1..self.xs.len() {
            let (x0, x1, w0, w1) = (self.xs[k - 1], self.xs[k], self.ws[k - 1], self.ws[k]);
            let n = ((x1 - x0) / max_gap).ceil().max(1.0) as usize;
            for j in 1..=n {
                let u = j as f64 / n as f64;
                xs.push(if j == n { x1 } else { x0 + u * (x1 - x0) });
                ws.push(if j == n { w1 } else { w0 + u * (w1 - w0) });
            }
        }
        Self::new(xs, ws)
    }

    /// Same path with positions shifted by `dx`.
    pub fn shifted(&self, dx: f64) -> Result<Self> {
        Self::new(self.xs.iter().map(|x| x + dx).collect(), self.ws.clone())
    }

    /// Path restricted to `[a, b]`, with interpolated end knots.
    pub fn restricted(&self, a: f64, b: f64) -> Result<Self> {
        self.check(a)?;
        self.check(b)?;
        if a > b {
            return Err(Error::Domain(format!("empty restriction [{a}, {b}]")));
        }
        let mut xs = vec![a];
        let mut ws = vec![self.value_at(a)];
        for (x, w) in self.knots() {
            if x > a && x < b {
                xs.push(x);
                ws.push(w);
            }
        }
        if b > a {
            xs.push(b);
            ws.push(self.value_at(b));
        }
        Ok(SamplePath { xs, ws })
    }

    /// Mutable access for in-crate refinement.
    pub(crate) fn parts_mut(&mut self) -> (&mut Vec<f64>, &mut Vec<f64>) {
        (&mut self.xs, &mut self.ws)
    }
}

/// One linear piece of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub x0: f64,
    pub w0: f64,
    pub x1: f64,
    pub w1: f64,
}

impl Piece {
    /// Position inside the piece where the value equals `level`, which
    /// must lie between the end values.
    pub fn solve(&self, level: f64) -> f64 {
        if level == self.w0 {
            return self.x0;
        }
        if level == self.w1 {
            return self.x1;
        }
        let x = self.x0 + (level - self.w0) / (self.w1 - self.w0) * (self.x1 - self.x0);
        x.clamp(self.x0, self.x1)
    }

    pub fn len(&self) -> f64 {
        self.x1 - self.x0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> SamplePath {
        SamplePath::from_knots(&[(0.0, 0.0), (1.0, -3.0), (2.0, 1.0), (3.0, -5.0), (4.0, 2.0)])
            .unwrap()
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(SamplePath::from_knots(&[(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(SamplePath::from_knots(&[(0.0, f64::NAN)]).is_err());
        assert!(SamplePath::from_knots(&[]).is_err());
    }

    #[test]
    fn interpolates() {
        let p = e1();
        assert_eq!(p.eval(0.5).unwrap(), -1.5);
        assert_eq!(p.eval(4.0).unwrap(), 2.0);
        assert_eq!(p.eval(2.0).unwrap(), 1.0);
        assert!(p.eval(4.5).is_err());
    }

    #[test]
    fn extremes_with_ties_take_smallest_position() {
        let p = SamplePath::from_knots(&[(0.0, 0.0), (1.0, -1.0), (2.0, 0.0), (3.0, -1.0)]).unwrap();
        assert_eq!(p.argmin(0.0, 3.0), (1.0, -1.0));
        assert_eq!(p.argmax(0.5, 3.0), (2.0, 0.0));
        assert_eq!(p.argmin(1.5, 2.5), (1.5, -0.5));
        assert_eq!(p.argmin(1.6, 2.5), (2.5, -0.5));
        assert_eq!(p.min_on(2.0, 1.0), f64::INFINITY);
        assert_eq!(p.max_on(2.0, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn pieces_cover_the_tail() {
        let p = e1();
        let pieces: Vec<_> = p.pieces_from(1.5).collect();
        assert_eq!(pieces.len(), 3);
        assert_eq!(pieces[0], Piece { x0: 1.5, w0: -1.0, x1: 2.0, w1: 1.0 });
        let back: Vec<_> = p.pieces_back_from(1.5).collect();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], Piece { x0: 1.0, w0: -3.0, x1: 1.5, w1: -1.0 });
    }

    #[test]
    fn restriction_keeps_interior_knots() {
        let r = e1().restricted(0.5, 2.5).unwrap();
        assert_eq!(r.positions(), &[0.5, 1.0, 2.0, 2.5]);
        assert_eq!(r.values(), &[-1.5, -3.0, 1.0, -2.0]);
    }
}
