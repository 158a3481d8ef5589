//! Binned local-time fields and their CSV export.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// `e^{-W}` times the driver's local time in scale space.
    Formula,
    /// Occupation time per bin divided by the bin width.
    Direct,
}

impl Estimator {
    pub fn tag(self) -> &'static str {
        match self {
            Estimator::Formula => "formula",
            Estimator::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub x_center: f64,
    pub width: f64,
    pub l: f64,
}

impl Bin {
    pub fn lo(&self) -> f64 {
        self.x_center - 0.5 * self.width
    }

    pub fn hi(&self) -> f64 {
        self.x_center + 0.5 * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeField {
    pub t: f64,
    pub estimator: Estimator,
    pub bins: Vec<Bin>,
    /// Raised when bins are narrower than the construction resolves.
    pub under_resolved: bool,
}

impl LocalTimeField {
    /// `Σ L·width`.
    pub fn total(&self) -> f64 {
        let mut acc = Neumaier::default();
        for b in &self.bins {
            acc.add(b.l * b.width);
        }
        acc.value()
    }

    /// Largest bin value.
    pub fn l_star(&self) -> f64 {
        self.bins.iter().map(|b| b.l).fold(0.0, f64::max)
    }

    /// Value of the bin holding `x` (0 outside the occupied range).
    pub fn value_at(&self, x: f64) -> f64 {
        let i = self.bins.partition_point(|b| b.hi() <= x);
        match self.bins.get(i) {
            Some(b) if b.lo() <= x => b.l,
            _ => 0.0,
        }
    }

    /// Bins whose centers lie in `[lo, hi]`.
    pub fn bins_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = &Bin> + '_ {
        self.bins.iter().filter(move |b| b.x_center >= lo && b.x_center <= hi)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x_center,width,L\n");
        for b in &self.bins {
            let _ = writeln!(s, "{},{},{}", b.x_center, b.width, b.l);
        }
        s
    }

    pub fn write_csv(&self, file: &Path) -> Result<()> {
        crate::io::write_atomic(file, self.to_csv().as_bytes())
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Growable accumulator over the aligned bins `[k w, (k+1) w)`.
#[derive(Debug, Clone)]
pub(crate) struct BinAcc {
    width: f64,
    first: i64,
    vals: Vec<Neumaier>,
}

impl BinAcc {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParams(format!("bin width must be positive, got {width}")));
        }
        Ok(BinAcc { width, first: 0, vals: Vec::new() })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn index(&self, x: f64) -> i64 {
        (x / self.width).floor() as i64
    }

    pub fn bounds(&self, k: i64) -> (f64, f64) {
        (k as f64 * self.width, (k + 1) as f64 * self.width)
    }

    pub fn add(&mut self, k: i64, mass: f64) {
        if self.vals.is_empty() {
            self.first = k;
        }
        if k < self.first {
            let grow = (self.first - k) as usize;
            let mut v = vec![Neumaier::default(); grow];
            v.append(&mut self.vals);
            self.vals = v;
            self.first = k;
        }
        let i = (k - self.first) as usize;
        if i >= self.vals.len() {
            self.vals.resize(i + 1, Neumaier::default());
        }
        self.vals[i].add(mass);
    }

    /// Spread mass over `[lo, hi]` using a cumulative measure `cum`
    /// (`cum(lo) = 0`, `cum(hi) = total`), scaling to `mass`.
    pub fn spread(&mut self, lo: f64, hi: f64, mass: f64, cum: impl Fn(f64) -> f64) {
        if mass == 0.0 {
            return;
        }
        let (k0, k1) = (self.index(lo), self.index(hi));
        if k0 == k1 || hi <= lo {
            self.add(k0, mass);
            return;
        }
        let total = cum(hi);
        if !(total > 0.0 && total.is_finite()) {
            self.add(k0, mass);
            return;
        }
        let mut prev = 0.0;
        for k in k0..=k1 {
            let edge = if k == k1 { hi } else { self.bounds(k).1 };
            let c = if k == k1 { total } else { cum(edge).clamp(prev, total) };
            self.add(k, mass * (c - prev) / total);
            prev = c;
        }
    }

    /// Occupation masses per bin.
    pub fn masses(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.vals.iter().enumerate().map(move |(i, v)| (self.first + i as i64, v.value()))
    }

    /// Field with `L = mass / width`.
    pub fn into_field(self, t: f64, estimator: Estimator, under_resolved: bool) -> LocalTimeField {
        let w = self.width;
        let bins = self
            .masses()
            .map(|(k, m)| Bin { x_center: (k as f64 + 0.5) * w, width: w, l: (m / w).max(0.0) })
            .collect();
        LocalTimeField { t, estimator, bins, under_resolved }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_conserves_mass() {
        let mut acc = BinAcc::new(0.1).unwrap();
        acc.spread(-0.25, 0.37, 2.0, |x| x + 0.25);
        let total: f64 = acc.masses().map(|(_, m)| m).sum();
        assert!((total - 2.0).abs() < 1e-14);
        let f = acc.into_field(2.0, Estimator::Direct, false);
        assert!((f.total() - 2.0).abs() < 1e-14);
        assert!((f.value_at(0.0) - 1.0 / 0.62 * 2.0).abs() < 1e-12);
        assert_eq!(f.value_at(5.0), 0.0);
    }

    #[test]
    fn csv_header() {
        let f = LocalTimeField {
            t: 1.0,
            estimator: Estimator::Direct,
            bins: vec![Bin { x_center: 0.5, width: 1.0, l: 1.0 }],
            under_resolved: false,
        };
        assert_eq!(f.to_csv(), "x_center,width,L\n0.5,1,1\n");
    }
}
