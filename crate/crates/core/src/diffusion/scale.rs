//! Scale function `S(x) = ∫_0^x e^W` and its companion `E(x) = ∫_0^x e^{-W}`,
//! both exact on linear segments.

use crate::environment::integral::ln_phi;
use crate::environment::{Environment, Side};
use crate::error::{Error, Result};
use crate::path::SamplePath;

/// `ψ(d) = (e^d - 1 - d) / d²`, stable near 0.
pub fn psi(d: f64) -> f64 {
    if d.abs() < 1e-4 {
        0.5 + d / 6.0 + d * d / 24.0
    } else {
        (d.exp_m1() - d) / (d * d)
    }
}

/// `∫_0^len exp(w0 + d u / len) du` divided by `e^{w0}`, i.e. `len (e^d - 1) / d`.
fn seg_up(len: f64, d: f64) -> f64 {
    len * ln_phi(-d).exp()
}

/// Cumulative tables over the two-sided environment path.
#[derive(Debug, Clone)]
pub struct ScaleTable {
    xs: Vec<f64>,
    ws: Vec<f64>,
    s: Vec<f64>,
    e: Vec<f64>,
}

impl ScaleTable {
    pub fn new(env: &Environment) -> Self {
        Self::from_path(&env.two_sided_path())
    }

    pub fn from_path(p: &SamplePath) -> Self {
        let xs = p.positions().to_vec();
        let ws = p.values().to_vec();
        let n = xs.len();
        let i0 = xs.partition_point(|&x| x < 0.0);
        let mut s = vec![0.0; n];
        let mut e = vec![0.0; n];
        for k in i0..n.saturating_sub(1) {
            let (len, d) = (xs[k + 1] - xs[k], ws[k + 1] - ws[k]);
            s[k + 1] = s[k] + ws[k].exp() * seg_up(len, d);
            e[k + 1] = e[k] + (-ws[k]).exp() * seg_up(len, -d);
        }
        for k in (0..i0).rev() {
            let (len, d) = (xs[k + 1] - xs[k], ws[k + 1] - ws[k]);
            s[k] = s[k + 1] - ws[k].exp() * seg_up(len, d);
            e[k] = e[k + 1] - (-ws[k]).exp() * seg_up(len, -d);
        }
        ScaleTable { xs, ws, s, e }
    }

    pub fn range_x(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn range_s(&self) -> (f64, f64) {
        (self.s[0], *self.s.last().unwrap())
    }

    fn seg(&self, x: f64) -> usize {
        let n = self.xs.len();
        if n < 2 {
            return 0;
        }
        self.xs.partition_point(|&p| p <= x).saturating_sub(1).min(n - 2)
    }

    fn partial(&self, k: usize, x: f64, sign: f64) -> f64 {
        if self.xs.len() < 2 {
            return 0.0;
        }
        let len = self.xs[k + 1] - self.xs[k];
        let u = x - self.xs[k];
        if u <= 0.0 {
            return 0.0;
        }
        let slope = (self.ws[k + 1] - self.ws[k]) / len;
        (sign * self.ws[k]).exp() * seg_up(u, sign * slope * u)
    }

    /// `S(x)`; `x` must lie in the tabulated range.
    pub fn scale(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let k = self.seg(x);
        Ok(self.s[k] + self.partial(k, x, 1.0))
    }

    /// `E(x) = ∫_0^x e^{-W}`.
    pub fn neg_scale(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let k = self.seg(x);
        Ok(self.e[k] + self.partial(k, x, -1.0))
    }

    fn check(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.range_x();
        if x < lo || x > hi {
            Err(Error::OutOfDomain { x, lo, hi })
        } else {
            Ok(())
        }
    }

    /// `S⁻¹(s)` by bracketing and an exact solve inside the segment.
    pub fn scale_inverse(&self, s: f64) -> Result<f64> {
        let (lo, hi) = self.range_s();
        if s < lo || s > hi {
            return Err(Error::Domain(format!("scale value {s} outside [{lo}, {hi}]")));
        }
        let n = self.xs.len();
        if n < 2 {
            return Ok(self.xs[0]);
        }
        let k = self.s.partition_point(|&v| v <= s).saturating_sub(1).min(n - 2);
        let len = self.xs[k + 1] - self.xs[k];
        let slope = (self.ws[k + 1] - self.ws[k]) / len;
        let r = (s - self.s[k]) * (-self.ws[k]).exp();
        let u = if (slope * len).abs() < 1e-12 { r } else { (slope * r).ln_1p() / slope };
        Ok((self.xs[k] + u).clamp(self.xs[k], self.xs[k + 1]))
    }

    pub fn positions(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ws
    }
}

/// `S(x)`, extending the environment until it covers `x`.
pub fn scale(env: &mut Environment, x: f64) -> Result<f64> {
    let side = if x >= 0.0 { Side::Right } else { Side::Left };
    if !env.ensure(side, x.abs()) {
        return Err(Error::Horizon(format!("environment budget exhausted before reaching {x}")));
    }
    ScaleTable::new(env).scale(x)
}

/// `S⁻¹(s)`, extending the environment until its scale range covers `s`.
pub fn scale_inverse(env: &mut Environment, s: f64) -> Result<f64> {
    let side = if s >= 0.0 { Side::Right } else { Side::Left };
    loop {
        let t = ScaleTable::new(env);
        let (lo, hi) = t.range_s();
        if s >= lo && s <= hi {
            return t.scale_inverse(s);
        }
        let chunk = env.side(side).len().max(1024);
        if !env.extend(side, chunk) {
            return Err(Error::Horizon(format!("environment budget exhausted before scale {s}")));
        }
    }
}
