//! Integrals of `exp(-W(x) + W(m))` over pieces of the environment.

use super::{Decomposition, Environment, Side};
use crate::error::Result;
use crate::path::SamplePath;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpIntegral {
    pub value: f64,
    /// Natural log of `value`, finite even when `value` overflows.
    pub ln_value: f64,
    /// Set when `a > b`; the value is then 0.
    pub reversed: bool,
}

/// `ln((1 - e^{-d}) / d)`, stable for all `d`.
pub fn ln_phi(d: f64) -> f64 {
    if d.abs() < 1e-10 {
        -0.5 * d
    } else if d > 0.0 {
        (-(-d).exp_m1() / d).ln()
    } else {
        let u = -d;
        u + (-(-u).exp_m1() / u).ln()
    }
}

/// Exact integral of `exp(-W(x) + W(m))` over `[a, b]` on a path.
pub fn exp_integral_on(path: &SamplePath, a: f64, b: f64, m: f64) -> Result<ExpIntegral> {
    path.check(m)?;
    if a > b {
        return Ok(ExpIntegral { value: 0.0, ln_value: f64::NEG_INFINITY, reversed: true });
    }
    path.check(a)?;
    path.check(b)?;
    let wm = path.value_at(m);
    let mut lns = Vec::new();
    for p in path.pieces_from(a) {
        if p.x0 >= b {
            break;
        }
        let (x1, w1) = if p.x1 > b { (b, path.value_at(b)) } else { (p.x1, p.w1) };
        let len = x1 - p.x0;
        if len > 0.0 {
            lns.push(len.ln() + (wm - p.w0) + ln_phi(w1 - p.w0));
        }
    }
    Ok(sum_exp(&lns))
}

fn sum_exp(lns: &[f64]) -> ExpIntegral {
    if lns.is_empty() {
        return ExpIntegral { value: 0.0, ln_value: f64::NEG_INFINITY, reversed: false };
    }
    let top = lns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top < 700.0 {
        // Neumaier compensated sum
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for &l in lns {
            let t = l.exp();
            let u = s + t;
            c += if s.abs() >= t.abs() { (s - u) + t } else { (t - u) + s };
            s = u;
        }
        let value = s + c;
        return ExpIntegral { value, ln_value: value.ln(), reversed: false };
    }
    let scaled: f64 = lns.iter().map(|l| (l - top).exp()).sum();
    let ln_value = top + scaled.ln();
    ExpIntegral { value: ln_value.exp(), ln_value, reversed: false }
}

/// [`exp_integral_on`] for one side of an environment.
pub fn exp_integral(env: &Environment, side: Side, a: f64, b: f64, m: f64) -> Result<ExpIntegral> {
    exp_integral_on(env.side(side), a, b, m)
}

/// The four valley integrals around `m-_1` and `m+` on both sides, their
/// minimum `i_v` and their sum `I_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichIntegrals {
    pub minus: f64,
    pub plus: f64,
    pub minus_hat: f64,
    pub plus_hat: f64,
    pub min: f64,
    pub sum: f64,
}

impl SandwichIntegrals {
    /// `None` when a needed point is missing from the decomposition.
    pub fn compute(env: &Environment, d: &Decomposition) -> Result<Option<Self>> {
        let mut vals = [0.0; 4];
        for (k, side) in Side::BOTH.into_iter().enumerate() {
            let s = d.side(side);
            let (Some(mv), Some(pv)) = (s.minus(1), s.plus) else { return Ok(None) };
            vals[2 * k] = exp_integral(env, side, mv.a, mv.b, mv.m)?.value;
            vals[2 * k + 1] = exp_integral(env, side, pv.a, pv.b, pv.m)?.value;
        }
        let [minus, plus, minus_hat, plus_hat] = vals;
        Ok(Some(SandwichIntegrals {
            minus,
            plus,
            minus_hat,
            plus_hat,
            min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            sum: vals.iter().sum(),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_e1() {
        let flat = SamplePath::flat(1.0, 0.25).unwrap();
        assert!((exp_integral_on(&flat, 0.0, 1.0, 0.5).unwrap().value - 1.0).abs() < 1e-15);
        let e1 = SamplePath::from_knots(&[(0.0, 0.0), (1.0, -3.0), (2.0, 1.0), (3.0, -5.0), (4.0, 2.0)])
            .unwrap();
        let v = exp_integral_on(&e1, 1.0, 1.5, 1.0).unwrap();
        assert!((v.value - (1.0 - (-2.0f64).exp()) / 4.0).abs() < 1e-15);
        let r = exp_integral_on(&e1, 2.0, 1.0, 1.0).unwrap();
        assert!(r.reversed && r.value == 0.0);
    }

    #[test]
    fn log_domain_for_huge_values() {
        let p = SamplePath::from_knots(&[(0.0, 0.0), (1.0, -800.0), (2.0, -800.0)]).unwrap();
        let v = exp_integral_on(&p, 1.0, 2.0, 0.0).unwrap();
        assert!(v.value.is_infinite());
        assert!((v.ln_value - 800.0).abs() < 1e-9);
    }

    #[test]
    fn ln_phi_is_smooth() {
        for d in [-50.0_f64, -1.0, -1e-9, 0.0, 1e-9, 1.0, 50.0] {
            let direct = if d == 0.0 { 1.0 } else { -(-d).exp_m1() / d };
            assert!((ln_phi(d).exp() - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }
}
