//! Valley decomposition.
//!
//! With rise thresholds `b = v - c1 log v`, `a = v - c2 log v` and
//! `c = v + c3 log v`, each side of the environment carries
//!
//! * the minus sequence: `b_0 = 0`, `b_{i+1}` the first point after `b_i`
//!   where `W` rises `b` above its running minimum, `m_{i+1}` the argmin on
//!   `[b_i, b_{i+1}]`, and `a_i` the last point before `m_i` at height
//!   `W(m_i) + a`, floored at `b_{i-1}`;
//! * the plus valley: `c+` the first point where the oscillation above the
//!   running minimum reaches `c`, `m+` the argmin on `[0, c+]`, `b+` the
//!   first rise of `b` after `m+`, `a+` the last rise of `a` before `m+`,
//!   floored at 0.
//!
//! The left side applies the same definitions to the reversed environment.

use super::{Environment, Lazy, Scan, Side};
use crate::error::{Error, Result};
use crate::path::functional::{first_rise_after, last_rise_before, oscillation_first_exceed, OscillationMode};
use crate::path::SamplePath;
use serde::{Deserialize, Serialize};

/// The free parameters `v, c1, c2, c3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub v: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Thresholds {
    /// Validated thresholds.
    pub fn new(v: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let t = Thresholds { v, c1, c2, c3 };
        t.validate()?;
        Ok(t)
    }

    /// Standard schedule `c1 = 2c + 8`, `c2 = c + 6`, `c3 = c + 2`.
    pub fn from_c(v: f64, c: f64) -> Result<Self> {
        let (c1, c2, c3) = schedule(c);
        Self::new(v, c1, c2, c3)
    }

    pub fn validate(&self) -> Result<()> {
        let Thresholds { v, c1, c2, c3 } = *self;
        if !(v > 1.0) || !v.is_finite() {
            return Err(Error::InvalidParams(format!("v must exceed 1, got {v}")));
        }
        let l = v.ln();
        let checks = [
            ("v - c1 log v", "c1", c1, v - c1 * l),
            ("v - c2 log v", "c2", c2, v - c2 * l),
            ("v + c3 log v", "c3", c3, v + c3 * l),
        ];
        for (expr, name, c, val) in checks {
            if !(val > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{expr} = {v} {} {}*log({v}) = {val:.4} must be > 0 ({name} = {c})",
                    if expr.contains('+') { "+" } else { "-" },
                    c.abs()
                )));
            }
        }
        Ok(())
    }

    pub fn rises(&self) -> Rises {
        let l = self.v.ln();
        Rises { b: self.v - self.c1 * l, a: self.v - self.c2 * l, c: self.v + self.c3 * l }
    }
}

/// `(c1, c2, c3)` from `c`.
pub fn schedule(c: f64) -> (f64, f64, f64) {
    (2.0 * c + 8.0, c + 6.0, c + 2.0)
}

/// Effective rise thresholds for `b`, `a` and `c` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rises {
    pub b: f64,
    pub a: f64,
    pub c: f64,
}

impl Rises {
    pub fn validate(&self) -> Result<()> {
        if self.b > 0.0 && self.a > 0.0 && self.c > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("rise thresholds must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValleyPair {
    pub b: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinusValley {
    pub b: f64,
    pub m: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlusValley {
    pub c: f64,
    pub m: f64,
    pub b: f64,
    pub a: f64,
}

/// Up to `count` pairs of the minus sequence on a fixed path; the flag is
/// true when all `count` were found.
pub fn valley_pairs_on(path: &SamplePath, threshold: f64, count: usize) -> Result<(Vec<ValleyPair>, bool)> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParams(format!("depth threshold must be positive, got {threshold}")));
    }
    let mut out = Vec::with_capacity(count);
    let mut b_prev = 0.0;
    while out.len() < count {
        match oscillation_first_exceed(path, b_prev, threshold, OscillationMode::AboveRunningMin)? {
            Some(b) => {
                let (m, _) = path.argmin(b_prev, b);
                out.push(ValleyPair { b, m });
                b_prev = b;
            }
            None => return Ok((out, false)),
        }
    }
    Ok((out, true))
}

/// Minus sequence `(b_i, m_i)`, extending the environment as needed.
pub fn valley_sequence(
    env: &mut Environment,
    side: Side,
    threshold: f64,
    count: usize,
) -> Result<Lazy<Vec<ValleyPair>>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParams(format!("depth threshold must be positive, got {threshold}")));
    }
    let mut err = None;
    let lazy = env.scan(side, |p| match valley_pairs_on(p, threshold, count) {
        Ok((v, true)) => Scan::Done(v),
        Ok((v, false)) => Scan::More(v),
        Err(e) => {
            err = Some(e);
            Scan::Done(Vec::new())
        }
    });
    err.map_or(Ok(lazy), Err)
}

/// `sup{x <= m : W(x) - W(m) >= rise} ∨ floor` on a path.
pub fn a_point_on(path: &SamplePath, m: f64, rise: f64, floor: f64) -> Result<f64> {
    if floor > m {
        return Err(Error::Domain(format!("floor {floor} exceeds m = {m}")));
    }
    Ok(last_rise_before(path, m, rise)?.map_or(floor, |x| x.max(floor)))
}

/// [`a_point_on`] for one side of an environment.
pub fn a_point(env: &Environment, side: Side, m: f64, rise: f64, floor: f64) -> Result<f64> {
    a_point_on(env.side(side), m, rise, floor)
}

/// Plus valley on a fixed path; `None` if some point lies beyond the domain.
pub fn plus_valley_on(path: &SamplePath, rises: &Rises) -> Result<Option<PlusValley>> {
    rises.validate()?;
    let Some(c) = oscillation_first_exceed(path, 0.0, rises.c, OscillationMode::AboveRunningMin)? else {
        return Ok(None);
    };
    let (m, _) = path.argmin(0.0, c);
    let Some(b) = first_rise_after(path, m, rises.b)? else {
        return Ok(None);
    };
    let a = a_point_on(path, m, rises.a, 0.0)?;
    Ok(Some(PlusValley { c, m, b, a }))
}

/// Plus valley, extending the environment as needed.
pub fn plus_valley(env: &mut Environment, side: Side, rises: &Rises) -> Result<Lazy<Option<PlusValley>>> {
    rises.validate()?;
    let lazy = env.scan(side, |p| match plus_valley_on(p, rises) {
        Ok(Some(pv)) => Scan::Done(Some(pv)),
        _ => Scan::More(None),
    });
    Ok(lazy)
}

/// Decomposition of one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValleyDecomposition {
    pub side: Side,
    pub rises: Rises,
    pub minus_sequence: Vec<MinusValley>,
    pub plus: Option<PlusValley>,
    pub truncated: bool,
}

impl ValleyDecomposition {
    /// Decompose a fixed path with `count` minus valleys.
    pub fn on_path(path: &SamplePath, side: Side, rises: &Rises, count: usize) -> Result<Self> {
        rises.validate()?;
        let (pairs, complete) = valley_pairs_on(path, rises.b, count)?;
        let mut minus = Vec::with_capacity(pairs.len());
        let mut floor = 0.0;
        for p in &pairs {
            let a = a_point_on(path, p.m, rises.a, floor)?;
            minus.push(MinusValley { b: p.b, m: p.m, a });
            floor = p.b;
        }
        let plus = plus_valley_on(path, rises)?;
        let truncated = !complete || plus.is_none();
        Ok(ValleyDecomposition { side, rises: *rises, minus_sequence: minus, plus, truncated })
    }

    pub fn minus(&self, i: usize) -> Option<&MinusValley> {
        i.checked_sub(1).and_then(|k| self.minus_sequence.get(k))
    }

    /// `b_i` with `b_0 = 0`.
    pub fn b_minus(&self, i: usize) -> Option<f64> {
        if i == 0 {
            Some(0.0)
        } else {
            self.minus(i).map(|v| v.b)
        }
    }
}

/// Decomposition of both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub thresholds: Option<Thresholds>,
    pub right: ValleyDecomposition,
    pub left: ValleyDecomposition,
}

impl Decomposition {
    pub fn side(&self, side: Side) -> &ValleyDecomposition {
        match side {
            Side::Right => &self.right,
            Side::Left => &self.left,
        }
    }

    pub fn truncated(&self) -> bool {
        self.right.truncated || self.left.truncated
    }
}

/// Number of minus valleys every decomposition computes.
pub const MINUS_COUNT: usize = 3;

/// Decompose one side with lazy extension.
pub fn decompose_side(env: &mut Environment, side: Side, rises: &Rises) -> Result<ValleyDecomposition> {
    rises.validate()?;
    let mut err = None;
    let lazy = env.scan(side, |p| match ValleyDecomposition::on_path(p, side, rises, MINUS_COUNT) {
        Ok(d) if d.truncated => Scan::More(Some(d)),
        Ok(d) => Scan::Done(Some(d)),
        Err(e) => {
            err = Some(e);
            Scan::Done(None)
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut d = lazy.value.expect("decomposition present when no error");
    d.truncated = d.truncated || lazy.truncated;
    Ok(d)
}

/// Decompose both sides for the given parameters.
pub fn decompose(env: &mut Environment, thresholds: &Thresholds) -> Result<Decomposition> {
    thresholds.validate()?;
    let rises = thresholds.rises();
    Ok(Decomposition {
        thresholds: Some(*thresholds),
        right: decompose_side(env, Side::Right, &rises)?,
        left: decompose_side(env, Side::Left, &rises)?,
    })
}

/// Decompose both sides from raw rise thresholds.
pub fn decompose_rises(env: &mut Environment, rises: &Rises) -> Result<Decomposition> {
    Ok(Decomposition {
        thresholds: None,
        right: decompose_side(env, Side::Right, rises)?,
        left: decompose_side(env, Side::Left, rises)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> SamplePath {
        SamplePath::from_knots(&[(0.0, 0.0), (1.0, -3.0), (2.0, 1.0), (3.0, -5.0), (4.0, 2.0)])
            .unwrap()
    }

    #[test]
    fn e1_minus_sequence() {
        let mut env = Environment::from_right(e1()).unwrap();
        let lazy = valley_sequence(&mut env, Side::Right, 2.0, 3).unwrap();
        assert!(!lazy.truncated);
        let v = lazy.value;
        assert_eq!((v[0].b, v[0].m), (1.5, 1.0));
        assert_eq!((v[1].b, v[1].m), (2.0, 1.5));
        assert!((v[2].b - (3.0 + 2.0 / 7.0)).abs() < 1e-15);
        assert_eq!(v[2].m, 3.0);
    }

    #[test]
    fn monotone_and_truncated_cases() {
        let up = SamplePath::from_knots(&[(0.0, 0.0), (10.0, 10.0)]).unwrap();
        let (v, _) = valley_pairs_on(&up, 3.0, 1).unwrap();
        assert_eq!((v[0].b, v[0].m), (3.0, 0.0));
        let mut env = Environment::from_right(e1()).unwrap();
        let lazy = valley_sequence(&mut env, Side::Right, 100.0, 3).unwrap();
        assert!(lazy.truncated);
        assert!(lazy.value.is_empty());
        assert!(valley_sequence(&mut env, Side::Right, 0.0, 1).is_err());
    }

    #[test]
    fn e1_a_points() {
        let env = Environment::from_right(e1()).unwrap();
        assert_eq!(a_point(&env, Side::Right, 1.0, 3.0, 0.0).unwrap(), 0.0);
        let a = a_point(&env, Side::Right, 1.0, 2.0, 0.0).unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(a_point(&env, Side::Right, 1.0, 0.0, 0.0).unwrap(), 1.0);
        assert!(a_point(&env, Side::Right, 5.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn e1_plus_valley() {
        let mut env = Environment::from_right(e1()).unwrap();
        let r = Rises { b: 2.0, a: 3.0, c: 4.0 };
        let pv = plus_valley(&mut env, Side::Right, &r).unwrap();
        assert_eq!(pv.value, Some(PlusValley { c: 2.0, m: 1.0, b: 1.5, a: 0.0 }));
        let v = SamplePath::from_knots(&[(0.0, 0.0), (1.0, -5.0), (2.0, 0.0)]).unwrap();
        let pv = plus_valley_on(&v, &Rises { b: 2.0, a: 3.0, c: 4.0 }).unwrap().unwrap();
        assert!((pv.c - 1.8).abs() < 1e-15);
        assert_eq!(pv.m, 1.0);
        let never = plus_valley(&mut env, Side::Right, &Rises { b: 2.0, a: 3.0, c: 40.0 }).unwrap();
        assert!(never.truncated);
    }

    #[test]
    fn thresholds_validity() {
        let err = Thresholds::from_c(10.0, 21.0).unwrap_err().to_string();
        assert!(err.contains("v - c1 log v"), "{err}");
        assert!(Thresholds::from_c(3.0, 21.0).is_err());
        let t = Thresholds::new(8.0, 1.0, 1.0, 1.0).unwrap();
        let r = t.rises();
        assert!((r.b - (8.0 - 8f64.ln())).abs() < 1e-15);
        assert!((r.c - (8.0 + 8f64.ln())).abs() < 1e-15);
        assert_eq!(schedule(21.0), (50.0, 27.0, 23.0));
    }

    #[test]
    fn decomposition_of_random_env_is_ordered() {
        let t = Thresholds::new(6.0, 1.0, 1.0, 1.0).unwrap();
        for seed in 0..20 {
            let mut env = Environment::brownian(seed, 0.05).unwrap();
            let d = decompose(&mut env, &t).unwrap();
            assert!(!d.truncated());
            for side in Side::BOTH {
                let s = d.side(side);
                let mut prev = 0.0;
                for mv in &s.minus_sequence {
                    assert!(mv.b > prev && mv.m >= prev && mv.m < mv.b);
                    assert!(mv.a >= prev && mv.a <= mv.m);
                    let p = env.side(side);
                    assert!(p.value_at(mv.b) - p.value_at(mv.m) >= t.rises().b - 1e-9);
                    prev = mv.b;
                }
                let pv = s.plus.unwrap();
                assert!(pv.a <= pv.m && pv.m <= pv.b && pv.b <= pv.c);
            }
        }
    }
}
