//! Neighbourhoods of the four valley bottoms where the diffusion spends
//! most of its time.

use super::{Decomposition, Environment, Side};
use crate::error::{Error, Result};
use crate::path::functional::{first_at_or_below, last_at_or_below};
use crate::path::SamplePath;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthMode {
    /// `[e, d]` around each bottom: the stretch of the valley where `W`
    /// stays within `log(1/δ)` of the bottom value.
    Valley,
    /// `[m - w, m + w]` with `w = (log log t)^(4+ε)` and `t = e^v`.
    Window,
}

/// Interval in two-sided coordinates, tagged with the bottom it surrounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub label: String,
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `[e, d]` on a side path: `d = sup{x in [m, b] : W(x) - W(m) <= bound}`
/// and `e = inf{x in [a, m] : W(x) - W(m) <= bound}`.
pub fn u_interval(path: &SamplePath, a: f64, m: f64, b: f64, bound: f64) -> Result<(f64, f64)> {
    let level = path.value_at(m) + bound;
    let e = first_at_or_below(path, level, a, m)?.unwrap_or(m);
    let d = last_at_or_below(path, level, m, b)?.unwrap_or(m);
    Ok((e, d))
}

/// Half-width used in [`WidthMode::Window`].
pub fn window_half_width(v: f64, eps: f64) -> f64 {
    v.ln().powf(4.0 + eps)
}

/// The (up to) four localization intervals, ordered right minus, right
/// plus, left minus, left plus.
pub fn localization_sets(
    env: &Environment,
    d: &Decomposition,
    v: f64,
    delta: f64,
    mode: WidthMode,
    eps: f64,
) -> Result<Vec<Interval>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!("delta must lie in (0, 1), got {delta}")));
    }
    if mode == WidthMode::Window && !(eps > 0.0 && v > 1.0) {
        return Err(Error::InvalidParams("window width needs eps > 0 and v > 1".into()));
    }
    let bound = (1.0 / delta).ln();
    let mut out = Vec::with_capacity(4);
    for side in Side::BOTH {
        let s = d.side(side);
        let path = env.side(side);
        let hat = if side == Side::Left { "_hat" } else { "" };
        let mut bottoms = Vec::new();
        if let Some(mv) = s.minus(1) {
            bottoms.push((format!("m_minus{hat}"), mv.a, mv.m, mv.b));
        }
        if let Some(pv) = s.plus {
            bottoms.push((format!("m_plus{hat}"), pv.a, pv.m, pv.b));
        }
        for (label, a, m, b) in bottoms {
            let (lo, hi) = match mode {
                WidthMode::Valley => u_interval(path, a, m, b, bound)?,
                WidthMode::Window => {
                    let w = window_half_width(v, eps);
                    (m - w, m + w)
                }
            };
            let (glo, ghi) = match side {
                Side::Right => (lo, hi),
                Side::Left => (-hi, -lo),
            };
            out.push(Interval { label, center: side.to_global(m), lo: glo, hi: ghi });
        }
    }
    Ok(out)
}

/// Disjoint sorted union of intervals.
pub fn union(intervals: &[Interval]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = intervals.iter().map(|i| (i.lo, i.hi)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_u_interval() {
        let e1 = SamplePath::from_knots(&[(0.0, 0.0), (1.0, -3.0), (2.0, 1.0), (3.0, -5.0), (4.0, 2.0)])
            .unwrap();
        let (e, d) = u_interval(&e1, 1.0 / 3.0, 1.0, 1.5, 1.0).unwrap();
        assert!((e - 2.0 / 3.0).abs() < 1e-15);
        assert!((d - 1.25).abs() < 1e-15);
        let (e, d) = u_interval(&e1, 1.0 / 3.0, 1.0, 1.5, 1e-12).unwrap();
        assert!((e - 1.0).abs() < 1e-9 && (d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn window_width() {
        let w = window_half_width(8.0, 0.5);
        assert!((w - 26.97).abs() < 0.01, "{w}");
        assert!((w - (8f64.ln().ln() * 4.5).exp()).abs() < 1e-12);
    }

    #[test]
    fn union_merges() {
        let mk = |lo, hi| Interval { label: String::new(), center: lo, lo, hi };
        let u = union(&[mk(3.0, 4.0), mk(0.0, 1.0), mk(0.5, 2.0)]);
        assert_eq!(u, vec![(0.0, 2.0), (3.0, 4.0)]);
    }
}
