//! Exact functionals of piecewise-linear paths.

use super::{Piece, SamplePath};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationMode {
    /// value minus running minimum
    AboveRunningMin,
    /// running maximum minus value
    BelowRunningMax,
}

/// First position `x >= from` with `W(x) = level`.
pub fn hitting_time(path: &SamplePath, level: f64, from: f64) -> Result<Option<f64>> {
    path.check(from)?;
    if path.value_at(from) == level {
        return Ok(Some(from));
    }
    Ok(path.pieces_from(from).find_map(|p| crossing(&p, level)))
}

/// First position `x >= from` with `W(x) >= level`.
pub fn first_at_or_above(path: &SamplePath, level: f64, from: f64) -> Result<Option<f64>> {
    path.check(from)?;
    if path.value_at(from) >= level {
        return Ok(Some(from));
    }
    hitting_time(path, level, from)
}

fn crossing(p: &Piece, level: f64) -> Option<f64> {
    let (lo, hi) = if p.w0 <= p.w1 { (p.w0, p.w1) } else { (p.w1, p.w0) };
    (level >= lo && level <= hi).then(|| p.solve(level))
}

/// First `x >= from` where the oscillation over `[from, x]` reaches `h`.
pub fn oscillation_first_exceed(
    path: &SamplePath,
    from: f64,
    h: f64,
    mode: OscillationMode,
) -> Result<Option<f64>> {
    path.check(from)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParams(format!("oscillation height must be positive, got {h}")));
    }
    let sign = match mode {
        OscillationMode::AboveRunningMin => 1.0,
        OscillationMode::BelowRunningMax => -1.0,
    };
    let mut run = sign * path.value_at(from);
    for p in path.pieces_from(from) {
        let (w0, w1) = (sign * p.w0, sign * p.w1);
        if w1 > w0 {
            if w1 - run >= h {
                let target = sign * (run + h);
                return Ok(Some(p.solve(target)));
            }
        } else if w1 < run {
            run = w1;
        }
    }
    Ok(None)
}

/// `inf{x >= m : W(x) - W(m) >= rise}`.
pub fn first_rise_after(path: &SamplePath, m: f64, rise: f64) -> Result<Option<f64>> {
    path.check(m)?;
    first_at_or_above(path, path.value_at(m) + rise, m)
}

/// `sup{x <= m : W(x) - W(m) >= rise}`, or `None` if no such point exists
/// inside the domain.
pub fn last_rise_before(path: &SamplePath, m: f64, rise: f64) -> Result<Option<f64>> {
    path.check(m)?;
    let level = path.value_at(m) + rise;
    if rise <= 0.0 {
        return Ok(Some(m));
    }
    for p in path.pieces_back_from(m) {
        if p.w1 >= level {
            return Ok(Some(p.x1));
        }
        if p.w0 >= level {
            return Ok(Some(p.solve(level)));
        }
    }
    Ok(None)
}

/// `inf{x in [lo, hi] : W(x) <= level}`.
pub fn first_at_or_below(path: &SamplePath, level: f64, lo: f64, hi: f64) -> Result<Option<f64>> {
    path.check(lo)?;
    path.check(hi)?;
    if lo > hi {
        return Ok(None);
    }
    if path.value_at(lo) <= level {
        return Ok(Some(lo));
    }
    for p in path.pieces_from(lo) {
        if p.x0 > hi {
            break;
        }
        if p.w1 <= level {
            let x = p.solve(level);
            return Ok((x <= hi).then_some(x));
        }
    }
    Ok(None)
}

/// `sup{x in [lo, hi] : W(x) <= level}`.
pub fn last_at_or_below(path: &SamplePath, level: f64, lo: f64, hi: f64) -> Result<Option<f64>> {
    path.check(lo)?;
    path.check(hi)?;
    if lo > hi {
        return Ok(None);
    }
    if path.value_at(hi) <= level {
        return Ok(Some(hi));
    }
    for p in path.pieces_back_from(hi) {
        if p.x1 < lo {
            break;
        }
        if p.w0 <= level {
            let x = p.solve(level);
            return Ok((x >= lo).then_some(x));
        }
    }
    Ok(None)
}

/// Mirror about the origin: `x -> -x`, values unchanged.
pub fn reflect(path: &SamplePath) -> SamplePath {
    let xs: Vec<f64> = path.positions().iter().rev().map(|x| -x).collect();
    let ws: Vec<f64> = path.values().iter().rev().copied().collect();
    SamplePath::from_parts_unchecked(xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> SamplePath {
        SamplePath::from_knots(&[(0.0, 0.0), (1.0, -3.0), (2.0, 1.0), (3.0, -5.0), (4.0, 2.0)])
            .unwrap()
    }

    #[test]
    fn hitting_examples() {
        let p = SamplePath::from_knots(&[(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert_eq!(hitting_time(&p, 1.0, 0.0).unwrap(), Some(0.5));
        let q = SamplePath::from_knots(&[(0.0, 0.0), (1.0, -1.0)]).unwrap();
        assert_eq!(hitting_time(&q, 1.0, 0.0).unwrap(), None);
        let h = hitting_time(&e1(), -4.0, 0.0).unwrap().unwrap();
        assert!((h - (2.0 + 5.0 / 6.0)).abs() < 1e-15);
        assert!(hitting_time(&e1(), 0.0, 5.0).is_err());
    }

    #[test]
    fn oscillation_examples() {
        let up = OscillationMode::AboveRunningMin;
        assert_eq!(oscillation_first_exceed(&e1(), 0.0, 2.0, up).unwrap(), Some(1.5));
        assert_eq!(oscillation_first_exceed(&e1(), 0.0, 4.0, up).unwrap(), Some(2.0));
        let down = SamplePath::from_knots(&[(0.0, 0.0), (1.0, -1.0), (3.0, -7.0)]).unwrap();
        assert_eq!(oscillation_first_exceed(&down, 0.0, 0.1, up).unwrap(), None);
        let dn = OscillationMode::BelowRunningMax;
        assert_eq!(oscillation_first_exceed(&e1(), 0.0, 2.0, dn).unwrap(), Some(2.0 / 3.0));
        assert!(oscillation_first_exceed(&e1(), 0.0, 0.0, up).is_err());
    }

    #[test]
    fn rises() {
        let p = e1();
        assert_eq!(last_rise_before(&p, 1.0, 3.0).unwrap(), Some(0.0));
        assert!((last_rise_before(&p, 1.0, 2.0).unwrap().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(last_rise_before(&p, 1.0, 0.0).unwrap(), Some(1.0));
        assert_eq!(last_rise_before(&p, 1.0, 3.5).unwrap(), None);
        assert_eq!(first_rise_after(&p, 1.0, 2.0).unwrap(), Some(1.5));
    }

    #[test]
    fn level_sets() {
        let p = e1();
        assert!((last_at_or_below(&p, -2.0, 1.0, 1.5).unwrap().unwrap() - 1.25).abs() < 1e-15);
        let e = first_at_or_below(&p, -2.0, 1.0 / 3.0, 1.0).unwrap().unwrap();
        assert!((e - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(last_at_or_below(&p, 10.0, 1.0, 1.5).unwrap(), Some(1.5));
        assert_eq!(first_at_or_below(&p, -4.0, 0.0, 2.0).unwrap(), None);
    }

    #[test]
    fn reflection() {
        let p = SamplePath::from_knots(&[(0.0, 0.0), (1.0, 2.0)]).unwrap();
        let r = reflect(&p);
        assert_eq!(r.positions(), &[-1.0, 0.0]);
        assert_eq!(r.values(), &[2.0, 0.0]);
        assert_eq!(reflect(&reflect(&e1())), e1());
    }
}
