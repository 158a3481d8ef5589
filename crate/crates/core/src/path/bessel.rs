//! Functionals of a 3-d Bessel path used in the Tanaka comparison.
//!
//! With `J(x)` the future infimum `inf_{y >= x} R(y)`:
//! `tau = inf{x : R(x) >= v}`, `zeta = inf{x : R(x) - J(x) >= v}` and
//! `rho = sup{x <= zeta : R(x) = J(x)}`.

use super::functional::first_at_or_above;
use super::SamplePath;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselFunctionals {
    pub tau: Option<f64>,
    pub zeta: Option<f64>,
    pub rho: Option<f64>,
    /// True when the future infimum only looked at the sampled domain.
    pub horizon_truncated: bool,
}

/// Functionals with the future infimum taken over the sampled domain only.
pub fn bessel_functionals(path: &SamplePath, v: f64) -> Result<BesselFunctionals> {
    compute(path, v, None)
}

/// Functionals with the infimum of the unsampled future supplied by the
/// caller. For a 3-d Bessel process that value is exactly
/// Uniform(0, R(end)); see [`draw_bessel3_future_inf`].
pub fn bessel_functionals_with_tail(
    path: &SamplePath,
    v: f64,
    tail_inf: f64,
) -> Result<BesselFunctionals> {
    compute(path, v, Some(tail_inf))
}

/// Infimum of a 3-d Bessel process after a time where it sits at `r`.
pub fn draw_bessel3_future_inf<R: Rng>(r: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    u * r
}

fn compute(path: &SamplePath, v: f64, tail: Option<f64>) -> Result<BesselFunctionals> {
    if !(v > 0.0) {
        return Err(Error::InvalidParams(format!("v must be positive, got {v}")));
    }
    if path.values().iter().any(|&r| r < 0.0) {
        return Err(Error::Domain("Bessel path has negative values".into()));
    }
    let xs = path.positions();
    let rs = path.values();
    let n = xs.len();
    let tau = first_at_or_above(path, v, path.start())?;

    // sm[k] = min over knots j >= k, with the tail appended at index n.
    let mut sm = vec![f64::INFINITY; n + 1];
    sm[n] = tail.unwrap_or(f64::INFINITY);
    for k in (0..n).rev() {
        sm[k] = rs[k].min(sm[k + 1]);
    }

    let mut zeta = None;
    let mut zeta_seg = 0;
    for k in 0..n {
        let level = sm[k + 1] + v;
        if rs[k] >= level {
            zeta = Some(xs[k]);
            zeta_seg = k;
            break;
        }
        if k + 1 < n && rs[k + 1] >= level {
            let t = (level - rs[k]) / (rs[k + 1] - rs[k]);
            zeta = Some((xs[k] + t * (xs[k + 1] - xs[k])).min(xs[k + 1]));
            zeta_seg = k;
            break;
        }
    }

    let rho = zeta.and_then(|z| {
        for k in (0..=zeta_seg).rev() {
            let s = sm[k + 1];
            let (x0, r0) = (xs[k], rs[k]);
            let (x1, r1) = if k == zeta_seg { (z, path.value_at(z)) } else { (xs[k + 1], rs[k + 1]) };
            if r1 <= s {
                return Some(x1);
            }
            if r0 <= s {
                let t = (s - r0) / (r1 - r0);
                return Some((x0 + t * (x1 - x0)).clamp(x0, x1));
            }
        }
        None
    });

    Ok(BesselFunctionals { tau, zeta, rho, horizon_truncated: tail.is_none() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_path() {
        let p = SamplePath::from_knots(&[(0.0, 0.0), (10.0, 10.0)]).unwrap();
        let f = bessel_functionals(&p, 3.0).unwrap();
        assert_eq!((f.tau, f.zeta, f.rho), (Some(3.0), None, None));
        assert!(f.horizon_truncated);
    }

    #[test]
    fn short_path() {
        let p = SamplePath::from_knots(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)]).unwrap();
        let f = bessel_functionals(&p, 3.0).unwrap();
        assert_eq!((f.tau, f.zeta, f.rho), (None, None, None));
    }

    #[test]
    fn dip_then_rise() {
        // rises to 4, falls to 1, rises to 6: deficit v=2 first reached at R=3
        let p = SamplePath::from_knots(&[(0.0, 0.0), (4.0, 4.0), (7.0, 1.0), (12.0, 6.0)]).unwrap();
        let f = bessel_functionals(&p, 2.0).unwrap();
        assert_eq!(f.tau, Some(2.0));
        assert_eq!(f.zeta, Some(3.0));
        assert_eq!(f.rho, Some(1.0));
        let g = bessel_functionals_with_tail(&p, 2.0, 0.5).unwrap();
        assert_eq!(g.zeta, Some(2.5));
        assert_eq!(g.rho, Some(0.5));
        assert!(!g.horizon_truncated);
    }

    #[test]
    fn rejects_negative_values() {
        let p = SamplePath::from_knots(&[(0.0, 0.0), (1.0, -1.0)]).unwrap();
        assert!(bessel_functionals(&p, 1.0).is_err());
    }
}
