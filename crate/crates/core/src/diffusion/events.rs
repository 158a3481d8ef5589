//! The composite inverse local time at the four valley bottoms and the
//! profile events evaluated on a local-time field.

use super::field::LocalTimeField;
use super::skeleton::{Stop, StopReason};
use super::{Construction, DiffusionRealization, StoppingTime};
use crate::environment::{Decomposition, Environment, Side, ValleyDecomposition};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const BOTTOM_LABELS: [&str; 4] = ["m_minus", "m_plus", "m_minus_hat", "m_plus_hat"];

/// Global positions of `m⁻_1, m⁺, m̂⁻_1, m̂⁺`.
pub fn bottoms(d: &Decomposition) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (k, side) in Side::BOTH.into_iter().enumerate() {
        let s = d.side(side);
        let (Some(mv), Some(pv)) = (s.minus(1), s.plus) else {
            return Err(Error::InvalidParams(format!(
                "decomposition of the {} side is truncated",
                if side == Side::Right { "right" } else { "left" }
            )));
        };
        out[2 * k] = side.to_global(mv.m);
        out[2 * k + 1] = side.to_global(pv.m);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composite {
    /// `σ_v`, the earliest of the four inverse local times.
    pub sigma: StoppingTime,
    /// Label of the bottom achieving it.
    pub which: Option<String>,
    /// Level `r e^v`.
    pub level: f64,
}

/// `σ_v = min` over the four bottoms of `σ(r e^v, ·)`.
pub fn composite_sigma(
    real: &mut DiffusionRealization,
    d: &Decomposition,
    r: f64,
    v: f64,
    bin_width: f64,
) -> Result<Composite> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("r must be positive, got {r}")));
    }
    let pts = bottoms(d)?;
    let level = r * v.exp();
    match real.construction() {
        Construction::Skeleton => {
            let mut run = real.skeleton()?;
            let stop = Stop { local_time: pts.iter().map(|&x| (x, level)).collect(), ..Default::default() };
            let o = run.advance(&stop);
            let which = match o.reason {
                StopReason::LocalTime(k) => Some(BOTTOM_LABELS[k].to_string()),
                _ => None,
            };
            Ok(Composite {
                sigma: StoppingTime { value: o.time, reached: o.reason.reached(), bracket: (o.time, o.time) },
                which,
                level,
            })
        }
        Construction::Uniform { .. } => {
            let mut best: Option<(StoppingTime, usize)> = None;
            let mut last = None;
            for (k, &x) in pts.iter().enumerate() {
                let st = real.inverse_local_time(level, x, bin_width)?;
                last = Some(st);
                if st.reached && best.is_none_or(|(b, _)| st.value < b.value) {
                    best = Some((st, k));
                }
            }
            Ok(match best {
                Some((sigma, k)) => Composite { sigma, which: Some(BOTTOM_LABELS[k].to_string()), level },
                None => Composite { sigma: last.expect("four components"), which: None, level },
            })
        }
    }
}

/// Profile events; `None` marks an indeterminate flag.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileFlags {
    pub a1: Option<bool>,
    pub a2: Option<bool>,
    pub b1: Option<bool>,
    pub b2: Option<bool>,
    pub c: Option<bool>,
    pub d: Option<bool>,
    pub a1_hat: Option<bool>,
    pub a2_hat: Option<bool>,
    pub b1_hat: Option<bool>,
    pub b2_hat: Option<bool>,
    pub c_hat: Option<bool>,
    pub d_hat: Option<bool>,
}

impl ProfileFlags {
    pub const NAMES: [&'static str; 12] =
        ["a1", "a2", "b1", "b2", "c", "d", "a1_hat", "a2_hat", "b1_hat", "b2_hat", "c_hat", "d_hat"];

    pub fn values(&self) -> [Option<bool>; 12] {
        [
            self.a1, self.a2, self.b1, self.b2, self.c, self.d, self.a1_hat, self.a2_hat, self.b1_hat,
            self.b2_hat, self.c_hat, self.d_hat,
        ]
    }
}

/// Bin centers of the field's grid inside the side-local interval `[lo, hi]`
/// (or `[lo, hi)` when `open_hi`), as global positions.
fn grid_in(f: &LocalTimeField, side: Side, lo: f64, hi: f64, open_hi: bool) -> Vec<f64> {
    let w = f.bins.first().map_or(1.0, |b| b.width);
    let (glo, ghi) = match side {
        Side::Right => (lo, hi),
        Side::Left => (-hi, -lo),
    };
    let k0 = (glo / w - 0.5).ceil() as i64;
    let k1 = (ghi / w - 0.5).floor() as i64;
    (k0..=k1)
        .map(|k| (k as f64 + 0.5) * w)
        .filter(|&x| {
            let local = if side == Side::Right { x } else { -x };
            !(open_hi && local >= hi)
        })
        .collect()
}

fn side_flags(f: &LocalTimeField, env: &Environment, s: &ValleyDecomposition, r: f64, v: f64, delta: f64) -> [Option<bool>; 6] {
    let cap = delta * r * v.exp();
    let small = |lo: f64, hi: f64, open: bool| -> bool {
        grid_in(f, s.side, lo, hi, open).iter().all(|&x| f.value_at(x) <= cap)
    };
    let mut out = [None; 6];
    for i in 1..=2 {
        if let (Some(mv), Some(b_prev)) = (s.minus(i), s.b_minus(i - 1)) {
            let wm = env.value(s.side.to_global(mv.m));
            let ok = grid_in(f, s.side, mv.a, mv.b, false).iter().all(|&x| {
                let target = r * (v - env.value(x) + wm).exp();
                (f.value_at(x) / target - 1.0).abs() <= delta
            });
            out[i - 1] = Some(ok);
            out[i + 1] = Some(small(b_prev, mv.a, true));
        }
    }
    if let Some(pv) = s.plus {
        out[4] = Some(small(pv.b, pv.c, false));
        let beyond = f.bins.iter().any(|b| {
            let local_lo = match s.side {
                Side::Right => b.lo(),
                Side::Left => -b.hi(),
            };
            b.l > 0.0 && local_lo >= pv.c
        });
        out[5] = Some(!beyond);
    }
    out
}

/// Literal profile checks at the field's time.
pub fn profile_events(
    field: &LocalTimeField,
    env: &Environment,
    d: &Decomposition,
    r: f64,
    v: f64,
    delta: f64,
) -> ProfileFlags {
    let [a1, a2, b1, b2, c, dd] = side_flags(field, env, &d.right, r, v, delta);
    let [a1_hat, a2_hat, b1_hat, b2_hat, c_hat, d_hat] = side_flags(field, env, &d.left, r, v, delta);
    ProfileFlags { a1, a2, b1, b2, c, d: dd, a1_hat, a2_hat, b1_hat, b2_hat, c_hat, d_hat }
}
