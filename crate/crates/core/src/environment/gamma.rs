//! Good-environment events.
//!
//! Per side, with `l = log v`:
//!
//! * event 1: `c+ <= b-_3` and `min_{[b+, c+]} W - W(m+) >= (c1 + c3) l`;
//! * event 3: the same with `b-_2` in place of `b-_3`;
//! * event 2: nine regularity clauses, listed in [`GAMMA2_CLAUSES`].
//!
//! `gamma` is the conjunction of events 1 and 2 on both sides and
//! `gamma_prime` that of events 3 and 2. Clauses that need points beyond
//! the sampled environment are `None` (indeterminate), and conjunctions
//! use three-valued logic.

use super::valley::{decompose, Decomposition, Thresholds, ValleyDecomposition};
use super::{Environment, Side};
use crate::error::Result;
use crate::path::SamplePath;
use serde::{Deserialize, Serialize};

pub const GAMMA1_CLAUSES: [&str; 2] = ["c_plus_le_b3", "plus_wall"];
pub const GAMMA3_CLAUSES: [&str; 2] = ["c_plus_le_b2", "plus_wall"];
pub const GAMMA2_CLAUSES: [&str; 9] = [
    "b3_le_v6",
    "w_m1_ge_neg_v2",
    "w_m2_minus_w_b1_ge_neg_v2",
    "m1_minus_a1_ge_inv_v2",
    "m2_minus_a2_ge_inv_v2",
    "c_plus_minus_m_plus_ge_v",
    "end_oscillation_le_2logv",
    "pre_min1_oscillation_le_2logv",
    "pre_min2_oscillation_le_2logv",
];

/// Three-valued conjunction.
pub fn all3(items: impl IntoIterator<Item = Option<bool>>) -> Option<bool> {
    let mut unknown = false;
    for i in items {
        match i {
            Some(false) => return Some(false),
            None => unknown = true,
            Some(true) => {}
        }
    }
    if unknown {
        None
    } else {
        Some(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideClauses {
    pub gamma1: [Option<bool>; 2],
    pub gamma2: [Option<bool>; 9],
    pub gamma3: [Option<bool>; 2],
}

impl SideClauses {
    pub fn evaluate(path: &SamplePath, d: &ValleyDecomposition, t: &Thresholds) -> Self {
        let v = t.v;
        let l = v.ln();
        let w = |x: f64| path.value_at(x);
        let b1 = d.b_minus(1);
        let b2 = d.b_minus(2);
        let b3 = d.b_minus(3);
        let mv1 = d.minus(1);
        let mv2 = d.minus(2);
        let pv = d.plus;

        let wall = pv.map(|p| path.min_on(p.b, p.c) - w(p.m) >= (t.c1 + t.c3) * l);
        let le = |c: Option<f64>, b: Option<f64>| Some(c? <= b?);
        let gamma1 = [le(pv.map(|p| p.c), b3), wall];
        let gamma3 = [le(pv.map(|p| p.c), b2), wall];

        let pre_min = |mv: Option<&super::MinusValley>| {
            mv.map(|m| path.max_on((m.m - l).max(m.a), m.m) - w(m.m) <= 2.0 * l)
        };
        let gamma2 = [
            b3.map(|b| b <= v.powi(6)),
            mv1.map(|m| w(m.m) >= -v * v),
            mv2.zip(b1).map(|(m, b)| w(m.m) - w(b) >= -v * v),
            mv1.map(|m| m.m - m.a >= 1.0 / (v * v)),
            mv2.map(|m| m.m - m.a >= 1.0 / (v * v)),
            pv.map(|p| p.c - p.m >= v),
            pv.map(|p| w(p.c) - path.min_on((p.c - l).max(p.m), p.c) <= 2.0 * l),
            pre_min(mv1),
            pre_min(mv2),
        ];
        SideClauses { gamma1, gamma2, gamma3 }
    }

    pub fn gamma1(&self) -> Option<bool> {
        all3(self.gamma1)
    }

    pub fn gamma2(&self) -> Option<bool> {
        all3(self.gamma2)
    }

    pub fn gamma3(&self) -> Option<bool> {
        all3(self.gamma3)
    }

    /// Names of the clauses that evaluate to false.
    pub fn failed(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (i, c) in self.gamma1.iter().enumerate() {
            if *c == Some(false) {
                out.push(GAMMA1_CLAUSES[i]);
            }
        }
        for (i, c) in self.gamma2.iter().enumerate() {
            if *c == Some(false) {
                out.push(GAMMA2_CLAUSES[i]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub thresholds: Thresholds,
    pub right: SideClauses,
    pub left: SideClauses,
    pub gamma1: Option<bool>,
    pub gamma2: Option<bool>,
    pub gamma3: Option<bool>,
    pub gamma1_hat: Option<bool>,
    pub gamma2_hat: Option<bool>,
    pub gamma3_hat: Option<bool>,
    pub gamma: Option<bool>,
    pub gamma_prime: Option<bool>,
    pub indeterminate: bool,
}

impl GammaReport {
    pub fn evaluate(env: &Environment, d: &Decomposition, t: &Thresholds) -> Self {
        let right = SideClauses::evaluate(env.side(Side::Right), &d.right, t);
        let left = SideClauses::evaluate(env.side(Side::Left), &d.left, t);
        let gamma = all3([right.gamma1(), right.gamma2(), left.gamma1(), left.gamma2()]);
        let gamma_prime = all3([right.gamma3(), right.gamma2(), left.gamma3(), left.gamma2()]);
        GammaReport {
            thresholds: *t,
            gamma1: right.gamma1(),
            gamma2: right.gamma2(),
            gamma3: right.gamma3(),
            gamma1_hat: left.gamma1(),
            gamma2_hat: left.gamma2(),
            gamma3_hat: left.gamma3(),
            indeterminate: d.truncated() || gamma.is_none() || gamma_prime.is_none(),
            gamma,
            gamma_prime,
            right,
            left,
        }
    }

    /// Event 3 implies event 1 on each side.
    pub fn implication_holds(&self) -> bool {
        let side_ok = |g3: Option<bool>, g1: Option<bool>| g3 != Some(true) || g1 == Some(true);
        side_ok(self.gamma3, self.gamma1) && side_ok(self.gamma3_hat, self.gamma1_hat)
    }

    /// Failed clause names, prefixed by side for the left one.
    pub fn failed_clauses(&self) -> Vec<String> {
        let mut out: Vec<String> = self.right.failed().into_iter().map(String::from).collect();
        out.extend(self.left.failed().into_iter().map(|c| format!("hat_{c}")));
        out
    }
}

/// Decompose the environment and evaluate every clause.
pub fn gamma_events(env: &mut Environment, t: &Thresholds) -> Result<(Decomposition, GammaReport)> {
    let d = decompose(env, t)?;
    let g = GammaReport::evaluate(env, &d, t);
    Ok((d, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_valued_and() {
        assert_eq!(all3([Some(true), Some(true)]), Some(true));
        assert_eq!(all3([Some(true), None]), None);
        assert_eq!(all3([None, Some(false)]), Some(false));
    }

    #[test]
    fn stretched_env_fails_only_the_v6_clause() {
        // three equal wells stretched by 1e7 with v = 2: the third b lies far
        // past v^6 = 64 while every other clause holds
        let saw: Vec<(f64, f64)> = (0..7).map(|k| (k as f64, if k % 2 == 1 { -3.0 } else { 0.0 })).collect();
        let e1 = SamplePath::from_knots(&saw).unwrap().stretched(1e7).unwrap();
        let t = Thresholds { v: 2.0, c1: 0.0, c2: 0.0, c3: 0.0 };
        let mut env = Environment::from_right(e1).unwrap();
        let rises = t.rises();
        let d = ValleyDecomposition::on_path(env.side(Side::Right), Side::Right, &rises, 3).unwrap();
        let c = SideClauses::evaluate(env.side(Side::Right), &d, &t);
        assert_eq!(c.gamma2[0], Some(false));
        assert_eq!(c.failed(), vec!["b3_le_v6"]);
        let (_, g) = gamma_events(&mut env, &t).unwrap();
        assert_eq!(g.gamma2, Some(false));
        // the left side is a single knot, so its clauses are unknown
        assert!(g.indeterminate);
    }

    #[test]
    fn implication_on_random_envs() {
        let t = Thresholds::new(8.0, 1.0, 1.0, 1.0).unwrap();
        for seed in 0..40 {
            let mut env = Environment::brownian(seed, 0.05).unwrap();
            let (_, g) = gamma_events(&mut env, &t).unwrap();
            assert!(g.implication_holds());
            assert!(!g.indeterminate);
        }
    }
}
