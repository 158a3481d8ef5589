//! Grid skeleton of the diffusion.
//!
//! The driver is observed at its successive hits of the scale images of the
//! environment knots. Between two hits the diffusion sits in the two cells
//! around a knot; the visit is summarized by one `ξ ~ Exp(1)`, which is the
//! driver's local time at that knot divided by its conditional mean. Local
//! time at knots is therefore exact in law, and the diffusion clock and the
//! occupation profile inside the cells are charged at their conditional
//! means given `ξ`.

use super::field::{BinAcc, Estimator, LocalTimeField, Neumaier};
use super::scale::psi;
use crate::environment::integral::ln_phi;
use crate::environment::{Environment, Side};
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

const TIE: f64 = 1e-12;

/// Reflecting barriers, given as positions snapped to knots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Reflect {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone)]
struct Tables {
    xs: Vec<f64>,
    ws: Vec<f64>,
    p_up: Vec<f64>,
    /// Mean diffusion time per unit `ξ`.
    tau: Vec<f64>,
    /// Diffusion local time at the knot per unit `ξ`.
    lt: Vec<f64>,
    /// Driver time per unit `ξ`.
    drv: Vec<f64>,
    has_lo: Vec<bool>,
    has_hi: Vec<bool>,
    /// Index of the knot at 0.
    origin: usize,
    /// Whether the first (last) knot is an unexplored end rather than a barrier.
    lo_open: bool,
    hi_open: bool,
}

impl Tables {
    fn build(env: &Environment, reflect: Reflect) -> Self {
        let p = env.two_sided_path();
        let xs = p.positions().to_vec();
        let ws = p.values().to_vec();
        let n = xs.len();
        let lo_r = reflect.lo.map(|x| nearest(&xs, x));
        let hi_r = reflect.hi.map(|x| nearest(&xs, x));
        let mut t = Tables {
            p_up: vec![f64::NAN; n],
            tau: vec![f64::NAN; n],
            lt: vec![f64::NAN; n],
            drv: vec![f64::NAN; n],
            has_lo: vec![false; n],
            has_hi: vec![false; n],
            origin: nearest(&xs, 0.0),
            lo_open: lo_r != Some(0),
            hi_open: hi_r != Some(n - 1),
            xs,
            ws,
        };
        for i in 0..n {
            let lo = i > 0 && lo_r != Some(i) && lo_r.is_none_or(|r| i > r);
            let hi = i + 1 < n && hi_r != Some(i) && hi_r.is_none_or(|r| i < r);
            t.has_lo[i] = lo;
            t.has_hi[i] = hi;
            let (dl, ddl) = if lo { (t.xs[i] - t.xs[i - 1], t.ws[i] - t.ws[i - 1]) } else { (0.0, 0.0) };
            let (du, ddu) = if hi { (t.xs[i + 1] - t.xs[i], t.ws[i + 1] - t.ws[i]) } else { (0.0, 0.0) };
            // a = ∫ lower cell e^{W - W_i}, b = ∫ upper cell e^{W - W_i}
            let a = dl * ln_phi(ddl).exp();
            let b = du * ln_phi(-ddu).exp();
            let lower = dl * dl * psi(-ddl);
            let upper = du * du * psi(ddu);
            let e2w = (2.0 * t.ws[i]).exp();
            match (lo, hi) {
                (true, true) => {
                    let s = a + b;
                    t.p_up[i] = a / s;
                    t.lt[i] = 2.0 * a * b / s;
                    t.tau[i] = 2.0 * (b / s) * lower + 2.0 * (a / s) * upper;
                    t.drv[i] = e2w * a * b;
                }
                (false, true) => {
                    t.p_up[i] = 1.0;
                    t.lt[i] = 2.0 * b;
                    t.tau[i] = 2.0 * upper;
                    t.drv[i] = e2w * b * b;
                }
                (true, false) => {
                    t.p_up[i] = 0.0;
                    t.lt[i] = 2.0 * a;
                    t.tau[i] = 2.0 * lower;
                    t.drv[i] = e2w * a * a;
                }
                (false, false) => {}
            }
        }
        t
    }

    fn len(&self) -> usize {
        self.xs.len()
    }

    fn is_frontier(&self, i: usize) -> bool {
        (i == 0 && self.lo_open) || (i + 1 == self.len() && self.hi_open)
    }

    /// Weight of the lower (`upper == false`) or upper cell of knot `i` in
    /// the per-visit occupation, and its cumulative profile from the cell's
    /// left end.
    fn cell(&self, i: usize, upper: bool) -> Option<(f64, f64, f64, f64)> {
        let s = if self.has_lo[i] && self.has_hi[i] {
            let p = self.p_up[i];
            if upper {
                2.0 * p
            } else {
                2.0 * (1.0 - p)
            }
        } else {
            2.0
        };
        if upper && self.has_hi[i] {
            let (x0, x1) = (self.xs[i], self.xs[i + 1]);
            Some((s, x0, x1, (self.ws[i + 1] - self.ws[i]) / (x1 - x0)))
        } else if !upper && self.has_lo[i] {
            let (x0, x1) = (self.xs[i - 1], self.xs[i]);
            Some((s, x0, x1, (self.ws[i] - self.ws[i - 1]) / (x1 - x0)))
        } else {
            None
        }
    }
}

/// Cumulative occupation profile of a lower cell of length `len` with slope
/// `k`, from its left end to `u`.
fn cum_lower(k: f64, u: f64) -> f64 {
    u * u * psi(-k * u)
}

/// Same for an upper cell (profile peaks at the left end).
fn cum_upper(k: f64, len: f64, u: f64) -> f64 {
    let r = len - u;
    len * len * psi(k * len) - r * r * psi(k * r)
}

fn cell_cum(upper: bool, k: f64, len: f64, u: f64) -> f64 {
    let u = u.clamp(0.0, len);
    if upper {
        cum_upper(k, len, u)
    } else {
        cum_lower(k, u)
    }
}

fn nearest(xs: &[f64], x: f64) -> usize {
    let i = xs.partition_point(|&p| p < x);
    if i == 0 {
        0
    } else if i == xs.len() {
        xs.len() - 1
    } else if (xs[i] - x) < (x - xs[i - 1]) {
        i
    } else {
        i - 1
    }
}

/// When a run stops.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stop {
    /// Diffusion time.
    pub time: Option<f64>,
    /// Driver time.
    pub driver_time: Option<f64>,
    /// First arrival at the knot nearest to this position.
    pub hit: Option<f64>,
    /// Local-time levels at the knots nearest to the given positions; the
    /// first one reached stops the run.
    pub local_time: Vec<(f64, f64)>,
}

impl Stop {
    pub fn at_time(t: f64) -> Self {
        Stop { time: Some(t), ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Time,
    DriverTime,
    Hit,
    /// Index into `Stop::local_time`.
    LocalTime(usize),
    StepBudget,
    EnvironmentBudget,
}

impl StopReason {
    pub fn reached(self) -> bool {
        !matches!(self, StopReason::StepBudget | StopReason::EnvironmentBudget)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub reason: StopReason,
    pub time: f64,
    pub driver_time: f64,
    pub position: f64,
    pub steps: u64,
}

/// A resumable walk of the skeleton. Replaying from the same generator gives
/// the same path, and stopping then resuming gives the same path as one run.
#[derive(Debug, Clone)]
pub struct SkeletonRun {
    env: Environment,
    reflect: Reflect,
    tables: Tables,
    rng: ChaCha8Rng,
    pos: usize,
    wt: Vec<f64>,
    rem: f64,
    in_visit: bool,
    t: Neumaier,
    s: Neumaier,
    steps: u64,
    max_steps: u64,
}

impl SkeletonRun {
    pub fn new(env: Environment, rng: ChaCha8Rng, reflect: Reflect, max_steps: u64) -> Result<Self> {
        let mut env = env;
        for (x, side) in [(reflect.lo, Side::Left), (reflect.hi, Side::Right)] {
            if let Some(x) = x {
                let need = match side {
                    Side::Left => -x,
                    Side::Right => x,
                };
                if need > 0.0 && !env.ensure(side, need) {
                    return Err(Error::Horizon(format!("environment does not reach barrier {x}")));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (reflect.lo, reflect.hi) {
            if !(lo < 0.0 && hi > 0.0) {
                return Err(Error::InvalidParams(format!("barriers must straddle 0, got {lo}, {hi}")));
            }
        }
        let tables = Tables::build(&env, reflect);
        let n = tables.len();
        let pos = tables.origin;
        Ok(SkeletonRun {
            env,
            reflect,
            tables,
            rng,
            pos,
            wt: vec![0.0; n],
            rem: 0.0,
            in_visit: false,
            t: Neumaier::default(),
            s: Neumaier::default(),
            steps: 0,
            max_steps,
        })
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn time(&self) -> f64 {
        self.t.value()
    }

    pub fn driver_time(&self) -> f64 {
        self.s.value()
    }

    pub fn position(&self) -> f64 {
        self.tables.xs[self.pos]
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Knot nearest to `x` (global coordinates).
    pub fn snap(&self, x: f64) -> f64 {
        self.tables.xs[nearest(&self.tables.xs, x)]
    }

    fn grow(&mut self, side: Side) -> bool {
        let chunk = self.env.side(side).len().max(4096);
        let old_left = self.env.side(Side::Left).len();
        if !self.env.extend(side, chunk) {
            return false;
        }
        let shift = self.env.side(Side::Left).len() - old_left;
        self.tables = Tables::build(&self.env, self.reflect);
        let mut wt = vec![0.0; self.tables.len()];
        wt[shift..shift + self.wt.len()].copy_from_slice(&self.wt);
        self.wt = wt;
        self.pos += shift;
        true
    }

    fn targets(&self, stop: &Stop) -> (Vec<f64>, Vec<usize>, Option<usize>) {
        let mut level = vec![f64::INFINITY; self.tables.len()];
        let mut which = vec![usize::MAX; self.tables.len()];
        for (k, &(x, l)) in stop.local_time.iter().enumerate() {
            let i = nearest(&self.tables.xs, x);
            if l < level[i] {
                level[i] = l;
                which[i] = k;
            }
        }
        let hit = stop.hit.map(|x| nearest(&self.tables.xs, x));
        (level, which, hit)
    }

    /// Make sure the environment holds the knots the stop rule refers to.
    fn cover(&mut self, stop: &Stop) -> bool {
        let xs = stop.hit.into_iter().chain(stop.local_time.iter().map(|p| p.0));
        for x in xs.collect::<Vec<_>>() {
            let side = if x >= 0.0 { Side::Right } else { Side::Left };
            while self.env.extent(side) < x.abs() {
                if !self.grow(side) {
                    return false;
                }
            }
        }
        true
    }

    /// Advance until the stop rule fires or a budget runs out.
    pub fn advance(&mut self, stop: &Stop) -> Outcome {
        if !self.cover(stop) {
            return self.outcome(StopReason::EnvironmentBudget);
        }
        let (mut level, mut which, mut hit) = self.targets(stop);
        let t_stop = stop.time.unwrap_or(f64::INFINITY);
        let s_stop = stop.driver_time.unwrap_or(f64::INFINITY);
        if hit == Some(self.pos) {
            return self.outcome(StopReason::Hit);
        }
        loop {
            let i = self.pos;
            if !self.in_visit {
                if self.tables.is_frontier(i) {
                    let side = if i == 0 && self.tables.lo_open { Side::Left } else { Side::Right };
                    if !self.grow(side) {
                        return self.outcome(StopReason::EnvironmentBudget);
                    }
                    (level, which, hit) = self.targets(stop);
                    continue;
                }
                if self.steps >= self.max_steps {
                    return self.outcome(StopReason::StepBudget);
                }
                self.rem = self.rng.sample(Exp1);
                self.in_visit = true;
            }
            let tb = &self.tables;
            let mut take = self.rem;
            let mut fired = None;
            let t_now = self.t.value();
            // a stop landing exactly on an arrival belongs to the arrival
            let a = (t_stop - t_now) / tb.tau[i];
            if a < take * (1.0 - TIE) {
                take = a.max(0.0);
                fired = Some(StopReason::Time);
            }
            if s_stop.is_finite() {
                let a = (s_stop - self.s.value()) / tb.drv[i];
                if a < take * (1.0 - TIE) {
                    take = a.max(0.0);
                    fired = Some(StopReason::DriverTime);
                }
            }
            if level[i].is_finite() {
                let a = level[i] / tb.lt[i] - self.wt[i];
                if a <= take {
                    take = a.max(0.0);
                    fired = Some(StopReason::LocalTime(which[i]));
                }
            }
            self.wt[i] += take;
            self.t.add(tb.tau[i] * take);
            self.s.add(tb.drv[i] * take);
            self.rem -= take;
            if let Some(reason) = fired {
                if reason == StopReason::Time {
                    self.t = Neumaier::default();
                    self.t.add(t_stop);
                }
                return self.outcome(reason);
            }
            self.in_visit = false;
            self.rem = 0.0;
            let u: f64 = self.rng.random();
            self.pos = if u < tb.p_up[i] { i + 1 } else { i - 1 };
            self.steps += 1;
            if hit == Some(self.pos) {
                return self.outcome(StopReason::Hit);
            }
        }
    }

    fn outcome(&self, reason: StopReason) -> Outcome {
        Outcome {
            reason,
            time: self.time(),
            driver_time: self.driver_time(),
            position: self.position(),
            steps: self.steps,
        }
    }

    /// `(x, L(x))` at every knot carrying local time.
    pub fn knot_local_times(&self) -> Vec<(f64, f64)> {
        self.wt
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| (self.tables.xs[i], self.tables.lt[i] * w))
            .collect()
    }

    /// Local time at the knot `i`; 0 at frontier knots.
    fn knot_l(&self, i: usize) -> f64 {
        if self.wt[i] > 0.0 {
            self.tables.lt[i] * self.wt[i]
        } else {
            0.0
        }
    }

    /// Local time at `x`, linear between knots.
    pub fn local_time_at(&self, x: f64) -> f64 {
        let xs = &self.tables.xs;
        if x < xs[0] || x > xs[xs.len() - 1] {
            return 0.0;
        }
        let k = xs.partition_point(|&p| p <= x).saturating_sub(1).min(xs.len() - 2);
        let u = (x - xs[k]) / (xs[k + 1] - xs[k]);
        (1.0 - u) * self.knot_l(k) + u * self.knot_l(k + 1)
    }

    /// `sup_x L(t, x)` over knots.
    pub fn l_star(&self) -> f64 {
        (0..self.wt.len()).map(|i| self.knot_l(i)).fold(0.0, f64::max)
    }

    fn visited(&self) -> impl Iterator<Item = usize> + '_ {
        self.wt.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i)
    }

    /// Occupation time of `[lo, hi]`.
    pub fn occupation(&self, lo: f64, hi: f64) -> f64 {
        let mut acc = Neumaier::default();
        if hi <= lo {
            return 0.0;
        }
        for i in self.visited() {
            for upper in [false, true] {
                let Some((s, x0, x1, k)) = self.tables.cell(i, upper) else { continue };
                let (a, b) = (lo.max(x0), hi.min(x1));
                if b <= a {
                    continue;
                }
                let len = x1 - x0;
                let m = cell_cum(upper, k, len, b - x0) - cell_cum(upper, k, len, a - x0);
                acc.add(s * self.wt[i] * m);
            }
        }
        acc.value()
    }

    /// Occupation time of a union of disjoint intervals.
    pub fn occupation_of(&self, intervals: &[(f64, f64)]) -> f64 {
        intervals.iter().map(|&(lo, hi)| self.occupation(lo, hi)).sum()
    }

    /// Local-time field at the current time.
    pub fn field(&self, bin_width: f64, estimator: Estimator) -> Result<LocalTimeField> {
        let mut acc = BinAcc::new(bin_width)?;
        let xs = &self.tables.xs;
        let min_gap = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let under = bin_width < min_gap;
        match estimator {
            Estimator::Direct => {
                for i in self.visited() {
                    for upper in [false, true] {
                        let Some((s, x0, x1, k)) = self.tables.cell(i, upper) else { continue };
                        let len = x1 - x0;
                        let mass = s * self.wt[i] * cell_cum(upper, k, len, len);
                        acc.spread(x0, x1, mass, |x| cell_cum(upper, k, len, x - x0));
                    }
                }
            }
            Estimator::Formula => {
                let mut seen = vec![false; xs.len()];
                for i in self.visited() {
                    for j in [i.saturating_sub(1), i] {
                        if j + 1 >= xs.len() || seen[j] {
                            continue;
                        }
                        seen[j] = true;
                        let (l0, l1) = (self.knot_l(j), self.knot_l(j + 1));
                        let (x0, x1) = (xs[j], xs[j + 1]);
                        let len = x1 - x0;
                        let mass = 0.5 * (l0 + l1) * len;
                        acc.spread(x0, x1, mass, |x| {
                            let u = (x - x0).clamp(0.0, len);
                            l0 * u + 0.5 * (l1 - l0) * u * u / len
                        });
                    }
                }
            }
        }
        Ok(acc.into_field(self.time(), estimator, under))
    }
}
