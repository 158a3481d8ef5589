//! Two-sided environments and everything computed from them: the valley
//! decomposition, the good-environment events, the exponential integrals,
//! the ladder sequence and the localization sets.
//!
//! Each side is stored as a path on `[0, x_max]`; the left side holds the
//! reversed environment `x -> W(-x)`. Randomly generated sides keep their
//! generator so that analyses can extend them on demand without redrawing
//! existing increments.

pub mod gamma;
pub mod integral;
pub mod ladder;
pub mod localization;
pub mod valley;

pub use gamma::{gamma_events, GammaReport};
pub use integral::{exp_integral, ExpIntegral, SandwichIntegrals};
pub use ladder::{ladder_sequence, LadderOptions, LadderSequence};
pub use localization::{localization_sets, Interval, WidthMode};
pub use valley::{
    a_point, decompose, decompose_rises, plus_valley, valley_sequence, Decomposition, MinusValley, PlusValley,
    Rises, Thresholds, ValleyDecomposition,
};

use crate::error::{Error, Result};
use crate::path::{functional::reflect, SamplePath};
use crate::seed::{rng_for, Stream};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const DEFAULT_BUDGET: usize = 1_000_000;
const MIN_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Right, Side::Left];

    /// Two-sided coordinate of a position measured on this side.
    pub fn to_global(self, x: f64) -> f64 {
        match self {
            Side::Right => x,
            Side::Left => -x,
        }
    }
}

#[derive(Debug, Clone)]
struct Generator {
    rng: ChaCha8Rng,
    refine_rng: ChaCha8Rng,
    step: f64,
    /// Number of regular grid knots appended so far; while `regular` the
    /// next knot sits exactly at `grid_index * step`.
    grid_index: u64,
    regular: bool,
}

/// One side of an environment.
#[derive(Debug, Clone)]
pub struct EnvSide {
    path: SamplePath,
    gen: Option<Generator>,
    budget: usize,
}

impl EnvSide {
    fn fixed(path: SamplePath) -> Self {
        let budget = path.len();
        EnvSide { path, gen: None, budget }
    }

    fn random(seed: u64, replicate: u64, side: Side, step: f64, budget: usize) -> Self {
        let (s, r) = match side {
            Side::Right => (Stream::EnvRight, Stream::RefineRight),
            Side::Left => (Stream::EnvLeft, Stream::RefineLeft),
        };
        EnvSide {
            path: SamplePath::single(0.0, 0.0),
            gen: Some(Generator {
                rng: rng_for(seed, replicate, s),
                refine_rng: rng_for(seed, replicate, r),
                step,
                grid_index: 0,
                regular: true,
            }),
            budget,
        }
    }

    pub fn path(&self) -> &SamplePath {
        &self.path
    }

    pub fn is_extensible(&self) -> bool {
        self.gen.is_some() && self.path.len() < self.budget
    }

    /// True once the side holds as many knots as its budget allows.
    pub fn at_budget(&self) -> bool {
        self.path.len() >= self.budget
    }

    fn extend(&mut self, knots: usize) -> bool {
        let room = self.budget.saturating_sub(self.path.len());
        let Some(g) = self.gen.as_mut() else { return false };
        if room == 0 {
            return false;
        }
        let sd = g.step.sqrt();
        for _ in 0..knots.min(room) {
            let z: f64 = g.rng.sample(StandardNormal);
            let w = self.path.last_value() + sd * z;
            g.grid_index += 1;
            let x = if g.regular { g.grid_index as f64 * g.step } else { self.path.end() + g.step };
            self.path.push(x, w);
        }
        true
    }

    fn append_step(&mut self, dx: f64) -> bool {
        if self.path.len() >= self.budget || !(dx > 0.0) {
            return false;
        }
        let Some(g) = self.gen.as_mut() else { return false };
        let z: f64 = g.rng.sample(StandardNormal);
        let w = self.path.last_value() + dx.sqrt() * z;
        let x = self.path.end() + dx;
        if x <= self.path.end() {
            return false;
        }
        g.regular = false;
        self.path.push(x, w);
        true
    }

    fn refine(&mut self, lo: f64, hi: f64, max_gap: f64, keep: &dyn Fn(f64, f64) -> bool) -> usize {
        let Some(g) = self.gen.as_mut() else { return 0 };
        let old_len = self.path.len();
        let mut room = self.budget.saturating_sub(old_len);
        let (xs, ws) = self.path.parts_mut();
        let mut nx = Vec::with_capacity(xs.len());
        let mut nw = Vec::with_capacity(ws.len());
        for k in 0..xs.len() {
            nx.push(xs[k]);
            nw.push(ws[k]);
            if k + 1 == xs.len() {
                break;
            }
            let (x0, x1) = (xs[k], xs[k + 1]);
            if x1 <= lo || x0 >= hi || x1 - x0 <= max_gap || !keep(ws[k], ws[k + 1]) {
                continue;
            }
            bridge_fill(x0, ws[k], x1, ws[k + 1], max_gap, &mut room, &mut g.refine_rng, &mut nx, &mut nw);
        }
        *xs = nx;
        *ws = nw;
        self.path.len() - old_len
    }
}

/// Brownian-bridge points strictly between `(x0, w0)` and `(x1, w1)` by
/// midpoint bisection until every gap is at most `max_gap` or `room`
/// knots have been used.
#[allow(clippy::too_many_arguments)]
fn bridge_fill(
    x0: f64,
    w0: f64,
    x1: f64,
    w1: f64,
    max_gap: f64,
    room: &mut usize,
    rng: &mut ChaCha8Rng,
    xs: &mut Vec<f64>,
    ws: &mut Vec<f64>,
) {
    let gap = x1 - x0;
    if gap <= max_gap || *room == 0 {
        return;
    }
    let xm = 0.5 * (x0 + x1);
    if !(xm > x0 && xm < x1) {
        return;
    }
    let z: f64 = rng.sample(StandardNormal);
    let wm = 0.5 * (w0 + w1) + 0.5 * gap.sqrt() * z;
    *room -= 1;
    bridge_fill(x0, w0, xm, wm, max_gap, room, rng, xs, ws);
    xs.push(xm);
    ws.push(wm);
    bridge_fill(xm, wm, x1, w1, max_gap, room, rng, xs, ws);
}

/// Result of a lazily extended scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lazy<T> {
    pub value: T,
    pub truncated: bool,
}

/// Step of a lazily extended scan: finished, or a partial result that
/// needs more environment.
pub enum Scan<T> {
    Done(T),
    More(T),
}

/// Two-sided environment with `W(0) = 0`.
#[derive(Debug, Clone)]
pub struct Environment {
    right: EnvSide,
    left: EnvSide,
    seed: Option<u64>,
    step: Option<f64>,
}

impl Environment {
    /// Two-sided Brownian environment with knot spacing `step`, generated
    /// lazily; the default budget is [`DEFAULT_BUDGET`] knots per side.
    pub fn brownian(seed: u64, step: f64) -> Result<Self> {
        Self::brownian_with_budget(seed, step, DEFAULT_BUDGET)
    }

    pub fn brownian_with_budget(seed: u64, step: f64, budget: usize) -> Result<Self> {
        Self::brownian_for(seed, 0, step, budget)
    }

    /// Environment of replicate `replicate` under `base_seed`, drawn from
    /// that replicate's environment streams.
    pub fn brownian_for(base_seed: u64, replicate: u64, step: f64, budget: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidConfig(format!("environment step must be positive, got {step}")));
        }
        let seed = base_seed;
        Ok(Environment {
            right: EnvSide::random(seed, replicate, Side::Right, step, budget.max(1)),
            left: EnvSide::random(seed, replicate, Side::Left, step, budget.max(1)),
            seed: Some(seed),
            step: Some(step),
        })
    }

    /// Fixed environment from the two side paths (the left one given as
    /// `x -> W(-x)`). Both must start at `(0, 0)`.
    pub fn from_sides(right: SamplePath, left: SamplePath) -> Result<Self> {
        for (p, name) in [(&right, "right"), (&left, "left")] {
            if p.start() != 0.0 || p.values()[0] != 0.0 {
                return Err(Error::Domain(format!("{name} side must start at (0, 0)")));
            }
        }
        Ok(Environment { right: EnvSide::fixed(right), left: EnvSide::fixed(left), seed: None, step: None })
    }

    /// Fixed environment that only has a right side.
    pub fn from_right(right: SamplePath) -> Result<Self> {
        Self::from_sides(right, SamplePath::single(0.0, 0.0))
    }

    /// Fixed environment from a path whose domain contains 0 and whose
    /// value there is 0.
    pub fn from_two_sided(path: &SamplePath) -> Result<Self> {
        path.check(0.0)?;
        if path.value_at(0.0) != 0.0 {
            return Err(Error::Domain("environment must vanish at 0".into()));
        }
        let right = path.restricted(0.0, path.end())?;
        let left = reflect(&path.restricted(path.start(), 0.0)?);
        Self::from_sides(right, left)
    }

    /// Flat environment on `[-extent, extent]`.
    pub fn flat(extent: f64, step: f64) -> Result<Self> {
        let p = SamplePath::flat(extent, step)?;
        Self::from_sides(p.clone(), p)
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn step(&self) -> Option<f64> {
        self.step
    }

    fn side_mut(&mut self, side: Side) -> &mut EnvSide {
        match side {
            Side::Right => &mut self.right,
            Side::Left => &mut self.left,
        }
    }

    pub fn side_state(&self, side: Side) -> &EnvSide {
        match side {
            Side::Right => &self.right,
            Side::Left => &self.left,
        }
    }

    /// Path of one side; the left side is the reversed environment.
    pub fn side(&self, side: Side) -> &SamplePath {
        &self.side_state(side).path
    }

    pub fn extent(&self, side: Side) -> f64 {
        self.side(side).end()
    }

    /// `W(x)` for `x` of either sign, clamped to the sampled domain.
    pub fn value(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.right.path.value_at(x)
        } else {
            self.left.path.value_at(-x)
        }
    }

    /// Append `knots` regular knots to a side. False when the side cannot
    /// grow (fixed path or budget exhausted).
    pub fn extend(&mut self, side: Side, knots: usize) -> bool {
        self.side_mut(side).extend(knots)
    }

    /// Append one knot at distance `dx` beyond the current end.
    pub fn append_step(&mut self, side: Side, dx: f64) -> bool {
        self.side_mut(side).append_step(dx)
    }

    /// Extend a side until it covers `x`; false if the budget ran out.
    pub fn ensure(&mut self, side: Side, x: f64) -> bool {
        while self.extent(side) < x {
            let chunk = self.side(side).len().max(MIN_CHUNK);
            if !self.extend(side, chunk) {
                return false;
            }
        }
        true
    }

    /// Insert Brownian-bridge knots on the segments of `[lo, hi]` longer
    /// than `max_gap` whose end values satisfy `keep`. Existing knots are
    /// untouched and the knot budget is respected. Returns the number of
    /// knots added.
    pub fn refine(
        &mut self,
        side: Side,
        lo: f64,
        hi: f64,
        max_gap: f64,
        keep: &dyn Fn(f64, f64) -> bool,
    ) -> usize {
        if !(max_gap > 0.0) {
            return 0;
        }
        self.side_mut(side).refine(lo, hi, max_gap, keep)
    }

    /// Run `scan` on a side, extending it in geometrically growing chunks
    /// while the scan asks for more.
    pub fn scan<T>(&mut self, side: Side, mut scan: impl FnMut(&SamplePath) -> Scan<T>) -> Lazy<T> {
        loop {
            match scan(self.side(side)) {
                Scan::Done(value) => return Lazy { value, truncated: false },
                Scan::More(partial) => {
                    let chunk = self.side(side).len().max(MIN_CHUNK);
                    if !self.extend(side, chunk) {
                        return Lazy { value: partial, truncated: true };
                    }
                }
            }
        }
    }

    /// Both sides glued into one path on `[-x_max^-, x_max^+]`.
    pub fn two_sided_path(&self) -> SamplePath {
        let left = reflect(&self.left.path);
        let mut xs = left.positions().to_vec();
        let mut ws = left.values().to_vec();
        xs.extend_from_slice(&self.right.path.positions()[1..]);
        ws.extend_from_slice(&self.right.path.values()[1..]);
        SamplePath::from_parts_unchecked(xs, ws)
    }

    /// Same environment with the sides swapped, i.e. `x -> W(-x)`.
    pub fn reflected(&self) -> Environment {
        Environment {
            right: self.left.clone(),
            left: self.right.clone(),
            seed: self.seed,
            step: self.step,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{sample_brownian, SamplerConfig};

    #[test]
    fn lazy_extension_matches_eager_sampling() {
        let mut env = Environment::brownian(11, 0.01).unwrap();
        assert!(env.ensure(Side::Right, 5.0));
        assert!(env.ensure(Side::Left, 5.0));
        let eager = sample_brownian(&SamplerConfig::new(0.01, 11, 5.0).unwrap(), true).unwrap();
        for k in 0..=500 {
            let x = k as f64 * 0.01;
            assert_eq!(env.value(x), eager.value_at(x), "right {k}");
            assert_eq!(env.value(-x), eager.value_at(-x), "left {k}");
        }
    }

    #[test]
    fn extension_preserves_existing_knots() {
        let mut env = Environment::brownian(3, 0.1).unwrap();
        env.extend(Side::Right, 100);
        let before = env.side(Side::Right).clone();
        env.extend(Side::Right, 1000);
        let after = env.side(Side::Right);
        assert_eq!(&after.positions()[..101], before.positions());
        assert_eq!(&after.values()[..101], before.values());
    }

    #[test]
    fn budget_is_respected() {
        let mut env = Environment::brownian_with_budget(3, 0.1, 50).unwrap();
        assert!(!env.ensure(Side::Right, 100.0));
        assert_eq!(env.side(Side::Right).len(), 50);
        let mut fixed = Environment::from_right(SamplePath::flat(1.0, 0.5).unwrap()).unwrap();
        assert!(!fixed.extend(Side::Right, 1));
    }

    #[test]
    fn refinement_keeps_knots_and_fills_gaps() {
        let mut env = Environment::brownian(5, 1.0).unwrap();
        env.extend(Side::Right, 20);
        let before = env.side(Side::Right).clone();
        let added = env.refine(Side::Right, 2.0, 6.0, 0.1, &|_, _| true);
        let after = env.side(Side::Right);
        assert!(added > 0);
        for (x, w) in before.knots() {
            assert_eq!(after.value_at(x), w);
            assert!(after.positions().contains(&x));
        }
        let mut capped = Environment::brownian_with_budget(5, 1.0, 40).unwrap();
        capped.extend(Side::Right, 20);
        capped.refine(Side::Right, 0.0, 20.0, 0.01, &|_, _| true);
        assert_eq!(capped.side(Side::Right).len(), 40);
        assert!(capped.side_state(Side::Right).at_budget());
        for k in 0..after.len() - 1 {
            let (x0, x1) = (after.positions()[k], after.positions()[k + 1]);
            if x0 >= 2.0 && x1 <= 6.0 {
                assert!(x1 - x0 <= 0.1);
            }
        }
    }

    #[test]
    fn two_sided_round_trip() {
        let p = SamplePath::from_knots(&[(-2.0, 1.0), (-1.0, 3.0), (0.0, 0.0), (1.5, -1.0)]).unwrap();
        let env = Environment::from_two_sided(&p).unwrap();
        assert_eq!(env.two_sided_path(), p);
        assert_eq!(env.value(-1.0), 3.0);
        assert_eq!(env.side(Side::Left).positions(), &[0.0, 1.0, 2.0]);
        let r = env.reflected();
        assert_eq!(r.value(1.0), 3.0);
    }
}
