//! Shared helpers for the integration and acceptance tests: random
//! piecewise-linear paths and dense-grid scan oracles.

#![allow(dead_code)]

use broxlab::environment::integral::exp_integral_on;
use broxlab::environment::ladder::{ladder_on, H0};
use broxlab::environment::localization::u_interval;
use broxlab::environment::valley::{a_point_on, plus_valley_on, valley_pairs_on};
use broxlab::environment::Rises;
use broxlab::path::functional::{hitting_time, oscillation_first_exceed, OscillationMode};
use broxlab::path::SamplePath;
use broxlab::seed::rng_from_seed;
use rand::Rng;
use rand_distr::StandardNormal;

/// The zigzag used throughout the hand-computed examples.
pub fn e1() -> SamplePath {
    SamplePath::from_knots(&[(0.0, 0.0), (1.0, -3.0), (2.0, 1.0), (3.0, -5.0), (4.0, 2.0)]).unwrap()
}

/// Random walk with irregular spacing, starting at `(0, 0)`.
pub fn random_path(seed: u64, knots: usize) -> SamplePath {
    let mut rng = rng_from_seed(seed);
    let (mut x, mut w) = (0.0, 0.0);
    let mut pts = vec![(x, w)];
    for _ in 1..knots {
        let dx: f64 = rng.random_range(0.05..0.5);
        let z: f64 = rng.sample(StandardNormal);
        x += dx;
        w += 1.5 * dx.sqrt() * z;
        pts.push((x, w));
    }
    SamplePath::from_knots(&pts).unwrap()
}

/// Dense grid of spacing at most `h`: a uniform grid merged with the
/// path's own knots and any `extra` positions, values by interpolation.
pub struct Grid {
    pub xs: Vec<f64>,
    pub ws: Vec<f64>,
    pub h: f64,
}

impl Grid {
    pub fn new(path: &SamplePath, h: f64, extra: &[f64]) -> Self {
        let (a, b) = (path.start(), path.end());
        let n = ((b - a) / h).ceil() as usize;
        let mut xs: Vec<f64> = (0..=n).map(|k| (a + k as f64 * h).min(b)).collect();
        xs.extend_from_slice(path.positions());
        xs.extend(extra.iter().copied().filter(|x| *x >= a && *x <= b));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let ws = xs.iter().map(|&x| path.value_at(x)).collect();
        Grid { xs, ws, h }
    }

    fn index(&self, x: f64) -> usize {
        self.xs.partition_point(|&g| g < x)
    }

    /// First grid point `>= from` satisfying `pred(k)`.
    fn first(&self, from: f64, mut pred: impl FnMut(usize) -> bool) -> Option<usize> {
        (self.index(from)..self.xs.len()).find(|&k| pred(k))
    }

    pub fn hitting(&self, level: f64, from: f64) -> Option<f64> {
        let k0 = self.index(from);
        let s0 = self.ws[k0] - level;
        self.first(from, |k| (self.ws[k] - level) * s0.signum() <= 0.0).map(|k| self.xs[k])
    }

    pub fn oscillation(&self, from: f64, h: f64, above_min: bool) -> Option<f64> {
        let sign = if above_min { 1.0 } else { -1.0 };
        let mut run = f64::INFINITY;
        self.first(from, |k| {
            let w = sign * self.ws[k];
            run = run.min(w);
            w - run >= h
        })
        .map(|k| self.xs[k])
    }

    /// Smallest position of the minimum on `[a, b]`.
    pub fn argmin(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = (self.index(a), self.index(b));
        let mut best = lo;
        for k in lo..=hi.min(self.xs.len() - 1) {
            if self.xs[k] <= b && self.ws[k] < self.ws[best] {
                best = k;
            }
        }
        self.xs[best]
    }

    pub fn argmax(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = (self.index(a), self.index(b));
        let mut best = lo;
        for k in lo..=hi.min(self.xs.len() - 1) {
            if self.xs[k] <= b && self.ws[k] > self.ws[best] {
                best = k;
            }
        }
        self.xs[best]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.ws[self.index(x).min(self.xs.len() - 1)]
    }

    /// `sup{x <= m : W(x) - W(m) >= rise} ∨ floor`.
    pub fn a_point(&self, m: f64, rise: f64, floor: f64) -> f64 {
        let km = self.index(m);
        let level = self.ws[km] + rise;
        (0..=km).rev().find(|&k| self.ws[k] >= level).map_or(floor, |k| self.xs[k].max(floor))
    }

    /// First grid point in `[lo, hi]` with `W <= level`, and the last one.
    pub fn below(&self, level: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let ks: Vec<usize> =
            (self.index(lo)..self.xs.len()).take_while(|&k| self.xs[k] <= hi).filter(|&k| self.ws[k] <= level).collect();
        Some((self.xs[*ks.first()?], self.xs[*ks.last()?]))
    }

    /// Trapezoid rule for `∫_a^b e^{-W + W(m)}`.
    pub fn exp_integral(&self, a: f64, b: f64, m: f64) -> f64 {
        let wm = self.value(m);
        let (lo, hi) = (self.index(a), self.index(b));
        (lo..hi).map(|k| 0.5 * (self.xs[k + 1] - self.xs[k]) * ((wm - self.ws[k]).exp() + (wm - self.ws[k + 1]).exp())).sum()
    }
}

/// Largest discrepancy, in units of the grid step, of one random path.
/// A value above 1 means an operation left its one-step window; `Err`
/// means the operation and the oracle disagree on existence.
pub fn brute_force_path(seed: u64) -> Result<f64, String> {
    let path = random_path(seed, 60);
    let mut rng = rng_from_seed(seed ^ 0xa5a5);
    let h = 0.01;
    let mut worst: f64 = 0.0;
    let mut check = |name: &str, exact: Option<f64>, oracle: Option<f64>, later: bool| -> Result<(), String> {
        match (exact, oracle) {
            (None, None) => Ok(()),
            (Some(x), Some(o)) => {
                // the oracle is late (or early) by at most one step
                let d = if later { o - x } else { x - o };
                if d < -1e-9 {
                    return Err(format!("seed {seed}: {name}: oracle {o} on the wrong side of {x}"));
                }
                worst = worst.max(d / h);
                Ok(())
            }
            _ => Err(format!("seed {seed}: {name}: exact {exact:?} but oracle {oracle:?}")),
        }
    };
    let e = |r: broxlab::Result<Option<f64>>| r.map_err(|e| e.to_string());

    // hitting times and oscillations from a few starting points
    for _ in 0..5 {
        let from = rng.random_range(path.start()..path.end());
        let level = path.value_at(from) + rng.random_range(-3.0..3.0);
        let g = Grid::new(&path, h, &[from]);
        check("hitting_time", e(hitting_time(&path, level, from))?, g.hitting(level, from), true)?;
        let osc = rng.random_range(0.5..3.0);
        for (mode, above) in [(OscillationMode::AboveRunningMin, true), (OscillationMode::BelowRunningMax, false)] {
            let x = e(oscillation_first_exceed(&path, from, osc, mode))?;
            check("oscillation_first_exceed", x, g.oscillation(from, osc, above), true)?;
        }
    }

    // minus sequence, each step from the exact previous b
    let threshold = 1.0;
    let (pairs, _) = valley_pairs_on(&path, threshold, 3).map_err(|e| e.to_string())?;
    let mut b_prev = 0.0;
    for p in &pairs {
        let g = Grid::new(&path, h, &[b_prev]);
        let b = g.oscillation(b_prev, threshold, true);
        check("valley b", Some(p.b), b, true)?;
        check("valley m", Some(p.m), Some(g.argmin(b_prev, p.b)), true)?;
        let a = a_point_on(&path, p.m, 0.8, b_prev).map_err(|e| e.to_string())?;
        check("a_point", Some(a), Some(g.a_point(p.m, 0.8, b_prev)), false)?;
        b_prev = p.b;
    }

    // plus valley
    let rises = Rises { b: 1.0, a: 0.8, c: 1.5 };
    let g = Grid::new(&path, h, &[]);
    if let Some(pv) = plus_valley_on(&path, &rises).map_err(|e| e.to_string())? {
        check("plus c", Some(pv.c), g.oscillation(0.0, rises.c, true), true)?;
        check("plus m", Some(pv.m), Some(g.argmin(0.0, pv.c)), true)?;
        check("plus b", Some(pv.b), g.hitting(g.value(pv.m) + rises.b, pv.m), true)?;
        check("plus a", Some(pv.a), Some(g.a_point(pv.m, rises.a, 0.0)), false)?;

        // neighbourhood of the plus bottom
        let bound = 0.7;
        let (lo, hi) = u_interval(&path, pv.a, pv.m, pv.b, bound).map_err(|e| e.to_string())?;
        let g = Grid::new(&path, h, &[pv.a, pv.m, pv.b]);
        let level = g.value(pv.m) + bound;
        let (e_o, _) = g.below(level, pv.a, pv.m).ok_or("u_interval: empty left side")?;
        let (_, d_o) = g.below(level, pv.m, pv.b).ok_or("u_interval: empty right side")?;
        check("u_interval e", Some(lo), Some(e_o), true)?;
        check("u_interval d", Some(hi), Some(d_o), false)?;

        let exact = exp_integral_on(&path, pv.a, pv.b, pv.m).map_err(|e| e.to_string())?.value;
        let fine = Grid::new(&path, 1e-3, &[pv.a, pv.m, pv.b]).exp_integral(pv.a, pv.b, pv.m);
        if (exact - fine).abs() > 1e-4 * exact {
            return Err(format!("seed {seed}: exp_integral {exact} vs trapezoid {fine}"));
        }
    }

    // ladder, each step from the exact previous gamma
    let seq = ladder_on(&path, 4).map_err(|e| e.to_string())?;
    let (mut gamma, mut hn) = (0.0, H0);
    for s in &seq.steps {
        let g = Grid::new(&path, h, &[gamma, s.mu, s.beta]);
        check("ladder beta", Some(s.beta), g.oscillation(gamma, hn, true), true)?;
        check("ladder mu", Some(s.mu), Some(g.argmin(gamma, s.beta)), true)?;
        let wmu = g.value(s.mu);
        let back = g.first_below(wmu, s.beta);
        check("ladder gamma", Some(s.gamma), back, true)?;
        check("ladder eta", Some(s.eta), g.hitting(wmu + 2.0, s.mu), true)?;
        check("ladder M", Some(s.big_m), Some(g.argmax(s.beta, s.gamma)), true)?;
        let h_o = g.value(s.big_m) - wmu;
        if (h_o - s.h).abs() > 1e-9 * s.h.max(1.0) {
            return Err(format!("seed {seed}: ladder h {} vs {h_o}", s.h));
        }
        gamma = s.gamma;
        hn = s.h;
    }
    Ok(worst)
}

impl Grid {
    /// First grid point `>= from` with `W <= level`.
    pub fn first_below(&self, level: f64, from: f64) -> Option<f64> {
        self.first(from, |k| self.ws[k] <= level).map(|k| self.xs[k])
    }
}

/// Worst discrepancy over `n` random paths, in grid steps.
pub fn brute_force_suite(n: u64) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for seed in 0..n {
        worst = worst.max(brute_force_path(1000 + seed)?);
    }
    Ok(worst)
}

/// Hand-computed values on the zigzag, as `(name, computed, expected)`.
pub fn e1_golden() -> Vec<(&'static str, f64, f64)> {
    let p = e1();
    let (pairs, _) = valley_pairs_on(&p, 2.0, 3).unwrap();
    let pv = plus_valley_on(&p, &Rises { c: 4.0, b: 2.0, a: 3.0 }).unwrap().unwrap();
    let int = exp_integral_on(&p, 1.0, 1.5, 1.0).unwrap().value;
    vec![
        ("b1", pairs[0].b, 1.5),
        ("m1", pairs[0].m, 1.0),
        ("b2", pairs[1].b, 2.0),
        ("m2", pairs[1].m, 1.5),
        ("b3", pairs[2].b, 3.0 + 2.0 / 7.0),
        ("m3", pairs[2].m, 3.0),
        ("c+", pv.c, 2.0),
        ("m+", pv.m, 1.0),
        ("b+", pv.b, 1.5),
        ("a+", pv.a, 0.0),
        ("integral", int, (1.0 - (-2.0f64).exp()) / 4.0),
    ]
}

/// Largest absolute deviation from the hand-computed values.
pub fn e1_worst() -> f64 {
    e1_golden().iter().map(|(_, got, want)| (got - want).abs()).fold(0.0, f64::max)
}
