//! Ladder sequence.
//!
//! Starting from `gamma_0 = 0` and `h_0 = 2`, step `n + 1` is
//!
//! * `beta`: first point after `gamma_n` where `W` rises `h_n` above its
//!   running minimum;
//! * `mu`: the argmin on `[gamma_n, beta]`;
//! * `gamma`: first return to `W(mu)` after `beta`;
//! * `eta`: first point after `mu` where `W = W(mu) + 2`;
//! * `M`: the argmax on `[beta, gamma]`, and `h = W(M) - W(mu)`.
//!
//! Heights grow geometrically, so a fixed knot spacing is either far too
//! coarse early on or unaffordable later. [`LadderOptions::adaptive`]
//! extends the environment with a spacing proportional to the square of
//! the current height, refined near the levels that decide the next event,
//! and [`LadderOptions::refine`] inserts Brownian-bridge knots around each
//! bottom so the exponential integrals are resolved.

use super::integral::exp_integral_on;
use super::{Environment, Side};
use crate::error::{Error, Result};
use crate::path::{Piece, SamplePath};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub big_m: f64,
    pub h: f64,
    pub w_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderSequence {
    pub n_max: usize,
    pub steps: Vec<LadderStep>,
    pub truncated: bool,
    /// `∫_{mu_n}^{eta_n} exp(-W + W(mu_n))`, one entry per step.
    pub int_mu_eta: Vec<f64>,
    /// `∫_{gamma_{n-1}}^{M_n} exp(-W + W(mu_n))`, one entry per step.
    pub int_gamma_m: Vec<f64>,
}

impl LadderSequence {
    pub fn h(&self, n: usize) -> Option<f64> {
        if n == 0 {
            Some(H0)
        } else {
            self.steps.get(n - 1).map(|s| s.h)
        }
    }

    pub fn gamma(&self, n: usize) -> Option<f64> {
        if n == 0 {
            Some(0.0)
        } else {
            self.steps.get(n - 1).map(|s| s.gamma)
        }
    }

    /// `log(h_{n+1} / h_n)` for all available `n`.
    pub fn log_ratios(&self) -> Vec<f64> {
        (0..self.steps.len()).map(|n| (self.h(n + 1).unwrap() / self.h(n).unwrap()).ln()).collect()
    }
}

pub const H0: f64 = 2.0;

/// Scale-adaptive knot spacing: `max(kappa * s^2, kappa_local * d^2)` where
/// `s` is the current height scale and `d` the distance to the nearest
/// level that decides the next event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adaptive {
    pub kappa: f64,
    pub kappa_local: f64,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive { kappa: 1e-5, kappa_local: 0.01 }
    }
}

/// Bridge refinement around bottoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refine {
    /// Largest gap left where `W - W(mu)` is below `cutoff`.
    pub max_gap: f64,
    pub cutoff: f64,
    pub max_rounds: usize,
}

impl Default for Refine {
    fn default() -> Self {
        Refine { max_gap: 0.02, cutoff: 15.0, max_rounds: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LadderOptions {
    pub adaptive: Option<Adaptive>,
    pub refine: Option<Refine>,
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    /// Looking for `beta`; `min` is the running minimum since `gamma_n`.
    SeekBeta { min: (f64, f64), eta: Option<f64> },
    /// Looking for `gamma`; `max` is the running maximum since `beta`.
    SeekGamma { mu: f64, w_mu: f64, beta: f64, eta: f64, max: (f64, f64) },
}

/// Online ladder computation fed one linear piece at a time.
#[derive(Debug, Clone)]
pub struct LadderScanner {
    n_max: usize,
    phase: Phase,
    steps: Vec<LadderStep>,
}

impl LadderScanner {
    pub fn new(n_max: usize, w0: f64) -> Self {
        LadderScanner { n_max, phase: Phase::SeekBeta { min: (0.0, w0), eta: None }, steps: Vec::new() }
    }

    pub fn done(&self) -> bool {
        self.steps.len() >= self.n_max
    }

    fn h(&self) -> f64 {
        self.steps.last().map_or(H0, |s| s.h)
    }

    pub fn feed(&mut self, mut p: Piece) {
        while !self.done() && p.x1 > p.x0 {
            match self.step_piece(&p) {
                Some((x, w)) => p = Piece { x0: x, w0: w, x1: p.x1, w1: p.w1 },
                None => return,
            }
        }
    }

    /// Consume a piece; on a phase change return the point where the rest
    /// of the piece starts.
    fn step_piece(&mut self, p: &Piece) -> Option<(f64, f64)> {
        let h = self.h();
        match &mut self.phase {
            Phase::SeekBeta { min, eta } => {
                if p.w1 < p.w0 {
                    if p.w1 < min.1 {
                        *min = (p.x1, p.w1);
                        *eta = None;
                    }
                    return None;
                }
                if eta.is_none() && p.w1 >= min.1 + 2.0 {
                    *eta = Some(p.solve(min.1 + 2.0));
                }
                if p.w1 - min.1 >= h {
                    let level = min.1 + h;
                    let beta = p.solve(level);
                    let eta = eta.unwrap_or(beta);
                    self.phase = Phase::SeekGamma { mu: min.0, w_mu: min.1, beta, eta, max: (beta, level) };
                    return Some((beta, level));
                }
                None
            }
            Phase::SeekGamma { mu, w_mu, beta, eta, max } => {
                if p.w1 > p.w0 {
                    if p.w1 > max.1 {
                        *max = (p.x1, p.w1);
                    }
                    return None;
                }
                if p.w1 <= *w_mu {
                    let gamma = p.solve(*w_mu);
                    let step = LadderStep {
                        mu: *mu,
                        beta: *beta,
                        gamma,
                        eta: *eta,
                        big_m: max.0,
                        h: max.1 - *w_mu,
                        w_mu: *w_mu,
                    };
                    let w = *w_mu;
                    self.steps.push(step);
                    self.phase = Phase::SeekBeta { min: (gamma, w), eta: None };
                    return Some((gamma, w));
                }
                None
            }
        }
    }

    /// Adaptive spacing for the next knot after a path ending at value `w`.
    pub fn next_spacing(&self, w: f64, a: &Adaptive) -> f64 {
        let (scale, d) = match self.phase {
            Phase::SeekBeta { min, .. } => {
                let h = self.h();
                (h, (w - min.1).min(min.1 + h - w))
            }
            Phase::SeekGamma { w_mu, max, .. } => (max.1 - w_mu, (max.1 - w).min(w - w_mu)),
        };
        (a.kappa * scale * scale).max(a.kappa_local * d.max(0.0).powi(2))
    }

    pub fn steps(&self) -> &[LadderStep] {
        &self.steps
    }
}

fn scan_fixed(path: &SamplePath, n_max: usize) -> LadderScanner {
    let mut s = LadderScanner::new(n_max, path.values()[0]);
    for p in path.pieces_from(path.start()) {
        if s.done() {
            break;
        }
        s.feed(p);
    }
    s
}

/// Ladder of a fixed path.
pub fn ladder_on(path: &SamplePath, n_max: usize) -> Result<LadderSequence> {
    if n_max == 0 {
        return Err(Error::InvalidParams("n_max must be at least 1".into()));
    }
    let s = scan_fixed(path, n_max);
    finish(path, n_max, s.steps.clone())
}

fn finish(path: &SamplePath, n_max: usize, steps: Vec<LadderStep>) -> Result<LadderSequence> {
    let mut int_mu_eta = Vec::with_capacity(steps.len());
    let mut int_gamma_m = Vec::with_capacity(steps.len());
    let mut gamma_prev = 0.0;
    for s in &steps {
        int_mu_eta.push(exp_integral_on(path, s.mu, s.eta, s.mu)?.value);
        int_gamma_m.push(exp_integral_on(path, gamma_prev, s.big_m, s.mu)?.value);
        gamma_prev = s.gamma;
    }
    Ok(LadderSequence { n_max, truncated: steps.len() < n_max, steps, int_mu_eta, int_gamma_m })
}

/// Run the scanner over the side, extending it until `n_max` steps exist
/// or the budget is spent.
fn scan_extending(env: &mut Environment, side: Side, n_max: usize, adaptive: Option<&Adaptive>) -> Vec<LadderStep> {
    let mut s = scan_fixed(env.side(side), n_max);
    while !s.done() {
        let grown = match adaptive {
            Some(a) => {
                let mut ok = true;
                // feed knot by knot so the spacing tracks the phase
                for _ in 0..4096 {
                    let p = env.side(side);
                    let (x0, w0) = (p.end(), p.last_value());
                    let dx = s.next_spacing(w0, a);
                    if !env.append_step(side, dx) {
                        ok = false;
                        break;
                    }
                    let p = env.side(side);
                    s.feed(Piece { x0, w0, x1: p.end(), w1: p.last_value() });
                    if s.done() {
                        break;
                    }
                }
                ok
            }
            None => {
                let p = env.side(side);
                let start = p.len() - 1;
                let chunk = p.len().max(1024);
                if !env.extend(side, chunk) {
                    false
                } else {
                    let p = env.side(side);
                    let xs = p.positions();
                    let ws = p.values();
                    for k in start..xs.len() - 1 {
                        s.feed(Piece { x0: xs[k], w0: ws[k], x1: xs[k + 1], w1: ws[k + 1] });
                        if s.done() {
                            break;
                        }
                    }
                    true
                }
            }
        };
        if !grown {
            break;
        }
    }
    s.steps.clone()
}

/// Ladder sequence of one side with lazy extension and optional
/// refinement.
pub fn ladder_sequence(env: &mut Environment, side: Side, n_max: usize, opts: &LadderOptions) -> Result<LadderSequence> {
    if n_max == 0 {
        return Err(Error::InvalidParams("n_max must be at least 1".into()));
    }
    let mut steps = scan_extending(env, side, n_max, opts.adaptive.as_ref());
    if let Some(r) = opts.refine {
        for _ in 0..r.max_rounds {
            let mut added = 0;
            let mut gamma_prev = 0.0;
            for s in &steps {
                let w_mu = s.w_mu;
                let cutoff = r.cutoff;
                added += env.refine(side, gamma_prev, s.big_m, r.max_gap, &|w0, w1| w0.min(w1) - w_mu < cutoff);
                gamma_prev = s.gamma;
            }
            if added == 0 {
                break;
            }
            steps = scan_extending(env, side, n_max, opts.adaptive.as_ref());
        }
    }
    let mut l = finish(env.side(side), n_max, steps)?;
    // refinement cut short by the budget leaves the integrals unresolved
    l.truncated |= opts.refine.is_some() && env.side_state(side).at_budget();
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_built_ladder() {
        let p = SamplePath::from_knots(&[(0.0, 0.0), (1.0, -4.0), (2.0, 3.0), (3.0, -4.5)]).unwrap();
        let l = ladder_on(&p, 2).unwrap();
        assert!(l.truncated);
        let s = l.steps[0];
        assert!((s.beta - (1.0 + 2.0 / 7.0)).abs() < 1e-15);
        assert_eq!(s.mu, 1.0);
        assert!((s.gamma - (2.0 + 7.0 / 7.5)).abs() < 1e-15);
        assert_eq!(s.big_m, 2.0);
        assert_eq!(s.h, 7.0);
        assert!((s.eta - s.beta).abs() < 1e-15);
    }

    #[test]
    fn monotone_is_truncated_at_first_step() {
        let p = SamplePath::from_knots(&[(0.0, 0.0), (5.0, -5.0)]).unwrap();
        let l = ladder_on(&p, 1).unwrap();
        assert!(l.truncated && l.steps.is_empty());
        assert!(ladder_on(&p, 0).is_err());
    }

    #[test]
    fn random_ladders_are_consistent() {
        for seed in 0..20 {
            let mut env = Environment::brownian(seed, 0.01).unwrap();
            let l = ladder_sequence(&mut env, Side::Right, 3, &LadderOptions::default()).unwrap();
            assert!(!l.steps.is_empty());
            let p = env.side(Side::Right);
            let mut g = 0.0;
            for (n, s) in l.steps.iter().enumerate() {
                assert!(s.mu >= g && s.mu <= s.beta && s.beta <= s.big_m && s.big_m <= s.gamma);
                assert!(s.eta >= s.mu && s.eta <= s.beta);
                assert!((p.value_at(s.eta) - s.w_mu - 2.0).abs() < 1e-9);
                assert!(l.h(n + 1).unwrap() >= l.h(n).unwrap());
                g = s.gamma;
            }
        }
    }

    #[test]
    fn adaptive_ladder_reaches_high_steps() {
        let mut env = Environment::brownian_with_budget(9, 0.01, 4_000_000).unwrap();
        let opts = LadderOptions { adaptive: Some(Adaptive::default()), refine: Some(Refine::default()) };
        let l = ladder_sequence(&mut env, Side::Right, 6, &opts).unwrap();
        assert!(!l.truncated);
        assert_eq!(l.int_gamma_m.len(), 6);
        assert!(l.int_mu_eta.iter().all(|v| *v > 0.0));
    }
}
