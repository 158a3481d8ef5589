//! Reference laws, the constant j0, and the statistical tests used to
//! judge simulations.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};

/// `J0(x)` by its ascending series. Accurate to ~1e-15 for `|x| <= 4`.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Smallest positive zero of `J0`, by bisection on `[2, 3]`.
pub fn j0_constant() -> f64 {
    let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
    let f_lo = bessel_j0(lo);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if (bessel_j0(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Reference law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    /// Supremum of the dimension-0 squared Bessel process started at
    /// `start`: `P(sup >= M) = start / M` for `M >= start`.
    SupSqBessel0 { start: f64 },
    /// Value at time `v` of the dimension-2 squared Bessel process from 0,
    /// which is exponential with mean `2v`.
    SqBessel2Marginal { v: f64 },
    Exponential { mean: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Law::SupSqBessel0 { start } => start > 0.0,
            Law::SqBessel2Marginal { v } => v > 0.0,
            Law::Exponential { mean } => mean > 0.0,
            Law::Gamma { shape, scale } => shape > 0.0 && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid law parameters: {self:?}")))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Law::SupSqBessel0 { start } => {
                if x <= start {
                    0.0
                } else {
                    1.0 - start / x
                }
            }
            Law::SqBessel2Marginal { v } => exp_cdf(x, 2.0 * v),
            Law::Exponential { mean } => exp_cdf(x, mean),
            Law::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    GammaDist::new(shape, 1.0 / scale).map(|g| g.cdf(x)).unwrap_or(f64::NAN)
                }
            }
        }
    }

    /// `P(X >= x)`.
    pub fn tail(&self, x: f64) -> f64 {
        match *self {
            Law::SupSqBessel0 { start } => {
                if x <= start {
                    1.0
                } else {
                    start / x
                }
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            Law::SupSqBessel0 { start } => format!("sup_sq_bessel0(start={start})"),
            Law::SqBessel2Marginal { v } => format!("sq_bessel2_marginal(v={v})"),
            Law::Exponential { mean } => format!("exponential(mean={mean})"),
            Law::Gamma { shape, scale } => format!("gamma(shape={shape},scale={scale})"),
        }
    }
}

fn exp_cdf(x: f64, mean: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x / mean).exp_m1()
    }
}

/// Closed-form evaluation of a law's CDF.
pub fn law_cdf(law: &Law, arg: f64) -> Result<f64> {
    law.validate()?;
    Ok(law.cdf(arg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alpha {
    #[serde(rename = "0.05")]
    P05,
    #[serde(rename = "0.01")]
    P01,
}

impl Alpha {
    pub fn coefficient(self) -> f64 {
        match self {
            Alpha::P05 => 1.36,
            Alpha::P01 => 1.63,
        }
    }
}

/// Outcome of one statistical check: `pass` iff `statistic < threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub n: usize,
    pub pass: bool,
    pub law_tag: String,
    /// How the line reads: `<`, `<=` or `>=`.
    #[serde(default = "strict")]
    pub relation: String,
}

fn strict() -> String {
    "<".into()
}

impl TestResult {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64, n: usize, law_tag: impl Into<String>) -> Self {
        TestResult {
            name: name.into(),
            statistic,
            threshold,
            n,
            pass: statistic < threshold,
            law_tag: law_tag.into(),
            relation: strict(),
        }
    }

    /// Check of the form `value <= bound`, stored as `statistic < threshold`
    /// with the threshold nudged to the next representable number.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, n: usize, tag: impl Into<String>) -> Self {
        Self { relation: "<=".into(), ..Self::new(name, value, next_up(bound), n, tag) }
    }

    /// Check of the form `value >= bound`, stored with negated sides.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64, n: usize, tag: impl Into<String>) -> Self {
        Self { relation: ">=".into(), ..Self::new(name, -value, next_up(-bound), n, tag) }
    }

    pub fn line(&self) -> String {
        let (value, bound) = match self.relation.as_str() {
            ">=" => (-self.statistic, -self.threshold),
            _ => (self.statistic, self.threshold),
        };
        format!(
            "{} {}: {} {} {} n={} [{}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            num(value),
            self.relation,
            num(bound),
            self.n,
            self.law_tag
        )
    }
}

fn num(x: f64) -> String {
    if x.abs() < 1e-300 {
        "0".into()
    } else if x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

pub const KS_MIN_SAMPLES: usize = 50;

/// Kolmogorov distance between the empirical distribution of `samples`
/// and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::Domain("KS samples must be finite".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// One-sample KS test against `cdf` at the given level.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, alpha: Alpha) -> Result<TestResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::InsufficientData { need: KS_MIN_SAMPLES, got: samples.len() });
    }
    let d = ks_statistic(samples, cdf)?;
    let n = samples.len();
    Ok(TestResult::new("ks", d, alpha.coefficient() / (n as f64).sqrt(), n, ""))
}

/// One-sample KS test against a [`Law`].
pub fn ks_test_law(samples: &[f64], law: &Law, alpha: Alpha) -> Result<TestResult> {
    law.validate()?;
    let mut r = ks_test(samples, |x| law.cdf(x), alpha)?;
    r.law_tag = law.tag();
    Ok(r)
}

/// Two-sample Kolmogorov distance.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.iter().chain(b).any(|s| !s.is_finite()) {
        return Err(Error::Domain("KS samples must be finite".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Two-sample KS test; the threshold scales with `sqrt((n+m)/(n m))`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: Alpha) -> Result<TestResult> {
    let n_min = a.len().min(b.len());
    if n_min < KS_MIN_SAMPLES {
        return Err(Error::InsufficientData { need: KS_MIN_SAMPLES, got: n_min });
    }
    let d = ks_two_sample_statistic(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let thr = alpha.coefficient() * ((n + m) / (n * m)).sqrt();
    Ok(TestResult::new("ks2", d, thr, a.len() + b.len(), "two-sample"))
}

/// Empirical frequency with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub hits: usize,
    pub n: usize,
    pub freq: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Frequency {
    pub fn from_counts(hits: usize, n: usize) -> Self {
        if n == 0 {
            return Frequency { hits, n, freq: 0.0, lower: 0.0, upper: 1.0 };
        }
        let z = 1.959_963_984_540_054_f64;
        let nf = n as f64;
        let p = hits as f64 / nf;
        let z2 = z * z;
        let denom = 1.0 + z2 / nf;
        let center = (p + z2 / (2.0 * nf)) / denom;
        let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
        Frequency {
            hits,
            n,
            freq: p,
            lower: (center - half).max(0.0),
            upper: (center + half).min(1.0),
        }
    }

    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut hits, mut n) = (0, 0);
        for f in flags {
            n += 1;
            hits += f as usize;
        }
        Self::from_counts(hits, n)
    }
}

/// Frequency of samples strictly above `threshold`.
pub fn tail_frequency(samples: &[f64], threshold: f64) -> Frequency {
    Frequency::from_flags(samples.iter().map(|&s| s > threshold))
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, v)
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let n = a.len().min(b.len());
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n as f64 - 1.0);
    cov / (va * vb).sqrt()
}

/// Inequality envelopes for the Bessel-type tail estimates. Constants the
/// theory leaves unspecified enter as an explicit `slack` factor.
pub mod envelope {
    use super::j0_constant;

    /// Lower bound for `P(sup_{[0,x]} R > a)`, R a 3-d Bessel process from 0.
    pub fn bessel3_sup_lower(a: f64, x: f64) -> f64 {
        a / x.sqrt() * (-a * a / (2.0 * x)).exp()
    }

    /// Upper bound for `P(sup_{[0,v]} Q >= M)`, Q a dimension-2 squared
    /// Bessel process from 0.
    pub fn sq_bessel2_sup_upper(v: f64, m: f64, slack: f64) -> f64 {
        (slack * (-m / (2.0 * v)).exp()).min(1.0)
    }

    /// Upper bound for the tail of the integral of `exp(-R)` over a
    /// two-sided 3-d Bessel run between the neighbouring ladder points.
    pub fn integral_upper_tail(lambda: f64, slack: f64) -> f64 {
        let j = j0_constant();
        slack * (-j * j * lambda / 16.0).exp()
    }

    /// Upper bound for the lower tail `P(integral <= lambda)` of the
    /// integral up to the first passage at height 2.
    pub fn integral_lower_tail(lambda: f64, slack: f64) -> f64 {
        let e = std::f64::consts::E;
        let s = lambda.sqrt();
        slack * (2.0 / (e * s) + e * s / 2.0) * (-2.0 / (e * e * lambda)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn j0_basics() {
        let j = j0_constant();
        assert!(j > 2.0 && j < 3.0);
        assert!(bessel_j0(j).abs() < 1e-10);
        assert!((j - 2.404825557695773).abs() < 1e-9);
        assert_eq!(bessel_j0(0.0), 1.0);
    }

    #[test]
    fn law_examples() {
        let sup = Law::SupSqBessel0 { start: 1.0 };
        assert_eq!(sup.tail(1.0), 1.0);
        assert_eq!(sup.tail(2.0), 0.5);
        let q = law_cdf(&Law::SqBessel2Marginal { v: 1.0 }, 2.0).unwrap();
        assert!((q - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!(law_cdf(&Law::Exponential { mean: -1.0 }, 1.0).is_err());
        let g = law_cdf(&Law::Gamma { shape: 1.0, scale: 2.0 }, 3.0).unwrap();
        assert!((g - law_cdf(&Law::Exponential { mean: 2.0 }, 3.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ks_null_and_alternative() {
        let mut rng = rng_from_seed(2024);
        let e1 = Exp::new(1.0).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| e1.sample(&mut rng)).collect();
        let pass = ks_test_law(&xs, &Law::Exponential { mean: 1.0 }, Alpha::P01).unwrap();
        assert!(pass.pass, "{pass:?}");
        let fail = ks_test_law(&xs, &Law::Exponential { mean: 2.0 }, Alpha::P01).unwrap();
        assert!(!fail.pass);
        assert!((fail.statistic - 0.25).abs() < 0.02);
        assert!(matches!(
            ks_test(&xs[..10], |x| x, Alpha::P05),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn two_sample_ks() {
        let mut rng = rng_from_seed(1);
        let a: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..3000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&a, &b, Alpha::P01).unwrap().pass);
        let c: Vec<f64> = b.iter().map(|x| x + 0.2).collect();
        assert!(!ks_two_sample(&a, &c, Alpha::P01).unwrap().pass);
        assert_eq!(ks_two_sample_statistic(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample_statistic(&[1.0], &[2.0]).unwrap(), 1.0);
    }

    #[test]
    fn frequencies() {
        let f = tail_frequency(&[2.0, 3.0, 4.0], 1.0);
        assert_eq!(f.freq, 1.0);
        assert_eq!(f.upper, 1.0);
        let g = tail_frequency(&[0.0, 0.5], 1.0);
        assert_eq!(g.freq, 0.0);
        let mut rng = rng_from_seed(77);
        let h = Frequency::from_flags((0..20_000).map(|_| rng.random::<bool>()));
        assert!(h.freq >= 0.49 && h.freq <= 0.51);
        assert!(h.lower < h.freq && h.freq < h.upper);
    }

    #[test]
    fn comparison_helpers() {
        assert!(TestResult::at_most("x", 1.0, 1.0, 1, "").pass);
        assert!(!TestResult::at_most("x", 1.0 + 1e-12, 1.0, 1, "").pass);
        assert!(TestResult::at_least("x", 0.85, 0.85, 1, "").pass);
        assert!(!TestResult::at_least("x", 0.84, 0.85, 1, "").pass);
        assert!(TestResult::at_least("x", 0.0, 0.0, 1, "").pass);
    }
}
