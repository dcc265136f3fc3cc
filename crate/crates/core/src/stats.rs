//! Empirical CDFs, Kolmogorov-Smirnov statistics and interval estimates.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::{Error, Result};

/// Two-sided 95% normal quantile used throughout.
pub const Z95: f64 = 1.96;

/// Empirical distribution function over a sorted sample.
#[derive(Clone, Debug)]
pub struct Ecdf<R: Real> {
    sorted: Vec<R>,
}

impl<R: Real> Ecdf<R> {
    pub fn new(mut samples: Vec<R>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("non-NaN sample"));
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[R] {
        &self.sorted
    }

    /// Fraction of the sample that is <= x.
    pub fn eval(&self, x: R) -> R {
        let k = self.sorted.partition_point(|&v| v <= x);
        R::from_usize(k).unwrap() / R::from_usize(self.sorted.len()).unwrap()
    }

    pub fn mean(&self) -> R {
        self.sorted.iter().copied().sum::<R>() / R::from_usize(self.sorted.len()).unwrap()
    }

    /// sup_x |F_n(x) - F(x)| against a reference CDF.
    pub fn ks_distance_to<F: Fn(R) -> R>(&self, cdf: F) -> R {
        let n = R::from_usize(self.sorted.len()).unwrap();
        let mut sup = R::zero();
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = cdf(x);
            let lo = (f - R::from_usize(i).unwrap() / n).abs();
            let hi = (R::from_usize(i + 1).unwrap() / n - f).abs();
            sup = sup.max(lo).max(hi);
        }
        sup
    }
}

/// Two-sample Kolmogorov-Smirnov sup-difference.
pub fn ks_distance<R: Real>(a: &Ecdf<R>, b: &Ecdf<R>) -> R {
    let (xs, ys) = (a.values(), b.values());
    let (n, m) = (xs.len(), ys.len());
    let (rn, rm) = (R::from_usize(n).unwrap(), R::from_usize(m).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = R::zero();
    while i < n && j < m {
        let x = xs[i].min(ys[j]);
        while i < n && xs[i] <= x {
            i += 1;
        }
        while j < m && ys[j] <= x {
            j += 1;
        }
        let d = (R::from_usize(i).unwrap() / rn - R::from_usize(j).unwrap() / rm).abs();
        sup = sup.max(d);
    }
    sup
}

/// Survival function of the Kolmogorov distribution,
/// `Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a two-sample KS statistic.
pub fn ks_two_sample_p(d: f64, n: usize, m: usize) -> f64 {
    let en = (n as f64 * m as f64) / (n as f64 + m as f64);
    kolmogorov_survival(en.sqrt() * d)
}

/// Two-sample KS test: statistic and asymptotic p-value.
pub fn two_sample_ks<R: Real>(a: &[R], b: &[R]) -> Result<(R, f64)> {
    let ea = Ecdf::new(a.to_vec())?;
    let eb = Ecdf::new(b.to_vec())?;
    let d = ks_distance(&ea, &eb);
    let p = ks_two_sample_p(d.to_f64().unwrap(), a.len(), b.len());
    Ok((d, p))
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::EmptySample);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// A Monte Carlo point estimate with its uncertainty.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct EstimateResult {
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl EstimateResult {
    /// Frequency estimate with a Wilson 95% interval.
    pub fn from_binomial(successes: u64, trials: u64) -> Result<Self> {
        let (lo, hi) = wilson_interval(successes, trials)?;
        let n = trials as f64;
        let p = successes as f64 / n;
        Ok(Self {
            estimate: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
            replicas: trials,
            ci_lo: lo,
            ci_hi: hi,
        })
    }

    /// Sample-mean estimate with a normal 95% interval.
    pub fn from_mean(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let se = (var / n).sqrt();
        Ok(Self {
            estimate: mean,
            stderr: se,
            replicas: samples.len() as u64,
            ci_lo: mean - Z95 * se,
            ci_hi: mean + Z95 * se,
        })
    }

    pub fn overlaps(&self, other: &EstimateResult) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}
