//! Shared statistical plumbing: deterministic summation, standard errors,
//! delta-method power means, Wilson intervals, least squares and
//! Kolmogorov-Smirnov distances.

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with provenance.
///
/// `standard_error == 0` together with `samples == 0` marks a closed-form
/// (exact) value. `stream` records the RNG substream id that produced the
/// samples so a value can be traced back to its draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub stream: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, standard_error: 0.0, samples: 0, stream: 0 }
    }

    /// Two estimates agree within `k` joint standard errors.
    pub fn agrees(&self, other: &Estimate, k: f64) -> bool {
        let joint = (self.standard_error.powi(2) + other.standard_error.powi(2)).sqrt();
        (self.value - other.value).abs() <= k * joint + 1e-12
    }
}

/// Pairwise (cascade) summation. Deterministic for a fixed slice and much
/// better conditioned than a running sum for large MC batches.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    assert!(m > 0, "mean of empty sample");
    let mean = pairwise_sum(xs) / m as f64;
    if m == 1 {
        return (mean, f64::INFINITY);
    }
    let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (m as f64 - 1.0);
    (mean, (var / m as f64).sqrt())
}

pub fn mean_estimate(xs: &[f64], stream: u64) -> Estimate {
    let (value, standard_error) = mean_se(xs);
    Estimate { value, standard_error, samples: xs.len() as u64, stream }
}

/// `(mean of x^p)^(1/p)` with a delta-method standard error.
///
/// Inputs must be nonnegative (the caller takes absolute values first).
pub fn power_mean_estimate(xs: &[f64], p: f64, stream: u64) -> Estimate {
    assert!(p != 0.0, "power mean needs p != 0");
    let powered: Vec<f64> = xs.iter().map(|&x| x.powf(p)).collect();
    let (m, se_m) = mean_se(&powered);
    if m <= 0.0 || !m.is_finite() {
        return Estimate { value: f64::NAN, standard_error: f64::NAN, samples: xs.len() as u64, stream };
    }
    let value = m.powf(1.0 / p);
    // d/dm m^(1/p) = (1/p) m^(1/p - 1)
    let standard_error = se_m * (1.0 / p).abs() * m.powf(1.0 / p - 1.0);
    Estimate { value, standard_error, samples: xs.len() as u64, stream }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, total: u64, z: f64) -> (f64, f64) {
    assert!(total > 0);
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y = a + b x.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    LineFit { slope, intercept, r_squared }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            i += 1;
        } else if b[j] < a[i] {
            j += 1;
        } else {
            // Tied values move both empirical CDFs at once.
            let v = a[i];
            while i < a.len() && a[i] == v {
                i += 1;
            }
            while j < b.len() && b[j] == v {
                j += 1;
            }
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS statistic against an analytic CDF.
pub fn ks_against_cdf(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Empirical quantile (linear interpolation) of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}
