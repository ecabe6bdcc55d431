//! Isotropic sample distributions and their one-dimensional summaries.
//!
//! Four symmetric log-concave families are supported: the standard gaussian,
//! the coordinate cube scaled to unit variance, and uniform measures on the
//! Euclidean and cross-polytope balls brought to isotropic position by an
//! empirical whitening step. On top of the samplers sit the directional
//! moment bodies (support and radial functions of the L_q moment body Z_q),
//! Orlicz psi_1/psi_2 norms, radial moments I_q and tail probability tables.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::rng::Stream;
use crate::stats::{self, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Gaussian,
    Cube,
    Ball,
    L1Ball,
}

impl DistributionKind {
    pub fn name(self) -> &'static str {
        match self {
            DistributionKind::Gaussian => "gaussian",
            DistributionKind::Cube => "cube",
            DistributionKind::Ball => "ball",
            DistributionKind::L1Ball => "l1ball",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MeasureError {
    #[error("dimension must be at least 1, got {0}")]
    BadDimension(usize),
    #[error("whitening calibration failed: covariance not positive definite")]
    Calibration,
    #[error("moment order q={q:.3} needs more than {m} samples (cap q <= 2 ln m = {cap:.3})")]
    NotEnoughSamples { q: f64, m: usize, cap: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("psi-norm bisection bracket [{lo:.3e}, {hi:.3e}] does not enclose the root")]
    BracketFailure { lo: f64, hi: f64 },
}

/// Draws used once per (kind, n) to calibrate the whitening transform.
const CALIBRATION_SAMPLES: usize = 400_000;
const CALIBRATION_SEED: u64 = 0x1507_CA11_B7A7_E5EE;

fn whitening_cache() -> &'static Mutex<HashMap<(DistributionKind, usize), Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<(DistributionKind, usize), Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// An isotropic sampler: zero mean, identity covariance (exact for gaussian
/// and cube, empirical for the ball families).
#[derive(Debug, Clone)]
pub struct Distribution {
    kind: DistributionKind,
    n: usize,
    /// Lower-triangular whitening matrix, row-major n x n, applied to raw
    /// draws of the unit-ball samplers. None when the family is already
    /// isotropic in closed form.
    whitening: Option<Arc<Vec<f64>>>,
}

impl Distribution {
    /// Build a sampler. Ball families run a one-time deterministic
    /// calibration (fixed internal seed, memoized per kind and dimension), so
    /// the distribution is a pure function of `(kind, n)`.
    pub fn new(kind: DistributionKind, n: usize) -> Result<Self, MeasureError> {
        if n == 0 {
            return Err(MeasureError::BadDimension(n));
        }
        let whitening = match kind {
            DistributionKind::Gaussian | DistributionKind::Cube => None,
            DistributionKind::Ball | DistributionKind::L1Ball => {
                let mut cache = whitening_cache().lock().expect("whitening cache poisoned");
                if let Some(w) = cache.get(&(kind, n)) {
                    Some(w.clone())
                } else {
                    let w = Arc::new(calibrate_whitening(kind, n)?);
                    cache.insert((kind, n), w.clone());
                    Some(w)
                }
            }
        };
        Ok(Distribution { kind, n, whitening })
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// One draw into a caller-provided buffer of length n.
    pub fn sample_into(&self, rng: &mut impl Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        match self.kind {
            DistributionKind::Gaussian => {
                for x in out.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
            }
            DistributionKind::Cube => {
                let half = 3.0f64.sqrt();
                for x in out.iter_mut() {
                    *x = (2.0 * rng.random::<f64>() - 1.0) * half;
                }
            }
            DistributionKind::Ball => {
                raw_ball(rng, out);
                self.apply_whitening(out);
            }
            DistributionKind::L1Ball => {
                raw_l1_ball(rng, out);
                self.apply_whitening(out);
            }
        }
    }

    /// `count` draws, flat with stride n.
    pub fn sample(&self, count: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut pts = vec![0.0; count * self.n];
        for s in 0..count {
            self.sample_into(rng, &mut pts[s * self.n..(s + 1) * self.n]);
        }
        pts
    }

    fn apply_whitening(&self, x: &mut [f64]) {
        let Some(w) = &self.whitening else { return };
        let n = self.n;
        // W is lower triangular: walk rows backwards so x can be updated in
        // place.
        for i in (0..n).rev() {
            let mut s = 0.0;
            for j in 0..=i {
                s += w[i * n + j] * x[j];
            }
            x[i] = s;
        }
    }
}

/// Uniform draw from the Euclidean unit ball: gaussian direction, radius
/// U^(1/n).
fn raw_ball(rng: &mut impl Rng, out: &mut [f64]) {
    let n = out.len();
    loop {
        let mut norm_sq = 0.0;
        for x in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *x = g;
            norm_sq += g * g;
        }
        if norm_sq > 1e-24 {
            let r: f64 = rng.random::<f64>().powf(1.0 / n as f64);
            let scale = r / norm_sq.sqrt();
            for x in out.iter_mut() {
                *x *= scale;
            }
            return;
        }
    }
}

/// Uniform draw from the unit cross-polytope ball (l1 ball): signed
/// exponential spacings. With E_1..E_{n+1} iid exponential, the vector
/// (eps_i E_i / sum)_{i<=n} is uniform in the l1 ball.
fn raw_l1_ball(rng: &mut impl Rng, out: &mut [f64]) {
    let mut total: f64 = rng.sample(Exp1);
    for x in out.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        *x = if rng.random::<bool>() { e } else { -e };
        total += e;
    }
    for x in out.iter_mut() {
        *x /= total;
    }
}

fn calibrate_whitening(kind: DistributionKind, n: usize) -> Result<Vec<f64>, MeasureError> {
    let mut rng = Stream::root(CALIBRATION_SEED)
        .child_named("whitening")
        .child_named(kind.name())
        .child(n as u64)
        .rng();
    let mut pts = vec![0.0; CALIBRATION_SAMPLES * n];
    for s in 0..CALIBRATION_SAMPLES {
        let out = &mut pts[s * n..(s + 1) * n];
        match kind {
            DistributionKind::Ball => raw_ball(&mut rng, out),
            DistributionKind::L1Ball => raw_l1_ball(&mut rng, out),
            _ => unreachable!("only ball families are calibrated"),
        }
    }
    let cov = linalg::covariance(&pts, n, CALIBRATION_SAMPLES);
    let l = linalg::cholesky_lower(&cov, n).ok_or(MeasureError::Calibration)?;
    Ok(linalg::lower_inverse(&l, n))
}

/// A reusable batch of draws shared by the directional estimators, keyed by
/// (distribution, n, stream).
#[derive(Debug)]
pub struct SampleCache {
    pub kind: DistributionKind,
    pub n: usize,
    pub count: usize,
    pub stream_id: u64,
    points: Vec<f64>,
}

impl SampleCache {
    pub fn build(dist: &Distribution, count: usize, stream: Stream) -> Arc<SampleCache> {
        assert!(count > 1, "sample cache needs at least two draws");
        let mut rng = stream.rng();
        let points = dist.sample(count, &mut rng);
        Arc::new(SampleCache { kind: dist.kind(), n: dist.dim(), count, stream_id: stream.id(), points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    /// Largest moment order the cache can support: q <= 2 ln(count).
    pub fn moment_cap(&self) -> f64 {
        2.0 * (self.count as f64).ln()
    }

    fn projections(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.n);
        (0..self.count).map(|i| linalg::dot(self.point(i), theta)).collect()
    }

    fn norms(&self) -> Vec<f64> {
        (0..self.count).map(|i| linalg::norm2(self.point(i))).collect()
    }
}

/// Absolute q-th moment of a standard gaussian:
/// E|g|^q = 2^(q/2) Gamma((q+1)/2) / sqrt(pi); returned as the q-th root.
pub fn gaussian_moment_root(q: f64) -> f64 {
    assert!(q > 0.0);
    let (lg, _) = libm::lgamma_r((q + 1.0) / 2.0);
    ((0.5 * q * 2.0f64.ln() + lg - 0.5 * std::f64::consts::PI.ln()) / q).exp()
}

/// The directional L_q moment body Z_q of a distribution. Its support
/// function in direction y is (E |<x, y>|^q)^(1/q).
#[derive(Debug, Clone)]
pub struct MomentBody {
    kind: DistributionKind,
    n: usize,
    q: f64,
    cache: Option<Arc<SampleCache>>,
}

impl MomentBody {
    /// Closed-form gaussian body: Z_q is the ball of radius E|g|^q root.
    pub fn gaussian(n: usize, q: f64) -> Result<Self, MeasureError> {
        if q <= 0.0 {
            return Err(MeasureError::InvalidParameter(format!("moment order q={q} must be positive")));
        }
        Ok(MomentBody { kind: DistributionKind::Gaussian, n, q, cache: None })
    }

    /// Monte Carlo body over a shared sample cache.
    pub fn empirical(cache: Arc<SampleCache>, q: f64) -> Result<Self, MeasureError> {
        if q <= 0.0 {
            return Err(MeasureError::InvalidParameter(format!("moment order q={q} must be positive")));
        }
        if q > cache.moment_cap() {
            return Err(MeasureError::NotEnoughSamples { q, m: cache.count, cap: cache.moment_cap() });
        }
        Ok(MomentBody { kind: cache.kind, n: cache.n, q, cache: Some(cache) })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// Support function h(y) = (E |<x, y>|^q)^(1/q). Exact for the gaussian
    /// body, delta-method standard error otherwise.
    pub fn support(&self, y: &[f64]) -> Estimate {
        assert_eq!(y.len(), self.n);
        match &self.cache {
            None => Estimate::exact(gaussian_moment_root(self.q) * linalg::norm2(y)),
            Some(cache) => {
                let dots: Vec<f64> = cache.projections(y).iter().map(|d| d.abs()).collect();
                stats::power_mean_estimate(&dots, self.q, cache.stream_id)
            }
        }
    }

    /// Radial function r(theta) = sup { t : t theta in Z_q }, computed from
    /// the support function via the dual formula
    /// r(theta)^-1 = min_u h(u) / <u, theta> over directions with positive
    /// inner product. The direction set always contains theta itself, so the
    /// value is exact (up to MC error of h) whenever Z_q is a ball, and an
    /// upper-biased estimate shrinking with `extra_directions` otherwise.
    pub fn radial(&self, theta: &[f64], extra_directions: usize, stream: Stream) -> Estimate {
        assert_eq!(theta.len(), self.n);
        let norm = linalg::norm2(theta);
        assert!(norm > 1e-12, "radial direction must be nonzero");
        let unit: Vec<f64> = theta.iter().map(|v| v / norm).collect();

        let mut rng = stream.rng();
        let mut best: Option<Estimate> = None;
        let mut consider = |u: &[f64], est: Estimate| {
            let align = linalg::dot(u, &unit);
            if align <= 1e-9 {
                return;
            }
            let val = est.value / align;
            let se = est.standard_error / align;
            if best.as_ref().map_or(true, |b| val < b.value) {
                best = Some(Estimate { value: val, standard_error: se, ..est });
            }
        };
        consider(&unit, self.support(&unit));
        for _ in 0..extra_directions {
            let u = crate::geometry::sample_sphere(self.n, &mut rng);
            consider(u.as_slice(), self.support(u.as_slice()));
        }
        best.expect("theta itself is always considered")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsiAlpha {
    One,
    Two,
}

impl PsiAlpha {
    fn exponent(self) -> f64 {
        match self {
            PsiAlpha::One => 1.0,
            PsiAlpha::Two => 2.0,
        }
    }
}

/// Empirical Orlicz norm of the marginal <x, theta>: the smallest t with
/// mean exp((|z|/t)^alpha) = 2 on the cached sample, found by bisection on
/// the bracket [0.1 sigma, 50 sigma]. The standard error comes from an
/// 8-block jackknife-style split of the sample.
pub fn psi_alpha_norm(cache: &SampleCache, theta: &[f64], alpha: PsiAlpha) -> Result<Estimate, MeasureError> {
    let z = cache.projections(theta);
    let root = psi_root(&z, alpha)?;
    // Block split for a crude but honest spread estimate.
    let blocks = 8usize.min(z.len() / 64).max(1);
    let mut block_roots = Vec::with_capacity(blocks);
    if blocks > 1 {
        let per = z.len() / blocks;
        for b in 0..blocks {
            if let Ok(r) = psi_root(&z[b * per..(b + 1) * per], alpha) {
                block_roots.push(r);
            }
        }
    }
    let standard_error = if block_roots.len() > 1 {
        let (_, se) = stats::mean_se(&block_roots);
        se
    } else {
        0.0
    };
    Ok(Estimate { value: root, standard_error, samples: z.len() as u64, stream: cache.stream_id })
}

fn psi_root(z: &[f64], alpha: PsiAlpha) -> Result<f64, MeasureError> {
    let a = alpha.exponent();
    let m = z.len() as f64;
    let sigma = (z.iter().map(|v| v * v).sum::<f64>() / m).sqrt();
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(MeasureError::InvalidParameter("degenerate marginal (zero variance)".into()));
    }
    // f(t) = logmeanexp((|z|/t)^alpha) - ln 2, decreasing in t. The
    // log-sum-exp form keeps tiny t from overflowing.
    let f = |t: f64| -> f64 {
        let mut peak = f64::NEG_INFINITY;
        for &v in z {
            peak = peak.max((v.abs() / t).powf(a));
        }
        let mut s = 0.0;
        for &v in z {
            s += ((v.abs() / t).powf(a) - peak).exp();
        }
        peak + (s / m).ln() - 2.0f64.ln()
    };
    let (mut lo, mut hi) = (0.1 * sigma, 50.0 * sigma);
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return Err(MeasureError::BracketFailure { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Radial moment I_q = (E |x|_2^q)^(1/q). Requires q in (-n, 0) U (0, inf):
/// below -n the integral diverges for densities bounded near the origin.
pub fn iq_moment(cache: &SampleCache, q: f64) -> Result<Estimate, MeasureError> {
    if q == 0.0 || q <= -(cache.n as f64) {
        return Err(MeasureError::InvalidParameter(format!(
            "radial moment order q={q} outside (-n, 0) U (0, inf) for n={}",
            cache.n
        )));
    }
    if q > cache.moment_cap() {
        return Err(MeasureError::NotEnoughSamples { q, m: cache.count, cap: cache.moment_cap() });
    }
    Ok(stats::power_mean_estimate(&cache.norms(), q, cache.stream_id))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRow {
    /// Grid parameter: t for deviations, eps for small balls.
    pub threshold: f64,
    pub probability: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub envelope: f64,
}

/// Empirical tail table with fitted envelope constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    /// P(|x| >= scale * t * sqrt(n)) rows against exp(-t sqrt(n)).
    pub deviation: Vec<TailRow>,
    /// P(|x| < eps sqrt(n)) rows against eps^(c sqrt(n)).
    pub small_ball: Vec<TailRow>,
    /// P(|x| <= t E|x|) / t rows (envelope column holds the ratio).
    pub latala: Vec<TailRow>,
    /// Smallest scale making every deviation row obey exp(-t sqrt(n)).
    pub fitted_deviation_scale: f64,
    /// Largest exponent c with P(|x| < eps sqrt(n)) <= eps^(c sqrt(n)).
    pub fitted_small_ball_exponent: f64,
    /// max over rows of P(|x| <= t E|x|) / t.
    pub fitted_latala_constant: f64,
    pub mean_norm: f64,
    pub samples: u64,
    pub stream: u64,
}

/// Tail probabilities of |x|_2 with Wilson 95% intervals.
///
/// `deviation_scale` is the constant multiplying t sqrt(n) in the deviation
/// events. Fitted constants are computed from the same sample: the deviation
/// scale from quantiles, the small-ball exponent from observed mass (rows
/// with zero hits are skipped; if all are empty the exponent is +inf).
pub fn tail_probabilities(
    cache: &SampleCache,
    deviation_scale: f64,
    t_grid: &[f64],
    eps_grid: &[f64],
    latala_grid: &[f64],
) -> TailReport {
    let mut norms = cache.norms();
    norms.sort_by(f64::total_cmp);
    let m = norms.len();
    let sqrt_n = (cache.n as f64).sqrt();
    let mean_norm = stats::pairwise_sum(&norms) / m as f64;
    let count_ge = |thr: f64| -> u64 { (m - norms.partition_point(|&v| v < thr)) as u64 };
    let count_lt = |thr: f64| -> u64 { norms.partition_point(|&v| v < thr) as u64 };

    let mut deviation = Vec::new();
    let mut fitted_scale = 0.0f64;
    for &t in t_grid {
        let hits = count_ge(deviation_scale * t * sqrt_n);
        let p = hits as f64 / m as f64;
        let (lo, hi) = stats::wilson_interval(hits, m as u64, 1.96);
        deviation.push(TailRow {
            threshold: t,
            probability: p,
            wilson_low: lo,
            wilson_high: hi,
            envelope: (-t * sqrt_n).exp(),
        });
        // The scale that would make this row tight: the upper quantile at
        // level exp(-t sqrt(n)) divided by t sqrt(n).
        let level = 1.0 - (-t * sqrt_n).exp();
        let quant = stats::quantile_sorted(&norms, level.clamp(0.0, 1.0));
        fitted_scale = fitted_scale.max(quant / (t * sqrt_n));
    }

    let mut small_ball = Vec::new();
    let mut fitted_exponent = f64::INFINITY;
    for &eps in eps_grid {
        assert!(eps > 0.0 && eps < 1.0, "small-ball eps must be in (0,1)");
        let hits = count_lt(eps * sqrt_n);
        let p = hits as f64 / m as f64;
        let (lo, hi) = stats::wilson_interval(hits, m as u64, 1.96);
        small_ball.push(TailRow {
            threshold: eps,
            probability: p,
            wilson_low: lo,
            wilson_high: hi,
            envelope: eps.powf(sqrt_n),
        });
        if hits > 0 {
            fitted_exponent = fitted_exponent.min(p.ln() / (sqrt_n * eps.ln()));
        }
    }

    let mut latala = Vec::new();
    let mut fitted_latala = 0.0f64;
    for &t in latala_grid {
        let hits = count_lt(t * mean_norm);
        let p = hits as f64 / m as f64;
        let (lo, hi) = stats::wilson_interval(hits, m as u64, 1.96);
        let ratio = p / t;
        latala.push(TailRow { threshold: t, probability: p, wilson_low: lo, wilson_high: hi, envelope: ratio });
        fitted_latala = fitted_latala.max(ratio);
    }

    TailReport {
        deviation,
        small_ball,
        latala,
        fitted_deviation_scale: fitted_scale,
        fitted_small_ball_exponent: fitted_exponent,
        fitted_latala_constant: fitted_latala,
        mean_norm,
        samples: m as u64,
        stream: cache.stream_id,
    }
}
