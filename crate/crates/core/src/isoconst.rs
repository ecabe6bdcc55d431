//! Isotropic constants of polytopes and the facet-moment bound pipeline.
//!
//! The exact path triangulates a symmetric polytope by coning every facet to
//! the origin and integrates moments per cone in closed form, which gives a
//! non-stochastic oracle for the volume, the covariance, the isotropic
//! constant L_K = |K|^{-1/n} det(Cov)^{1/(2n)}, and the whole chain of facet
//! bounds: with F ranging over facets and y_1..y_n the facet vertices,
//!
//!   (1/|K|) int_K |x|^2 dx  <=  (n/(n+2)) max_F (1/|F|) int_F |u|^2 du
//!                            <=  (n/(n+2)) max_F (2/(n(n+1))) max_eps
//!                                 |eps_1 y_1 + ... + eps_n y_n|^2,
//!
//! where the facet integral has the closed form
//! (1/(n(n+1))) sum_i (sum_j y_ji^2 + (sum_j y_ji)^2) from the Dirichlet
//! moment identity E[c_j c_k] = (1 + delta_jk)/(n(n+1)).
//!
//! Monte Carlo interior sampling (rejection from the circumscribed ball, or
//! hit-and-run chord sampling with an LP chord oracle) covers bodies whose
//! facets are out of reach, and `bernstein_check` measures weighted-sum
//! tails against the two-regime subexponential envelope.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals;
use crate::geometry::{self, sample_sphere};
use crate::linalg::{det_in_place, dot, log_det_spd, norm2};
use crate::lp::{self, LpError, LpSolution, SimplexOptions, StandardLp};
use crate::measures::{Distribution, DistributionKind, MeasureError};
use crate::polytope::{PolytopeError, VertexPolytope};
use crate::rng::Stream;
use crate::stats::{self, Estimate};

#[derive(Debug, Error)]
pub enum IsoError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("facet vertex matrix is singular (det {det:e})")]
    SingularFacet { det: f64 },
    #[error("rejection pilot of {pilot} draws produced no interior hits")]
    LowAcceptance { pilot: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Rejection,
    HitAndRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentProvenance {
    Exact,
    Rejection,
    HitAndRun,
}

/// Volume and mass moments of the uniform measure on a body.
#[derive(Debug, Clone, Serialize)]
pub struct BodyMoments {
    pub n: usize,
    /// None for hit-and-run, which samples the body without weighing it.
    pub volume: Option<Estimate>,
    pub center_of_mass: Vec<f64>,
    /// Standard error of the center-of-mass norm around zero.
    pub center_se: f64,
    /// Row-major n x n matrix E[x x^T] under the uniform probability on K.
    pub second_moment: Vec<f64>,
    /// E |x|^2 with its sampling error (zero width on the exact path).
    pub second_trace: Estimate,
    pub provenance: MomentProvenance,
    /// Split-chain diagnostic for hit-and-run; None elsewhere.
    pub r_hat: Option<f64>,
    /// Set when the split-chain diagnostic exceeds 1.1.
    pub non_convergence: bool,
}

/// Exact moments by coning the facet triangulation to the origin. Each cone
/// over a facet with vertices y_1..y_n has volume |det Y|/n!, centroid
/// (y_1+..+y_n)/(n+1), and raw second moment
/// (sum_j y_j y_j^T + s s^T)/((n+1)(n+2)) with s the vertex sum.
pub fn body_moments_exact(k: &VertexPolytope) -> Result<BodyMoments, IsoError> {
    let n = k.dim();
    let facets = k.facets()?;
    let mut vol_parts = Vec::with_capacity(facets.facets.len());
    let mut com = vec![0.0; n];
    let mut sm = vec![0.0; n * n];
    let mut y = vec![0.0; n * n];
    let denom = ((n + 1) * (n + 2)) as f64;
    for f in &facets.facets {
        for (row, &id) in f.vertices.iter().enumerate() {
            let v = k.signed_vertex(id);
            y[row * n..(row + 1) * n].copy_from_slice(&v);
        }
        let mut det_buf = y.clone();
        let vol = det_in_place(&mut det_buf, n).abs() / factorial(n);
        vol_parts.push(vol);
        // Vertex sum s and per-cone moment accumulation.
        let mut s = vec![0.0; n];
        for row in 0..n {
            for i in 0..n {
                s[i] += y[row * n + i];
            }
        }
        for i in 0..n {
            com[i] += vol * s[i] / (n as f64 + 1.0);
        }
        for i in 0..n {
            for j in 0..n {
                let mut acc = s[i] * s[j];
                for row in 0..n {
                    acc += y[row * n + i] * y[row * n + j];
                }
                sm[i * n + j] += vol * acc / denom;
            }
        }
    }
    let volume = stats::pairwise_sum(&vol_parts);
    if volume <= 0.0 {
        return Err(IsoError::Numerical("triangulation has zero total volume".into()));
    }
    for v in com.iter_mut() {
        *v /= volume;
    }
    for v in sm.iter_mut() {
        *v /= volume;
    }
    let trace = (0..n).map(|i| sm[i * n + i]).sum::<f64>();
    Ok(BodyMoments {
        n,
        volume: Some(Estimate::exact(volume)),
        center_of_mass: com,
        center_se: 0.0,
        second_moment: sm,
        second_trace: Estimate::exact(trace),
        provenance: MomentProvenance::Exact,
        r_hat: None,
        non_convergence: false,
    })
}

/// Monte Carlo moments: rejection from the circumscribed ball or hit-and-run
/// chord sampling. Deterministic given the stream.
pub fn body_moments(
    k: &VertexPolytope,
    mode: SampleMode,
    samples: usize,
    stream: Stream,
) -> Result<BodyMoments, IsoError> {
    if samples < 16 {
        return Err(IsoError::InvalidParameter("need at least 16 samples".into()));
    }
    match mode {
        SampleMode::Rejection => rejection_moments(k, samples, stream),
        SampleMode::HitAndRun => hit_and_run_moments(k, samples, stream),
    }
}

fn rejection_moments(
    k: &VertexPolytope,
    samples: usize,
    stream: Stream,
) -> Result<BodyMoments, IsoError> {
    let n = k.dim();
    let radius = functionals::radius(k);
    if radius <= 0.0 {
        return Err(IsoError::InvalidParameter("body has zero radius".into()));
    }
    let mut rng = stream.rng();
    let pilot = samples.min(400);
    let mut hits: u64 = 0;
    let mut accepted: Vec<f64> = Vec::new();
    let mut x = vec![0.0; n];
    for i in 0..samples {
        let u = sample_sphere(n, &mut rng);
        let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
        for (xi, ui) in x.iter_mut().zip(u.as_slice()) {
            *xi = r * ui;
        }
        if k.contains(&x, 1e-9)? {
            hits += 1;
            accepted.extend_from_slice(&x);
        }
        if i + 1 == pilot && hits == 0 && samples > pilot {
            return Err(IsoError::LowAcceptance { pilot });
        }
    }
    if hits == 0 {
        return Err(IsoError::LowAcceptance { pilot: samples });
    }
    let m = hits as usize;
    let rate = hits as f64 / samples as f64;
    let ball_vol = geometry::unit_ball_volume(n) * radius.powi(n as i32);
    let vol = Estimate {
        value: rate * ball_vol,
        standard_error: (rate * (1.0 - rate) / samples as f64).sqrt() * ball_vol,
        samples: samples as u64,
        stream: stream.id(),
    };
    let (com, center_se, sm, trace) = iid_moments(&accepted, n, m, stream.id());
    Ok(BodyMoments {
        n,
        volume: Some(vol),
        center_of_mass: com,
        center_se,
        second_moment: sm,
        second_trace: trace,
        provenance: MomentProvenance::Rejection,
        r_hat: None,
        non_convergence: false,
    })
}

fn iid_moments(points: &[f64], n: usize, m: usize, stream_id: u64) -> (Vec<f64>, f64, Vec<f64>, Estimate) {
    let mut com = vec![0.0; n];
    let mut sm = vec![0.0; n * n];
    let mut traces = Vec::with_capacity(m);
    for p in points.chunks_exact(n) {
        for i in 0..n {
            com[i] += p[i];
            for j in 0..n {
                sm[i * n + j] += p[i] * p[j];
            }
        }
        traces.push(dot(p, p));
    }
    let mf = m as f64;
    for v in com.iter_mut() {
        *v /= mf;
    }
    for v in sm.iter_mut() {
        *v /= mf;
    }
    // Standard error of the center-of-mass norm: component variances summed.
    let mut var_sum = 0.0;
    for i in 0..n {
        var_sum += (sm[i * n + i] - com[i] * com[i]).max(0.0);
    }
    let center_se = (var_sum / mf).sqrt();
    let trace = stats::mean_estimate(&traces, stream_id);
    (com, center_se, sm, trace)
}

/// Exit parameter of the chord through `x` along unit `u`: the largest s
/// with x + s u in K, through the convex-combination LP.
fn chord_exit(k: &VertexPolytope, x: &[f64], u: &[f64], gen_scale: f64) -> Result<f64, IsoError> {
    let n = k.dim();
    let count = k.generator_count();
    let pairs = count.max(n / 2 + 1);
    let cols = 2 * pairs + 1;
    let rows = n + 1;
    let mut a = vec![0.0; rows * cols];
    for j in 0..count {
        let g = k.generator(j);
        for i in 0..n {
            a[i * cols + 2 * j] = g[i] / gen_scale;
            a[i * cols + 2 * j + 1] = -g[i] / gen_scale;
        }
    }
    for i in 0..n {
        a[i * cols + (cols - 1)] = -u[i];
    }
    for j in 0..2 * pairs {
        a[n * cols + j] = 1.0;
    }
    let mut b = vec![0.0; rows];
    for i in 0..n {
        b[i] = x[i] / gen_scale;
    }
    b[n] = 1.0;
    let mut c = vec![0.0; cols];
    c[cols - 1] = 1.0;
    let lp = StandardLp::new(rows, cols, a, b, c)?;
    match lp::solve(&lp, &SimplexOptions::default())? {
        LpSolution::Optimal { objective, .. } => Ok(gen_scale * objective.max(0.0)),
        other => Err(IsoError::Numerical(format!("chord program returned {other:?}"))),
    }
}

const CHAINS: usize = 8;

fn hit_and_run_moments(
    k: &VertexPolytope,
    samples: usize,
    stream: Stream,
) -> Result<BodyMoments, IsoError> {
    let n = k.dim();
    let gen_scale = k.generators().chunks_exact(n).map(norm2).fold(0.0f64, f64::max);
    if gen_scale <= 0.0 {
        return Err(IsoError::InvalidParameter("body has zero radius".into()));
    }
    let burn_in = 10 * n * n;
    let thin = n;
    let kept_per_chain = samples.div_ceil(CHAINS).max(4);
    let mut points: Vec<f64> = Vec::with_capacity(CHAINS * kept_per_chain * n);
    let mut chain_traces: Vec<Vec<f64>> = Vec::with_capacity(CHAINS);

    for chain in 0..CHAINS {
        let mut rng = stream.child(chain as u64).rng();
        let mut x = vec![0.0; n];
        let mut traces = Vec::with_capacity(kept_per_chain);
        let total_steps = burn_in + kept_per_chain * thin;
        for step in 0..total_steps {
            let u = sample_sphere(n, &mut rng);
            let fwd = chord_exit(k, &x, u.as_slice(), gen_scale)?;
            let neg: Vec<f64> = u.as_slice().iter().map(|v| -v).collect();
            let bwd = chord_exit(k, &x, &neg, gen_scale)?;
            let s = -bwd + rng.random::<f64>() * (bwd + fwd);
            for (xi, ui) in x.iter_mut().zip(u.as_slice()) {
                // The contraction keeps accumulated rounding from drifting
                // the walker outside the body; the bias is far below any
                // sampling error.
                *xi = (*xi + s * ui) * (1.0 - 1e-12);
            }
            if step >= burn_in && (step - burn_in) % thin == thin - 1 {
                points.extend_from_slice(&x);
                traces.push(dot(&x, &x));
            }
        }
        chain_traces.push(traces);
    }

    let m = CHAINS * kept_per_chain;
    let (com, _, sm, _) = iid_moments(&points, n, m, stream.id());
    // Split-chain statistics on |x|^2: each chain halved.
    let halves: Vec<&[f64]> = chain_traces
        .iter()
        .flat_map(|t| {
            let mid = t.len() / 2;
            [&t[..mid], &t[mid..]]
        })
        .collect();
    let half_len = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| stats::mean_se(h).0).collect();
    let within: Vec<f64> = halves
        .iter()
        .map(|h| {
            let (mu, _) = stats::mean_se(h);
            h.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (h.len() as f64 - 1.0)
        })
        .collect();
    let w = stats::mean_se(&within).0;
    let grand = stats::mean_se(&means).0;
    let b_var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>()
        / (means.len() as f64 - 1.0)
        * half_len;
    let r_hat = if w > 0.0 {
        (((half_len - 1.0) / half_len * w + b_var / half_len) / w).sqrt()
    } else {
        1.0
    };
    // Batch-means error of the trace from the half-chain means.
    let (trace_mean, batch_se) = stats::mean_se(&means);
    let center_se = {
        let mut var_sum = 0.0;
        for i in 0..n {
            var_sum += (sm[i * n + i] - com[i] * com[i]).max(0.0);
        }
        // Correlated samples: scale the iid error by the variance inflation
        // the split-chain statistic reports.
        (var_sum / m as f64).sqrt() * r_hat.max(1.0)
    };
    Ok(BodyMoments {
        n,
        volume: None,
        center_of_mass: com,
        center_se,
        second_moment: sm,
        second_trace: Estimate {
            value: trace_mean,
            standard_error: batch_se,
            samples: m as u64,
            stream: stream.id(),
        },
        provenance: MomentProvenance::HitAndRun,
        r_hat: Some(r_hat),
        non_convergence: r_hat > 1.1,
    })
}

/// Isotropic constant on the exact path: L = |K|^{-1/n} det(Cov)^{1/(2n)}
/// with Cov the covariance of the uniform probability on K. Affine
/// invariant; 1/sqrt(12) for any cube.
pub fn isotropic_constant(k: &VertexPolytope) -> Result<f64, IsoError> {
    isotropic_constant_from(&body_moments_exact(k)?)
}

/// The same constant from precomputed moments (rejection moments give the
/// Monte Carlo version; hit-and-run carries no volume and is rejected).
pub fn isotropic_constant_from(m: &BodyMoments) -> Result<f64, IsoError> {
    let n = m.n;
    let vol = m
        .volume
        .as_ref()
        .ok_or_else(|| {
            IsoError::InvalidParameter("moments carry no volume (hit-and-run provenance)".into())
        })?
        .value;
    if vol <= 0.0 {
        return Err(IsoError::Numerical("nonpositive volume".into()));
    }
    let mut cov = m.second_moment.clone();
    for i in 0..n {
        for j in 0..n {
            cov[i * n + j] -= m.center_of_mass[i] * m.center_of_mass[j];
        }
    }
    let log_det = log_det_spd(&cov, n)
        .ok_or_else(|| IsoError::Numerical("covariance is not positive definite".into()))?;
    Ok((-vol.ln() / n as f64 + log_det / (2.0 * n as f64)).exp())
}

/// Closed-form mean squared norm over the facet simplex with vertex rows
/// `y` (n vertices in R^n): (1/(n(n+1))) sum_i (sum_j y_ji^2 + (sum_j y_ji)^2).
pub fn facet_second_moment(y: &[f64], n: usize) -> Result<f64, IsoError> {
    check_facet(y, n)?;
    Ok(facet_second_moment_unchecked(y, n))
}

fn facet_second_moment_unchecked(y: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let mut col_sum = 0.0;
        let mut col_sq = 0.0;
        for j in 0..n {
            let v = y[j * n + i];
            col_sum += v;
            col_sq += v * v;
        }
        acc += col_sq + col_sum * col_sum;
    }
    acc / (n * (n + 1)) as f64
}

fn check_facet(y: &[f64], n: usize) -> Result<(), IsoError> {
    if y.len() != n * n {
        return Err(IsoError::InvalidParameter(format!(
            "facet vertex buffer holds {} values, expected {}",
            y.len(),
            n * n
        )));
    }
    let scale = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut buf = y.to_vec();
    let det = det_in_place(&mut buf, n);
    if scale <= 0.0 || det.abs() < 1e-10 * scale.powi(n as i32) {
        return Err(IsoError::SingularFacet { det });
    }
    Ok(())
}

/// Monte Carlo version of `facet_second_moment` by Dirichlet sampling of
/// the vertex weights; the oracle the closed form is verified against.
pub fn facet_second_moment_mc(y: &[f64], n: usize, samples: usize, stream: Stream) -> Estimate {
    let mut rng = stream.rng();
    let mut weights = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut vals = Vec::with_capacity(samples);
    for _ in 0..samples {
        dirichlet_fill(&mut weights, &mut rng);
        u.iter_mut().for_each(|v| *v = 0.0);
        for (j, &w) in weights.iter().enumerate() {
            for i in 0..n {
                u[i] += w * y[j * n + i];
            }
        }
        vals.push(dot(&u, &u));
    }
    stats::mean_estimate(&vals, stream.id())
}

/// Monte Carlo moment E[c_{j1} c_{j2}] of uniform Dirichlet weights, whose
/// closed form is (1 + delta)/(n(n+1)).
pub fn dirichlet_moment_mc(
    n: usize,
    j1: usize,
    j2: usize,
    samples: usize,
    stream: Stream,
) -> Estimate {
    assert!(j1 < n && j2 < n);
    let mut rng = stream.rng();
    let mut weights = vec![0.0; n];
    let mut vals = Vec::with_capacity(samples);
    for _ in 0..samples {
        dirichlet_fill(&mut weights, &mut rng);
        vals.push(weights[j1] * weights[j2]);
    }
    stats::mean_estimate(&vals, stream.id())
}

fn dirichlet_fill(weights: &mut [f64], rng: &mut impl Rng) {
    let mut total = 0.0;
    for w in weights.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        *w = e;
        total += e;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
}

/// Facet-moment upper bound on the interior mean squared norm:
/// (n/(n+2)) max over facets of the facet second moment.
pub fn max_facet_bound(k: &VertexPolytope) -> Result<f64, IsoError> {
    let n = k.dim();
    let facets = k.facets()?;
    let mut best = 0.0f64;
    let mut y = vec![0.0; n * n];
    for f in &facets.facets {
        resolve_facet(k, &f.vertices, &mut y);
        best = best.max(facet_second_moment_unchecked(&y, n));
    }
    Ok(n as f64 / (n as f64 + 2.0) * best)
}

fn resolve_facet(k: &VertexPolytope, ids: &[i32], y: &mut [f64]) {
    let n = k.dim();
    for (row, &id) in ids.iter().enumerate() {
        let v = k.signed_vertex(id);
        y[row * n..(row + 1) * n].copy_from_slice(&v);
    }
}

/// Sign-extremal bound on a facet's second moment.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignMax {
    pub value: f64,
    /// False when the maximum comes from greedy restarts (a lower bound on
    /// the true maximum) rather than full enumeration.
    pub exact: bool,
}

const SIGN_ENUM_CAP: usize = 20;
const SIGN_RESTARTS: usize = 64;
const SIGN_SEARCH_SEED: u64 = 0x5167_4D41_5853;

/// (2/(n(n+1))) max over signs of |eps_1 y_1 + .. + eps_n y_n|^2. Exact by
/// Gray-code enumeration up to n = 20, greedy single-flip ascent with
/// restarts beyond; always at least `facet_second_moment` of the same rows.
pub fn sign_max_bound(y: &[f64], n: usize) -> SignMax {
    assert_eq!(y.len(), n * n);
    let scale = (2.0 / (n * (n + 1)) as f64) as f64;
    if n <= SIGN_ENUM_CAP {
        // Fix the first sign by symmetry; walk the rest in Gray order so
        // each step flips one vertex.
        let mut s = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                s[i] += y[j * n + i];
            }
        }
        let mut signs = vec![1.0f64; n];
        let mut best = dot(&s, &s);
        let steps: u64 = 1u64 << (n - 1);
        for i in 1..steps {
            let j = 1 + i.trailing_zeros() as usize;
            for idx in 0..n {
                s[idx] -= 2.0 * signs[j] * y[j * n + idx];
            }
            signs[j] = -signs[j];
            best = best.max(dot(&s, &s));
        }
        return SignMax { value: scale * best, exact: true };
    }
    let mut best = 0.0f64;
    for restart in 0..SIGN_RESTARTS {
        let mut rng = Stream::root(SIGN_SEARCH_SEED).child(restart as u64).rng();
        let mut signs: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let mut s = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                s[i] += signs[j] * y[j * n + i];
            }
        }
        loop {
            let mut best_gain = 0.0;
            let mut best_j = usize::MAX;
            for j in 0..n {
                let yj = &y[j * n..(j + 1) * n];
                let gain = 4.0 * (dot(yj, yj) - signs[j] * dot(&s, yj));
                if gain > best_gain {
                    best_gain = gain;
                    best_j = j;
                }
            }
            if best_j == usize::MAX || best_gain <= 1e-14 * dot(&s, &s).max(1.0) {
                break;
            }
            for idx in 0..n {
                s[idx] -= 2.0 * signs[best_j] * y[best_j * n + idx];
            }
            signs[best_j] = -signs[best_j];
        }
        best = best.max(dot(&s, &s));
    }
    SignMax { value: scale * best, exact: false }
}

/// One row of a weighted-sum tail check.
#[derive(Debug, Clone, Serialize)]
pub struct BernsteinRow {
    pub t: f64,
    pub probability: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// min(t^2 / (A |a|_2)^2, t / (A |a|_inf)), the two-regime exponent.
    pub exponent: f64,
    /// 2 exp(-exponent/4), the reference envelope at c = 1/4.
    pub envelope_quarter: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BernsteinReport {
    pub rows: Vec<BernsteinRow>,
    /// Largest c with empirical <= 2 exp(-c exponent) on the whole grid;
    /// infinite when every tail count is zero.
    pub fitted_c: f64,
    pub weight_l2: f64,
    pub weight_inf: f64,
    pub samples: usize,
}

/// Empirical tails of |sum a_j g_j| for iid one-dimensional marginals of a
/// generator distribution, against the subexponential envelope with scale A.
pub fn bernstein_check(
    kind: DistributionKind,
    weights: &[f64],
    psi_scale: f64,
    t_grid: &[f64],
    samples: usize,
    stream: Stream,
) -> Result<BernsteinReport, IsoError> {
    if weights.is_empty() || psi_scale <= 0.0 || samples == 0 {
        return Err(IsoError::InvalidParameter("empty weights, scale, or samples".into()));
    }
    let dist = Distribution::new(kind, 1)?;
    let l2 = norm2(weights);
    let linf = weights.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if l2 <= 0.0 {
        return Err(IsoError::InvalidParameter("zero weight vector".into()));
    }
    let mut rng = stream.rng();
    let mut sums = Vec::with_capacity(samples);
    for _ in 0..samples {
        let g = dist.sample(weights.len(), &mut rng);
        sums.push(dot(weights, &g));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut fitted = f64::INFINITY;
    for &t in t_grid {
        if t < 0.0 {
            return Err(IsoError::InvalidParameter(format!("negative threshold {t}")));
        }
        let hits = sums.iter().filter(|&&z| z.abs() >= t).count() as u64;
        let p = hits as f64 / samples as f64;
        let (lo, hi) = stats::wilson_interval(hits, samples as u64, 1.96);
        let exponent = if t == 0.0 {
            0.0
        } else {
            let quad = t * t / (psi_scale * psi_scale * l2 * l2);
            let lin = t / (psi_scale * linf);
            quad.min(lin)
        };
        if exponent > 0.0 && p > 0.0 {
            fitted = fitted.min((2.0 / p).ln() / exponent);
        }
        rows.push(BernsteinRow {
            t,
            probability: p,
            wilson_low: lo,
            wilson_high: hi,
            exponent,
            envelope_quarter: 2.0 * (-exponent / 4.0).exp(),
        });
    }
    Ok(BernsteinReport { rows, fitted_c: fitted, weight_l2: l2, weight_inf: linf, samples })
}

/// The full facet pipeline on the exact path: interior moment, facet and
/// sign bounds, the implied isotropic-constant bounds, and the direct
/// constant, with the chain inequalities asserted.
#[derive(Debug, Clone, Serialize)]
pub struct KkReport {
    pub n: usize,
    pub generator_count: usize,
    pub facet_count: usize,
    /// (1/|K|) int |x|^2 dx, exact.
    pub interior_second_moment: f64,
    /// (n/(n+2)) max_F facet_second_moment.
    pub facet_bound: f64,
    /// (n/(n+2)) max_F sign_max_bound.
    pub sign_bound: f64,
    pub sign_exact: bool,
    /// |K|^{1/n}.
    pub volume_radius: f64,
    /// L bounds implied by n L^2 |K|^{2/n} <= (each second-moment bound).
    pub implied_l_interior: f64,
    pub implied_l_facet: f64,
    pub implied_l_sign: f64,
    /// The exact isotropic constant.
    pub direct_l: f64,
}

/// Runs the Klartag-Kozma style bound chain on the exact facet path:
/// computes the interior second moment by coning facets, dominates it by the
/// worst facet second moment, dominates that by the sign-vector bound, and
/// converts each level into an isotropic-constant bound via
/// `n L^2 |K|^{2/n} <= bound`. Errors if the chain fails to hold, so a
/// successful return certifies the inequalities on this body.
pub fn kk_bound_pipeline(k: &VertexPolytope) -> Result<KkReport, IsoError> {
    let n = k.dim();
    let nf = n as f64;
    let facets = k.facets()?;
    let count = k.generator_count();
    // Facet count sanity: at most binom(2N, n), checked in logs to dodge
    // overflow.
    let ln_facets = (facets.facets.len() as f64).ln();
    let ln_binom = ln_binomial(2 * count, n);
    if ln_facets > ln_binom + 1e-9 {
        return Err(IsoError::Numerical(format!(
            "facet count {} exceeds the binomial cap",
            facets.facets.len()
        )));
    }

    let moments = body_moments_exact(k)?;
    let interior = moments.second_trace.value;
    let mut y = vec![0.0; n * n];
    let mut facet_max = 0.0f64;
    let mut sign_max = 0.0f64;
    let mut sign_exact = true;
    for f in &facets.facets {
        resolve_facet(k, &f.vertices, &mut y);
        facet_max = facet_max.max(facet_second_moment_unchecked(&y, n));
        let s = sign_max_bound(&y, n);
        sign_max = sign_max.max(s.value);
        sign_exact &= s.exact;
    }
    let facet_bound = nf / (nf + 2.0) * facet_max;
    let sign_bound = nf / (nf + 2.0) * sign_max;
    let volume = moments.volume.as_ref().expect("exact moments carry volume").value;
    let volume_radius = volume.powf(1.0 / nf);
    let implied = |second: f64| (second / nf).sqrt() / volume_radius;
    let direct_l = isotropic_constant_from(&moments)?;

    let report = KkReport {
        n,
        generator_count: count,
        facet_count: facets.facets.len(),
        interior_second_moment: interior,
        facet_bound,
        sign_bound,
        sign_exact,
        volume_radius,
        implied_l_interior: implied(interior),
        implied_l_facet: implied(facet_bound),
        implied_l_sign: implied(sign_bound),
        direct_l,
    };
    let tol = 1e-9;
    assert!(
        report.interior_second_moment <= report.facet_bound * (1.0 + tol) + 1e-12,
        "interior moment {} above facet bound {}",
        report.interior_second_moment,
        report.facet_bound
    );
    assert!(
        report.facet_bound <= report.sign_bound * (1.0 + tol) + 1e-12,
        "facet bound {} above sign bound {}",
        report.facet_bound,
        report.sign_bound
    );
    assert!(
        report.direct_l <= report.implied_l_interior * (1.0 + tol) + 1e-12,
        "direct constant {} above implied bound {}",
        report.direct_l,
        report.implied_l_interior
    );
    Ok(report)
}

fn ln_binomial(m: usize, k: usize) -> f64 {
    let (a, _) = libm::lgamma_r(m as f64 + 1.0);
    let (b, _) = libm::lgamma_r(k as f64 + 1.0);
    let (c, _) = libm::lgamma_r((m - k) as f64 + 1.0);
    a - b - c
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cross(n: usize) -> VertexPolytope {
        let mut gens = vec![0.0; n * n];
        for i in 0..n {
            gens[i * n + i] = 1.0;
        }
        VertexPolytope::new(n, gens).unwrap()
    }

    /// Cube [-h, h]^n from its 2^{n-1} positive-first-coordinate vertices.
    fn cube_body(n: usize, h: f64) -> VertexPolytope {
        let count = 1usize << (n - 1);
        let mut gens = vec![0.0; count * n];
        for mask in 0..count {
            gens[mask * n] = h;
            for i in 1..n {
                gens[mask * n + i] = if mask >> (i - 1) & 1 == 1 { h } else { -h };
            }
        }
        VertexPolytope::new(n, gens).unwrap()
    }

    fn random_body(n: usize, count: usize, seed: u64) -> VertexPolytope {
        let dist = Distribution::new(DistributionKind::Gaussian, n).unwrap();
        VertexPolytope::from_distribution(&dist, count, Stream::root(seed).child_named("gens"))
            .unwrap()
    }

    fn cross_constant(n: usize) -> f64 {
        // |K| = 2^n/n!, Cov = 2/((n+1)(n+2)) I.
        let vol = 2.0f64.powi(n as i32) / factorial(n);
        let cov = 2.0 / ((n as f64 + 1.0) * (n as f64 + 2.0));
        vol.powf(-1.0 / n as f64) * cov.sqrt()
    }

    #[test]
    fn dirichlet_moment_identity_all_pairs() {
        for (n, seed) in [(2usize, 170u64), (3, 171), (5, 172)] {
            for j1 in 0..n {
                for j2 in j1..n {
                    let expect =
                        (1.0 + if j1 == j2 { 1.0 } else { 0.0 }) / (n * (n + 1)) as f64;
                    let est = dirichlet_moment_mc(
                        n,
                        j1,
                        j2,
                        1_000_000,
                        Stream::root(seed).child(j1 as u64).child(j2 as u64),
                    );
                    assert!(
                        (est.value - expect).abs() <= 0.01 * expect,
                        "n={n} ({j1},{j2}): {} vs {expect}",
                        est.value
                    );
                }
            }
        }
    }

    #[test]
    fn facet_moment_closed_cases() {
        for n in [2usize, 3, 4, 6] {
            let mut y = vec![0.0; n * n];
            for i in 0..n {
                y[i * n + i] = 1.0;
            }
            let v = facet_second_moment(&y, n).unwrap();
            assert_relative_eq!(v, 2.0 / (n as f64 + 1.0), max_relative = 1e-12);
            let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
            assert_relative_eq!(facet_second_moment(&y2, n).unwrap(), 4.0 * v, max_relative = 1e-12);
        }
        // Segment integral cross-check: int_0^1 (t^2 + (1-t)^2) dt = 2/3.
        let quad: f64 = (0..10_000)
            .map(|i| {
                let t = (i as f64 + 0.5) / 10_000.0;
                (t * t + (1.0 - t) * (1.0 - t)) / 10_000.0
            })
            .sum();
        assert_relative_eq!(quad, 2.0 / 3.0, max_relative = 1e-6);
        assert!(matches!(
            facet_second_moment(&[1.0, 0.0, 1.0, 0.0], 2),
            Err(IsoError::SingularFacet { .. })
        ));
    }

    #[test]
    fn facet_moment_matches_monte_carlo_on_random_facets() {
        let mut rng = Stream::root(173).child_named("facets").rng();
        use rand_distr::StandardNormal;
        for case in 0..50 {
            let n = 2 + case % 4;
            let y: Vec<f64> = (0..n * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let exact = match facet_second_moment(&y, n) {
                Ok(v) => v,
                Err(IsoError::SingularFacet { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let mc = facet_second_moment_mc(&y, n, 120_000, Stream::root(174).child(case as u64));
            assert!(
                (mc.value - exact).abs() <= 0.01 * exact,
                "case {case}: mc {} vs exact {exact}",
                mc.value
            );
        }
    }

    #[test]
    fn cube_moments_and_constant_are_exact() {
        let k = cube_body(3, 0.5);
        let m = body_moments_exact(&k).unwrap();
        assert_relative_eq!(m.volume.as_ref().unwrap().value, 1.0, max_relative = 1e-9);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 / 12.0 } else { 0.0 };
                assert!(
                    (m.second_moment[i * 3 + j] - expect).abs() < 1e-12,
                    "second moment ({i},{j}) = {}",
                    m.second_moment[i * 3 + j]
                );
            }
        }
        assert!(norm2(&m.center_of_mass) < 1e-12);
        let l = isotropic_constant(&k).unwrap();
        assert!((l - 1.0 / 12.0f64.sqrt()).abs() < 1e-6, "cube constant {l}");
    }

    #[test]
    fn cross_polytope_constants_match_the_closed_family() {
        for n in [2usize, 3, 4] {
            let l = isotropic_constant(&cross(n)).unwrap();
            assert_relative_eq!(l, cross_constant(n), max_relative = 1e-9);
        }
        // The planar cross-polytope is a rotated square.
        assert_relative_eq!(cross_constant(2), 1.0 / 12.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn isotropic_constant_is_affine_invariant() {
        let k = random_body(3, 12, 175);
        let l = isotropic_constant(&k).unwrap();
        // A well-conditioned linear map: rotation-free diagonal stretch plus
        // a shear, condition number far below 10.
        let t = [1.4, 0.3, 0.0, 0.0, 0.8, -0.2, 0.1, 0.0, 1.1];
        let gens = k.generators();
        let mut mapped = vec![0.0; gens.len()];
        for (src, dst) in gens.chunks_exact(3).zip(mapped.chunks_exact_mut(3)) {
            for i in 0..3 {
                dst[i] = (0..3).map(|j| t[i * 3 + j] * src[j]).sum();
            }
        }
        let l2 = isotropic_constant(&VertexPolytope::new(3, mapped).unwrap()).unwrap();
        assert!((l - l2).abs() <= 1e-8 * l, "L {l} vs mapped {l2}");
    }

    #[test]
    fn rejection_sampling_agrees_with_the_exact_path() {
        let k = cube_body(3, 0.5);
        let exact = body_moments_exact(&k).unwrap();
        let mc = body_moments(&k, SampleMode::Rejection, 40_000, Stream::root(176).child_named("rej"))
            .unwrap();
        assert_eq!(mc.provenance, MomentProvenance::Rejection);
        let vol = mc.volume.as_ref().unwrap();
        assert!(
            (vol.value - 1.0).abs() <= 3.5 * vol.standard_error,
            "volume {} +- {}",
            vol.value,
            vol.standard_error
        );
        assert!(
            (mc.second_trace.value - exact.second_trace.value).abs()
                <= 3.5 * mc.second_trace.standard_error,
            "trace {} vs {}",
            mc.second_trace.value,
            exact.second_trace.value
        );
        assert!(norm2(&mc.center_of_mass) <= 3.5 * mc.center_se);

        let c = cross(2);
        let exact = body_moments_exact(&c).unwrap();
        assert_relative_eq!(exact.volume.as_ref().unwrap().value, 2.0, max_relative = 1e-12);
        assert_relative_eq!(exact.second_trace.value, 1.0 / 3.0, max_relative = 1e-12);
        let mc = body_moments(&c, SampleMode::Rejection, 30_000, Stream::root(177).child_named("rej"))
            .unwrap();
        assert!((mc.second_trace.value - 1.0 / 3.0).abs() <= 3.5 * mc.second_trace.standard_error);
    }

    #[test]
    fn hit_and_run_agrees_with_the_exact_path() {
        let k = random_body(3, 10, 178);
        let exact = body_moments_exact(&k).unwrap();
        let mc =
            body_moments(&k, SampleMode::HitAndRun, 4000, Stream::root(179).child_named("har"))
                .unwrap();
        assert_eq!(mc.provenance, MomentProvenance::HitAndRun);
        assert!(mc.volume.is_none());
        let r_hat = mc.r_hat.unwrap();
        assert!(r_hat < 1.1, "split-chain diagnostic {r_hat}");
        assert!(!mc.non_convergence);
        assert!(
            (mc.second_trace.value - exact.second_trace.value).abs()
                <= 4.0 * mc.second_trace.standard_error,
            "trace {} +- {} vs exact {}",
            mc.second_trace.value,
            mc.second_trace.standard_error,
            exact.second_trace.value
        );
        assert!(norm2(&mc.center_of_mass) <= 4.0 * mc.center_se);
        assert!(isotropic_constant_from(&mc).is_err());
    }

    #[test]
    fn hopeless_rejection_is_reported() {
        // A needle: the circumscribed ball is mostly empty.
        let gens = vec![1.0, 0.0, 0.0, 0.0, 0.01, 0.0, 0.0, 0.0, 0.01];
        let k = VertexPolytope::new(3, gens).unwrap();
        match body_moments(&k, SampleMode::Rejection, 5000, Stream::root(180).child_named("rej")) {
            Err(IsoError::LowAcceptance { pilot }) => assert_eq!(pilot, 400),
            other => panic!("expected low acceptance, got {other:?}"),
        }
    }

    #[test]
    fn facet_bounds_close_the_chain_on_cross_polytopes() {
        // Every bound in the chain is tight on the cross-polytope family.
        for n in [2usize, 3, 4] {
            let rep = kk_bound_pipeline(&cross(n)).unwrap();
            let interior = 2.0 * n as f64 / ((n as f64 + 1.0) * (n as f64 + 2.0));
            assert_relative_eq!(rep.interior_second_moment, interior, max_relative = 1e-9);
            assert_relative_eq!(rep.facet_bound, interior, max_relative = 1e-9);
            assert_relative_eq!(rep.sign_bound, interior, max_relative = 1e-9);
            assert_relative_eq!(rep.direct_l, cross_constant(n), max_relative = 1e-9);
            assert_relative_eq!(rep.direct_l, rep.implied_l_interior, max_relative = 1e-9);
            assert!(rep.sign_exact);
            assert_eq!(rep.facet_count, 1 << n);
        }
        let rep = kk_bound_pipeline(&cross(3)).unwrap();
        assert_relative_eq!(rep.facet_bound, 0.3, max_relative = 1e-12);
    }

    #[test]
    fn pipeline_chain_holds_on_random_bodies() {
        for seed in 0..5u64 {
            let k = random_body(3, 24, 181 + seed);
            let rep = kk_bound_pipeline(&k).unwrap();
            assert!(rep.interior_second_moment <= rep.facet_bound * (1.0 + 1e-9));
            assert!(rep.facet_bound <= rep.sign_bound * (1.0 + 1e-9));
            assert!(rep.direct_l <= rep.implied_l_interior * (1.0 + 1e-9));
            assert!(rep.implied_l_interior <= rep.implied_l_facet * (1.0 + 1e-9));
            assert!(rep.implied_l_facet <= rep.implied_l_sign * (1.0 + 1e-9));
            assert!(rep.sign_exact);
        }
    }

    #[test]
    fn sign_bound_cases_and_greedy_matches_enumeration() {
        let v = sign_max_bound(&[1.0, 0.0, 0.0, 1.0], 2);
        assert!(v.exact);
        assert_relative_eq!(v.value, 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(
            v.value,
            facet_second_moment(&[1.0, 0.0, 0.0, 1.0], 2).unwrap(),
            max_relative = 1e-12
        );
        let d = sign_max_bound(&[1.0, 0.0, 1.0, 0.0], 2);
        assert_relative_eq!(d.value, 4.0 / 3.0, max_relative = 1e-12);

        use rand_distr::StandardNormal;
        let mut rng = Stream::root(182).child_named("signs").rng();
        for case in 0..100 {
            let n = 3 + case % 10;
            let y: Vec<f64> = (0..n * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let exact = sign_max_bound(&y, n);
            assert!(exact.exact);
            // Greedy restarts, forced by a shrunken enumeration cap, must
            // find the same maximum on these sizes.
            let greedy = greedy_only(&y, n);
            assert!(
                (greedy - exact.value).abs() <= 1e-9 * exact.value,
                "case {case} n={n}: greedy {greedy} vs exact {}",
                exact.value
            );
            let fsm = facet_second_moment_unchecked(&y, n);
            assert!(exact.value >= fsm - 1e-12, "sign bound below facet moment");
        }
    }

    fn greedy_only(y: &[f64], n: usize) -> f64 {
        let scale = 2.0 / (n * (n + 1)) as f64;
        let mut best = 0.0f64;
        for restart in 0..SIGN_RESTARTS {
            let mut rng = Stream::root(SIGN_SEARCH_SEED).child(restart as u64).rng();
            let mut signs: Vec<f64> =
                (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let mut s = vec![0.0; n];
            for j in 0..n {
                for i in 0..n {
                    s[i] += signs[j] * y[j * n + i];
                }
            }
            loop {
                let mut best_gain = 0.0;
                let mut best_j = usize::MAX;
                for j in 0..n {
                    let yj = &y[j * n..(j + 1) * n];
                    let gain = 4.0 * (dot(yj, yj) - signs[j] * dot(&s, yj));
                    if gain > best_gain {
                        best_gain = gain;
                        best_j = j;
                    }
                }
                if best_j == usize::MAX || best_gain <= 1e-14 * dot(&s, &s).max(1.0) {
                    break;
                }
                for idx in 0..n {
                    s[idx] -= 2.0 * signs[best_j] * y[best_j * n + idx];
                }
                signs[best_j] = -signs[best_j];
            }
            best = best.max(dot(&s, &s));
        }
        scale * best
    }

    #[test]
    fn weighted_sum_tails_match_the_error_function() {
        let rep = bernstein_check(
            DistributionKind::Gaussian,
            &[1.0],
            1.0,
            &[0.0, 0.5, 1.0, 2.0],
            200_000,
            Stream::root(183).child_named("bern"),
        )
        .unwrap();
        assert_eq!(rep.rows[0].probability, 1.0);
        assert!(rep.rows[0].envelope_quarter >= 1.0);
        for (i, t) in [0.5, 1.0, 2.0].iter().enumerate() {
            let expect = libm::erfc(t / 2.0f64.sqrt());
            let row = &rep.rows[i + 1];
            assert!(
                (row.probability - expect).abs() < 0.004,
                "t={t}: {} vs {expect}",
                row.probability
            );
            assert!(row.wilson_low <= expect && expect <= row.wilson_high);
        }
        assert!(rep.fitted_c > 0.05, "fitted c {}", rep.fitted_c);
    }

    #[test]
    fn equal_weight_cube_sums_have_subgaussian_tails() {
        let weights = vec![1.0 / 8.0; 64];
        let rep = bernstein_check(
            DistributionKind::Cube,
            &weights,
            1.0,
            &[3.0],
            100_000,
            Stream::root(184).child_named("bern"),
        )
        .unwrap();
        assert!(rep.rows[0].probability <= 0.01, "p = {}", rep.rows[0].probability);
        assert!((rep.weight_l2 - 1.0).abs() < 1e-12);
    }
}
