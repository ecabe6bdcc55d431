//! Covering numbers and metric entropy profiles.
//!
//! The covering number N(A, tB) is the least number of translates of tB
//! whose union contains A. Exact computation is NP-hard, so everything here
//! is built on one primitive: a greedy farthest-point net over a finite pool
//! of boundary points of A, measured in the gauge of B. The net it returns
//! t-covers the pool and is pairwise t-separated, which makes its size an
//! estimate of N(A, tB) and, to the extent the pool resolves A at scale t,
//! an upper bound on N(A, 2tB). Both readings are reported; a pool that
//! turns out to be t-separated itself is rejected as too small.
//!
//! On top of the primitive sit the profile drivers: the two-direction
//! regularity profile N(K_N, t r_N B_2) and N(r_N B_2, t K_N) with
//! r_N = sqrt(log N), the Sudakov and dual-entropy envelopes they are
//! compared against, and a section lower-bound check for random sections.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::functionals::{self, FunctionalError};
use crate::geometry::{self, sample_frame, sample_sphere, GeometryError};
use crate::linalg::norm2;
use crate::polytope::{PolytopeError, VertexPolytope};
use crate::rng::Stream;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "boundary pool of {pool} points is gauge-separated at t={t}; \
         the net of {net} centers only restates the pool"
    )]
    BudgetTooSmall { pool: usize, net: usize, t: f64 },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// A body that can serve as either side of a covering estimate: the covered
/// set supplies boundary points, the covering set supplies a gauge.
#[derive(Debug, Clone)]
pub enum Body {
    /// Euclidean ball; gauge and boundary are closed-form.
    Ball { n: usize, radius: f64 },
    /// Symmetric polytope; gauge distances go through the LP oracle.
    Polytope(VertexPolytope),
}

impl Body {
    pub fn dim(&self) -> usize {
        match self {
            Body::Ball { n, .. } => *n,
            Body::Polytope(k) => k.dim(),
        }
    }

    pub fn gauge(&self, x: &[f64]) -> Result<f64, EntropyError> {
        match self {
            Body::Ball { radius, .. } => Ok(norm2(x) / radius),
            Body::Polytope(k) => Ok(k.gauge(x)?),
        }
    }

    /// The boundary point r(u) u in direction u (origin if the body is flat
    /// along u).
    fn boundary_point(&self, u: &[f64]) -> Result<Vec<f64>, EntropyError> {
        let r = match self {
            Body::Ball { radius, .. } => *radius,
            Body::Polytope(k) => k.radial(u)?,
        };
        Ok(u.iter().map(|&c| r * c).collect())
    }

    /// Exact circumradius.
    fn circumradius(&self) -> f64 {
        match self {
            Body::Ball { radius, .. } => *radius,
            Body::Polytope(k) => functionals::radius(k),
        }
    }

    /// A certified lower bound on the inradius. For a polytope it is the
    /// inradius of the inscribed generalized cross-polytope with the exact
    /// radial lengths along the coordinate axes, zero if the body is flat.
    fn inradius_lower(&self) -> Result<f64, EntropyError> {
        match self {
            Body::Ball { radius, .. } => Ok(*radius),
            Body::Polytope(k) => {
                let n = k.dim();
                let mut axis = vec![0.0; n];
                let mut inv_sq = 0.0f64;
                for i in 0..n {
                    axis[i] = 1.0;
                    let r = k.radial(&axis)?;
                    axis[i] = 0.0;
                    if r <= 0.0 {
                        return Ok(0.0);
                    }
                    inv_sq += 1.0 / (r * r);
                }
                Ok(1.0 / inv_sq.sqrt())
            }
        }
    }

    /// Exact volume when available: closed form for the ball, dense hull for
    /// polytopes up to dimension 6.
    pub fn volume_exact(&self) -> Option<f64> {
        match self {
            Body::Ball { n, radius } => Some(geometry::unit_ball_volume(*n) * radius.powi(*n as i32)),
            Body::Polytope(k) => {
                if k.dim() <= 6 {
                    k.volume_exact().ok()
                } else {
                    None
                }
            }
        }
    }
}

/// Result of one greedy covering run.
#[derive(Debug, Clone, Serialize)]
pub struct CoveringCount {
    /// Number of net centers, the origin included. Estimates N(A, tB) and,
    /// when the pool resolves scale t, bounds N(A, 2tB) from above.
    pub net_size: usize,
    pub pool: usize,
    /// Exact gauge evaluations spent (the LP budget actually consumed).
    pub gauge_evals: u64,
    /// The net itself, origin first, row-major.
    pub centers: Vec<Vec<f64>>,
}

/// Greedy farthest-point net for covering A by translates of tB.
///
/// A pool of `pool_budget` boundary points of A is covered by centers chosen
/// greedily, the origin always first. A candidate joins the net only after
/// its gauge distance to every existing center is certified above t, so the
/// final net is t-separated and t-covers the pool. Euclidean sandwich bounds
/// from the in- and circumradius of B prune most exact gauge evaluations.
pub fn covering_upper(
    a: &Body,
    b: &Body,
    t: f64,
    pool_budget: usize,
    stream: Stream,
) -> Result<CoveringCount, EntropyError> {
    let n = a.dim();
    if n != b.dim() {
        return Err(EntropyError::InvalidParameter(format!(
            "covered body has dimension {n}, covering body {}",
            b.dim()
        )));
    }
    if !t.is_finite() || t <= 0.0 {
        return Err(EntropyError::InvalidParameter(format!("scale t must be positive, got {t}")));
    }
    if pool_budget < 2 {
        return Err(EntropyError::InvalidParameter("pool budget below 2".into()));
    }

    let mut rng = stream.child_named("pool").rng();
    let mut pts = Vec::with_capacity(pool_budget);
    for _ in 0..pool_budget {
        let u = sample_sphere(n, &mut rng);
        pts.push(a.boundary_point(u.as_slice())?);
    }

    let r_in = b.inradius_lower()?;
    let r_out = b.circumradius();
    let mut evals: u64 = 0;
    // Boundary pool points sit exactly at gauge distance t in the knife-edge
    // cases (A = tB), so coverage comparisons carry a relative slack.
    let t_cover = t * (1.0 + 1e-9);

    // dist[i] is the exact least gauge distance from pts[i] to the net, so
    // selection is true farthest-first; covered points are final. The origin
    // seeds the net. Euclidean sandwich bounds skip gauge evaluations only
    // when they settle the comparison outright.
    let mut covered = vec![false; pool_budget];
    let mut dist = vec![0.0f64; pool_budget];
    for (i, p) in pts.iter().enumerate() {
        let d_e = norm2(p);
        if d_e <= t_cover * r_in {
            covered[i] = true;
            continue;
        }
        let g = b.gauge(p)?;
        evals += 1;
        dist[i] = g;
        if g <= t_cover {
            covered[i] = true;
        }
    }
    let mut centers: Vec<Vec<f64>> = vec![vec![0.0; n]];

    loop {
        let mut cand = usize::MAX;
        let mut far = t_cover;
        for i in 0..pool_budget {
            if !covered[i] && dist[i] > far {
                far = dist[i];
                cand = i;
            }
        }
        if cand == usize::MAX {
            break;
        }

        let p = pts[cand].clone();
        covered[cand] = true;
        dist[cand] = 0.0;
        centers.push(p);
        let c = centers.last().expect("just pushed");
        let mut diff = vec![0.0; n];
        for i in 0..pool_budget {
            if covered[i] {
                continue;
            }
            for (d, (pi, ci)) in diff.iter_mut().zip(pts[i].iter().zip(c.iter())) {
                *d = pi - ci;
            }
            let d_e = norm2(&diff);
            if d_e <= t_cover * r_in {
                covered[i] = true;
                continue;
            }
            if d_e >= dist[i] * r_out {
                // gauge(diff) >= d_e / r_out >= dist[i]: the minimum stands.
                continue;
            }
            let g = b.gauge(&diff)?;
            evals += 1;
            if g < dist[i] {
                dist[i] = g;
            }
            if dist[i] <= t_cover {
                covered[i] = true;
            }
        }
    }

    let net_size = centers.len();
    if net_size == pool_budget + 1 {
        return Err(EntropyError::BudgetTooSmall { pool: pool_budget, net: net_size, t });
    }
    Ok(CoveringCount { net_size, pool: pool_budget, gauge_evals: evals, centers })
}

/// Sudakov-type envelope for log N(C, t B_2): n (w/t)^2 with constant 1;
/// comparisons report the fitted constant instead.
pub fn sudakov_envelope(w: f64, n: usize, t: f64) -> f64 {
    let r = w / t;
    n as f64 * r * r
}

/// Dual-entropy envelope for log N(sqrt(q) B_2, t Z_q): n (log q)^2
/// log(1+t)/t with constant 1.
pub fn dual_entropy_envelope(n: usize, q: f64, t: f64) -> f64 {
    n as f64 * q.ln().powi(2) * (1.0 + t).ln() / t
}

/// The entropy scale r_N = sqrt(log N) that calibrates both directions of
/// the regularity profile.
pub fn entropy_scale(count: usize) -> f64 {
    (count as f64).ln().sqrt()
}

/// Which side of the profile a covering row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverDirection {
    /// N(K_N, t r_N B_2): the polytope covered by balls.
    BodyByBall,
    /// N(r_N B_2, t K_N): the ball covered by polytopes.
    BallByBody,
}

impl fmt::Display for CoverDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverDirection::BodyByBall => "body_by_ball",
            CoverDirection::BallByBody => "ball_by_body",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringRow {
    pub t: f64,
    pub net_size: usize,
    /// log of the greedy count.
    pub log_count: f64,
    /// log(|A| / |tB|) clamped at 0, when both volumes are computable.
    pub volumetric_lower: Option<f64>,
    /// n (log n)^2 log(1+t)/t, the profile target.
    pub envelope_theorem: f64,
    /// n / t^2, the Sudakov-range form.
    pub envelope_sudakov_range: f64,
    /// n (log n)^4 / t^2, the dual-range form.
    pub envelope_dual_range: f64,
    /// True when the greedy pool failed to resolve scale t and the count is
    /// only a floor.
    pub saturated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringReport {
    pub direction: CoverDirection,
    pub r_n: f64,
    pub rows: Vec<CoveringRow>,
    /// max over rows of log_count / envelope_theorem.
    pub fitted_c: f64,
}

/// Two-direction covering profile of a random polytope against the entropy
/// scale ball, on a shared pool per direction so the t-profile is coupled.
pub fn regularity_profile(
    k_n: &VertexPolytope,
    t_grid: &[f64],
    pool_budget: usize,
    stream: Stream,
) -> Result<(CoveringReport, CoveringReport), EntropyError> {
    let n = k_n.dim();
    let count = k_n.generator_count();
    if count < 2 {
        return Err(EntropyError::InvalidParameter("profile needs at least 2 generators".into()));
    }
    if t_grid.is_empty() {
        return Err(EntropyError::InvalidParameter("empty t grid".into()));
    }
    let rn = entropy_scale(count);
    let ball = Body::Ball { n, radius: rn };
    let body = Body::Polytope(k_n.clone());
    let vol_ball = ball.volume_exact();
    let vol_body = body.volume_exact();

    let nf = n as f64;
    let ln_n = nf.ln();
    let mut reports = Vec::with_capacity(2);
    let sides = [
        (CoverDirection::BodyByBall, &body, &ball, vol_body, vol_ball),
        (CoverDirection::BallByBody, &ball, &body, vol_ball, vol_body),
    ];
    for (side, (direction, a, b, vol_a, vol_b)) in sides.into_iter().enumerate() {
        let side_stream = stream.child(side as u64);
        let mut rows = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let (net_size, saturated) = match covering_upper(a, b, t, pool_budget, side_stream) {
                Ok(c) => (c.net_size, false),
                Err(EntropyError::BudgetTooSmall { net, .. }) => (net, true),
                Err(e) => return Err(e),
            };
            let volumetric_lower = match (vol_a, vol_b) {
                (Some(va), Some(vb)) if va > 0.0 && vb > 0.0 => {
                    Some((va.ln() - nf * t.ln() - vb.ln()).max(0.0))
                }
                _ => None,
            };
            rows.push(CoveringRow {
                t,
                net_size,
                log_count: (net_size as f64).ln(),
                volumetric_lower,
                envelope_theorem: nf * ln_n * ln_n * (1.0 + t).ln() / t,
                envelope_sudakov_range: nf / (t * t),
                envelope_dual_range: nf * ln_n.powi(4) / (t * t),
                saturated,
            });
        }
        let fitted_c = rows
            .iter()
            .map(|r| r.log_count / r.envelope_theorem)
            .fold(0.0f64, f64::max);
        reports.push(CoveringReport { direction, r_n: rn, rows, fitted_c });
    }
    let second = reports.pop().expect("two sides");
    let first = reports.pop().expect("two sides");
    Ok((first, second))
}

/// Section lower-bound report: sampled section radii of K_N against the
/// envelope sqrt(log N) k / (n log^3 n) with constant 1.
#[derive(Debug, Clone, Serialize)]
pub struct SectionBoundReport {
    pub k: usize,
    pub frames: usize,
    pub directions: usize,
    pub envelope: f64,
    pub radii: Vec<f64>,
    pub min_radius: f64,
    /// min radius over the envelope: the fitted constant of the bound.
    pub min_ratio: f64,
}

/// Samples Haar k-frames and compares each section radius of K_N against
/// the theoretical lower envelope, reporting the worst ratio.
pub fn section_lower_bound_check(
    k_n: &VertexPolytope,
    kd: usize,
    frames: usize,
    directions: usize,
    stream: Stream,
) -> Result<SectionBoundReport, EntropyError> {
    let n = k_n.dim();
    let count = k_n.generator_count();
    if kd == 0 || kd > n {
        return Err(EntropyError::InvalidParameter(format!("section rank {kd} outside 1..={n}")));
    }
    if frames == 0 || directions == 0 {
        return Err(EntropyError::InvalidParameter("frames and directions must be positive".into()));
    }
    if count < 2 {
        return Err(EntropyError::InvalidParameter("check needs at least 2 generators".into()));
    }

    let nf = n as f64;
    let envelope = (count as f64).ln().sqrt() * kd as f64 / (nf * nf.ln().powi(3));
    let mut radii = Vec::with_capacity(frames);
    for f in 0..frames {
        let sub = stream.child(f as u64);
        let mut rng = sub.child_named("frame").rng();
        let frame = sample_frame(n, kd, &mut rng)?;
        radii.push(functionals::section_radius(k_n, &frame, directions, sub.child_named("dirs"))?.value);
    }
    let min_radius = radii.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SectionBoundReport {
        k: kd,
        frames,
        directions,
        envelope,
        radii,
        min_radius,
        min_ratio: min_radius / envelope,
    })
}
