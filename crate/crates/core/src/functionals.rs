//! Global geometric functionals of a symmetric vertex polytope: mean and
//! p-mean widths, quermass integrals through random projections, outer and
//! section radii over random subspaces, the spherical mean gauge M and the
//! gauge Lipschitz constant b.
//!
//! Everything is Monte Carlo over the sphere or the Grassmannian except
//! where a closed form is available (the Euclidean radius, per-frame
//! projection volumes, facet-based b). All estimators draw from explicit
//! substreams so that re-runs and cross-quantity couplings are exact: two
//! calls with the same stream see the same spheres and frames, and a
//! k-dimensional frame is always the prefix of the (k+1)-dimensional frame
//! drawn from the same substream.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{self, sample_frame, sample_sphere, Frame, GeometryError};
use crate::linalg::norm2;
use crate::polytope::{hull::HullError, PolytopeError, VertexPolytope};
use crate::rng::Stream;
use crate::stats::{self, Estimate};

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One labelled estimate for the harness CSV.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    pub functional: String,
    pub k: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub estimate: Estimate,
    pub sphere_draws: u64,
    pub subspace_draws: u64,
    pub directions: u64,
}

/// Mean width w(K) = spherical average of the support function. Convention:
/// no factor 2, so the unit ball has mean width exactly 1.
pub fn mean_width(k: &VertexPolytope, sphere_draws: usize, stream: Stream) -> Estimate {
    assert!(sphere_draws >= 2);
    let mut rng = stream.rng();
    let vals: Vec<f64> =
        (0..sphere_draws).map(|_| k.support(sample_sphere(k.dim(), &mut rng).as_slice())).collect();
    stats::mean_estimate(&vals, stream.id())
}

/// p-mean width (spherical mean of h^p)^(1/p). Requires p != 0 and
/// p > -(n-1) so the spherical integral converges.
pub fn p_mean_width(
    k: &VertexPolytope,
    p: f64,
    sphere_draws: usize,
    stream: Stream,
) -> Result<Estimate, FunctionalError> {
    if p == 0.0 || p <= -((k.dim() as f64) - 1.0) {
        return Err(FunctionalError::InvalidParameter(format!(
            "p-mean width needs p in (-(n-1), 0) or (0, inf); got p={p} at n={}",
            k.dim()
        )));
    }
    assert!(sphere_draws >= 2);
    let mut rng = stream.rng();
    let vals: Vec<f64> =
        (0..sphere_draws).map(|_| k.support(sample_sphere(k.dim(), &mut rng).as_slice())).collect();
    Ok(stats::power_mean_estimate(&vals, p, stream.id()))
}

/// Euclidean circumradius R(K) = max_j |x_j|, exact.
pub fn radius(k: &VertexPolytope) -> f64 {
    k.generators().chunks_exact(k.dim()).map(norm2).fold(0.0f64, f64::max)
}

/// Volume radius of one projection: (|P_F K| / omega_k)^(1/k), exact per
/// frame through the dense hull (k = 1 is the half-length of a segment).
pub fn proj_volume_radius(k: &VertexPolytope, frame: &Frame) -> Result<f64, FunctionalError> {
    let kd = frame.dim();
    let proj = geometry::project(k.generators(), k.dim(), frame)?;
    let vol = projected_volume(&proj, kd)?;
    Ok((vol / geometry::unit_ball_volume(kd)).powf(1.0 / kd as f64))
}

/// k-volume of the symmetric hull of projected generators; degenerate
/// projections count as zero.
fn projected_volume(proj: &[f64], kd: usize) -> Result<f64, FunctionalError> {
    if kd == 1 {
        return Ok(2.0 * proj.iter().fold(0.0f64, |a, &v| a.max(v.abs())));
    }
    match VertexPolytope::new(kd, proj.to_vec())?.volume_exact() {
        Ok(v) => Ok(v),
        Err(PolytopeError::Hull(HullError::RankDeficient { .. }))
        | Err(PolytopeError::Hull(HullError::TooFewPoints { .. })) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

/// Normalized quermass integral Q_k(K) = ((1/omega_k) E_F |P_F K|)^(1/k)
/// over Haar frames, with a delta-method standard error.
pub fn quermass_qk(
    k: &VertexPolytope,
    kd: usize,
    subspace_draws: usize,
    stream: Stream,
) -> Result<Estimate, FunctionalError> {
    let profile = quermass_profile(k, &[kd], subspace_draws, stream)?;
    Ok(profile.into_iter().next().expect("one entry per requested k").1)
}

/// Q_k for several k at once, coupled by common random numbers: one max-size
/// frame per subspace draw, every smaller k using its prefix, so projected
/// coordinates are shared and the k-profile is sample-wise comparable.
pub fn quermass_profile(
    k: &VertexPolytope,
    ks: &[usize],
    subspace_draws: usize,
    stream: Stream,
) -> Result<Vec<(usize, Estimate)>, FunctionalError> {
    let n = k.dim();
    assert!(subspace_draws >= 2);
    if ks.is_empty() {
        return Ok(Vec::new());
    }
    let k_max = *ks.iter().max().expect("nonempty");
    if ks.iter().any(|&kd| kd == 0 || kd > n) {
        return Err(FunctionalError::InvalidParameter(format!("projection ranks {ks:?} outside 1..={n}")));
    }
    if k_max > crate::polytope::hull::MAX_HULL_DIM {
        return Err(PolytopeError::FacetCapExceeded { n: k_max, max: crate::polytope::hull::MAX_HULL_DIM }.into());
    }
    let mut vols: Vec<Vec<f64>> = vec![Vec::with_capacity(subspace_draws); ks.len()];
    for f in 0..subspace_draws {
        let mut rng = stream.child(f as u64).rng();
        let frame = sample_frame(n, k_max, &mut rng)?;
        let proj = geometry::project(k.generators(), n, &frame)?;
        for (slot, &kd) in ks.iter().enumerate() {
            // Prefix projection = the first kd coordinates of the shared one.
            let sub: Vec<f64> = if kd == k_max {
                proj.clone()
            } else {
                proj.chunks_exact(k_max).flat_map(|row| row[..kd].iter().copied()).collect()
            };
            vols[slot].push(projected_volume(&sub, kd)?);
        }
    }
    let mut out = Vec::with_capacity(ks.len());
    for (slot, &kd) in ks.iter().enumerate() {
        let (mean, se) = stats::mean_se(&vols[slot]);
        let omega = geometry::unit_ball_volume(kd);
        let value = (mean / omega).powf(1.0 / kd as f64);
        // d/dm (m/w)^(1/k) = value / (k m).
        let standard_error = if mean > 0.0 { se * value / (kd as f64 * mean) } else { f64::INFINITY };
        out.push((kd, Estimate { value, standard_error, samples: subspace_draws as u64, stream: stream.id() }));
    }
    Ok(out)
}

/// Euclidean radius of one projection, exact: the radius of P_F K is
/// attained at a projected signed generator.
pub fn projection_radius(k: &VertexPolytope, frame: &Frame) -> f64 {
    let n = k.dim();
    let mut out = vec![0.0; frame.dim()];
    let mut best = 0.0f64;
    for g in k.generators().chunks_exact(n) {
        frame.project_into(g, &mut out);
        best = best.max(norm2(&out));
    }
    best
}

/// Per-frame projection radii over Haar frames; the frame of draw i is the
/// one `outer_radius_rk` and `inner_mean_dk` use for the same stream and i.
pub fn projection_radii(
    k: &VertexPolytope,
    kd: usize,
    subspace_draws: usize,
    stream: Stream,
) -> Result<Vec<f64>, FunctionalError> {
    assert!(subspace_draws >= 1);
    let n = k.dim();
    if kd == 0 || kd > n {
        return Err(FunctionalError::InvalidParameter(format!("projection rank {kd} outside 1..={n}")));
    }
    let mut vals = Vec::with_capacity(subspace_draws);
    for f in 0..subspace_draws {
        let mut rng = stream.child(f as u64).child_named("frame").rng();
        let frame = sample_frame(n, kd, &mut rng)?;
        vals.push(projection_radius(k, &frame));
    }
    Ok(vals)
}

/// Mean outer radius over random k-dimensional projections.
pub fn outer_radius_rk(
    k: &VertexPolytope,
    kd: usize,
    subspace_draws: usize,
    stream: Stream,
) -> Result<Estimate, FunctionalError> {
    let vals = projection_radii(k, kd, subspace_draws, stream)?;
    Ok(stats::mean_estimate(&vals, stream.id()))
}

/// Greatest radial value found in a section, with the witnessing direction.
#[derive(Debug, Clone)]
pub struct SectionRadius {
    /// Lower bound on R(K \cap F), increasing in the direction budget.
    pub value: f64,
    /// Ambient unit direction attaining the bound.
    pub best_direction: Vec<f64>,
    pub directions: usize,
}

/// Radius of the section K \cap F, estimated from below by maximizing the
/// radial function over sampled directions of the subspace sphere.
pub fn section_radius(
    k: &VertexPolytope,
    frame: &Frame,
    directions: usize,
    stream: Stream,
) -> Result<SectionRadius, FunctionalError> {
    assert!(directions >= 1);
    let mut rng = stream.rng();
    let mut best = f64::NEG_INFINITY;
    let mut arg = vec![0.0; k.dim()];
    for _ in 0..directions {
        let u = sample_sphere(frame.dim(), &mut rng);
        let dir = frame.embed(u.as_slice());
        let r = k.radial(&dir)?;
        if r > best {
            best = r;
            arg = dir;
        }
    }
    Ok(SectionRadius { value: best, best_direction: arg, directions })
}

/// Mean section radius over Haar k-frames (the inner analogue of
/// `outer_radius_rk`, sharing its frames for equal streams).
pub fn inner_mean_dk(
    k: &VertexPolytope,
    kd: usize,
    subspace_draws: usize,
    directions: usize,
    stream: Stream,
) -> Result<Estimate, FunctionalError> {
    assert!(subspace_draws >= 2);
    let n = k.dim();
    if kd == 0 || kd > n {
        return Err(FunctionalError::InvalidParameter(format!("section rank {kd} outside 1..={n}")));
    }
    let mut vals = Vec::with_capacity(subspace_draws);
    for f in 0..subspace_draws {
        let sub = stream.child(f as u64);
        let mut rng = sub.child_named("frame").rng();
        let frame = sample_frame(n, kd, &mut rng)?;
        vals.push(section_radius(k, &frame, directions, sub.child_named("dirs"))?.value);
    }
    Ok(stats::mean_estimate(&vals, stream.id()))
}

/// Spherical mean of the gauge, M(K). Infinite for bodies that do not span.
pub fn m_value(k: &VertexPolytope, sphere_draws: usize, stream: Stream) -> Result<Estimate, FunctionalError> {
    assert!(sphere_draws >= 2);
    let mut rng = stream.rng();
    let mut vals = Vec::with_capacity(sphere_draws);
    for _ in 0..sphere_draws {
        let u = sample_sphere(k.dim(), &mut rng);
        vals.push(k.gauge(u.as_slice())?);
    }
    if vals.iter().any(|v| v.is_infinite()) {
        return Ok(Estimate {
            value: f64::INFINITY,
            standard_error: f64::INFINITY,
            samples: sphere_draws as u64,
            stream: stream.id(),
        });
    }
    Ok(stats::mean_estimate(&vals, stream.id()))
}

/// Sampled maximum of the gauge on the sphere: a lower bound on
/// b(K) = max_{|u|=1} |u|_K. The exact value is `b_value_exact` on a facet
/// enumeration.
pub fn b_value_sampled(k: &VertexPolytope, sphere_draws: usize, stream: Stream) -> Result<f64, FunctionalError> {
    assert!(sphere_draws >= 1);
    let mut rng = stream.rng();
    let mut best = 0.0f64;
    for _ in 0..sphere_draws {
        let u = sample_sphere(k.dim(), &mut rng);
        best = best.max(k.gauge(u.as_slice())?);
    }
    Ok(best)
}

/// Exact gauge maximum: the gauge peaks on the sphere at 1 over the smallest
/// facet offset.
pub fn b_value_exact(facets: &crate::polytope::FacetSet) -> f64 {
    1.0 / facets.min_offset()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Distribution, DistributionKind};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn cross(n: usize) -> VertexPolytope {
        let mut gens = vec![0.0; n * n];
        for i in 0..n {
            gens[i * n + i] = 1.0;
        }
        VertexPolytope::new(n, gens).unwrap()
    }

    /// Unit-sphere generators: the symmetric hull is a tight inscribed
    /// polytope of the Euclidean ball.
    fn ball_surrogate(n: usize, count: usize, seed: u64) -> VertexPolytope {
        let mut rng = Stream::root(seed).child_named("surrogate").rng();
        let mut gens = vec![0.0; count * n];
        for i in 0..count {
            gens[i * n..(i + 1) * n].copy_from_slice(sample_sphere(n, &mut rng).as_slice());
        }
        VertexPolytope::new(n, gens).unwrap()
    }

    fn scaled(k: &VertexPolytope, s: f64) -> VertexPolytope {
        VertexPolytope::new(k.dim(), k.generators().iter().map(|v| s * v).collect()).unwrap()
    }

    #[test]
    fn planar_cross_polytope_mean_width_matches_quadrature() {
        // h = max(|cos|, |sin|) integrates to 2 sqrt 2 / pi.
        let k = cross(2);
        let w = mean_width(&k, 40_000, Stream::root(50).child_named("w"));
        let exact = 2.0 * 2.0f64.sqrt() / std::f64::consts::PI;
        assert!((w.value - exact).abs() <= 3.0 * w.standard_error, "{} vs {exact}", w.value);
    }

    #[test]
    fn planar_cross_polytope_mean_gauge_matches_quadrature() {
        // gauge = |cos| + |sin| integrates to 4/pi.
        let k = cross(2);
        let m = m_value(&k, 20_000, Stream::root(51).child_named("m")).unwrap();
        let exact = 4.0 / std::f64::consts::PI;
        assert!((m.value - exact).abs() <= 3.0 * m.standard_error, "{} vs {exact}", m.value);
    }

    #[test]
    fn ball_surrogate_widths_are_one() {
        let k = ball_surrogate(2, 2000, 52);
        let w = mean_width(&k, 2000, Stream::root(53).child_named("w"));
        assert!((w.value - 1.0).abs() < 0.02, "w {}", w.value);
        let w2 = p_mean_width(&k, 2.0, 2000, Stream::root(53).child_named("w")).unwrap();
        assert!((w2.value - 1.0).abs() < 0.02, "w2 {}", w2.value);
        let m = m_value(&k, 1000, Stream::root(53).child_named("m")).unwrap();
        assert!((m.value - 1.0).abs() < 0.02, "M {}", m.value);
    }

    #[test]
    fn width_scales_exactly_with_the_body_on_a_shared_stream() {
        let dist = Distribution::new(DistributionKind::Gaussian, 4).unwrap();
        let k = VertexPolytope::from_distribution(&dist, 30, Stream::root(54).child_named("gens")).unwrap();
        let s = Stream::root(55).child_named("w");
        // Doubling is exact in floating point, so the estimates match bit
        // for bit.
        assert_eq!(mean_width(&scaled(&k, 2.0), 500, s).value, 2.0 * mean_width(&k, 500, s).value);
        assert_eq!(radius(&scaled(&k, 2.0)), 2.0 * radius(&k));
    }

    #[test]
    fn p_mean_widths_are_monotone_in_p_on_shared_draws() {
        let dist = Distribution::new(DistributionKind::Cube, 3).unwrap();
        let k = VertexPolytope::from_distribution(&dist, 20, Stream::root(56).child_named("gens")).unwrap();
        let s = Stream::root(57).child_named("wp");
        let w_half = p_mean_width(&k, 0.5, 3000, s).unwrap().value;
        let w_one = p_mean_width(&k, 1.0, 3000, s).unwrap().value;
        let w_two = p_mean_width(&k, 2.0, 3000, s).unwrap().value;
        assert!(w_half <= w_one + 1e-12 && w_one <= w_two + 1e-12);
        assert_eq!(w_one, mean_width(&k, 3000, s).value);
        assert!(p_mean_width(&k, 0.0, 100, s).is_err());
        assert!(p_mean_width(&k, -2.0, 100, s).is_err());
        let w_neg = p_mean_width(&k, -1.5, 3000, s).unwrap().value;
        assert!(w_neg <= w_half + 1e-12);
    }

    #[test]
    fn quermass_of_the_ball_surrogate_is_one_for_every_k() {
        let k = ball_surrogate(4, 2500, 58);
        let profile = quermass_profile(&k, &[1, 2, 3], 30, Stream::root(59).child_named("q")).unwrap();
        for (kd, est) in profile {
            assert!((est.value - 1.0).abs() < 0.03, "k={kd}: {}", est.value);
        }
    }

    #[test]
    fn quermass_one_is_the_mean_width() {
        let dist = Distribution::new(DistributionKind::Gaussian, 5).unwrap();
        let k = VertexPolytope::from_distribution(&dist, 40, Stream::root(60).child_named("gens")).unwrap();
        let q1 = quermass_qk(&k, 1, 4000, Stream::root(61).child_named("q")).unwrap();
        let w = mean_width(&k, 20_000, Stream::root(62).child_named("w"));
        let joint = (q1.standard_error.powi(2) + w.standard_error.powi(2)).sqrt();
        assert!((q1.value - w.value).abs() <= 3.0 * joint, "{} vs {}", q1.value, w.value);
    }

    #[test]
    fn full_rank_quermass_is_the_volume_radius() {
        let dist = Distribution::new(DistributionKind::Gaussian, 3).unwrap();
        let k = VertexPolytope::from_distribution(&dist, 15, Stream::root(63).child_named("gens")).unwrap();
        let qn = quermass_qk(&k, 3, 4, Stream::root(64).child_named("q")).unwrap();
        let exact = (k.volume_exact().unwrap() / geometry::unit_ball_volume(3)).powf(1.0 / 3.0);
        assert_relative_eq!(qn.value, exact, max_relative = 1e-9);
        assert!(qn.standard_error < 1e-9 * exact.abs() + 1e-12);
    }

    #[test]
    fn quermass_profile_is_monotone_decreasing_in_k() {
        let dist = Distribution::new(DistributionKind::Cube, 5).unwrap();
        let k = VertexPolytope::from_distribution(&dist, 50, Stream::root(65).child_named("gens")).unwrap();
        let profile = quermass_profile(&k, &[1, 2, 3, 4], 250, Stream::root(66).child_named("q")).unwrap();
        for pair in profile.windows(2) {
            let (ka, a) = &pair[0];
            let (kb, b) = &pair[1];
            let joint = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
            assert!(a.value >= b.value - 3.0 * joint, "Q_{ka}={} < Q_{kb}={}", a.value, b.value);
        }
    }

    #[test]
    fn projection_volume_radius_closed_cases() {
        let k = cross(3);
        let e1 = Frame::from_rows(3, vec![1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(proj_volume_radius(&k, &e1).unwrap(), 1.0, max_relative = 1e-12);
        let ball = ball_surrogate(4, 2500, 67);
        let mut rng = Stream::root(68).child_named("frame").rng();
        let frame = sample_frame(4, 2, &mut rng).unwrap();
        assert!((proj_volume_radius(&ball, &frame).unwrap() - 1.0).abs() < 0.03);
    }

    #[test]
    fn outer_radii_are_exact_at_full_rank_and_contractive() {
        let dist = Distribution::new(DistributionKind::Gaussian, 6).unwrap();
        let k = VertexPolytope::from_distribution(&dist, 30, Stream::root(69).child_named("gens")).unwrap();
        let r = radius(&k);
        let full = outer_radius_rk(&k, 6, 3, Stream::root(70).child_named("r")).unwrap();
        assert_relative_eq!(full.value, r, max_relative = 1e-9);
        for kd in [1usize, 2, 3] {
            let vals = projection_radii(&k, kd, 50, Stream::root(71).child(kd as u64)).unwrap();
            assert!(vals.iter().all(|&v| v <= r + 1e-9));
        }
        let ball = ball_surrogate(3, 2000, 72);
        let r1 = outer_radius_rk(&ball, 1, 100, Stream::root(73).child_named("r")).unwrap();
        assert!((r1.value - 1.0).abs() < 0.03, "{}", r1.value);
    }

    #[test]
    fn section_radius_closed_cases() {
        let k = cross(2);
        let diag = Frame::from_rows(2, vec![1.0, 1.0]).unwrap();
        let s = section_radius(&k, &diag, 8, Stream::root(74).child_named("s")).unwrap();
        assert_relative_eq!(s.value, 1.0 / 2.0f64.sqrt(), max_relative = 1e-7);

        // Cube [-1,1]^2 as a vertex polytope: the diagonal section reaches
        // the corner at distance sqrt 2.
        let cube = VertexPolytope::new(2, vec![1.0, 1.0, 1.0, -1.0]).unwrap();
        let s = section_radius(&cube, &diag, 8, Stream::root(75).child_named("s")).unwrap();
        assert_relative_eq!(s.value, 2.0f64.sqrt(), max_relative = 1e-7);
        assert_relative_eq!(norm2(&s.best_direction), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn full_frame_section_radius_approaches_the_radius() {
        let dist = Distribution::new(DistributionKind::Gaussian, 3).unwrap();
        let k = VertexPolytope::from_distribution(&dist, 20, Stream::root(76).child_named("gens")).unwrap();
        let full = Frame::from_rows(3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let s = section_radius(&k, &full, 10_000, Stream::root(77).child_named("s")).unwrap();
        let r = radius(&k);
        assert!(s.value <= r + 1e-9 && s.value >= 0.9 * r, "section {} vs radius {r}", s.value);
    }

    #[test]
    fn sections_are_dominated_by_projections_framewise() {
        let dist = Distribution::new(DistributionKind::Cube, 5).unwrap();
        let k = VertexPolytope::from_distribution(&dist, 40, Stream::root(78).child_named("gens")).unwrap();
        let stream = Stream::root(79).child_named("frames");
        for kd in [1usize, 2, 3] {
            let outer = projection_radii(&k, kd, 20, stream).unwrap();
            for (f, &proj_r) in outer.iter().enumerate() {
                let sub = stream.child(f as u64);
                let mut rng = sub.child_named("frame").rng();
                let frame = sample_frame(5, kd, &mut rng).unwrap();
                let sec = section_radius(&k, &frame, 50, sub.child_named("dirs")).unwrap();
                assert!(sec.value <= proj_r + 1e-9, "k={kd} frame {f}: {} > {proj_r}", sec.value);
            }
            let inner = inner_mean_dk(&k, kd, 20, 50, stream).unwrap();
            let outer_mean = stats::mean_estimate(&outer, 0);
            assert!(inner.value <= outer_mean.value + 1e-9);
        }
    }

    #[test]
    fn outer_radius_tracks_the_width_radius_mix() {
        // R~_k should be within a factor band of w + sqrt(k/n) R.
        let dist = Distribution::new(DistributionKind::Gaussian, 8).unwrap();
        for seed in 0..3 {
            let k =
                VertexPolytope::from_distribution(&dist, 64, Stream::root(80).child(seed)).unwrap();
            let w = mean_width(&k, 4000, Stream::root(81).child(seed)).value;
            let r = radius(&k);
            for kd in [1usize, 2, 4, 8] {
                let rk = outer_radius_rk(&k, kd, 64, Stream::root(82).child(seed).child(kd as u64))
                    .unwrap()
                    .value;
                let mix = w + (kd as f64 / 8.0).sqrt() * r;
                let ratio = rk / mix;
                assert!((0.25..=4.0).contains(&ratio), "seed {seed} k={kd}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn gauge_lipschitz_constant_from_facets_and_samples() {
        let k = cross(2);
        let fs = k.facets().unwrap();
        let exact = b_value_exact(&fs);
        assert_relative_eq!(exact, 2.0f64.sqrt(), max_relative = 1e-9);
        let sampled = b_value_sampled(&k, 2000, Stream::root(83).child_named("b")).unwrap();
        assert!(sampled <= exact + 1e-9);
        assert!(sampled >= 0.99 * exact, "sampled {sampled} vs exact {exact}");
    }

    #[test]
    fn degenerate_directions_flow_into_infinite_m() {
        let seg = VertexPolytope::new(3, vec![1.0, 0.0, 0.0]).unwrap();
        let m = m_value(&seg, 50, Stream::root(84).child_named("m")).unwrap();
        assert!(m.value.is_infinite());
    }

    #[test]
    fn reports_serialize_for_the_harness() {
        let rep = FunctionalReport {
            functional: "mean_width".into(),
            k: None,
            p: None,
            q: None,
            estimate: Estimate::exact(1.0),
            sphere_draws: 100,
            subspace_draws: 0,
            directions: 0,
        };
        let js = serde_json::to_string(&rep).unwrap();
        assert!(js.contains("mean_width"));
    }

    #[test]
    fn frames_share_their_prefixes_across_sizes() {
        // The CRN contract: a k-frame drawn from a stream is the prefix of
        // the k'-frame (k' > k) drawn from the same stream.
        let mut rng_a = Stream::root(85).child(0).rng();
        let mut rng_b = Stream::root(85).child(0).rng();
        let small = sample_frame(6, 2, &mut rng_a).unwrap();
        let large = sample_frame(6, 5, &mut rng_b).unwrap();
        for i in 0..2 {
            assert_eq!(small.basis_row(i), large.prefix(2).basis_row(i));
        }
        // Unrelated draw from the generic Rng trait still works after.
        let _: f64 = rng_a.random();
    }
}
