//! Symmetric vertex polytopes K = conv{ +-x_1, ..., +-x_N }.
//!
//! Generators are stored as a flat N x n buffer; the body is always the
//! convex hull of the signed pairs. Support evaluations are direct maxima,
//! gauge and radial functions solve a small linear program over convex
//! combinations of the signed generators, and facet structure comes from the
//! dense hull builder (ambient dimension up to 8).

pub mod hull;
mod io;

pub use io::{read_point_cloud, write_point_cloud};

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::linalg::{dot, norm2};
use crate::lp::{self, LpSolution, SimplexOptions, StandardLp};
use crate::measures::Distribution;
use crate::rng::Stream;
use crate::stats::Estimate;

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("facet enumeration supports dimension up to {max}, got {n}")]
    FacetCapExceeded { n: usize, max: usize },
    #[error(transparent)]
    Hull(#[from] hull::HullError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error("rejection sampler saw 0 hits in {pilot} pilot draws; enlarge the budget or reduce the dimension")]
    LowAcceptance { pilot: usize },
    #[error("point cloud io: {0}")]
    Io(#[from] std::io::Error),
}

/// One simplicial facet of the symmetric hull. `vertices` are signed
/// generator references: +(j+1) stands for +x_j, -(j+1) for -x_j.
#[derive(Debug, Clone)]
pub struct FacetSimplex {
    pub vertices: Vec<i32>,
    pub normal: Vec<f64>,
    pub offset: f64,
    pub area: f64,
}

#[derive(Debug, Clone)]
pub struct FacetSet {
    pub n: usize,
    pub facets: Vec<FacetSimplex>,
    pub perturbation_applied: bool,
}

impl FacetSet {
    /// Volume by coning every facet from the origin (the body is symmetric,
    /// so the origin is interior whenever the body is full-dimensional).
    pub fn volume(&self) -> f64 {
        let parts: Vec<f64> = self.facets.iter().map(|f| f.offset * f.area).collect();
        crate::stats::pairwise_sum(&parts) / self.n as f64
    }

    /// Smallest facet offset; the gauge of the body is 1/this on the sphere.
    pub fn min_offset(&self) -> f64 {
        self.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min)
    }

    /// Radial function from the facet planes: distance to the boundary along
    /// `theta`, +inf when no plane cuts the ray.
    pub fn radial(&self, theta: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for f in &self.facets {
            let d = dot(&f.normal, theta);
            if d > 1e-12 {
                best = best.min(f.offset / d);
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
pub struct VertexPolytope {
    n: usize,
    gens: Vec<f64>,
}

impl VertexPolytope {
    /// `gens` is N x n flat. Finiteness is checked; rank is not (a polytope
    /// flat in some directions simply has infinite gauge there).
    pub fn new(n: usize, gens: Vec<f64>) -> Result<Self, PolytopeError> {
        if n < 2 {
            return Err(PolytopeError::InvalidInput(format!("dimension must be at least 2, got {n}")));
        }
        if gens.is_empty() || gens.len() % n != 0 {
            return Err(PolytopeError::InvalidInput(format!(
                "generator buffer length {} is not a positive multiple of n={n}",
                gens.len()
            )));
        }
        if !gens.iter().all(|v| v.is_finite()) {
            return Err(PolytopeError::InvalidInput("generators must be finite".into()));
        }
        Ok(VertexPolytope { n, gens })
    }

    pub fn from_distribution(dist: &Distribution, count: usize, stream: Stream) -> Result<Self, PolytopeError> {
        let mut rng = stream.rng();
        Self::new(dist.dim(), dist.sample(count, &mut rng))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn generator_count(&self) -> usize {
        self.gens.len() / self.n
    }

    pub fn generators(&self) -> &[f64] {
        &self.gens
    }

    pub fn generator(&self, j: usize) -> &[f64] {
        &self.gens[j * self.n..(j + 1) * self.n]
    }

    /// The generator referenced by a signed facet vertex id.
    pub fn signed_vertex(&self, id: i32) -> Vec<f64> {
        assert!(id != 0, "signed vertex ids are 1-based");
        let j = (id.unsigned_abs() as usize) - 1;
        let s = if id > 0 { 1.0 } else { -1.0 };
        self.generator(j).iter().map(|v| s * v).collect()
    }

    /// Support function h(y) = max_j |<x_j, y>|.
    pub fn support(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.n);
        let mut best = 0.0f64;
        for g in self.gens.chunks_exact(self.n) {
            best = best.max(dot(g, y).abs());
        }
        best
    }

    /// Minkowski gauge |y|_K = inf { t > 0 : y in tK }, by maximizing the
    /// step t with t y/|y| a convex combination of the signed generators.
    /// Directions outside the span of the generators return +inf.
    pub fn gauge(&self, y: &[f64]) -> Result<f64, PolytopeError> {
        assert_eq!(y.len(), self.n);
        let ynorm = norm2(y);
        if ynorm <= 0.0 {
            return Ok(0.0);
        }
        let gen_scale = self.gens.chunks_exact(self.n).map(norm2).fold(0.0f64, f64::max);
        if gen_scale <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let count = self.generator_count();
        let rows = self.n + 1;
        // Columns: a pair (+g_j, -g_j) per generator, zero-padding when the
        // program would otherwise be overdetermined (the origin is in the
        // body, so zero columns do not change it), then the step variable.
        let pairs = count.max(self.n / 2 + 1);
        let cols = 2 * pairs + 1;
        let mut a = vec![0.0; rows * cols];
        for j in 0..count {
            let g = self.generator(j);
            for i in 0..self.n {
                a[i * cols + 2 * j] = g[i] / gen_scale;
                a[i * cols + 2 * j + 1] = -g[i] / gen_scale;
            }
        }
        for i in 0..self.n {
            a[i * cols + (cols - 1)] = -y[i] / ynorm;
        }
        for j in 0..2 * pairs {
            a[self.n * cols + j] = 1.0;
        }
        let mut b = vec![0.0; rows];
        b[self.n] = 1.0;
        let mut c = vec![0.0; cols];
        c[cols - 1] = 1.0;
        let lp = StandardLp::new(rows, cols, a, b, c)?;
        match lp::solve(&lp, &SimplexOptions::default())? {
            LpSolution::Optimal { objective, .. } => {
                if objective <= 1e-7 {
                    Ok(f64::INFINITY)
                } else {
                    Ok(ynorm / (gen_scale * objective))
                }
            }
            other => Err(PolytopeError::InvalidInput(format!("gauge program returned {other:?}"))),
        }
    }

    /// Radial function r(theta) = sup { t : t theta/|theta| in K }.
    pub fn radial(&self, theta: &[f64]) -> Result<f64, PolytopeError> {
        let tnorm = norm2(theta);
        assert!(tnorm > 0.0, "radial direction must be nonzero");
        let g = self.gauge(theta)?;
        Ok(tnorm / g)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool, PolytopeError> {
        Ok(self.gauge(x)? <= 1.0 + tol)
    }

    /// Deduplicated signed point set and the signed generator reference of
    /// each point.
    fn signed_points(&self) -> (Vec<f64>, Vec<i32>) {
        let n = self.n;
        let count = self.generator_count();
        let mut seen: HashMap<Vec<u64>, ()> = HashMap::with_capacity(2 * count);
        let mut pts = Vec::with_capacity(2 * count * n);
        let mut refs = Vec::with_capacity(2 * count);
        let mut scratch = vec![0.0; n];
        for j in 0..count {
            for sgn in [1.0f64, -1.0] {
                let g = self.generator(j);
                for k in 0..n {
                    // The +0.0 folds -0.0 and +0.0 into one key.
                    scratch[k] = g[k] * sgn + 0.0;
                }
                let key: Vec<u64> = scratch.iter().map(|v| v.to_bits()).collect();
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(key) {
                    e.insert(());
                    pts.extend_from_slice(&scratch);
                    refs.push(if sgn > 0.0 { (j + 1) as i32 } else { -((j + 1) as i32) });
                }
            }
        }
        (pts, refs)
    }

    /// Full facet enumeration (dimension capped at 8).
    pub fn facets(&self) -> Result<FacetSet, PolytopeError> {
        if self.n > hull::MAX_HULL_DIM {
            return Err(PolytopeError::FacetCapExceeded { n: self.n, max: hull::MAX_HULL_DIM });
        }
        let (pts, refs) = self.signed_points();
        let h = hull::convex_hull(&pts, self.n)?;
        let facets = h
            .facets
            .into_iter()
            .map(|f| FacetSimplex {
                vertices: f.vertices.iter().map(|&v| refs[v as usize]).collect(),
                normal: f.normal,
                offset: f.offset,
                area: f.area,
            })
            .collect();
        Ok(FacetSet { n: self.n, facets, perturbation_applied: h.perturbation_applied })
    }

    /// Exact volume from the facet enumeration.
    pub fn volume_exact(&self) -> Result<f64, PolytopeError> {
        Ok(self.facets()?.volume())
    }

    /// Rejection estimate of the volume: uniform draws from the coordinate
    /// bounding box filtered through the gauge program. Works in any
    /// dimension but degrades exponentially; a zero-hit pilot aborts.
    pub fn volume_mc(&self, samples: usize, stream: Stream) -> Result<Estimate, PolytopeError> {
        assert!(samples > 0);
        let n = self.n;
        let mut half = vec![0.0f64; n];
        for g in self.gens.chunks_exact(n) {
            for k in 0..n {
                half[k] = half[k].max(g[k].abs());
            }
        }
        if half.iter().any(|&w| w <= 0.0) {
            return Ok(Estimate { value: 0.0, standard_error: 0.0, samples: 0, stream: stream.id() });
        }
        let box_volume: f64 = half.iter().map(|w| 2.0 * w).product();
        let pilot = samples.min(400);
        let mut rng = stream.rng();
        let mut x = vec![0.0; n];
        let mut hits = 0u64;
        for s in 0..samples {
            for k in 0..n {
                x[k] = (2.0 * rng.random::<f64>() - 1.0) * half[k];
            }
            if self.contains(&x, 1e-9)? {
                hits += 1;
            }
            if s + 1 == pilot && hits == 0 && samples > pilot {
                return Err(PolytopeError::LowAcceptance { pilot });
            }
        }
        if hits == 0 {
            return Err(PolytopeError::LowAcceptance { pilot: samples });
        }
        let p = hits as f64 / samples as f64;
        Ok(Estimate {
            value: box_volume * p,
            standard_error: box_volume * (p * (1.0 - p) / samples as f64).sqrt(),
            samples: samples as u64,
            stream: stream.id(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_sphere;
    use crate::measures::DistributionKind;
    use approx::assert_relative_eq;

    fn cross_polytope(n: usize) -> VertexPolytope {
        let mut gens = vec![0.0; n * n];
        for k in 0..n {
            gens[k * n + k] = 1.0;
        }
        VertexPolytope::new(n, gens).unwrap()
    }

    #[test]
    fn cross_polytope_gauge_is_the_l1_norm() {
        let p = cross_polytope(4);
        let mut rng = Stream::root(41).child_named("l1").rng();
        for _ in 0..25 {
            let y = sample_sphere(4, &mut rng);
            let l1: f64 = y.as_slice().iter().map(|v| v.abs()).sum();
            assert_relative_eq!(p.gauge(y.as_slice()).unwrap(), l1, max_relative = 1e-8);
            assert_relative_eq!(p.radial(y.as_slice()).unwrap(), 1.0 / l1, max_relative = 1e-8);
            let linf = y.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert_relative_eq!(p.support(y.as_slice()), linf, max_relative = 1e-12);
        }
    }

    #[test]
    fn gauge_is_positively_homogeneous() {
        let p = cross_polytope(3);
        let y = [0.3, -0.7, 0.2];
        let y2: Vec<f64> = y.iter().map(|v| 2.5 * v).collect();
        assert_relative_eq!(p.gauge(&y2).unwrap(), 2.5 * p.gauge(&y).unwrap(), max_relative = 1e-9);
        assert_eq!(p.gauge(&[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn directions_outside_the_span_have_infinite_gauge() {
        let p = VertexPolytope::new(3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(p.gauge(&[0.0, 0.0, 1.0]).unwrap().is_infinite());
        assert_eq!(p.radial(&[0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(p.gauge(&[0.5, 0.5, 0.0]).unwrap().is_finite());
        // A single generator pair: the segment [-x, x].
        let seg = VertexPolytope::new(4, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(seg.gauge(&[0.5, 0.5, 0.0, 0.0]).unwrap(), 0.5, max_relative = 1e-8);
        assert!(seg.gauge(&[1.0, 0.0, 0.0, 0.0]).unwrap().is_infinite());
    }

    #[test]
    fn membership_agrees_with_the_gauge() {
        let p = cross_polytope(3);
        assert!(p.contains(&[0.2, 0.3, -0.4], 1e-9).unwrap());
        assert!(!p.contains(&[0.5, 0.4, -0.4], 1e-9).unwrap());
        assert!(p.contains(&[1.0, 0.0, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn cube_vertex_generators_have_exact_volume() {
        // Generators: one representative per sign pair of the cube vertices,
        // so the symmetric hull is the full cube [-1,1]^n.
        for n in [2usize, 3, 4] {
            let count = 1 << (n - 1);
            let mut gens = vec![0.0; count * n];
            for i in 0..count {
                gens[i * n] = 1.0;
                for k in 1..n {
                    gens[i * n + k] = if i >> (k - 1) & 1 == 1 { 1.0 } else { -1.0 };
                }
            }
            let p = VertexPolytope::new(n, gens).unwrap();
            let vol = p.volume_exact().unwrap();
            assert!((vol - 2.0f64.powi(n as i32)).abs() < 1e-9, "n={n}: vol {vol}");
            let fs = p.facets().unwrap();
            assert!(fs.perturbation_applied || n == 2);
            assert_relative_eq!(fs.min_offset(), 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn facet_radial_oracle_matches_the_gauge_program() {
        let dist = Distribution::new(DistributionKind::Gaussian, 3).unwrap();
        let p = VertexPolytope::from_distribution(&dist, 15, Stream::root(42).child_named("gens")).unwrap();
        let fs = p.facets().unwrap();
        let mut rng = Stream::root(43).child_named("dirs").rng();
        for _ in 0..50 {
            let theta = sample_sphere(3, &mut rng);
            let via_lp = p.radial(theta.as_slice()).unwrap();
            let via_facets = fs.radial(theta.as_slice());
            assert_relative_eq!(via_lp, via_facets, max_relative = 1e-7);
        }
    }

    #[test]
    fn facet_planes_support_all_signed_generators() {
        let dist = Distribution::new(DistributionKind::Gaussian, 4).unwrap();
        let p = VertexPolytope::from_distribution(&dist, 20, Stream::root(44).child_named("gens")).unwrap();
        let fs = p.facets().unwrap();
        let scale = p.generators().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        for f in &fs.facets {
            for j in 0..p.generator_count() {
                let g = p.generator(j);
                assert!(dot(&f.normal, g).abs() <= f.offset + 1e-9 * scale);
            }
            // Signed vertex references point back at points on the plane.
            for &id in &f.vertices {
                let v = p.signed_vertex(id);
                assert!((dot(&f.normal, &v) - f.offset).abs() <= 1e-7 * scale);
            }
        }
    }

    #[test]
    fn planar_polytope_on_circle_generators_has_all_edges() {
        let count = 8;
        let mut gens = vec![0.0; count * 2];
        for j in 0..count {
            // Half circle, so the signed pairs tile the full circle.
            let a = std::f64::consts::PI * (j as f64 + 0.5) / count as f64;
            gens[j * 2] = a.cos();
            gens[j * 2 + 1] = a.sin();
        }
        let p = VertexPolytope::new(2, gens).unwrap();
        let fs = p.facets().unwrap();
        assert_eq!(fs.facets.len(), 2 * count);
        let expect = 2.0 * count as f64 * (std::f64::consts::PI / (2.0 * count as f64)).sin()
            * (std::f64::consts::PI / (2.0 * count as f64)).cos();
        assert_relative_eq!(fs.volume(), expect, max_relative = 1e-9);
    }

    #[test]
    fn monte_carlo_volume_agrees_with_the_exact_one() {
        let dist = Distribution::new(DistributionKind::Gaussian, 3).unwrap();
        for seed in 0..5 {
            let p = VertexPolytope::from_distribution(&dist, 12, Stream::root(45).child(seed)).unwrap();
            let exact = p.volume_exact().unwrap();
            let mc = p.volume_mc(20_000, Stream::root(46).child(seed)).unwrap();
            assert!(
                (mc.value - exact).abs() <= 3.0 * mc.standard_error,
                "seed {seed}: exact {exact}, mc {} (se {})",
                mc.value,
                mc.standard_error
            );
        }
    }

    #[test]
    fn hopeless_rejection_sampling_reports_low_acceptance() {
        // Box-to-body volume ratio 1/10! makes pilot hits essentially
        // impossible.
        let p = cross_polytope(10);
        let r = p.volume_mc(2000, Stream::root(47).child_named("mc"));
        assert!(matches!(r, Err(PolytopeError::LowAcceptance { pilot: 400 })), "{r:?}");
    }

    #[test]
    fn degenerate_bodies_have_zero_volume_estimate() {
        let p = VertexPolytope::new(3, vec![1.0, 1.0, 0.0, -0.5, 1.0, 0.0]).unwrap();
        let v = p.volume_mc(100, Stream::root(48).child_named("flat")).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(matches!(p.volume_exact(), Err(PolytopeError::Hull(hull::HullError::RankDeficient { .. }))));
    }

    #[test]
    fn input_validation_rejects_bad_buffers() {
        assert!(VertexPolytope::new(1, vec![1.0]).is_err());
        assert!(VertexPolytope::new(3, vec![1.0, 2.0]).is_err());
        assert!(VertexPolytope::new(2, vec![f64::NAN, 0.0]).is_err());
        assert!(VertexPolytope::new(2, vec![]).is_err());
        let p = VertexPolytope::new(9, vec![1.0; 18]).unwrap();
        assert!(matches!(p.facets(), Err(PolytopeError::FacetCapExceeded { n: 9, max: 8 })));
    }
}
