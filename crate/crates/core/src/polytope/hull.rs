//! Incremental convex hulls in small dimension with deterministic
//! tie-breaking.
//!
//! The builder is beneath-beyond with per-facet outside sets: repeatedly pick
//! the farthest unprocessed point of some facet, find the facets it sees,
//! and replace them with the cone over the horizon. Exactly degenerate
//! inputs (cube vertex families, cospherical points) are handled by symbolic
//! perturbation: whenever a point lies within a narrow band of a facet
//! plane, the orientation test is repeated on jittered copies of the points.
//! The jitter is a pure hash of (point id, coordinate), so every predicate
//! sees one consistent generic position. Facet planes, offsets and areas are
//! always computed from the original coordinates, which keeps supporting
//! planes and volumes of degenerate inputs exact; the perturbation only
//! decides how flat faces are triangulated.

use std::collections::HashMap;

use thiserror::Error;

use crate::linalg::{self, axpy, dot, norm2};
use crate::rng::mix64;

/// Largest ambient dimension the dense facet enumeration will attempt.
pub const MAX_HULL_DIM: usize = 8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HullError {
    #[error("hull dimension must be between 2 and {max}, got {n}")]
    BadDimension { n: usize, max: usize },
    #[error("need at least {need} points in dimension {n}, got {got}")]
    TooFewPoints { n: usize, need: usize, got: usize },
    #[error("points span only {rank} of {n} dimensions")]
    RankDeficient { rank: usize, n: usize },
    #[error("hull construction failed: {0}")]
    Internal(String),
}

/// One simplicial facet: `vertices` index into the input point list, the
/// outward unit `normal` satisfies `<normal, v> = offset` on the facet and
/// `<normal, p> <= offset` (up to tie-breaking tolerance) for every input
/// point. `area` is the (n-1)-volume of the vertex simplex.
#[derive(Debug, Clone)]
pub struct HullFacet {
    pub vertices: Vec<u32>,
    pub normal: Vec<f64>,
    pub offset: f64,
    pub area: f64,
}

#[derive(Debug, Clone)]
pub struct Hull {
    pub dim: usize,
    pub facets: Vec<HullFacet>,
    /// Sorted ids of points appearing in at least one facet.
    pub vertices: Vec<u32>,
    /// A point strictly inside the hull (centroid of the starting simplex).
    pub interior: Vec<f64>,
    /// True when at least one orientation query was settled by the symbolic
    /// perturbation, i.e. the input had exact ties.
    pub perturbation_applied: bool,
}

impl Hull {
    /// Volume by coning facets from the interior point.
    pub fn volume(&self) -> f64 {
        let mut parts: Vec<f64> = Vec::with_capacity(self.facets.len());
        for f in &self.facets {
            let h = f.offset - dot(&f.normal, &self.interior);
            parts.push(h * f.area);
        }
        crate::stats::pairwise_sum(&parts) / self.dim as f64
    }

    /// Largest violation of the supporting-plane property over all points,
    /// in absolute units. Useful as a cheap post-condition.
    pub fn max_violation(&self, points: &[f64]) -> f64 {
        let n = self.dim;
        let mut worst = f64::NEG_INFINITY;
        for f in &self.facets {
            for p in points.chunks_exact(n) {
                worst = worst.max(dot(&f.normal, p) - f.offset);
            }
        }
        worst
    }
}

/// Facets of the convex hull of `points` (flat, stride `n`).
pub fn convex_hull(points: &[f64], n: usize) -> Result<Hull, HullError> {
    if !(2..=MAX_HULL_DIM).contains(&n) {
        return Err(HullError::BadDimension { n, max: MAX_HULL_DIM });
    }
    assert_eq!(points.len() % n, 0, "point buffer not a multiple of the dimension");
    let count = points.len() / n;
    if count < n + 1 {
        return Err(HullError::TooFewPoints { n, need: n + 1, got: count });
    }
    debug_assert!(points.iter().all(|v| v.is_finite()));
    let scale = points.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if scale <= 0.0 {
        return Err(HullError::RankDeficient { rank: 0, n });
    }

    let simplex = initial_simplex(points, n, scale)?;
    let mut interior = vec![0.0; n];
    for &s in &simplex {
        axpy(1.0 / (n as f64 + 1.0), &points[s as usize * n..(s as usize + 1) * n], &mut interior);
    }

    let mut b = Builder {
        pts: points,
        n,
        scale,
        band: 1e-7 * scale,
        jitter_amp: 1e-9 * scale,
        interior,
        facets: Vec::new(),
        alive: Vec::new(),
        perturbed: false,
    };
    b.seed(&simplex);
    b.run(count)?;
    Ok(b.finish())
}

/// n+1 affinely independent points: lexicographic minimum as anchor, then
/// greedy farthest-from-current-affine-hull.
fn initial_simplex(pts: &[f64], n: usize, scale: f64) -> Result<Vec<u32>, HullError> {
    let count = pts.len() / n;
    let mut anchor = 0usize;
    for i in 1..count {
        let (a, b) = (&pts[i * n..(i + 1) * n], &pts[anchor * n..(anchor + 1) * n]);
        if a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y) {
            anchor = i;
        }
    }
    let p0 = &pts[anchor * n..(anchor + 1) * n];
    let mut chosen = vec![anchor as u32];
    let mut basis: Vec<f64> = Vec::new();
    let threshold = 1e-9 * scale * (n as f64).sqrt();
    let mut r = vec![0.0; n];
    while chosen.len() < n + 1 {
        let mut best = (threshold, usize::MAX);
        for i in 0..count {
            for k in 0..n {
                r[k] = pts[i * n + k] - p0[k];
            }
            for b in basis.chunks_exact(n) {
                let d = dot(&r, b);
                axpy(-d, b, &mut r);
            }
            let res = norm2(&r);
            if res > best.0 {
                best = (res, i);
            }
        }
        if best.1 == usize::MAX {
            return Err(HullError::RankDeficient { rank: chosen.len() - 1, n });
        }
        for k in 0..n {
            r[k] = pts[best.1 * n + k] - p0[k];
        }
        for _ in 0..2 {
            for b in basis.chunks_exact(n) {
                let d = dot(&r, b);
                axpy(-d, b, &mut r);
            }
        }
        let nm = norm2(&r);
        for v in r.iter_mut() {
            *v /= nm;
        }
        basis.extend_from_slice(&r);
        chosen.push(best.1 as u32);
    }
    Ok(chosen)
}

struct BFacet {
    /// Sorted point ids, length n.
    verts: Vec<u32>,
    normal: Vec<f64>,
    offset: f64,
    /// Neighbor facet across the ridge omitting verts[i].
    nb: Vec<u32>,
    /// Unprocessed points assigned here (each input point lives in at most
    /// one outside set).
    outside: Vec<u32>,
    far_dist: f64,
    far_id: u32,
    /// Sign of the jittered orientation determinant for points strictly
    /// outside; 0 until first needed.
    above_sign: i8,
    /// Vertices affinely dependent in the original coordinates (zero area).
    degenerate: bool,
}

struct Builder<'a> {
    pts: &'a [f64],
    n: usize,
    scale: f64,
    /// Geometric distances within this band of a facet plane go to the
    /// symbolic perturbation.
    band: f64,
    jitter_amp: f64,
    interior: Vec<f64>,
    facets: Vec<BFacet>,
    alive: Vec<bool>,
    perturbed: bool,
}

const JITTER_SALT: u64 = 0xD1FF_5EED_0F_u64;

impl<'a> Builder<'a> {
    fn point(&self, id: u32) -> &[f64] {
        &self.pts[id as usize * self.n..(id as usize + 1) * self.n]
    }

    fn jittered(&self, id: u32, k: usize) -> f64 {
        let h = mix64(((id as u64) << 8 | k as u64) ^ JITTER_SALT);
        let frac = (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        self.pts[id as usize * self.n + k] + frac * self.jitter_amp
    }

    /// Orientation determinant of the jittered facet vertices against an
    /// arbitrary query position.
    fn sos_det(&self, verts: &[u32], q: &[f64]) -> f64 {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        let v0: Vec<f64> = (0..n).map(|k| self.jittered(verts[0], k)).collect();
        for (row, &v) in verts[1..].iter().enumerate() {
            for k in 0..n {
                m[row * n + k] = self.jittered(v, k) - v0[k];
            }
        }
        for k in 0..n {
            m[(n - 1) * n + k] = q[k] - v0[k];
        }
        linalg::det_in_place(&mut m, n)
    }

    fn above_sign(&mut self, f: usize) -> i8 {
        if self.facets[f].above_sign == 0 {
            let verts = self.facets[f].verts.clone();
            let s = sign(self.sos_det(&verts, &self.interior));
            debug_assert!(s != 0, "interior point on a facet plane");
            self.facets[f].above_sign = -s;
        }
        self.facets[f].above_sign
    }

    fn is_above(&mut self, f: usize, pid: u32) -> bool {
        let d = {
            let fac = &self.facets[f];
            dot(&fac.normal, self.point(pid)) - fac.offset
        };
        if d > self.band {
            return true;
        }
        if d < -self.band {
            return false;
        }
        self.perturbed = true;
        let verts = self.facets[f].verts.clone();
        let q: Vec<f64> = (0..self.n).map(|k| self.jittered(pid, k)).collect();
        let s = sign(self.sos_det(&verts, &q));
        s != 0 && s == self.above_sign(f)
    }

    /// Plane through the facet vertices. Degenerate vertex sets (affinely
    /// dependent in the original coordinates, possible only when the tie
    /// breaking promoted a point inside the affine hull of a ridge) fall
    /// back to the jittered coordinates for the direction, keeping the
    /// offset supported on the original points. Such facets have zero area
    /// and exist only for the builder's adjacency bookkeeping; they are
    /// dropped from the output.
    fn facet_plane(&mut self, verts: &[u32]) -> Result<(Vec<f64>, f64, bool), HullError> {
        if let Some(normal) = self.plane_direction(verts, false) {
            let mut acc = 0.0;
            for &v in verts {
                acc += dot(&normal, self.point(v));
            }
            return Ok((normal, acc / verts.len() as f64, false));
        }
        self.perturbed = true;
        let normal = self.plane_direction(verts, true).ok_or_else(|| {
            HullError::Internal("facet vertices dependent even after perturbation".into())
        })?;
        let offset = verts.iter().map(|&v| dot(&normal, self.point(v))).fold(f64::NEG_INFINITY, f64::max);
        Ok((normal, offset, true))
    }

    fn plane_direction(&self, verts: &[u32], jittered: bool) -> Option<Vec<f64>> {
        let n = self.n;
        let coord =
            |id: u32, k: usize| if jittered { self.jittered(id, k) } else { self.pts[id as usize * n + k] };
        let tol = if jittered { 0.0 } else { 1e-7 * self.scale };
        let v0: Vec<f64> = (0..n).map(|k| coord(verts[0], k)).collect();
        let mut basis: Vec<f64> = Vec::with_capacity((n - 1) * n);
        for &v in &verts[1..] {
            let mut r: Vec<f64> = (0..n).map(|k| coord(v, k) - v0[k]).collect();
            for _ in 0..2 {
                for b in basis.chunks_exact(n) {
                    let d = dot(&r, b);
                    axpy(-d, b, &mut r);
                }
            }
            let nm = norm2(&r);
            if nm <= tol {
                return None;
            }
            for x in r.iter_mut() {
                *x /= nm;
            }
            basis.extend_from_slice(&r);
        }
        // The normal is the largest residual of a coordinate axis against
        // the edge span.
        let mut best: Option<Vec<f64>> = None;
        let mut best_norm = tol;
        for k in 0..n {
            let mut r = vec![0.0; n];
            r[k] = 1.0;
            for _ in 0..2 {
                for b in basis.chunks_exact(n) {
                    let d = dot(&r, b);
                    axpy(-d, b, &mut r);
                }
            }
            let nm = norm2(&r);
            if nm > best_norm {
                best_norm = nm;
                best = Some(r);
            }
        }
        let mut normal = best?;
        for x in normal.iter_mut() {
            *x /= best_norm;
        }
        Some(normal)
    }

    fn make_facet(&mut self, mut verts: Vec<u32>) -> Result<BFacet, HullError> {
        verts.sort_unstable();
        let (mut normal, mut offset, degenerate) = self.facet_plane(&verts)?;
        let d_int = dot(&normal, &self.interior) - offset;
        if d_int > 0.0 {
            for x in normal.iter_mut() {
                *x = -*x;
            }
            offset = -offset;
        }
        Ok(BFacet {
            nb: vec![u32::MAX; verts.len()],
            verts,
            normal,
            offset,
            outside: Vec::new(),
            far_dist: f64::NEG_INFINITY,
            far_id: u32::MAX,
            above_sign: 0,
            degenerate,
        })
    }

    fn push_outside(&mut self, f: usize, pid: u32) {
        let d = {
            let fac = &self.facets[f];
            dot(&fac.normal, self.point(pid)) - fac.offset
        };
        let fac = &mut self.facets[f];
        fac.outside.push(pid);
        if d > fac.far_dist {
            fac.far_dist = d;
            fac.far_id = pid;
        }
    }

    fn seed(&mut self, simplex: &[u32]) {
        let n = self.n;
        for i in 0..=n {
            let verts: Vec<u32> = simplex
                .iter()
                .enumerate()
                .filter_map(|(j, &s)| (j != i).then_some(s))
                .collect();
            let mut fac = self.make_facet(verts).expect("starting simplex is full-dimensional");
            for pos in 0..n {
                let omitted = fac.verts[pos];
                let j = simplex.iter().position(|&s| s == omitted).expect("simplex vertex");
                fac.nb[pos] = j as u32;
            }
            self.facets.push(fac);
            self.alive.push(true);
        }
        let count = self.pts.len() / n;
        for pid in 0..count as u32 {
            if simplex.contains(&pid) {
                continue;
            }
            for f in 0..=n {
                if self.is_above(f, pid) {
                    self.push_outside(f, pid);
                    break;
                }
            }
        }
    }

    fn run(&mut self, count: usize) -> Result<(), HullError> {
        let mut pending: Vec<u32> =
            (0..self.facets.len()).filter(|&f| !self.facets[f].outside.is_empty()).map(|f| f as u32).collect();
        let mut rounds = 0usize;
        while let Some(fi) = pending.pop() {
            let f = fi as usize;
            if !self.alive[f] || self.facets[f].outside.is_empty() {
                continue;
            }
            rounds += 1;
            if rounds > 4 * count + 64 {
                return Err(HullError::Internal("round budget exceeded".into()));
            }
            let apex = self.facets[f].far_id;

            // Facets visible from the apex form a connected patch around f.
            let mut visible = vec![f];
            let mut visible_set: HashMap<usize, ()> = HashMap::new();
            visible_set.insert(f, ());
            let mut seen: HashMap<usize, ()> = HashMap::new();
            seen.insert(f, ());
            let mut stack = vec![f];
            while let Some(g) = stack.pop() {
                let nbs = self.facets[g].nb.clone();
                for nb in nbs {
                    let nb = nb as usize;
                    if seen.insert(nb, ()).is_none() && self.is_above(nb, apex) {
                        visible_set.insert(nb, ());
                        visible.push(nb);
                        stack.push(nb);
                    }
                }
            }

            // Horizon: ridges between a visible facet and a hidden one.
            let mut horizon: Vec<(Vec<u32>, usize)> = Vec::new();
            for &g in &visible {
                for pos in 0..self.n {
                    let nb = self.facets[g].nb[pos] as usize;
                    if !visible_set.contains_key(&nb) {
                        let mut ridge = self.facets[g].verts.clone();
                        ridge.remove(pos);
                        horizon.push((ridge, nb));
                    }
                }
            }
            if horizon.is_empty() {
                return Err(HullError::Internal("empty horizon".into()));
            }

            // Cone from the apex over the horizon.
            let base = self.facets.len();
            let mut ridge_map: HashMap<Vec<u32>, (usize, usize)> = HashMap::new();
            for (ridge, hidden) in &horizon {
                let mut verts = ridge.clone();
                verts.push(apex);
                let fi = self.facets.len();
                let mut fac = self.make_facet(verts)?;
                let apex_pos = fac.verts.iter().position(|&v| v == apex).expect("apex vertex");
                fac.nb[apex_pos] = *hidden as u32;
                // Point the hidden neighbor back at the new facet.
                let hidden_pos = self.facets[*hidden]
                    .verts
                    .iter()
                    .position(|v| ridge.binary_search(v).is_err())
                    .expect("horizon ridge in hidden facet");
                self.facets[*hidden].nb[hidden_pos] = fi as u32;
                // Pair new facets along their shared sub-ridges.
                for pos in 0..self.n {
                    if fac.verts[pos] == apex {
                        continue;
                    }
                    let mut key = fac.verts.clone();
                    key.remove(pos);
                    match ridge_map.remove(&key) {
                        Some((fj, pj)) => {
                            fac.nb[pos] = fj as u32;
                            self.facets[fj].nb[pj] = fi as u32;
                        }
                        None => {
                            ridge_map.insert(key, (fi, pos));
                        }
                    }
                }
                self.facets.push(fac);
                self.alive.push(true);
            }
            if !ridge_map.is_empty() {
                return Err(HullError::Internal("horizon did not close up".into()));
            }

            // Re-home the outside points of the deleted facets.
            for &g in &visible {
                let outs = std::mem::take(&mut self.facets[g].outside);
                for pid in outs {
                    if pid == apex {
                        continue;
                    }
                    for fi in base..self.facets.len() {
                        if self.is_above(fi, pid) {
                            self.push_outside(fi, pid);
                            break;
                        }
                    }
                }
            }
            for &g in &visible {
                self.alive[g] = false;
            }
            for fi in base..self.facets.len() {
                if !self.facets[fi].outside.is_empty() {
                    pending.push(fi as u32);
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> Hull {
        let n = self.n;
        let mut facets = Vec::new();
        let mut vertex_ids: Vec<u32> = Vec::new();
        for (f, fac) in self.facets.into_iter().enumerate() {
            if !self.alive[f] || fac.degenerate {
                continue;
            }
            debug_assert!(fac.outside.is_empty());
            let area = simplex_area(self.pts, n, &fac.verts);
            vertex_ids.extend_from_slice(&fac.verts);
            facets.push(HullFacet { vertices: fac.verts, normal: fac.normal, offset: fac.offset, area });
        }
        vertex_ids.sort_unstable();
        vertex_ids.dedup();
        Hull {
            dim: n,
            facets,
            vertices: vertex_ids,
            interior: self.interior,
            perturbation_applied: self.perturbed,
        }
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// (n-1)-volume of the simplex on the given vertices, from the Gram
/// determinant of its edges.
fn simplex_area(pts: &[f64], n: usize, verts: &[u32]) -> f64 {
    let k = verts.len() - 1;
    let v0 = &pts[verts[0] as usize * n..(verts[0] as usize + 1) * n];
    let mut edges = vec![0.0; k * n];
    for (row, &v) in verts[1..].iter().enumerate() {
        for c in 0..n {
            edges[row * n + c] = pts[v as usize * n + c] - v0[c];
        }
    }
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let g = dot(&edges[i * n..(i + 1) * n], &edges[j * n..(j + 1) * n]);
            gram[i * k + j] = g;
            gram[j * k + i] = g;
        }
    }
    let det = linalg::det_in_place(&mut gram, k).max(0.0);
    det.sqrt() / factorial(k)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
