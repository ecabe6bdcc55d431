//! Spheres, subspaces and reference volumes.
//!
//! Uniform directions come from normalized gaussians; k-dimensional
//! subspaces are Haar-distributed frames obtained by Gram-Schmidt on gaussian
//! columns (with one re-orthogonalization pass, which is enough at double
//! precision). Frames are stored row-major `k x n`, one orthonormal basis
//! vector per row, so prefixes of a frame are themselves frames; that prefix
//! property is what couples quermass estimates across k.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("could not build a rank-{k} frame in dimension {n}")]
    RankDeficient { n: usize, k: usize },
}

/// A direction on the unit sphere (norm within 1e-12 of one).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn new(mut v: Vec<f64>) -> Result<Self, GeometryError> {
        let norm = linalg::norm2(&v);
        if !(norm.is_finite() && norm > 1e-12) {
            return Err(GeometryError::ZeroVector);
        }
        for x in &mut v {
            *x /= norm;
        }
        Ok(UnitVector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Uniform direction on S^{n-1}: gaussian draw, resampled in the (measure
/// zero, but finite-precision) event of a vanishing norm.
pub fn sample_sphere(n: usize, rng: &mut impl Rng) -> UnitVector {
    assert!(n >= 1, "sphere needs dimension >= 1");
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if let Ok(u) = UnitVector::new(v) {
            return u;
        }
    }
}

/// An orthonormal k-frame spanning a subspace of R^n. Rows are the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    n: usize,
    k: usize,
    rows: Vec<f64>,
}

impl Frame {
    /// Identity embedding of the first k coordinates.
    pub fn coordinate(n: usize, k: usize) -> Frame {
        assert!(k <= n && k >= 1);
        let mut rows = vec![0.0; k * n];
        for i in 0..k {
            rows[i * n + i] = 1.0;
        }
        Frame { n, k, rows }
    }

    /// Frame spanned by the given k row vectors (flat, stride n), made
    /// orthonormal by Gram-Schmidt in row order.
    pub fn from_rows(n: usize, rows: Vec<f64>) -> Result<Frame, GeometryError> {
        if rows.is_empty() || rows.len() % n != 0 || rows.len() > n * n {
            return Err(GeometryError::DimensionMismatch { expected: n, got: rows.len() });
        }
        let k = rows.len() / n;
        Frame::orthonormalize(n, k, rows).ok_or(GeometryError::RankDeficient { n, k })
    }

    /// Orthonormalize `cols` (given flat, k vectors of length n) by modified
    /// Gram-Schmidt with a second pass. Returns None when the input is
    /// numerically rank deficient.
    fn orthonormalize(n: usize, k: usize, mut rows: Vec<f64>) -> Option<Frame> {
        for i in 0..k {
            for _pass in 0..2 {
                for j in 0..i {
                    let (head, tail) = rows.split_at_mut(i * n);
                    let prev = &head[j * n..j * n + n];
                    let cur = &mut tail[..n];
                    let c = linalg::dot(prev, cur);
                    linalg::axpy(-c, prev, cur);
                }
            }
            let cur = &mut rows[i * n..(i + 1) * n];
            let norm = linalg::norm2(cur);
            if norm < 1e-8 {
                return None;
            }
            for x in cur {
                *x /= norm;
            }
        }
        Some(Frame { n, k, rows })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn basis_row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    /// The sub-frame spanned by the first `k` rows.
    pub fn prefix(&self, k: usize) -> Frame {
        assert!(k >= 1 && k <= self.k);
        Frame { n: self.n, k, rows: self.rows[..k * self.n].to_vec() }
    }

    /// Coordinates of `x` in the frame basis (the orthogonal projection).
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.k);
        for i in 0..self.k {
            out[i] = linalg::dot(self.basis_row(i), x);
        }
    }

    /// Embed frame coordinates back into R^n.
    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.k);
        let mut v = vec![0.0; self.n];
        for i in 0..self.k {
            linalg::axpy(y[i], self.basis_row(i), &mut v);
        }
        v
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.k {
            for j in 0..=i {
                let g = linalg::dot(self.basis_row(i), self.basis_row(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

/// Haar-distributed k-frame in R^n.
pub fn sample_frame(n: usize, k: usize, rng: &mut impl Rng) -> Result<Frame, GeometryError> {
    if k == 0 || k > n {
        return Err(GeometryError::DimensionMismatch { expected: n, got: k });
    }
    for _attempt in 0..64 {
        let rows: Vec<f64> = (0..k * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if let Some(f) = Frame::orthonormalize(n, k, rows) {
            return Ok(f);
        }
    }
    Err(GeometryError::RankDeficient { n, k })
}

/// Project a batch of points (flat, stride n) onto a frame; output is flat
/// with stride k.
pub fn project(points: &[f64], n: usize, frame: &Frame) -> Result<Vec<f64>, GeometryError> {
    if n != frame.ambient_dim() {
        return Err(GeometryError::DimensionMismatch { expected: frame.ambient_dim(), got: n });
    }
    if points.len() % n != 0 {
        return Err(GeometryError::DimensionMismatch { expected: n, got: points.len() });
    }
    let count = points.len() / n;
    let k = frame.dim();
    let mut out = vec![0.0; count * k];
    for s in 0..count {
        frame.project_into(&points[s * n..(s + 1) * n], &mut out[s * k..(s + 1) * k]);
    }
    Ok(out)
}

/// Volume of the k-dimensional Euclidean unit ball, via log-gamma to stay
/// finite for large k.
pub fn unit_ball_volume(k: usize) -> f64 {
    assert!(k >= 1);
    let kf = k as f64;
    let (lg, _sign) = libm::lgamma_r(kf / 2.0 + 1.0);
    (0.5 * kf * std::f64::consts::PI.ln() - lg).exp()
}
