//! Dense linear algebra helpers for small matrices (dimension up to a few
//! dozen): dot products on flat buffers, Cholesky factorization, Gaussian
//! elimination and determinants. Matrices are row-major `Vec<f64>`.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += alpha * x[i];
    }
}

/// out = W x for a row-major `rows x cols` matrix.
pub fn gemv(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for r in 0..rows {
        out[r] = dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
/// Returns None if a pivot drops below `1e-12 * scale`.
pub fn cholesky_lower(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 1e-12 * scale {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix (forward substitution per column).
pub fn lower_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        for row in col..n {
            let mut s = if row == col { 1.0 } else { 0.0 };
            for k in col..row {
                s -= l[row * n + k] * inv[k * n + col];
            }
            inv[row * n + col] = s / l[row * n + row];
        }
    }
    inv
}

/// log det of an SPD matrix via Cholesky.
pub fn log_det_spd(a: &[f64], n: usize) -> Option<f64> {
    let l = cholesky_lower(a, n)?;
    let mut s = 0.0;
    for i in 0..n {
        s += l[i * n + i].ln();
    }
    Some(2.0 * s)
}

/// Solve A x = b in place by Gaussian elimination with partial pivoting.
/// `a` is destroyed; `b` is replaced by the solution. Returns false when the
/// matrix is numerically singular.
pub fn solve_dense(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= 1e-13 * scale {
            return false;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for j in row + 1..n {
            s -= a[row * n + j] * b[j];
        }
        b[row] = s / a[row * n + row];
    }
    true
}

/// Determinant via in-place LU with partial pivoting. Destroys `a`.
pub fn det_in_place(a: &mut [f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
        }
    }
    det
}

/// Empirical covariance of `count` points stored flat with stride `n`
/// (moments about the origin; callers deal in symmetric distributions).
pub fn covariance(points: &[f64], n: usize, count: usize) -> Vec<f64> {
    debug_assert_eq!(points.len(), n * count);
    assert!(count > 1);
    let mut cov = vec![0.0; n * n];
    for s in 0..count {
        let x = &points[s * n..(s + 1) * n];
        for i in 0..n {
            let xi = x[i];
            for j in 0..=i {
                cov[i * n + j] += xi * x[j];
            }
        }
    }
    let inv = 1.0 / count as f64;
    for i in 0..n {
        for j in 0..=i {
            let v = cov[i * n + j] * inv;
            cov[i * n + j] = v;
            cov[j * n + i] = v;
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_of_known_matrix() {
        // A = [[4,2],[2,3]] => L = [[2,0],[1,sqrt(2)]]
        let a = vec![4.0, 2.0, 2.0, 3.0];
        let l = cholesky_lower(&a, 2).unwrap();
        assert_relative_eq!(l[0], 2.0, max_relative = 1e-14);
        assert_relative_eq!(l[2], 1.0, max_relative = 1e-14);
        assert_relative_eq!(l[3], 2.0f64.sqrt(), max_relative = 1e-14);
        assert_eq!(l[1], 0.0);
        assert!(cholesky_lower(&[1.0, 2.0, 2.0, 1.0], 2).is_none(), "indefinite input");
    }

    #[test]
    fn lower_inverse_multiplies_to_identity() {
        let a = vec![9.0, 3.0, 1.0, 3.0, 7.0, 2.0, 1.0, 2.0, 5.0];
        let l = cholesky_lower(&a, 3).unwrap();
        let inv = lower_inverse(&l, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += inv[i * 3 + k] * l[k * 3 + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(s, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn log_det_matches_direct_determinant() {
        let a = vec![9.0, 3.0, 1.0, 3.0, 7.0, 2.0, 1.0, 2.0, 5.0];
        let ld = log_det_spd(&a, 3).unwrap();
        let mut a2 = a.clone();
        let det = det_in_place(&mut a2, 3);
        assert_relative_eq!(ld, det.ln(), max_relative = 1e-12);
    }

    #[test]
    fn solve_dense_roundtrip() {
        let a = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let x_true = [8.0, -11.0, -3.0];
        let mut b = [0.0; 3];
        gemv(&a, 3, 3, &x_true, &mut b);
        let mut a2 = a.clone();
        let mut sol = b;
        assert!(solve_dense(&mut a2, 3, &mut sol));
        for i in 0..3 {
            assert_relative_eq!(sol[i], x_true[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn determinant_signs_and_values() {
        let mut id = vec![1.0, 0.0, 0.0, 1.0];
        assert_relative_eq!(det_in_place(&mut id, 2), 1.0);
        let mut swap = vec![0.0, 1.0, 1.0, 0.0];
        assert_relative_eq!(det_in_place(&mut swap, 2), -1.0);
        let mut sing = vec![1.0, 2.0, 2.0, 4.0];
        assert_relative_eq!(det_in_place(&mut sing, 2), 0.0);
    }

    #[test]
    fn covariance_of_fixed_points() {
        // Points (+-1, 0), (0, +-2): covariance diag(1/2, 2), off-diagonal 0.
        let pts = vec![1.0, 0.0, -1.0, 0.0, 0.0, 2.0, 0.0, -2.0];
        let c = covariance(&pts, 2, 4);
        assert_relative_eq!(c[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(c[3], 2.0, max_relative = 1e-14);
        assert_relative_eq!(c[1], 0.0);
    }
}
