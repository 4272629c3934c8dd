//! Small dense helpers on `Vec<f64>` points, backed by nalgebra where a
//! factorisation is needed.

use nalgebra::{DMatrix, DVector};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn centroid(points: &[&[f64]]) -> Vec<f64> {
    let d = points[0].len();
    let mut c = vec![0.0; d];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p.iter()) {
            *ci += pi;
        }
    }
    let n = points.len() as f64;
    c.iter_mut().for_each(|x| *x /= n);
    c
}

/// Unit normal `ν` and offset `c` of the hyperplane `⟨ν, x⟩ = c` through `d`
/// points of `R^d`, or `None` if they are affinely dependent (relative to `tol`).
pub fn hyperplane_through(points: &[&[f64]], tol: f64) -> Option<(Vec<f64>, f64)> {
    let d = points[0].len();
    debug_assert_eq!(points.len(), d);
    if d == 1 {
        return Some((vec![1.0], points[0][0]));
    }
    // rows p_i - p_0, padded with a zero row so the SVD yields the full right basis
    let mut m = DMatrix::<f64>::zeros(d, d);
    let mut scale = 0.0f64;
    for i in 1..d {
        for k in 0..d {
            let v = points[i][k] - points[0][k];
            m[(i - 1, k)] = v;
            scale = scale.max(v.abs());
        }
    }
    if scale == 0.0 {
        return None;
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let sv = &svd.singular_values;
    let (imin, _) = sv.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    // the second smallest singular value measures how far from degenerate we are
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    if sorted[1] < tol * scale {
        return None;
    }
    let mut n: Vec<f64> = v_t.row(imin).iter().copied().collect();
    let l = norm(&n);
    n.iter_mut().for_each(|x| *x /= l);
    let c = dot(&n, points[0]);
    Some((n, c))
}

pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let lu = m.lu();
    let x = lu.solve(&DVector::from_column_slice(b))?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

/// Numerical rank of a set of vectors.
pub fn rank(vectors: &[Vec<f64>], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let d = vectors[0].len();
    let m = DMatrix::from_fn(vectors.len(), d, |i, j| vectors[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    sv.iter().filter(|&&s| s > tol * smax.max(1.0)).count()
}

/// Orthonormal basis of the orthogonal complement of `normal` (unit) in `R^d`.
pub fn complement_basis(normal: &[f64]) -> Vec<Vec<f64>> {
    let d = normal.len();
    let mut basis: Vec<Vec<f64>> = vec![normal.to_vec()];
    for k in 0..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for b in &basis {
            let p = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let l = norm(&v);
        if l > 1e-8 {
            v.iter_mut().for_each(|x| *x /= l);
            basis.push(v);
        }
        if basis.len() == d {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Gram–Schmidt without normalisation loss: returns the component of `v`
/// orthogonal to the span of the (orthonormal) `basis`.
pub fn orthogonalize(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut w = v.to_vec();
    for b in basis {
        let p = dot(&w, b);
        for (wi, bi) in w.iter_mut().zip(b) {
            *wi -= p * bi;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_through_three_points() {
        let pts: Vec<Vec<f64>> = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let (n, c) = hyperplane_through(&refs, 1e-12).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let sign = n[0].signum();
        for k in 0..3 {
            assert!((n[k] * sign - s).abs() < 1e-14);
        }
        assert!((c * sign - s).abs() < 1e-14);
    }

    #[test]
    fn collinear_points_rejected() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert!(hyperplane_through(&refs, 1e-12).is_none());
    }

    #[test]
    fn complement_is_orthonormal() {
        let n = vec![0.6, 0.0, 0.8];
        let b = complement_basis(&n);
        assert_eq!(b.len(), 2);
        for v in &b {
            assert!(dot(v, &n).abs() < 1e-14);
            assert!((norm(v) - 1.0).abs() < 1e-14);
        }
        assert!(dot(&b[0], &b[1]).abs() < 1e-14);
    }
}
