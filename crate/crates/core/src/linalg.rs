//! Small dense vector helpers on runtime-sized slices.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// a + s·b
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

pub fn mean_point(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points[0].len();
    let mut c = vec![0.0; n];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    scale(&c, 1.0 / points.len() as f64)
}

/// Orthonormal basis of the orthogonal complement of the unit vector `u`.
pub fn complement_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    // Householder reflection mapping e_k to ±u, k the largest coordinate.
    let k = (0..n)
        .max_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()))
        .unwrap_or(0);
    let s = if u[k] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = u.to_vec();
    v[k] += s;
    let vv = dot(&v, &v);
    let mut out = Vec::with_capacity(n - 1);
    for j in (0..n).filter(|&j| j != k) {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let c = 2.0 * v[j] / vv;
        for (ei, vi) in e.iter_mut().zip(&v) {
            *ei -= c * vi;
        }
        out.push(e);
    }
    out
}

/// Solve the square system `rows · x = rhs`; `None` when numerically singular.
pub fn solve(rows: &[&[f64]], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lu = m.clone().lu();
    let x = lu.solve(&DVector::from_column_slice(rhs))?;
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let det = lu.determinant().abs();
    if !(det > 1e-12 * scale.powi(n as i32)) {
        return None;
    }
    Some(x.iter().copied().collect())
}

/// Gram–Schmidt orthonormalisation of the differences `p_i - p_0`, dropping
/// directions shorter than `tol`. Returns the basis (its length is the affine rank).
pub fn affine_basis(points: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if points.is_empty() {
        return basis;
    }
    let p0 = &points[0];
    // Repeatedly pick the point farthest from the current affine span.
    let mut remaining: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, p0)).collect();
    loop {
        let mut best = None;
        let mut best_norm = tol;
        for (i, r) in remaining.iter().enumerate() {
            let nr = norm(r);
            if nr > best_norm {
                best_norm = nr;
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        let b = scale(&remaining[i], 1.0 / best_norm);
        for r in remaining.iter_mut() {
            let c = dot(r, &b);
            for (ri, bi) in r.iter_mut().zip(&b) {
                *ri -= c * bi;
            }
        }
        basis.push(b);
        if basis.len() == p0.len() {
            break;
        }
    }
    basis
}

/// k-dimensional volume of the simplex spanned by k+1 points in R^n.
pub fn simplex_volume(points: &[Vec<f64>]) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&edges[i], &edges[j]));
    let det = gram.determinant().max(0.0);
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    det.sqrt() / fact
}

/// Row-major orthogonal matrix from QR of a square matrix given by rows.
pub fn orthonormalize_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[j][i]);
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    (0..n)
        .map(|j| {
            let s = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
            (0..n).map(|i| s * q[(i, j)]).collect()
        })
        .collect()
}

pub fn mat_vec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, x)).collect()
}

/// xᵀ of `mat_vec`: Σ_i x_i rows_i.
pub fn mat_t_vec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = rows[0].len();
    let mut out = vec![0.0; n];
    for (r, xi) in rows.iter().zip(x) {
        for (o, v) in out.iter_mut().zip(r) {
            *o += xi * v;
        }
    }
    out
}
