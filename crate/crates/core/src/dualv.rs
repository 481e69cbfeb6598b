//! Dual quermassintegrals Ṽ_q(K, z) = (1/n)∫ ρ_{K,z}(u)^q du and related quantities.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{GeomError, Result};
use crate::linalg::{axpy, complement_basis, dist, mat_t_vec};
use crate::rng::{in_unit_ball, stream_id, substream, unit_vector};
use crate::special::{beta, omega, GaussLegendre};
use crate::sphere::SphereQuadrature;
use crate::stats::jackknife_blocks;

/// Relative tolerance deciding whether a point lies on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Quadrature on the inward hemisphere at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRule {
    /// Gauss–Legendre nodes per panel and azimuthal resolution.
    pub order: usize,
    /// Panels in the near-tangent band.
    pub panels: usize,
}

impl Default for BoundaryRule {
    fn default() -> Self {
        BoundaryRule { order: 32, panels: 4 }
    }
}

/// Ṽ_q(K, z) for z ∈ K. Interior points use `quad`; boundary points use the
/// hemisphere rule with `BoundaryRule::default()`.
pub fn dual_v(body: &Body, z: &[f64], q: f64, quad: &SphereQuadrature) -> Result<f64> {
    dual_v_with(body, z, q, quad, &BoundaryRule::default())
}

pub fn dual_v_with(body: &Body, z: &[f64], q: f64, quad: &SphereQuadrature, rule: &BoundaryRule) -> Result<f64> {
    let n = body.dim();
    if z.len() != n || quad.dim != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: z.len().min(quad.dim) });
    }
    match body.boundary_normal(z, BOUNDARY_TOL)? {
        None => {
            let s = quad.integrate(|u| {
                let r = body.radial_extended(z, u);
                r.powf(q)
            });
            Ok(s / n as f64)
        }
        Some(nu) => dual_v_boundary(body, z, &nu, q, rule),
    }
}

/// Ṽ_index(K, z) at a boundary point with outer normal `nu`.
pub fn dual_v_boundary(body: &Body, z: &[f64], nu: &[f64], index: f64, rule: &BoundaryRule) -> Result<f64> {
    let n = body.dim();
    if index == 0.0 {
        return Ok(omega(n) / 2.0);
    }
    if index <= -1.0 {
        return Err(GeomError::DivergentIndex { index });
    }
    let smooth = matches!(body, Body::Ball(_) | Body::Ellipsoid(_));
    let basis = complement_basis(nu);
    // Directions w ∈ S^{n−2} inside ν⊥.
    let ring: Vec<(Vec<f64>, f64)> = if n == 2 {
        vec![(basis[0].clone(), 1.0), (basis[0].iter().map(|x| -x).collect(), 1.0)]
    } else {
        let sq = SphereQuadrature::product(n - 1, rule.order);
        sq.nodes
            .iter()
            .zip(&sq.weights)
            .map(|(w, &wt)| (mat_t_vec(&basis, w), wt))
            .collect()
    };
    let eval = |c: f64, s: f64| -> f64 {
        let mut total = 0.0;
        for (w, wt) in &ring {
            let u: Vec<f64> = nu.iter().zip(w).map(|(a, b)| -c * a + s * b).collect();
            let r = match body {
                Body::Ball(b) => 2.0 * c * b.radius(),
                Body::Ellipsoid(e) => e.boundary_chord(z, &u, c),
                _ => body.radial_extended(z, &u).max(0.0),
            };
            if r > 0.0 {
                total += wt * r.powf(index);
            }
        }
        total
    };
    let gl = GaussLegendre::cached(rule.order);
    let c_star = std::f64::consts::FRAC_1_SQRT_2;
    // Near-tangent band c ∈ [0, c*]; smooth bodies are graded by c = c*·σ^g.
    let g = if smooth { 1.0 / (index + 1.0) } else { 1.0 };
    let mut band = 0.0;
    for p in 0..rule.panels {
        let a = p as f64 / rule.panels as f64;
        let b = (p + 1) as f64 / rule.panels as f64;
        for (sigma, w) in gl.on(a, b) {
            let c = c_star * sigma.powf(g);
            let dc = c_star * g * sigma.powf(g - 1.0);
            let s = (1.0 - c * c).sqrt();
            let jac = if n == 3 { 1.0 } else { s.powi(n as i32 - 3) };
            band += w * dc * jac * eval(c, s);
        }
    }
    // Cap around the inward normal, ψ ∈ [0, π/4].
    let mut cap = 0.0;
    for (psi, w) in gl.on(0.0, std::f64::consts::FRAC_PI_4) {
        let s = psi.sin();
        cap += w * s.powi(n as i32 - 2) * eval(psi.cos(), s);
    }
    Ok((band + cap) / n as f64)
}

/// Closed form of Ṽ_{q−1}(B^n, z) at a boundary point of the unit ball.
pub fn ball_boundary_dual_v(n: usize, q: f64) -> f64 {
    let nf = n as f64;
    2f64.powf(q - 2.0) * (nf - 1.0) * omega(n - 1) * beta(q / 2.0, (nf - 1.0) / 2.0) / nf
}

/// (Ṽ⁺, Ṽ⁻): integrals of ρ^q over directions with ρ > 0 and |ρ|^q over ρ < 0.
pub fn dual_v_signed(body: &Body, z: &[f64], q: f64, quad: &SphereQuadrature) -> Result<(f64, f64)> {
    if !(q > 0.0) {
        return Err(GeomError::Precondition(format!("signed dual quermassintegral needs q > 0, got {q}")));
    }
    let n = body.dim();
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (u, w) in quad.nodes.iter().zip(&quad.weights) {
        let r = body.radial_extended(z, u);
        if r > 0.0 {
            plus += w * r.powf(q);
        } else if r < 0.0 {
            minus += w * (-r).powf(q);
        }
    }
    Ok((plus / n as f64, minus / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RieszSampling {
    /// Uniform points in a bounding box (finite variance when q > n/2).
    UniformBox,
    /// Points z + r·u with r ∝ r^{q−1}, bounded estimator.
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub sampling: RieszSampling,
}

const BLOCKS: usize = 32;

/// Monte Carlo value of (q/n)∫_K |x − z|^{q−n} dx.
pub fn riesz_dual_v(body: &Body, z: &[f64], q: f64, samples: usize, seed: u64) -> Result<RieszEstimate> {
    if !(q > 0.0) {
        return Err(GeomError::Precondition(format!("Riesz potential needs q > 0, got {q}")));
    }
    let n = body.dim();
    let nf = n as f64;
    let (lo, hi) = body.bounding_box();
    let per_block = samples.div_ceil(BLOCKS).max(1);
    let sampling = if q > nf / 2.0 { RieszSampling::UniformBox } else { RieszSampling::Radial };
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let rmax = corners_max_dist(&lo, &hi, z);
    let means: Vec<f64> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, stream_id("riesz-dual-v", b as u64));
            let mut acc = 0.0;
            for _ in 0..per_block {
                acc += match sampling {
                    RieszSampling::UniformBox => {
                        let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, c)| a + (c - a) * rng.random::<f64>()).collect();
                        if body.contains(&x) {
                            let d = dist(&x, z);
                            if d > 0.0 {
                                q / nf * box_vol * d.powf(q - nf)
                            } else {
                                0.0
                            }
                        } else {
                            0.0
                        }
                    }
                    RieszSampling::Radial => {
                        let u = unit_vector(&mut rng, n);
                        let r = rmax * (1.0 - rng.random::<f64>()).powf(1.0 / q);
                        if body.contains(&axpy(z, r, &u)) {
                            omega(n) * rmax.powf(q)
                        } else {
                            0.0
                        }
                    }
                };
            }
            acc / per_block as f64
        })
        .collect();
    let (value, std_error) = jackknife_blocks(&means);
    Ok(RieszEstimate { value, std_error, samples: per_block * BLOCKS, sampling })
}

fn corners_max_dist(lo: &[f64], hi: &[f64], z: &[f64]) -> f64 {
    lo.iter()
        .zip(hi)
        .zip(z)
        .map(|((a, b), zi)| (zi - a).abs().max((b - zi).abs()).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvatureFit {
    /// Affine extrapolation of q·Ṽ_{q−1}(K, z) to q = 0.
    pub estimate: f64,
    /// Relative RMS residual of the affine fit.
    pub fit_residual: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Extrapolates q·Ṽ_{q−1}(K, z) to q → 0 along `q_seq`; the limit is
/// (n−1)ω_{n−1}/(2n)·H(z) with H the mean of the principal curvatures.
pub fn mean_curvature_limit(body: &Body, z: &[f64], q_seq: &[f64], residual_bound: f64) -> Result<MeanCurvatureFit> {
    if !matches!(body, Body::Ball(_) | Body::Ellipsoid(_)) {
        return Err(GeomError::Precondition("mean-curvature limit needs a ball or an ellipsoid".into()));
    }
    if q_seq.len() < 2 || q_seq.iter().any(|&q| !(q > 0.0 && q <= 0.5)) {
        return Err(GeomError::Precondition("q sequence must have ≥ 2 values in (0, 0.5]".into()));
    }
    let nu = body
        .boundary_normal(z, 1e-9)?
        .ok_or_else(|| GeomError::Precondition("z must lie on the boundary".into()))?;
    let rule = BoundaryRule { order: 48, panels: 6 };
    let samples: Vec<(f64, f64)> = q_seq
        .iter()
        .map(|&q| dual_v_boundary(body, z, &nu, q - 1.0, &rule).map(|v| (q, q * v)))
        .collect::<Result<_>>()?;
    let (a, b) = affine_fit(&samples);
    let rms = (samples.iter().map(|(q, y)| (y - a - b * q).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
    let fit_residual = rms / a.abs().max(1e-300);
    if fit_residual > residual_bound {
        return Err(GeomError::PoorFit { residual: fit_residual, bound: residual_bound });
    }
    Ok(MeanCurvatureFit { estimate: a, fit_residual, samples })
}

/// Least-squares y ≈ a + b·x.
pub fn affine_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let b = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    ((sy - b * sx) / m, b)
}

/// Uniform point in K by rejection from the bounding box.
pub fn sample_interior<R: Rng + ?Sized>(body: &Body, lo: &[f64], hi: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect();
        if body.contains(&x) {
            return x;
        }
    }
}

/// Uniform point in K; balls and ellipsoids are sampled directly.
pub fn sample_in_body<R: Rng + ?Sized>(body: &Body, lo: &[f64], hi: &[f64], rng: &mut R) -> Vec<f64> {
    match body {
        Body::Ball(b) => axpy(b.center(), b.radius(), &in_unit_ball(rng, b.center().len())),
        Body::Ellipsoid(e) => {
            let w = in_unit_ball(rng, e.center().len());
            let y: Vec<f64> = w.iter().zip(e.semi_axes()).map(|(wi, a)| wi * a).collect();
            crate::linalg::add(e.center(), &mat_t_vec(e.frame(), &y))
        }
        _ => sample_interior(body, lo, hi, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{Ball, Ellipsoid};
    use crate::polytope::HPolytope;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ball(n: usize) -> Body {
        Body::Ball(Ball::unit(n).unwrap())
    }

    #[test]
    fn ball_center_gives_omega() {
        for n in 2..=4 {
            let quad = SphereQuadrature::product(n, 16);
            for q in [-0.5, 0.0, 1.0, 2.5] {
                let v = dual_v(&ball(n), &vec![0.0; n], q, &quad).unwrap();
                assert_relative_eq!(v, omega(n), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn index_zero_interior_and_index_n_volume() {
        let p = Body::HPolytope(HPolytope::aabb(&[0.0; 3], &[1.0, 2.0, 0.5]).unwrap());
        let quad = SphereQuadrature::product(3, 64);
        let z = [0.3, 1.1, 0.2];
        assert_relative_eq!(dual_v(&p, &z, 0.0, &quad).unwrap(), omega(3), max_relative = 1e-10);
        // Ṽ_n = V for any interior point; the product grid is accurate to ~1e-3 here.
        assert_relative_eq!(dual_v(&p, &z, 3.0, &quad).unwrap(), 1.0, max_relative = 5e-3);
    }

    #[test]
    fn boundary_ball_matches_closed_form() {
        let quad = SphereQuadrature::product(3, 8);
        for n in 2..=4 {
            let mut z = vec![0.0; n];
            z[n - 1] = 1.0;
            for q in [0.05, 0.3, 0.7, 1.0, 2.0, 3.5] {
                let v = dual_v(&ball(n), &z, q - 1.0, &SphereQuadrature::product(n, 8)).unwrap();
                assert_relative_eq!(v, ball_boundary_dual_v(n, q), max_relative = 1e-6);
            }
        }
        let z = [1.0, 0.0, 0.0];
        assert_relative_eq!(dual_v(&ball(3), &z, 0.0, &quad).unwrap(), omega(3) / 2.0);
        assert!(matches!(dual_v(&ball(3), &z, -1.0, &quad), Err(GeomError::DivergentIndex { .. })));
    }

    #[test]
    fn boundary_ball_closed_form_against_monte_carlo() {
        let b = ball(3);
        let z = [0.0, 0.0, 1.0];
        let q = 2.5;
        let mut rng = substream(5, 0);
        let m = 400_000;
        let mut acc = 0.0;
        for _ in 0..m {
            let u = unit_vector(&mut rng, 3);
            let r = b.radial_extended(&z, &u);
            if r > 0.0 {
                acc += r.powf(q - 1.0);
            }
        }
        let mc = acc / m as f64 * 4.0 * PI / 3.0;
        assert_relative_eq!(mc, ball_boundary_dual_v(3, q), max_relative = 5e-3);
    }

    #[test]
    fn outside_point_is_rejected() {
        let quad = SphereQuadrature::product(3, 8);
        assert_eq!(dual_v(&ball(3), &[2.0, 0.0, 0.0], 1.0, &quad).unwrap_err(), GeomError::PointOutside);
    }

    #[test]
    fn signed_interior_has_no_minus_part() {
        let quad = SphereQuadrature::product(3, 32);
        let p = Body::HPolytope(HPolytope::cube(3, 1.0).unwrap());
        let z = [0.2, -0.1, 0.4];
        let (plus, minus) = dual_v_signed(&p, &z, 1.5, &quad).unwrap();
        assert_eq!(minus, 0.0);
        assert_relative_eq!(plus, dual_v(&p, &z, 1.5, &quad).unwrap(), max_relative = 1e-14);
    }

    /// Explicit line–sphere oracle for z outside the unit ball at distance d, q = 1:
    /// (1/n)·|S^{n−2}|·∫_0^α 2√(1 − d² sin²θ) sin^{n−2}θ dθ with sin α = 1/d.
    fn ball_exterior_q1(n: usize, d: f64) -> f64 {
        let alpha = (1.0 / d).asin();
        let gl = GaussLegendre::cached(200);
        let f = |t: f64| 2.0 * (1.0 - d * d * t.sin().powi(2)).max(0.0).sqrt() * t.sin().powi(n as i32 - 2);
        // Split near the square-root endpoint.
        let mid = alpha * 0.9;
        let i = gl.integrate(0.0, mid, f) + gl.integrate(mid, alpha, f);
        (n as f64 - 1.0) * omega(n - 1) * i / n as f64
    }

    #[test]
    fn signed_exterior_ball_q1() {
        let b = ball(3);
        let z = [0.0, 0.0, 2.0];
        let quad = SphereQuadrature::product(3, 400);
        let (plus, minus) = dual_v_signed(&b, &z, 1.0, &quad).unwrap();
        assert!(minus > 0.0 && plus > minus);
        assert_relative_eq!(plus - minus, ball_exterior_q1(3, 2.0), max_relative = 2e-3);
        // Riesz form agrees for exterior points as well.
        let r = riesz_dual_v(&b, &z, 1.0, 400_000, 3).unwrap();
        assert!((r.value - (plus - minus)).abs() < 4.0 * r.std_error + 1e-3, "{r:?} vs {}", plus - minus);
    }

    #[test]
    fn riesz_examples() {
        let b = ball(3);
        let r = riesz_dual_v(&b, &[0.0; 3], 3.0, 200_000, 1).unwrap();
        assert_eq!(r.sampling, RieszSampling::UniformBox);
        assert!((r.value - omega(3)).abs() <= 3.0 * r.std_error + 1e-12);
        let r = riesz_dual_v(&b, &[0.0; 3], 1.0, 200_000, 1).unwrap();
        assert_eq!(r.sampling, RieszSampling::Radial);
        assert!((r.value - omega(3)).abs() <= 3.0 * r.std_error, "{r:?}");
        let c = Body::HPolytope(HPolytope::aabb(&[0.0; 3], &[1.0; 3]).unwrap());
        let z = [0.5; 3];
        let quad = SphereQuadrature::product(3, 128);
        let exact = dual_v(&c, &z, 2.0, &quad).unwrap();
        let r = riesz_dual_v(&c, &z, 2.0, 400_000, 9).unwrap();
        assert!((r.value - exact).abs() <= 3.0 * r.std_error + 1e-4 * exact, "{r:?} vs {exact}");
    }

    #[test]
    fn mean_curvature_of_balls() {
        for (n, target) in [(2usize, 0.5), (3, PI / 3.0)] {
            let mut z = vec![0.0; n];
            z[0] = 1.0;
            let fit = mean_curvature_limit(&ball(n), &z, &[0.2, 0.1, 0.05, 0.025], 1e-2).unwrap();
            assert_relative_eq!(fit.estimate, target, max_relative = 2e-2);
        }
    }

    #[test]
    fn mean_curvature_of_prolate_ellipsoid() {
        let e = Ellipsoid::axis_aligned(vec![0.0; 3], &[1.0, 1.0, 2.0]).unwrap();
        let body = Body::Ellipsoid(e.clone());
        let c = 2.0 * omega(2) / 6.0;
        for z in [[0.0, 0.0, 2.0], [1.0, 0.0, 0.0]] {
            let fit = mean_curvature_limit(&body, &z, &[0.2, 0.1, 0.05, 0.025], 1e-2).unwrap();
            assert_relative_eq!(fit.estimate / c, e.mean_curvature(&z), max_relative = 5e-2);
        }
    }

    #[test]
    fn translation_covariance() {
        let p = HPolytope::from_raw(
            &[vec![1.0, 0.1, 0.0], vec![-1.0, 0.3, 0.2], vec![0.0, 1.0, -0.2], vec![0.1, -1.0, 0.0], vec![0.0, 0.2, 1.0], vec![0.3, 0.0, -1.0]],
            &[1.0, 1.1, 0.9, 1.2, 1.0, 0.8],
        )
        .unwrap();
        let y = [0.3, -0.2, 0.7];
        let k = Body::HPolytope(p.clone());
        let ky = Body::HPolytope(p.translate(&y).unwrap());
        let quad = SphereQuadrature::product(3, 24);
        let z = [0.1, 0.05, -0.1];
        let zy: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a + b).collect();
        for q in [-0.5, 1.0, 2.0] {
            let a = dual_v(&k, &z, q, &quad).unwrap();
            let b = dual_v(&ky, &zy, q, &quad).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }
}
