//! Chord integrals I_q(K) = ∫ |K ∩ ℓ|^q dℓ with dℓ = dx du / (nω_n).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::dualv::sample_in_body;
use crate::error::{GeomError, Result};
use crate::linalg::{axpy, complement_basis, mat_t_vec};
use crate::rng::{in_unit_ball, rotation, stream_id, substream, unit_vector};
use crate::special::{beta, omega};
use crate::sphere::SphereQuadrature;
use crate::stats::jackknife_blocks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChordMethod {
    LineMc,
    VolumeForm,
    RieszDouble,
    ClosedForm,
    /// (n+q−1)^{-1} Σ h_i F_i with deterministic facet quadrature.
    FacetQuadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: ChordMethod,
    pub samples: usize,
    pub q: f64,
    pub seed: u64,
    /// Set for −1 < q < 0 when single lines dominate the sum.
    #[serde(default)]
    pub variance_blowup: bool,
}

impl ChordEstimate {
    pub fn exact(value: f64, q: f64) -> Self {
        ChordEstimate { value, std_error: 0.0, method: ChordMethod::ClosedForm, samples: 0, q, seed: 0, variance_blowup: false }
    }
}

/// A sampled line: direction, base point in direction⊥ (relative to the
/// sampling center) and chord length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    pub direction: Vec<f64>,
    pub base: Vec<f64>,
    pub chord: f64,
}

pub const BLOCKS: usize = 32;

/// Default number of lines: 10⁶ in R³, scaled by √10 per dimension.
pub fn default_line_samples(n: usize) -> usize {
    10f64.powf(5.0 + (n as f64 - 1.0) / 2.0).round() as usize
}

fn sample_line<R: Rng + ?Sized>(body: &Body, center: &[f64], radius: f64, rng: &mut R) -> LineSample {
    let n = center.len();
    let u = unit_vector(rng, n);
    let basis = complement_basis(&u);
    let y = in_unit_ball(rng, n - 1);
    let base = mat_t_vec(&basis, &y.iter().map(|v| v * radius).collect::<Vec<_>>());
    let x = crate::linalg::add(center, &base);
    let chord = body.xray(&x, &u);
    LineSample { direction: u, base, chord }
}

/// Lines hitting the disk of circumradius about the centroid, uniformly in line measure.
pub fn line_samples(body: &Body, count: usize, seed: u64) -> Vec<LineSample> {
    let center = body.centroid();
    let radius = body.circumradius() * (1.0 + 1e-9);
    let mut rng = substream(seed, stream_id("line-samples", 0));
    (0..count).map(|_| sample_line(body, &center, radius, &mut rng)).collect()
}

/// Line-space Monte Carlo estimate of I_q(K), q > −1. For each uniform
/// direction u the base point is uniform in the box spanned in u⊥ by the
/// support values of K, so the hit rate does not depend on elongation.
pub fn chord_line_mc(body: &Body, q: f64, samples: usize, seed: u64) -> Result<ChordEstimate> {
    if !(q > -1.0) {
        return Err(GeomError::Precondition(format!("chord integral needs q > −1, got {q}")));
    }
    if samples < 1000 {
        return Err(GeomError::Precondition("line Monte Carlo needs at least 1000 samples".into()));
    }
    let n = body.dim();
    let per_block = samples.div_ceil(BLOCKS);
    let blocks: Vec<(f64, f64)> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, stream_id("chord-line-mc", b as u64));
            let mut acc = 0.0;
            let mut biggest: f64 = 0.0;
            let mut x = vec![0.0; n];
            for _ in 0..per_block {
                let u = unit_vector(&mut rng, n);
                let basis = complement_basis(&u);
                let mut area = 1.0;
                x.iter_mut().for_each(|v| *v = 0.0);
                for e in &basis {
                    let hi = body.support(e);
                    let lo = -body.support(&e.iter().map(|v| -v).collect::<Vec<_>>());
                    area *= hi - lo;
                    let y = lo + (hi - lo) * rng.random::<f64>();
                    x.iter_mut().zip(e).for_each(|(xi, ei)| *xi += y * ei);
                }
                let chord = body.xray(&x, &u);
                if chord > 0.0 {
                    let t = area * chord.powf(q);
                    acc += t;
                    biggest = biggest.max(t);
                }
            }
            (acc / per_block as f64, biggest)
        })
        .collect();
    let means: Vec<f64> = blocks.iter().map(|b| b.0).collect();
    let (value, std_error) = jackknife_blocks(&means);
    let total = value * (per_block * BLOCKS) as f64;
    let biggest = blocks.iter().map(|b| b.1).fold(0.0, f64::max);
    Ok(ChordEstimate {
        value,
        std_error,
        method: ChordMethod::LineMc,
        samples: per_block * BLOCKS,
        q,
        seed,
        variance_blowup: q < 0.0 && biggest > 0.01 * total,
    })
}

/// I_q(K) = (q/ω_n)∫_K Ṽ_{q−1}(K, z) dz with z uniform in K and a randomly
/// rotated copy of `quad` at each z.
pub fn chord_volume_form(body: &Body, q: f64, vol_samples: usize, quad: &SphereQuadrature, seed: u64) -> Result<ChordEstimate> {
    if !(q > 0.0) {
        return Err(GeomError::Precondition(format!("volume form needs q > 0, got {q}")));
    }
    let n = body.dim();
    if quad.dim != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: quad.dim });
    }
    let (lo, hi) = body.bounding_box();
    let scale = q * body.volume() / (n as f64 * omega(n));
    let per_block = vol_samples.div_ceil(BLOCKS).max(1);
    let means: Vec<f64> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, stream_id("chord-volume-form", b as u64));
            let mut acc = 0.0;
            for _ in 0..per_block {
                let z = sample_in_body(body, &lo, &hi, &mut rng);
                let rot = rotation(&mut rng, n);
                let mut s = 0.0;
                for (u, w) in quad.nodes.iter().zip(&quad.weights) {
                    let v = crate::linalg::mat_vec(&rot, u);
                    let r = body.radial_extended(&z, &v);
                    if r > 0.0 {
                        s += w * r.powf(q - 1.0);
                    }
                }
                acc += scale * s;
            }
            acc / per_block as f64
        })
        .collect();
    let (value, std_error) = jackknife_blocks(&means);
    Ok(ChordEstimate {
        value,
        std_error,
        method: ChordMethod::VolumeForm,
        samples: per_block * BLOCKS,
        q,
        seed,
        variance_blowup: false,
    })
}

/// I_q(K) = q(q−1)/(nω_n) ∫∫_{K×K} |x−z|^{q−1−n}, q > 1. Pairs are drawn as
/// x uniform in K and z = x + r·u with r ∝ r^{q−2} on [0, diam K].
pub fn chord_riesz_double(body: &Body, q: f64, samples: usize, seed: u64) -> Result<ChordEstimate> {
    if !(q > 1.0) {
        return Err(GeomError::Precondition(format!("Riesz double integral needs q > 1, got {q}")));
    }
    let n = body.dim();
    let (lo, hi) = body.bounding_box();
    let d = body.diameter();
    let weight = q * body.volume() * d.powf(q - 1.0);
    let per_block = samples.div_ceil(BLOCKS).max(1);
    let means: Vec<f64> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, stream_id("chord-riesz-double", b as u64));
            let mut hits = 0usize;
            for _ in 0..per_block {
                let x = sample_in_body(body, &lo, &hi, &mut rng);
                let u = unit_vector(&mut rng, n);
                let r = d * (1.0 - rng.random::<f64>()).powf(1.0 / (q - 1.0));
                if body.contains(&axpy(&x, r, &u)) {
                    hits += 1;
                }
            }
            weight * hits as f64 / per_block as f64
        })
        .collect();
    let (value, std_error) = jackknife_blocks(&means);
    Ok(ChordEstimate {
        value,
        std_error,
        method: ChordMethod::RieszDouble,
        samples: per_block * BLOCKS,
        q,
        seed,
        variance_blowup: false,
    })
}

/// I_q(rB^n) = r^{n+q−1}·2^{q−1}(n−1)ω_{n−1}·B((n−1)/2, (q+2)/2).
pub fn ball_chord_integral(n: usize, radius: f64, q: f64) -> f64 {
    let nf = n as f64;
    radius.powf(nf + q - 1.0) * 2f64.powf(q - 1.0) * (nf - 1.0) * omega(n - 1) * beta((nf - 1.0) / 2.0, (q + 2.0) / 2.0)
}

/// Exact values where available: any body at q ∈ {0, 1, n+1}, balls at any q > −1.
pub fn chord_closed(body: &Body, q: f64) -> Option<ChordEstimate> {
    let n = body.dim();
    let nf = n as f64;
    if let Body::Ball(b) = body {
        if q > -1.0 {
            return Some(ChordEstimate::exact(ball_chord_integral(n, b.radius(), q), q));
        }
    }
    let v = if q == 0.0 {
        omega(n - 1) * body.surface_area() / (nf * omega(n))
    } else if q == 1.0 {
        body.volume()
    } else if q == nf + 1.0 {
        (nf + 1.0) * body.volume().powi(2) / omega(n)
    } else {
        return None;
    };
    Some(ChordEstimate::exact(v, q))
}

/// I_q(K, u) = ∫_{K|u⊥} X_K(x, u)^q dx by Monte Carlo over a disk in u⊥.
pub fn chord_directional(body: &Body, u: &[f64], q: f64, samples: usize, seed: u64) -> Result<ChordEstimate> {
    if !(q > -1.0) {
        return Err(GeomError::Precondition(format!("chord integral needs q > −1, got {q}")));
    }
    let n = body.dim();
    let u = crate::linalg::normalized(u).ok_or_else(|| GeomError::InvalidInput("zero direction".into()))?;
    let center = body.centroid();
    let radius = body.circumradius() * (1.0 + 1e-9);
    let area = omega(n - 1) * radius.powi(n as i32 - 1);
    let basis = complement_basis(&u);
    let per_block = samples.div_ceil(BLOCKS).max(1);
    let means: Vec<f64> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, stream_id("chord-directional", b as u64));
            let mut acc = 0.0;
            for _ in 0..per_block {
                let y = in_unit_ball(&mut rng, n - 1);
                let x = axpy(&center, radius, &mat_t_vec(&basis, &y));
                let c = body.xray(&x, &u);
                if c > 0.0 {
                    acc += area * c.powf(q);
                }
            }
            acc / per_block as f64
        })
        .collect();
    let (value, std_error) = jackknife_blocks(&means);
    Ok(ChordEstimate {
        value,
        std_error,
        method: ChordMethod::LineMc,
        samples: per_block * BLOCKS,
        q,
        seed,
        variance_blowup: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Ball;
    use crate::polytope::HPolytope;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ball3() -> Body {
        Body::Ball(Ball::unit(3).unwrap())
    }

    fn unit_cube() -> Body {
        Body::HPolytope(HPolytope::aabb(&[0.0; 3], &[1.0; 3]).unwrap())
    }

    #[test]
    fn ball_formula_anchors() {
        assert_relative_eq!(ball_chord_integral(3, 1.0, 1.0), 4.0 * PI / 3.0, max_relative = 1e-13);
        assert_relative_eq!(ball_chord_integral(3, 1.0, 0.0), PI, max_relative = 1e-13);
        assert_relative_eq!(ball_chord_integral(3, 1.0, 4.0), 16.0 * PI / 3.0, max_relative = 1e-13);
        // Poincaré–Hadwiger in the plane: I_3 = 3V²/ω_2 = 3π.
        assert_relative_eq!(ball_chord_integral(2, 1.0, 3.0), 3.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(ball_chord_integral(2, 1.0, 1.0), PI, max_relative = 1e-13);
    }

    #[test]
    fn closed_forms_for_cube() {
        let c = unit_cube();
        assert_relative_eq!(chord_closed(&c, 0.0).unwrap().value, 1.5, max_relative = 1e-12);
        assert_relative_eq!(chord_closed(&c, 4.0).unwrap().value, 3.0 / PI, max_relative = 1e-12);
        assert_relative_eq!(chord_closed(&c, 1.0).unwrap().value, 1.0, max_relative = 1e-12);
        assert!(chord_closed(&c, 2.0).is_none());
        assert_eq!(chord_closed(&c, 1.0).unwrap().std_error, 0.0);
    }

    #[test]
    fn line_mc_on_ball() {
        let b = ball3();
        for (q, exact) in [(1.0, 4.0 * PI / 3.0), (0.0, PI), (4.0, 16.0 * PI / 3.0)] {
            let e = chord_line_mc(&b, q, 200_000, 11).unwrap();
            assert!((e.value - exact).abs() <= 3.0 * e.std_error + 1e-8 * exact, "q={q}: {e:?}");
        }
    }

    #[test]
    fn line_mc_is_deterministic() {
        let a = chord_line_mc(&unit_cube(), 2.0, 20_000, 4).unwrap();
        let b = chord_line_mc(&unit_cube(), 2.0, 20_000, 4).unwrap();
        assert_eq!(a, b);
        let c = chord_line_mc(&unit_cube(), 2.0, 20_000, 5).unwrap();
        assert_ne!(a.value, c.value);
    }

    /// Independent sampler for the unit cube: lines enter through a uniform
    /// boundary point with a cosine-weighted inward direction, so
    /// I_q = (S ω_{n−1}/(nω_n))·E[X^q].
    fn cube_face_oracle(q: f64, samples: usize) -> (f64, f64) {
        let c = unit_cube();
        let mut rng = substream(99, 0);
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..samples {
            let face = rng.random_range(0..6usize);
            let axis = face / 2;
            let side = (face % 2) as f64;
            let mut x = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            x[axis] = side;
            // Cosine-weighted inward direction.
            let w = in_unit_ball(&mut rng, 2);
            let cz = (1.0 - w[0] * w[0] - w[1] * w[1]).max(0.0).sqrt();
            let mut u = [0.0; 3];
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            u[a] = w[0];
            u[b] = w[1];
            u[axis] = if side == 0.0 { cz } else { -cz };
            let t = c.xray(&x, &u).powf(q);
            acc += t;
            acc2 += t * t;
        }
        let m = acc / samples as f64;
        let var = acc2 / samples as f64 - m * m;
        let k = 6.0 * omega(2) / (3.0 * omega(3));
        (k * m, k * (var / samples as f64).sqrt())
    }

    #[test]
    fn unit_cube_q2_against_face_sampler() {
        let (oracle, se_o) = cube_face_oracle(2.0, 2_000_000);
        let e = chord_line_mc(&unit_cube(), 2.0, 1_000_000, 3).unwrap();
        let joint = (e.std_error.powi(2) + se_o.powi(2)).sqrt();
        assert!((e.value - oracle).abs() <= 3.0 * joint, "{} vs {oracle} ± {joint}", e.value);
        // The face sampler also reproduces Cauchy's formula at q = 0.
        let (i0, _) = cube_face_oracle(0.0, 1000);
        assert_relative_eq!(i0, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn volume_form_on_ball() {
        let b = ball3();
        let quad = SphereQuadrature::monte_carlo(3, 16, 0);
        for q in [1.0, 2.0, 2.5] {
            let e = chord_volume_form(&b, q, 40_000, &quad, 2).unwrap();
            let exact = ball_chord_integral(3, 1.0, q);
            assert!((e.value - exact).abs() <= 3.5 * e.std_error + 1e-12 * exact, "q={q}: {e:?} vs {exact}");
        }
    }

    #[test]
    fn riesz_double_on_ball() {
        let b = ball3();
        for q in [2.0, 4.0] {
            let e = chord_riesz_double(&b, q, 400_000, 8).unwrap();
            let exact = ball_chord_integral(3, 1.0, q);
            assert!((e.value - exact).abs() <= 3.0 * e.std_error, "q={q}: {e:?} vs {exact}");
        }
    }

    #[test]
    fn directional_examples() {
        let c = unit_cube();
        let e = chord_directional(&c, &[0.0, 0.0, 1.0], 2.0, 200_000, 1).unwrap();
        assert!((e.value - 1.0).abs() <= 3.0 * e.std_error);
        let s = 1.0 / 3f64.sqrt();
        let e = chord_directional(&c, &[s, s, s], 1.0, 200_000, 1).unwrap();
        assert!((e.value - 1.0).abs() <= 3.0 * e.std_error);
        let e = chord_directional(&ball3(), &[0.0, 1.0, 0.0], 1.0, 100_000, 1).unwrap();
        assert!((e.value - 4.0 * PI / 3.0).abs() <= 3.0 * e.std_error + 1e-9);
    }

    #[test]
    fn directional_average_reproduces_total() {
        // (1/(nω_n)) ∫ I_q(K, u) du = I_q(K).
        let c = unit_cube();
        let quad = SphereQuadrature::product(3, 16);
        let avg = quad.integrate(|u| chord_directional(&c, u, 2.0, 4_000, 3).unwrap().value) / (3.0 * omega(3));
        let total = chord_line_mc(&c, 2.0, 400_000, 3).unwrap();
        assert_relative_eq!(avg, total.value, max_relative = 2e-2);
    }

    #[test]
    fn plane_section_identity_for_ball() {
        // ∫ v_2(B ∩ ξ)² dξ = (ω_2/3)·I_3(B) with dξ = dt du / (3ω_3); sections of the
        // unit ball have area π(1 − t²).
        let mut rng = substream(12, 0);
        let m = 400_000;
        let mut acc = 0.0;
        for _ in 0..m {
            let _u = unit_vector(&mut rng, 3);
            let t: f64 = rng.random_range(-1.0..1.0);
            acc += (PI * (1.0 - t * t)).powi(2);
        }
        // Integrate over t ∈ [−1,1] (length 2) and u ∈ S² (4π), divided by 3ω_3 = 4π.
        let planes = 2.0 * acc / m as f64;
        let e = chord_line_mc(&ball3(), 3.0, 400_000, 12).unwrap();
        let rhs = omega(2) / 3.0 * e.value;
        assert_relative_eq!(planes, rhs, max_relative = 1e-2);
        assert_relative_eq!(omega(2) / 3.0 * ball_chord_integral(3, 1.0, 3.0), 16.0 * PI * PI / 15.0, max_relative = 1e-12);
    }
}
