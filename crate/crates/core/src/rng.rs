//! Deterministic random substreams and geometric samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{orthonormalize_rows, scale};

/// Independent generator for `(seed, stream)`; identical inputs give identical draws.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for a named consumer, so unrelated consumers never share draws.
pub fn stream_id(name: &str, index: u64) -> u64 {
    // FNV-1a over the name, then mixed with the index.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ index.wrapping_mul(0x9e3779b97f4a7c15)
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-12 {
            return scale(&g, 1.0 / r);
        }
    }
}

/// Uniform point in the unit ball of R^n.
pub fn in_unit_ball<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let u = unit_vector(rng, n);
    let r = rng.random::<f64>().powf(1.0 / n as f64);
    scale(&u, r)
}

/// Haar-distributed orthogonal matrix (rows).
pub fn rotation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    orthonormalize_rows(&rows)
}

/// Uniform point in a simplex given by its vertices.
pub fn in_simplex<R: Rng + ?Sized>(rng: &mut R, vertices: &[Vec<f64>]) -> Vec<f64> {
    let k = vertices.len();
    let mut e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|x| *x /= s);
    let n = vertices[0].len();
    let mut p = vec![0.0; n];
    for (w, v) in e.iter().zip(vertices) {
        for (pi, vi) in p.iter_mut().zip(v) {
            *pi += w * vi;
        }
    }
    p
}
