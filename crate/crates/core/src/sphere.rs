//! Quadrature rules on the unit sphere S^{n-1}.

use serde::{Deserialize, Serialize};

use crate::linalg::mat_vec;
use crate::rng::{substream, unit_vector};
use crate::special::{sphere_area, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadScheme {
    ProductGrid,
    MonteCarlo,
}

/// Nodes and nonnegative weights approximating the spherical Lebesgue measure.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub scheme: QuadScheme,
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub seed: Option<u64>,
}

impl SphereQuadrature {
    /// Gauss–Legendre in each polar angle (`polar` nodes) times a trapezoid
    /// rule with `2·polar` nodes in azimuth.
    pub fn product(dim: usize, polar: usize) -> Self {
        assert!(dim >= 2 && polar >= 1);
        let n_az = 2 * polar;
        let az: Vec<(f64, f64)> = (0..n_az)
            .map(|j| {
                let t = (j as f64 + 0.5) * std::f64::consts::TAU / n_az as f64;
                (t, std::f64::consts::TAU / n_az as f64)
            })
            .collect();
        let gl = GaussLegendre::cached(polar);
        let polar_rule: Vec<(f64, f64)> = gl.on(0.0, std::f64::consts::PI).collect();
        // Partial products: (prefix coordinates, running sine product, weight).
        let mut partial: Vec<(Vec<f64>, f64, f64)> = vec![(Vec::new(), 1.0, 1.0)];
        for k in 0..dim.saturating_sub(2) {
            let power = (dim - 2 - k) as i32;
            let mut next = Vec::with_capacity(partial.len() * polar);
            for (coords, s, w) in &partial {
                for &(phi, wp) in &polar_rule {
                    let mut c = coords.clone();
                    c.push(s * phi.cos());
                    next.push((c, s * phi.sin(), w * wp * phi.sin().powi(power)));
                }
            }
            partial = next;
        }
        let mut nodes = Vec::with_capacity(partial.len() * n_az);
        let mut weights = Vec::with_capacity(partial.len() * n_az);
        for (coords, s, w) in &partial {
            for &(t, wt) in &az {
                let mut c = coords.clone();
                c.push(s * t.cos());
                c.push(s * t.sin());
                nodes.push(c);
                weights.push(w * wt);
            }
        }
        SphereQuadrature { scheme: QuadScheme::ProductGrid, dim, nodes, weights, seed: None }
    }

    /// Antithetic Monte Carlo nodes (u, −u) with equal weights nω_n/N.
    pub fn monte_carlo(dim: usize, count: usize, seed: u64) -> Self {
        let pairs = count.div_ceil(2).max(1);
        let mut rng = substream(seed, crate::rng::stream_id("sphere-mc", 0));
        let mut nodes = Vec::with_capacity(2 * pairs);
        for _ in 0..pairs {
            let u = unit_vector(&mut rng, dim);
            let v: Vec<f64> = u.iter().map(|x| -x).collect();
            nodes.push(u);
            nodes.push(v);
        }
        let w = sphere_area(dim) / nodes.len() as f64;
        let weights = vec![w; nodes.len()];
        SphereQuadrature { scheme: QuadScheme::MonteCarlo, dim, nodes, weights, seed: Some(seed) }
    }

    /// Product grid 128×256 for n ≤ 3, Monte Carlo with 2·10⁵ nodes otherwise.
    pub fn default_for(dim: usize, seed: u64) -> Self {
        if dim <= 3 {
            Self::product(dim, 128)
        } else {
            Self::monte_carlo(dim, 200_000, seed)
        }
    }

    /// Same rule with every node mapped through the orthogonal matrix `rot`.
    pub fn rotated(&self, rot: &[Vec<f64>]) -> Self {
        SphereQuadrature {
            scheme: self.scheme,
            dim: self.dim,
            nodes: self.nodes.iter().map(|u| mat_vec(rot, u)).collect(),
            weights: self.weights.clone(),
            seed: self.seed,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(u, w)| w * f(u)).sum()
    }
}
