//! Deterministic evaluation of Ṽ_{q−1}(P, z) for polytopes in R² and R³.
//!
//! Every direction from z ∈ P exits through some facet F_j, which turns the
//! sphere integral into a sum of facet integrals
//!   ∫_{S^{n−1}} ρ_{P,z}^{q−1} du = Σ_j d_j(z) ∫_{F_j} |y − z|^{q−1−n} dy,
//! with d_j(z) = h_j − u_j·z. Each facet integral is radial about the foot
//! point of z, so it reduces to a one-dimensional integral over the facet's
//! relative boundary.

use crate::error::{GeomError, Result};
use crate::linalg::{axpy, dot, norm, sub};
use crate::polytope::HPolytope;
use crate::special::GaussLegendre;

const INNER_ORDER: usize = 8;
const INNER_WIDTH: f64 = 2.0;

#[derive(Debug, Clone)]
struct Edge {
    a: Vec<f64>,
    dir: Vec<f64>,
    len: f64,
    nu: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Plane {
    normal: Vec<f64>,
    offset: f64,
    edges: Vec<Edge>,
}

/// Facet-potential evaluator for one polytope and one exponent q.
#[derive(Debug, Clone)]
pub struct FacetPotential {
    n: usize,
    q: f64,
    planes: Vec<Option<Plane>>,
    tiny: f64,
}

fn exprel(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

fn panels(a: f64, b: f64, width: f64) -> impl Iterator<Item = (f64, f64)> {
    let k = (((b - a).abs() / width).ceil() as usize).max(1);
    let h = (b - a) / k as f64;
    (0..k).map(move |i| (a + i as f64 * h, a + (i + 1) as f64 * h))
}

impl FacetPotential {
    pub fn new(p: &HPolytope, q: f64) -> Result<Self> {
        let n = p.dim();
        if !(2..=3).contains(&n) {
            return Err(GeomError::UnsupportedDimension(n));
        }
        if !(q > 0.0) {
            return Err(GeomError::Precondition(format!("facet potential needs q > 0, got {q}")));
        }
        let planes = p
            .facets()
            .iter()
            .map(|f| {
                if f.redundant {
                    return None;
                }
                let edges = f
                    .ridges
                    .iter()
                    .map(|r| {
                        if n == 2 {
                            Edge { a: r.points[0].clone(), dir: vec![0.0; 2], len: 0.0, nu: r.normal.clone() }
                        } else {
                            let d = sub(&r.points[1], &r.points[0]);
                            let len = norm(&d);
                            Edge { a: r.points[0].clone(), dir: d.iter().map(|x| x / len).collect(), len, nu: r.normal.clone() }
                        }
                    })
                    .collect();
                Some(Plane { normal: f.normal.as_slice().to_vec(), offset: f.offset, edges })
            })
            .collect();
        Ok(FacetPotential { n, q, planes, tiny: 1e-13 * p.diameter() })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// G(R) = ∫_0^R (d² + s²)^{(q−1−n)/2} s^{n−2} ds.
    fn radial(&self, r: f64, d: f64) -> f64 {
        let q = self.q;
        if self.n == 3 {
            let l = (r / d).powi(2).ln_1p();
            d.powf(q - 2.0) * 0.5 * l * exprel(0.5 * (q - 2.0) * l)
        } else {
            // s = d sinh w turns the integrand into d^{q−2} cosh^{q−2} w.
            let top = (r / d).asinh();
            let gl = GaussLegendre::cached(INNER_ORDER);
            let mut acc = 0.0;
            for (a, b) in panels(0.0, top, INNER_WIDTH) {
                acc += gl.integrate(a, b, |w| w.cosh().powf(q - 2.0));
            }
            d.powf(q - 2.0) * acc
        }
    }

    /// d_j(z) ∫_{F_j} |y − z|^{q−1−n} dy.
    pub fn contribution(&self, j: usize, z: &[f64]) -> f64 {
        let Some(plane) = &self.planes[j] else { return 0.0 };
        let d = plane.offset - dot(&plane.normal, z);
        if d <= self.tiny {
            return 0.0;
        }
        let p = axpy(z, d, &plane.normal);
        let mut acc = 0.0;
        if self.n == 2 {
            for e in &plane.edges {
                let s = dot(&e.nu, &sub(&e.a, &p));
                if s.abs() > self.tiny {
                    acc += s.signum() * self.radial(s.abs(), d);
                }
            }
        } else {
            let gl = GaussLegendre::cached(INNER_ORDER);
            for e in &plane.edges {
                let w = sub(&e.a, &p);
                let s = dot(&e.nu, &w);
                let dist = s.abs();
                if dist <= self.tiny {
                    continue;
                }
                let x1 = dot(&e.dir, &w);
                let x2 = x1 + e.len;
                let (v1, v2) = ((x1 / dist).asinh(), (x2 / dist).asinh());
                let mut edge = 0.0;
                for (a, b) in panels(v1, v2, INNER_WIDTH) {
                    edge += gl.integrate(a, b, |v| {
                        let c = v.cosh();
                        self.radial(dist * c, d) / c
                    });
                }
                acc += s.signum() * edge;
            }
        }
        d * acc
    }

    /// Ṽ_{q−1}(P, z) for z ∈ P; `skip` names the facet containing a boundary point.
    pub fn dual_v(&self, z: &[f64], skip: Option<usize>) -> f64 {
        let s: f64 = (0..self.planes.len())
            .filter(|&j| Some(j) != skip)
            .map(|j| self.contribution(j, z))
            .sum();
        s / self.n as f64
    }
}
