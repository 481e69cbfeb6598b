//! Convex bodies: unit vectors, balls, ellipsoids and the tagged `Body` union.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{add, dot, mat_t_vec, mat_vec, norm, scale, sub};
use crate::polytope::{check_dim, HPolytope, VPolytope};
use crate::special::{omega, sphere_area};
use crate::sphere::SphereQuadrature;

/// Element of S^{n−1}; renormalized on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let l = norm(&v);
        if !(l > 0.0 && l.is_finite()) {
            return Err(GeomError::InvalidInput("cannot normalize zero or non-finite vector".into()));
        }
        Ok(UnitVector(scale(&v, 1.0 / l)))
    }

    /// ±e_i in R^n.
    pub fn axis(n: usize, i: usize, sign: f64) -> Self {
        let mut v = vec![0.0; n];
        v[i] = sign.signum();
        UnitVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn neg(&self) -> Self {
        UnitVector(self.0.iter().map(|x| -x).collect())
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = GeomError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        UnitVector::new(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Self {
        u.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(center.len())?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeomError::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn unit(n: usize) -> Result<Self> {
        Ball::new(vec![0.0; n], 1.0)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// {x : Σ ((x−c)·e_i)² / a_i² ≤ 1} with a_1 ≤ … ≤ a_n.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: Vec<f64>,
    semi_axes: Vec<f64>,
    frame: Vec<Vec<f64>>,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, semi_axes: Vec<f64>, frame: Vec<Vec<f64>>) -> Result<Self> {
        let n = center.len();
        check_dim(n)?;
        if semi_axes.len() != n || frame.len() != n || frame.iter().any(|r| r.len() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: semi_axes.len() });
        }
        if semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(GeomError::InvalidInput("semi-axes must be positive".into()));
        }
        if semi_axes.windows(2).any(|w| w[0] > w[1]) {
            return Err(GeomError::InvalidInput("semi-axes must be ascending".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                if (dot(&frame[i], &frame[j]) - e).abs() > 1e-12 {
                    return Err(GeomError::InvalidInput("frame is not orthonormal".into()));
                }
            }
        }
        Ok(Ellipsoid { center, semi_axes, frame })
    }

    /// Axis-aligned ellipsoid; axes are sorted and the frame permuted to match.
    pub fn axis_aligned(center: Vec<f64>, semi_axes: &[f64]) -> Result<Self> {
        let n = semi_axes.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| semi_axes[a].total_cmp(&semi_axes[b]));
        let axes = order.iter().map(|&i| semi_axes[i]).collect();
        let frame = order
            .iter()
            .map(|&i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        Ellipsoid::new(center, axes, frame)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }
    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    fn local(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.frame, &sub(x, &self.center))
    }

    /// Σ (y_i/a_i)² in frame coordinates; 1 on the boundary.
    pub fn gauge_sq(&self, x: &[f64]) -> f64 {
        self.local(x).iter().zip(&self.semi_axes).map(|(y, a)| (y / a).powi(2)).sum()
    }

    /// Outer unit normal at a boundary point.
    pub fn normal_at(&self, x: &[f64]) -> Vec<f64> {
        let y = self.local(x);
        let g: Vec<f64> = y.iter().zip(&self.semi_axes).map(|(y, a)| y / (a * a)).collect();
        let g = mat_t_vec(&self.frame, &g);
        scale(&g, 1.0 / norm(&g))
    }

    /// Arithmetic mean of the principal curvatures at a boundary point.
    pub fn mean_curvature(&self, x: &[f64]) -> f64 {
        let n = self.center.len() as f64;
        let y = self.local(x);
        let g: Vec<f64> = y.iter().zip(&self.semi_axes).map(|(y, a)| 2.0 * y / (a * a)).collect();
        let gn = norm(&g);
        let trace: f64 = self.semi_axes.iter().map(|a| 2.0 / (a * a)).sum();
        let quad: f64 = g.iter().zip(&self.semi_axes).map(|(gi, a)| (gi / gn).powi(2) * 2.0 / (a * a)).sum();
        (trace - quad) / ((n - 1.0) * gn)
    }

    /// Boundary point in direction ω of the parametrization ω ↦ c + Σ a_i ω_i e_i.
    pub fn boundary_point(&self, omega_dir: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = omega_dir.iter().zip(&self.semi_axes).map(|(w, a)| w * a).collect();
        add(&self.center, &mat_t_vec(&self.frame, &y))
    }

    /// Chord length from a boundary point z along u with u·ν(z) = −c, c ≥ 0.
    /// Uses the factored root 2c|g|/Q(u), which stays accurate as c → 0.
    pub fn boundary_chord(&self, z: &[f64], u: &[f64], c: f64) -> f64 {
        let y = self.local(z);
        let v = mat_vec(&self.frame, u);
        let g = norm(&y.iter().zip(&self.semi_axes).map(|(y, a)| y / (a * a)).collect::<Vec<_>>());
        let q: f64 = v.iter().zip(&self.semi_axes).map(|(v, a)| (v / a).powi(2)).sum();
        2.0 * c * g / q
    }

    /// Surface element of the parametrization at ω: Πa · |A^{-1}ω|.
    pub fn surface_jacobian(&self, omega_dir: &[f64]) -> f64 {
        let det: f64 = self.semi_axes.iter().product();
        let s: f64 = omega_dir.iter().zip(&self.semi_axes).map(|(w, a)| (w / a).powi(2)).sum();
        det * s.sqrt()
    }
}

/// A convex body in one of four representations.
#[derive(Debug, Clone)]
pub enum Body {
    HPolytope(HPolytope),
    VPolytope(VPolytope),
    Ball(Ball),
    Ellipsoid(Ellipsoid),
}

fn quadratic_clip(y: &[f64], d: &[f64], axes: &[f64]) -> Option<(f64, f64)> {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = -1.0;
    for ((yi, di), ai) in y.iter().zip(d).zip(axes) {
        let w = 1.0 / (ai * ai);
        a += di * di * w;
        b += yi * di * w;
        c += yi * yi * w;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let qq = -(b + if b >= 0.0 { s } else { -s });
    if qq == 0.0 {
        return Some((0.0, 0.0));
    }
    let t1 = qq / a;
    let t2 = c / qq;
    Some((t1.min(t2), t1.max(t2)))
}

impl Body {
    pub fn dim(&self) -> usize {
        match self {
            Body::HPolytope(p) => p.dim(),
            Body::VPolytope(p) => p.dim(),
            Body::Ball(b) => b.center.len(),
            Body::Ellipsoid(e) => e.center.len(),
        }
    }

    /// Halfspace form for polytopes.
    pub fn as_polytope(&self) -> Option<&HPolytope> {
        match self {
            Body::HPolytope(p) => Some(p),
            Body::VPolytope(v) => Some(v.hrep()),
            _ => None,
        }
    }

    /// h_K(v) = max{x·v : x ∈ K}.
    pub fn support(&self, v: &[f64]) -> f64 {
        match self {
            Body::HPolytope(p) => p.support(v),
            Body::VPolytope(p) => p.vertices().iter().map(|x| dot(x, v)).fold(f64::NEG_INFINITY, f64::max),
            Body::Ball(b) => dot(&b.center, v) + b.radius * norm(v),
            Body::Ellipsoid(e) => {
                let w = mat_vec(&e.frame, v);
                let s: f64 = w.iter().zip(&e.semi_axes).map(|(wi, a)| (a * wi).powi(2)).sum();
                dot(&e.center, v) + s.sqrt()
            }
        }
    }

    /// Interval [t−, t+] of the line z + t·u inside K, if nonempty.
    pub fn clip(&self, z: &[f64], u: &[f64]) -> Option<(f64, f64)> {
        match self {
            Body::HPolytope(p) => p.clip(z, u),
            Body::VPolytope(p) => p.hrep().clip(z, u),
            Body::Ball(b) => {
                let y = sub(z, &b.center);
                quadratic_clip(&y, u, &vec![b.radius; y.len()])
            }
            Body::Ellipsoid(e) => {
                let y = e.local(z);
                let d = mat_vec(&e.frame, u);
                quadratic_clip(&y, &d, &e.semi_axes)
            }
        }
    }

    /// Extended radial function: largest λ with z + λu ∈ K, 0 if the line misses K.
    pub fn radial_extended(&self, z: &[f64], u: &[f64]) -> f64 {
        self.clip(z, u).map_or(0.0, |(_, hi)| hi)
    }

    /// Parallel X-ray: length of K ∩ (x + ℝu).
    pub fn xray(&self, x: &[f64], u: &[f64]) -> f64 {
        self.clip(x, u).map_or(0.0, |(lo, hi)| (hi - lo).max(0.0))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Body::HPolytope(p) => p.contains(x),
            Body::VPolytope(p) => p.hrep().contains(x),
            Body::Ball(b) => crate::linalg::dist(x, &b.center) <= b.radius,
            Body::Ellipsoid(e) => e.gauge_sq(x) <= 1.0,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Body::HPolytope(p) => p.volume(),
            Body::VPolytope(p) => p.hrep().volume(),
            Body::Ball(b) => omega(b.center.len()) * b.radius.powi(b.center.len() as i32),
            Body::Ellipsoid(e) => omega(e.center.len()) * e.semi_axes.iter().product::<f64>(),
        }
    }

    /// Exact for polytopes and balls; ellipsoids use a product-grid sphere rule.
    pub fn surface_area(&self) -> f64 {
        match self {
            Body::HPolytope(p) => p.surface_area(),
            Body::VPolytope(p) => p.hrep().surface_area(),
            Body::Ball(b) => {
                let n = b.center.len();
                sphere_area(n) * b.radius.powi(n as i32 - 1)
            }
            Body::Ellipsoid(e) => {
                let n = e.center.len();
                let order = match n {
                    2 => 256,
                    3 => 96,
                    4 => 32,
                    _ => 12,
                };
                SphereQuadrature::product(n, order).integrate(|w| e.surface_jacobian(w))
            }
        }
    }

    /// Volume centroid.
    pub fn centroid(&self) -> Vec<f64> {
        match self {
            Body::HPolytope(p) => p.centroid().to_vec(),
            Body::VPolytope(p) => p.hrep().centroid().to_vec(),
            Body::Ball(b) => b.center.clone(),
            Body::Ellipsoid(e) => e.center.clone(),
        }
    }

    /// Radius of the smallest ball about the centroid containing K.
    pub fn circumradius(&self) -> f64 {
        match self {
            Body::HPolytope(p) => p.circumradius(),
            Body::VPolytope(p) => p.hrep().circumradius(),
            Body::Ball(b) => b.radius,
            Body::Ellipsoid(e) => *e.semi_axes.last().unwrap(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Body::HPolytope(p) => p.diameter(),
            Body::VPolytope(p) => p.hrep().diameter(),
            Body::Ball(b) => 2.0 * b.radius,
            Body::Ellipsoid(e) => 2.0 * e.semi_axes.last().unwrap(),
        }
    }

    /// Axis-aligned bounding box (lo, hi).
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            hi[i] = self.support(&e);
            e[i] = -1.0;
            lo[i] = -self.support(&e);
        }
        (lo, hi)
    }

    /// Boundary classification of z: `Some(outer normal)` when z ∈ ∂K (relative
    /// tolerance `tol`), `None` when z is interior; `Err(PointOutside)` otherwise.
    pub fn boundary_normal(&self, z: &[f64], tol: f64) -> Result<Option<Vec<f64>>> {
        let scale_len = self.diameter();
        match self {
            Body::HPolytope(_) | Body::VPolytope(_) => {
                let p = self.as_polytope().unwrap();
                let (i, v) = p.max_violation(z);
                if v > tol * scale_len {
                    Err(GeomError::PointOutside)
                } else if v >= -tol * scale_len {
                    Ok(Some(p.normals()[i].as_slice().to_vec()))
                } else {
                    Ok(None)
                }
            }
            Body::Ball(b) => {
                let r = crate::linalg::dist(z, &b.center);
                if r > b.radius * (1.0 + tol) {
                    Err(GeomError::PointOutside)
                } else if r >= b.radius * (1.0 - tol) {
                    Ok(Some(scale(&sub(z, &b.center), 1.0 / r)))
                } else {
                    Ok(None)
                }
            }
            Body::Ellipsoid(e) => {
                let g = e.gauge_sq(z).sqrt();
                if g > 1.0 + tol {
                    Err(GeomError::PointOutside)
                } else if g >= 1.0 - tol {
                    Ok(Some(e.normal_at(z)))
                } else {
                    Ok(None)
                }
            }
        }
    }

    /// K + y.
    pub fn translate(&self, y: &[f64]) -> Result<Body> {
        Ok(match self {
            Body::HPolytope(p) => Body::HPolytope(p.translate(y)?),
            Body::VPolytope(p) => Body::VPolytope(VPolytope::new(p.vertices().iter().map(|v| add(v, y)).collect())?),
            Body::Ball(b) => Body::Ball(Ball::new(add(&b.center, y), b.radius)?),
            Body::Ellipsoid(e) => Body::Ellipsoid(Ellipsoid::new(add(&e.center, y), e.semi_axes.clone(), e.frame.clone())?),
        })
    }

    /// tK for t > 0 (dilation about the origin).
    pub fn dilate(&self, t: f64) -> Result<Body> {
        if !(t > 0.0) {
            return Err(GeomError::InvalidInput("dilation factor must be positive".into()));
        }
        Ok(match self {
            Body::HPolytope(p) => Body::HPolytope(p.scale(t)?),
            Body::VPolytope(p) => Body::VPolytope(VPolytope::new(p.vertices().iter().map(|v| scale(v, t)).collect())?),
            Body::Ball(b) => Body::Ball(Ball::new(scale(&b.center, t), t * b.radius)?),
            Body::Ellipsoid(e) => Body::Ellipsoid(Ellipsoid::new(
                scale(&e.center, t),
                e.semi_axes.iter().map(|a| t * a).collect(),
                e.frame.clone(),
            )?),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Body::HPolytope(_) => "hpolytope",
            Body::VPolytope(_) => "vpolytope",
            Body::Ball(_) => "ball",
            Body::Ellipsoid(_) => "ellipsoid",
        }
    }
}

impl From<HPolytope> for Body {
    fn from(p: HPolytope) -> Self {
        Body::HPolytope(p)
    }
}
impl From<Ball> for Body {
    fn from(b: Ball) -> Self {
        Body::Ball(b)
    }
}
impl From<Ellipsoid> for Body {
    fn from(e: Ellipsoid) -> Self {
        Body::Ellipsoid(e)
    }
}
impl From<VPolytope> for Body {
    fn from(v: VPolytope) -> Self {
        Body::VPolytope(v)
    }
}

/// A real number given either as a JSON number or as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NumRepr", into = "f64")]
pub struct Num(pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum NumRepr {
    F(f64),
    S(String),
}

impl TryFrom<NumRepr> for Num {
    type Error = String;
    fn try_from(r: NumRepr) -> std::result::Result<Self, String> {
        match r {
            NumRepr::F(x) => Ok(Num(x)),
            NumRepr::S(s) => s.trim().parse::<f64>().map(Num).map_err(|e| format!("bad decimal {s:?}: {e}")),
        }
    }
}

impl From<Num> for f64 {
    fn from(n: Num) -> f64 {
        n.0
    }
}

fn nums(v: &[Num]) -> Vec<f64> {
    v.iter().map(|x| x.0).collect()
}

fn to_nums(v: &[f64]) -> Vec<Num> {
    v.iter().map(|&x| Num(x)).collect()
}

/// Serialized form of a body: `{"kind": ..., "dim": n, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodySpec {
    Hpolytope { dim: usize, normals: Vec<Vec<Num>>, offsets: Vec<Num> },
    Vpolytope { dim: usize, vertices: Vec<Vec<Num>> },
    Ball { dim: usize, #[serde(default)] center: Option<Vec<Num>>, radius: Num },
    Ellipsoid {
        dim: usize,
        #[serde(default)]
        center: Option<Vec<Num>>,
        semi_axes: Vec<Num>,
        #[serde(default)]
        frame: Option<Vec<Vec<Num>>>,
    },
}

fn expect_len(what: &str, got: usize, dim: usize) -> Result<()> {
    if got != dim {
        return Err(GeomError::InvalidInput(format!("{what}: expected {dim} coordinates, got {got}")));
    }
    Ok(())
}

impl TryFrom<&BodySpec> for Body {
    type Error = GeomError;
    fn try_from(spec: &BodySpec) -> Result<Body> {
        match spec {
            BodySpec::Hpolytope { dim, normals, offsets } => {
                for (i, u) in normals.iter().enumerate() {
                    expect_len(&format!("normals[{i}]"), u.len(), *dim)?;
                }
                let us: Vec<Vec<f64>> = normals.iter().map(|u| nums(u)).collect();
                Ok(Body::HPolytope(HPolytope::from_raw(&us, &nums(offsets))?))
            }
            BodySpec::Vpolytope { dim, vertices } => {
                for (i, v) in vertices.iter().enumerate() {
                    expect_len(&format!("vertices[{i}]"), v.len(), *dim)?;
                }
                Ok(Body::VPolytope(VPolytope::new(vertices.iter().map(|v| nums(v)).collect())?))
            }
            BodySpec::Ball { dim, center, radius } => {
                let c = center.as_ref().map_or(vec![0.0; *dim], |c| nums(c));
                expect_len("center", c.len(), *dim)?;
                Ok(Body::Ball(Ball::new(c, radius.0)?))
            }
            BodySpec::Ellipsoid { dim, center, semi_axes, frame } => {
                let c = center.as_ref().map_or(vec![0.0; *dim], |c| nums(c));
                expect_len("center", c.len(), *dim)?;
                expect_len("semi_axes", semi_axes.len(), *dim)?;
                match frame {
                    None => Ok(Body::Ellipsoid(Ellipsoid::axis_aligned(c, &nums(semi_axes))?)),
                    Some(f) => Ok(Body::Ellipsoid(Ellipsoid::new(c, nums(semi_axes), f.iter().map(|r| nums(r)).collect())?)),
                }
            }
        }
    }
}

impl From<&Body> for BodySpec {
    fn from(b: &Body) -> BodySpec {
        match b {
            Body::HPolytope(p) => BodySpec::Hpolytope {
                dim: p.dim(),
                normals: p.normals().iter().map(|u| to_nums(u.as_slice())).collect(),
                offsets: to_nums(p.offsets()),
            },
            Body::VPolytope(p) => BodySpec::Vpolytope {
                dim: p.dim(),
                vertices: p.vertices().iter().map(|v| to_nums(v)).collect(),
            },
            Body::Ball(x) => BodySpec::Ball {
                dim: x.center.len(),
                center: Some(to_nums(&x.center)),
                radius: Num(x.radius),
            },
            Body::Ellipsoid(e) => BodySpec::Ellipsoid {
                dim: e.center.len(),
                center: Some(to_nums(&e.center)),
                semi_axes: to_nums(&e.semi_axes),
                frame: Some(e.frame.iter().map(|r| to_nums(r)).collect()),
            },
        }
    }
}

/// Deterministic direction grid on S^{n−1} with roughly `resolution` points.
pub fn direction_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    match n {
        2 => {
            for k in 0..resolution {
                let t = std::f64::consts::TAU * k as f64 / resolution as f64;
                out.push(vec![t.cos(), t.sin()]);
            }
        }
        3 => {
            // Fibonacci lattice.
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for k in 0..resolution {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / resolution as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * k as f64;
                out.push(vec![r * phi.cos(), r * phi.sin(), z]);
            }
        }
        _ => {
            let mut rng = crate::rng::substream(0, crate::rng::stream_id("direction-grid", n as u64));
            for _ in 0..resolution {
                out.push(crate::rng::unit_vector(&mut rng, n));
            }
        }
    }
    for i in 0..n {
        for s in [1.0, -1.0] {
            out.push(UnitVector::axis(n, i, s).0);
        }
    }
    out
}

/// max |h_K(v) − h_L(v)| over the direction grid plus both bodies' facet normals.
pub fn hausdorff_distance(k: &Body, l: &Body, resolution: usize) -> Result<f64> {
    if k.dim() != l.dim() {
        return Err(GeomError::DimensionMismatch { expected: k.dim(), got: l.dim() });
    }
    let mut dirs = direction_grid(k.dim(), resolution);
    for b in [k, l] {
        if let Some(p) = b.as_polytope() {
            dirs.extend(p.normals().iter().map(|u| u.as_slice().to_vec()));
        }
    }
    Ok(dirs.iter().map(|v| (k.support(v) - l.support(v)).abs()).fold(0.0, f64::max))
}

/// Hausdorff distance after translating both bodies' centroids to the origin.
pub fn hausdorff_up_to_translation(k: &Body, l: &Body, resolution: usize) -> Result<f64> {
    let kc = k.translate(&scale(&k.centroid(), -1.0))?;
    let lc = l.translate(&scale(&l.centroid(), -1.0))?;
    hausdorff_distance(&kc, &lc, resolution)
}
