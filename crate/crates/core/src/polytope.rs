//! Polytopes in halfspace and vertex form, vertex enumeration and facet geometry.

use itertools::Itertools;
use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::body::UnitVector;
use crate::error::{GeomError, Result};
use crate::linalg::{affine_basis, dist, dot, mean_point, norm, scale, simplex_volume, solve, sub};

/// A relative-boundary piece of a facet: an (n−2)-simplex together with the
/// in-plane outward unit normal of the ridge that contains it.
#[derive(Debug, Clone)]
pub struct RidgePiece {
    pub points: Vec<Vec<f64>>,
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Geometry of one constraint's facet. Redundant constraints keep their slot
/// with `area == 0` and no vertices.
#[derive(Debug, Clone)]
pub struct FacetGeometry {
    pub index: usize,
    pub normal: UnitVector,
    pub offset: f64,
    /// Cyclically ordered for n = 3.
    pub vertices: Vec<Vec<f64>>,
    /// Apex of the decomposition (vertex average).
    pub center: Vec<f64>,
    pub ridges: Vec<RidgePiece>,
    /// (n−1)-simplices `center ∪ ridge piece`.
    pub simplices: Vec<Vec<Vec<f64>>>,
    pub area: f64,
    pub redundant: bool,
}

/// Bounded intersection of halfspaces {x · u_i ≤ h_i} with nonempty interior.
#[derive(Debug, Clone)]
pub struct HPolytope {
    dim: usize,
    normals: Vec<UnitVector>,
    offsets: Vec<f64>,
    vertices: Vec<Vec<f64>>,
    facets: Vec<FacetGeometry>,
    volume: f64,
    centroid: Vec<f64>,
    center: Vec<f64>,
    inradius: f64,
    diameter: f64,
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (2..=6).contains(&n) {
        Ok(())
    } else {
        Err(GeomError::UnsupportedDimension(n))
    }
}

fn lp_error(e: minilp::Error) -> GeomError {
    GeomError::LinearProgram(e.to_string())
}

/// True when the vectors positively span R^n, i.e. no nonzero y has u_i·y ≤ 0 for all i.
pub fn positively_spanning(normals: &[UnitVector]) -> Result<bool> {
    let n = normals[0].dim();
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut p = Problem::new(OptimizationDirection::Maximize);
            let vars: Vec<_> = (0..n)
                .map(|j| p.add_var(if j == k { sign } else { 0.0 }, (-1.0, 1.0)))
                .collect();
            for u in normals {
                let expr: Vec<_> = vars.iter().zip(u.as_slice()).map(|(&v, &c)| (v, c)).collect();
                p.add_constraint(expr.as_slice(), ComparisonOp::Le, 0.0);
            }
            let sol = p.solve().map_err(lp_error)?;
            if sol.objective() > 1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Center and radius of the largest inscribed ball.
pub fn chebyshev_ball(normals: &[UnitVector], offsets: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = normals[0].dim();
    let big = 1e3 * offsets.iter().fold(1.0f64, |a, h| a.max(h.abs()));
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = (0..n).map(|_| p.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let r = p.add_var(1.0, (f64::NEG_INFINITY, big));
    for (u, &h) in normals.iter().zip(offsets) {
        let mut expr: Vec<_> = xs.iter().zip(u.as_slice()).map(|(&v, &c)| (v, c)).collect();
        expr.push((r, 1.0));
        p.add_constraint(expr.as_slice(), ComparisonOp::Le, h);
    }
    let sol = p.solve().map_err(lp_error)?;
    let center = xs.iter().map(|&v| sol[v]).collect();
    Ok((center, sol[r]))
}

struct Vertex {
    point: Vec<f64>,
    active: Vec<usize>,
}

impl HPolytope {
    /// Validated polytope; redundant constraints are kept with zero-area facets.
    pub fn new(normals: Vec<UnitVector>, offsets: Vec<f64>) -> Result<Self> {
        if normals.is_empty() || normals.len() != offsets.len() {
            return Err(GeomError::InvalidInput(format!(
                "{} normals but {} offsets",
                normals.len(),
                offsets.len()
            )));
        }
        let n = normals[0].dim();
        check_dim(n)?;
        for u in &normals {
            if u.dim() != n {
                return Err(GeomError::DimensionMismatch { expected: n, got: u.dim() });
            }
        }
        if offsets.iter().any(|h| !h.is_finite()) {
            return Err(GeomError::InvalidInput("non-finite offset".into()));
        }
        if normals.len() <= n || !positively_spanning(&normals)? {
            return Err(GeomError::Unbounded);
        }
        let hmax = offsets.iter().fold(0.0f64, |a, h| a.max(h.abs()));
        let eps_deg = 1e-10 * hmax;
        let (center, inradius) = chebyshev_ball(&normals, &offsets)?;
        if !(inradius >= eps_deg) || inradius <= 0.0 {
            return Err(GeomError::EmptyInterior { inradius, threshold: eps_deg });
        }
        let scale_len = hmax.max(norm(&center) + inradius);
        let verts = enumerate_vertices(&normals, &offsets, scale_len);
        let points: Vec<Vec<f64>> = verts.iter().map(|v| v.point.clone()).collect();
        let rank = affine_basis(&points, 1e-9 * scale_len).len();
        if rank < n {
            return Err(GeomError::DegenerateHull { rank, dim: n });
        }
        let diameter = points
            .iter()
            .tuple_combinations()
            .map(|(a, b)| dist(a, b))
            .fold(0.0, f64::max);
        let facets = build_facets(&normals, &offsets, &verts, diameter);

        let mut volume = 0.0;
        let mut moment = vec![0.0; n];
        for f in facets.iter().filter(|f| !f.redundant) {
            for s in &f.simplices {
                let mut cone = s.clone();
                cone.push(center.clone());
                let v = simplex_volume(&cone);
                volume += v;
                let c = mean_point(&cone);
                for (m, ci) in moment.iter_mut().zip(&c) {
                    *m += v * ci;
                }
            }
        }
        let centroid = scale(&moment, 1.0 / volume);
        Ok(HPolytope {
            dim: n,
            normals,
            offsets,
            vertices: points,
            facets,
            volume,
            centroid,
            center,
            inradius,
            diameter,
        })
    }

    /// Normals are normalized and offsets divided by their lengths.
    pub fn from_raw(normals: &[Vec<f64>], offsets: &[f64]) -> Result<Self> {
        let mut us = Vec::with_capacity(normals.len());
        let mut hs = Vec::with_capacity(normals.len());
        for (u, &h) in normals.iter().zip(offsets) {
            let l = norm(u);
            if !(l > 0.0) {
                return Err(GeomError::InvalidInput("zero normal".into()));
            }
            us.push(UnitVector::new(u.clone())?);
            hs.push(h / l);
        }
        Self::new(us, hs)
    }

    /// Box with the given half-widths, centered at the origin.
    pub fn cuboid(half_widths: &[f64]) -> Result<Self> {
        let n = half_widths.len();
        let mut normals = Vec::with_capacity(2 * n);
        let mut offsets = Vec::with_capacity(2 * n);
        for (i, &a) in half_widths.iter().enumerate() {
            for s in [1.0, -1.0] {
                normals.push(UnitVector::axis(n, i, s));
                offsets.push(a);
            }
        }
        Self::new(normals, offsets)
    }

    /// The cube [−a, a]^n.
    pub fn cube(n: usize, a: f64) -> Result<Self> {
        Self::cuboid(&vec![a; n])
    }

    /// Axis-parallel box [lo, hi].
    pub fn aabb(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let n = lo.len();
        let mut normals = Vec::with_capacity(2 * n);
        let mut offsets = Vec::with_capacity(2 * n);
        for i in 0..n {
            normals.push(UnitVector::axis(n, i, 1.0));
            offsets.push(hi[i]);
            normals.push(UnitVector::axis(n, i, -1.0));
            offsets.push(-lo[i]);
        }
        Self::new(normals, offsets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn normals(&self) -> &[UnitVector] {
        &self.normals
    }
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }
    pub fn len(&self) -> usize {
        self.normals.len()
    }
    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }
    pub fn facets(&self) -> &[FacetGeometry] {
        &self.facets
    }
    pub fn volume(&self) -> f64 {
        self.volume
    }
    pub fn surface_area(&self) -> f64 {
        self.facets.iter().map(|f| f.area).sum()
    }
    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }
    /// Center of the largest inscribed ball.
    pub fn chebyshev_center(&self) -> &[f64] {
        &self.center
    }
    pub fn inradius(&self) -> f64 {
        self.inradius
    }
    pub fn diameter(&self) -> f64 {
        self.diameter
    }
    pub fn areas(&self) -> Vec<f64> {
        self.facets.iter().map(|f| f.area).collect()
    }
    pub fn redundant(&self) -> Vec<usize> {
        self.facets.iter().filter(|f| f.redundant).map(|f| f.index).collect()
    }

    pub fn support(&self, v: &[f64]) -> f64 {
        self.vertices.iter().map(|x| dot(x, v)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Support values at the polytope's own normals (tight offsets).
    pub fn tight_offsets(&self) -> Vec<f64> {
        self.normals.iter().map(|u| self.support(u.as_slice())).collect()
    }

    /// Parameter interval of the line z + t·u inside the polytope.
    pub fn clip(&self, z: &[f64], u: &[f64]) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (n, &h) in self.normals.iter().zip(&self.offsets) {
            let a = dot(n.as_slice(), u);
            let b = h - dot(n.as_slice(), z);
            if a > 1e-300 {
                hi = hi.min(b / a);
            } else if a < -1e-300 {
                lo = lo.max(b / a);
            } else if b < 0.0 {
                return None;
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(n, &h)| dot(n.as_slice(), x) <= h)
    }

    /// max_i (x·u_i − h_i): negative inside, zero on the boundary.
    pub fn max_violation(&self, x: &[f64]) -> (usize, f64) {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, &h)| dot(n.as_slice(), x) - h)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }

    /// Same normal set with offsets h_i + u_i·y.
    pub fn translate(&self, y: &[f64]) -> Result<Self> {
        let h = self
            .normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, &h)| h + dot(n.as_slice(), y))
            .collect();
        Self::new(self.normals.clone(), h)
    }

    pub fn scale(&self, t: f64) -> Result<Self> {
        Self::new(self.normals.clone(), self.offsets.iter().map(|h| t * h).collect())
    }

    /// Same normals with new offsets.
    pub fn with_offsets(&self, offsets: Vec<f64>) -> Result<Self> {
        Self::new(self.normals.clone(), offsets)
    }

    /// Largest distance from the centroid to a vertex.
    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| dist(v, &self.centroid)).fold(0.0, f64::max)
    }
}

/// Wulff shape {x : x·u_i ≤ h_i}; redundant constraints keep their index.
pub fn wulff(normals: &[UnitVector], h: &[f64]) -> Result<HPolytope> {
    HPolytope::new(normals.to_vec(), h.to_vec())
}

fn enumerate_vertices(normals: &[UnitVector], offsets: &[f64], scale_len: f64) -> Vec<Vertex> {
    let n = normals[0].dim();
    let m = normals.len();
    let feas_tol = 1e-9 * scale_len;
    let dedup_tol = 1e-8 * scale_len;
    let mut out: Vec<Vertex> = Vec::new();
    for combo in (0..m).combinations(n) {
        let rows: Vec<&[f64]> = combo.iter().map(|&i| normals[i].as_slice()).collect();
        let rhs: Vec<f64> = combo.iter().map(|&i| offsets[i]).collect();
        let Some(x) = solve(&rows, &rhs) else { continue };
        if normals
            .iter()
            .zip(offsets)
            .any(|(u, &h)| dot(u.as_slice(), &x) > h + feas_tol)
        {
            continue;
        }
        if out.iter().any(|v| dist(&v.point, &x) <= dedup_tol) {
            continue;
        }
        out.push(Vertex { point: x, active: Vec::new() });
    }
    for v in out.iter_mut() {
        v.active = (0..m)
            .filter(|&i| (dot(normals[i].as_slice(), &v.point) - offsets[i]).abs() <= feas_tol)
            .collect();
    }
    out
}

fn build_facets(
    normals: &[UnitVector],
    offsets: &[f64],
    verts: &[Vertex],
    diameter: f64,
) -> Vec<FacetGeometry> {
    let n = normals[0].dim();
    let tol = 1e-9 * diameter.max(1e-300);
    let eps_area = 1e-12 * diameter.powi(n as i32 - 1);
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut facets = Vec::with_capacity(normals.len());
    for (i, (u, &h)) in normals.iter().zip(offsets).enumerate() {
        let ids: Vec<usize> = (0..verts.len()).filter(|&k| verts[k].active.contains(&i)).collect();
        let pts: Vec<Vec<f64>> = ids.iter().map(|&k| verts[k].point.clone()).collect();
        let empty = FacetGeometry {
            index: i,
            normal: u.clone(),
            offset: h,
            vertices: Vec::new(),
            center: Vec::new(),
            ridges: Vec::new(),
            simplices: Vec::new(),
            area: 0.0,
            redundant: true,
        };
        if ids.len() < n || affine_basis(&pts, tol).len() != n - 1 || seen.contains(&ids) {
            facets.push(empty);
            continue;
        }
        let center = mean_point(&pts);
        let mut ridges = Vec::new();
        for face in subfaces(&ids, n - 1, verts, tol) {
            let sub_pts: Vec<Vec<f64>> = face.iter().map(|&k| verts[k].point.clone()).collect();
            let basis = affine_basis(&sub_pts, tol);
            let mut w = sub(&sub_pts[0], &center);
            for b in basis.iter().chain(std::iter::once(&u.as_slice().to_vec())) {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
            let Some(nu) = crate::linalg::normalized(&w) else { continue };
            let offset = dot(&nu, &sub_pts[0]);
            for simplex in face_simplices(&face, n - 2, verts, tol) {
                ridges.push(RidgePiece { points: simplex, normal: nu.clone(), offset });
            }
        }
        let simplices: Vec<Vec<Vec<f64>>> = ridges
            .iter()
            .map(|r| {
                let mut s = vec![center.clone()];
                s.extend(r.points.iter().cloned());
                s
            })
            .collect();
        let area: f64 = simplices.iter().map(|s| simplex_volume(s)).sum();
        if area <= eps_area {
            facets.push(empty);
            continue;
        }
        seen.push(ids);
        let vertices = if n == 3 { cyclic_order(&pts, &center, u.as_slice()) } else { pts };
        facets.push(FacetGeometry {
            index: i,
            normal: u.clone(),
            offset: h,
            vertices,
            center,
            ridges,
            simplices,
            area,
            redundant: false,
        });
    }
    facets
}

/// Maximal proper faces (dimension d−1) of the d-face with vertex ids `face`.
fn subfaces(face: &[usize], d: usize, verts: &[Vertex], tol: f64) -> Vec<Vec<usize>> {
    let mut constraints: Vec<usize> = face.iter().flat_map(|&k| verts[k].active.iter().copied()).collect();
    constraints.sort_unstable();
    constraints.dedup();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for j in constraints {
        let sub: Vec<usize> = face.iter().copied().filter(|&k| verts[k].active.contains(&j)).collect();
        if sub.len() < d || sub.len() == face.len() || out.contains(&sub) {
            continue;
        }
        let pts: Vec<Vec<f64>> = sub.iter().map(|&k| verts[k].point.clone()).collect();
        if affine_basis(&pts, tol).len() == d - 1 {
            out.push(sub);
        }
    }
    out
}

/// Simplicial decomposition of a d-face by pulling from vertex averages.
fn face_simplices(face: &[usize], d: usize, verts: &[Vertex], tol: f64) -> Vec<Vec<Vec<f64>>> {
    let pts: Vec<Vec<f64>> = face.iter().map(|&k| verts[k].point.clone()).collect();
    if face.len() == d + 1 {
        return vec![pts];
    }
    let apex = mean_point(&pts);
    let mut out = Vec::new();
    for sub in subfaces(face, d, verts, tol) {
        for s in face_simplices(&sub, d - 1, verts, tol) {
            let mut simplex = vec![apex.clone()];
            simplex.extend(s);
            out.push(simplex);
        }
    }
    out
}

fn cyclic_order(pts: &[Vec<f64>], center: &[f64], normal: &[f64]) -> Vec<Vec<f64>> {
    let basis = crate::linalg::complement_basis(normal);
    let mut keyed: Vec<(f64, Vec<f64>)> = pts
        .iter()
        .map(|p| {
            let d = sub(p, center);
            (dot(&d, &basis[1]).atan2(dot(&d, &basis[0])), p.clone())
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Orient counterclockwise seen from outside.
    let out: Vec<Vec<f64>> = keyed.into_iter().map(|(_, p)| p).collect();
    if out.len() >= 3 {
        let a = sub(&out[1], &out[0]);
        let b = sub(&out[2], &out[0]);
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        if dot(&cross, normal) < 0.0 {
            return out.into_iter().rev().collect();
        }
    }
    out
}

/// Convex hull of a point set, kept together with its halfspace form.
#[derive(Debug, Clone)]
pub struct VPolytope {
    vertices: Vec<Vec<f64>>,
    hrep: HPolytope,
}

impl VPolytope {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(GeomError::InvalidInput("empty vertex list".into()));
        }
        let n = points[0].len();
        check_dim(n)?;
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: p.len() });
        }
        let scale_len = points.iter().map(|p| norm(p)).fold(0.0, f64::max).max(1e-300);
        let tol = 1e-9 * scale_len;
        let rank = affine_basis(&points, tol).len();
        if rank < n {
            return Err(GeomError::DegenerateHull { rank, dim: n });
        }
        let mut normals: Vec<UnitVector> = Vec::new();
        let mut offsets: Vec<f64> = Vec::new();
        for combo in (0..points.len()).combinations(n) {
            let base = &points[combo[0]];
            let diffs: Vec<Vec<f64>> = combo[1..].iter().map(|&k| sub(&points[k], base)).collect();
            let Some(u) = null_direction(&diffs, n) else { continue };
            let h = dot(&u, base);
            let vals: Vec<f64> = points.iter().map(|p| dot(&u, p) - h).collect();
            let above = vals.iter().any(|&v| v > tol);
            let below = vals.iter().any(|&v| v < -tol);
            let (u, h) = match (above, below) {
                (false, true) => (u, h),
                (true, false) => (scale(&u, -1.0), -h),
                _ => continue,
            };
            if normals
                .iter()
                .zip(&offsets)
                .any(|(w, &g)| dist(w.as_slice(), &u) < 1e-9 && (g - h).abs() <= tol)
            {
                continue;
            }
            normals.push(UnitVector::new(u)?);
            offsets.push(h);
        }
        let hrep = HPolytope::new(normals, offsets)?;
        let vertices = hrep.vertices().to_vec();
        Ok(VPolytope { vertices, hrep })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn hrep(&self) -> &HPolytope {
        &self.hrep
    }

    pub fn dim(&self) -> usize {
        self.hrep.dim()
    }
}

/// Unit normal to the span of n−1 vectors in R^n, if they are independent.
fn null_direction(rows: &[Vec<f64>], n: usize) -> Option<Vec<f64>> {
    let basis = affine_basis(
        &std::iter::once(vec![0.0; n]).chain(rows.iter().cloned()).collect::<Vec<_>>(),
        1e-12 * rows.iter().map(|r| norm(r)).fold(0.0, f64::max),
    );
    if basis.len() != n - 1 {
        return None;
    }
    // Project coordinate axes off the span and keep the longest remainder.
    (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            for b in &basis {
                let c = dot(&e, b);
                for (ei, bi) in e.iter_mut().zip(b) {
                    *ei -= c * bi;
                }
            }
            e
        })
        .max_by(|a, b| norm(a).total_cmp(&norm(b)))
        .and_then(|e| crate::linalg::normalized(&e))
}
