//! Subspace concentration of cone-chord measures, the sharpness family of
//! thin boxes, and the ellipsoid estimates behind the log-Minkowski existence
//! argument.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{Body, Ellipsoid, UnitVector};
use crate::chord::{chord_closed, chord_line_mc, ChordEstimate};
use crate::error::{GeomError, Result};
use crate::linalg::{dot, norm};
use crate::measure::{DiscreteSphericalMeasure, MeasureConfig};
use crate::polytope::HPolytope;
use crate::solve::{cone_masses, validate_log_data};
use crate::special::omega;

/// Orthonormal basis of a k-dimensional subspace, 1 ≤ k ≤ n−1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSpec {
    basis: Vec<UnitVector>,
}

impl SubspaceSpec {
    pub fn new(basis: Vec<UnitVector>) -> Result<Self> {
        let k = basis.len();
        let n = basis.first().map(|b| b.dim()).ok_or_else(|| GeomError::Precondition("empty basis".into()))?;
        if k >= n {
            return Err(GeomError::Precondition(format!("subspace dimension {k} must be below {n}")));
        }
        for (i, a) in basis.iter().enumerate() {
            if a.dim() != n {
                return Err(GeomError::DimensionMismatch { expected: n, got: a.dim() });
            }
            for b in &basis[..i] {
                let c = dot(a.as_slice(), b.as_slice());
                if c.abs() > 1e-12 {
                    return Err(GeomError::Precondition(format!("basis not orthonormal (inner product {c:e})")));
                }
            }
        }
        Ok(SubspaceSpec { basis })
    }

    /// span{e_i : i ∈ axes}.
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        Self::new(axes.iter().map(|&i| UnitVector::axis(n, i, 1.0)).collect())
    }

    /// All coordinate subspaces of R^n with 1 ≤ k ≤ n−1.
    pub fn all_coordinate(n: usize) -> Vec<Self> {
        (1..n)
            .flat_map(|k| itertools::Itertools::combinations(0..n, k))
            .map(|axes| Self::coordinate(n, &axes).expect("coordinate axes are orthonormal"))
            .collect()
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        self.basis[0].dim()
    }

    pub fn basis(&self) -> &[UnitVector] {
        &self.basis
    }

    /// Angle-free membership test: |u − P_ξ u| ≤ tol.
    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        let proj: f64 = self.basis.iter().map(|b| dot(u, b.as_slice()).powi(2)).sum();
        (dot(u, u) - proj).max(0.0).sqrt() <= tol * norm(u)
    }
}

pub const SUBSPACE_TOL: f64 = 1e-9;

/// Bound on G_q(K, ξ_k ∩ S^{n−1})/G_q(K, S^{n−1}) for origin-symmetric K.
pub fn concentration_bound(n: usize, k: usize, q: u32) -> f64 {
    if q == 1 {
        k as f64 / n as f64
    } else {
        (2.0 * k as f64 / (n as f64 + q as f64 - 1.0)).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceRatio {
    pub ratio: f64,
    pub bound: f64,
}

impl SubspaceRatio {
    pub fn slack(&self) -> f64 {
        self.bound - self.ratio
    }
}

pub fn check_symmetric(k: &HPolytope) -> Result<()> {
    let tol = 1e-9 * k.diameter();
    for (i, u) in k.normals().iter().enumerate() {
        let found = k.normals().iter().zip(k.offsets()).any(|(v, h)| {
            u.as_slice().iter().zip(v.as_slice()).all(|(a, b)| (a + b).abs() <= 1e-9) && (h - k.offsets()[i]).abs() <= tol
        });
        if !found {
            return Err(GeomError::NotSymmetric);
        }
    }
    Ok(())
}

fn check_integer_q(n: usize, q: u32) -> Result<()> {
    if !(1..=n as u32 + 1).contains(&q) {
        return Err(GeomError::Precondition(format!("q must be an integer in [1, {}], got {q}", n + 1)));
    }
    Ok(())
}

/// Cone-chord masses of an origin-symmetric polytope at integer q.
pub fn symmetric_cone_masses(k: &HPolytope, q: u32, cfg: &MeasureConfig) -> Result<Vec<f64>> {
    check_symmetric(k)?;
    check_integer_q(k.dim(), q)?;
    Ok(cone_masses(k, q as f64, cfg)?.0)
}

fn ratio_from_masses(k: &HPolytope, g: &[f64], xi: &SubspaceSpec, q: u32) -> SubspaceRatio {
    let total: f64 = g.iter().sum();
    let inside: f64 = k
        .normals()
        .iter()
        .zip(g)
        .filter(|(u, _)| xi.contains(u.as_slice(), SUBSPACE_TOL))
        .map(|(_, m)| m)
        .sum();
    SubspaceRatio { ratio: inside / total, bound: concentration_bound(k.dim(), xi.k(), q) }
}

/// Fraction of G_q(K, ·) carried by ξ ∩ S^{n−1}, with its bound.
pub fn subspace_mass_ratio(k: &HPolytope, xi: &SubspaceSpec, q: u32, cfg: &MeasureConfig) -> Result<SubspaceRatio> {
    if xi.dim() != k.dim() {
        return Err(GeomError::DimensionMismatch { expected: k.dim(), got: xi.dim() });
    }
    let g = symmetric_cone_masses(k, q, cfg)?;
    Ok(ratio_from_masses(k, &g, xi, q))
}

/// Ratios for several subspaces from one evaluation of G_q.
pub fn subspace_mass_ratios(k: &HPolytope, subspaces: &[SubspaceSpec], q: u32, cfg: &MeasureConfig) -> Result<Vec<SubspaceRatio>> {
    let g = symmetric_cone_masses(k, q, cfg)?;
    Ok(subspaces.iter().map(|xi| ratio_from_masses(k, &g, xi, q)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub j: u32,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessTable {
    pub n: usize,
    pub k: usize,
    pub q: u32,
    pub limit: f64,
    pub rows: Vec<SharpnessRow>,
}

impl SharpnessTable {
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].ratio >= w[0].ratio - 1e-9)
    }

    pub fn final_fraction(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.ratio / self.limit)
    }
}

/// Ratios for the boxes [−1/j, 1/j]^k × [−1, 1]^{n−k} on span{e_1..e_k};
/// they approach 2k/(n+q−1) when 1 ≤ k < q−1 ≤ n.
pub fn sharpness_sequence(k: usize, q: u32, n: usize, j_list: &[u32], cfg: &MeasureConfig) -> Result<SharpnessTable> {
    if !(k >= 1 && (k as f64) < q as f64 - 1.0 && q as usize - 1 <= n) {
        return Err(GeomError::Precondition(format!("sharpness needs 1 ≤ k < q−1 ≤ n, got k={k}, q={q}, n={n}")));
    }
    let xi = SubspaceSpec::coordinate(n, &(0..k).collect::<Vec<_>>())?;
    let rows = j_list
        .iter()
        .map(|&j| {
            let half: Vec<f64> = (0..n).map(|i| if i < k { 1.0 / j as f64 } else { 1.0 }).collect();
            let b = HPolytope::cuboid(&half)?;
            Ok(SharpnessRow { j, ratio: subspace_mass_ratio(&b, &xi, q, cfg)?.ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SharpnessTable { n, k, q, limit: 2.0 * k as f64 / (n as f64 + q as f64 - 1.0), rows })
}

/// The constant c_{q,m,n} of the ellipsoid chord-integral estimate.
pub fn ellipsoid_constant(q: f64, m: usize, n: usize) -> Result<f64> {
    let mf = m as f64;
    let nf = n as f64;
    if !(m >= 1 && mf < q && q < mf + 1.0 && m < n + 1) {
        return Err(GeomError::Precondition(format!("need 1 ≤ m < q < m+1 ≤ n+1, got q={q}, m={m}, n={n}")));
    }
    let base = q * (q - 1.0) / (nf * omega(n));
    Ok(if m == n {
        base * 2f64.powf(q - nf + 2.0) * omega(n - 1).powi(2) / ((q - nf) * (q - nf + 1.0))
    } else {
        base * 2f64.powf(nf - mf + 3.0) * (nf - mf) * omega(m - 1).powi(2) * omega(n - m).powi(2)
            / ((mf + 1.0 - q) * (q - mf) * (q - mf + 1.0))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidBound {
    pub q: f64,
    pub lhs: ChordEstimate,
    pub rhs: f64,
    pub constant: f64,
}

impl EllipsoidBound {
    /// rhs − lhs − 3σ.
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs.value - 3.0 * self.lhs.std_error
    }
}

/// I_q(E) against c_{q,m,n}(a_1⋯a_m)² a_m^{q−m−1} a_{m+1}⋯a_n for non-integer
/// q ∈ (1, n+1) and semi-axes a_1 ≤ … ≤ a_n ≤ 1.
pub fn ellipsoid_chord_bound_check(e: &Ellipsoid, q: f64, samples: usize, seed: u64) -> Result<EllipsoidBound> {
    let n = e.semi_axes().len();
    let a = e.semi_axes();
    if !a.windows(2).all(|w| w[0] <= w[1]) || a[n - 1] > 1.0 {
        return Err(GeomError::Precondition("semi-axes must be ascending and at most 1".into()));
    }
    if !(q > 1.0 && q < n as f64 + 1.0) || q.fract() == 0.0 {
        return Err(GeomError::Precondition(format!("q must be a non-integer in (1, {}), got {q}", n + 1)));
    }
    let m = q.floor() as usize;
    let c = ellipsoid_constant(q, m, n)?;
    let head: f64 = a[..m].iter().product();
    let tail: f64 = a[m..].iter().product();
    let rhs = c * head * head * a[m - 1].powf(q - m as f64 - 1.0) * tail;
    let body = Body::Ellipsoid(e.clone());
    let lhs = if a.iter().all(|x| *x == a[0]) {
        ChordEstimate::exact(crate::chord::ball_chord_integral(n, a[0], q), q)
    } else {
        match chord_closed(&body, q) {
            Some(exact) => exact,
            None => chord_line_mc(&body, q, samples, seed)?,
        }
    };
    Ok(EllipsoidBound { q, lhs, rhs, constant: c })
}

/// Right side of the ellipsoid entropy estimate without t₀ and c₀:
/// −(n+q−1)^{-1}[2 Σ_{k<⌊q⌋} log a_k + (q−⌊q⌋+1) log a_⌊q⌋ + Σ_{k>⌊q⌋} log a_k].
pub fn entropy_bound_core(a: &[f64], q: f64) -> f64 {
    let n = a.len();
    let m = q.floor() as usize;
    let nq = n as f64 + q - 1.0;
    let mut s = 0.0;
    for (i, ai) in a.iter().enumerate() {
        let k = i + 1;
        let w = if k < m {
            2.0
        } else if k == m {
            q - m as f64 + 1.0
        } else {
            1.0
        };
        s += w * ai.ln();
    }
    -s / nq
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyBoundRow {
    pub semi_axes: Vec<f64>,
    pub entropy: f64,
    pub rhs: f64,
    /// entropy − rhs; the estimate asks for ≤ 0 eventually.
    pub difference: f64,
}

/// E_μ(E_l) against the entropy estimate with user constants t₀, c₀.
pub fn ellipsoid_entropy_bound_check(
    seq: &[Ellipsoid],
    mu: &DiscreteSphericalMeasure,
    q: f64,
    t0: f64,
    c0: f64,
) -> Result<Vec<EntropyBoundRow>> {
    let n = mu.dim();
    if !(1.0..=n as f64 + 1.0).contains(&q) {
        return Err(GeomError::Precondition(format!("q must lie in [1, {}], got {q}", n + 1)));
    }
    mu.antipodal_pairs(1e-9)?;
    seq.iter()
        .map(|e| {
            if e.semi_axes().len() != n {
                return Err(GeomError::DimensionMismatch { expected: n, got: e.semi_axes().len() });
            }
            let body = Body::Ellipsoid(e.clone());
            let total = mu.total_mass();
            let entropy = -mu.atoms().iter().map(|a| a.mass * body.support(a.u.as_slice()).ln()).sum::<f64>() / total;
            let a = e.semi_axes();
            let rhs = entropy_bound_core(a, q) + t0 * a[0].ln() + c0;
            Ok(EntropyBoundRow { semi_axes: a.to_vec(), entropy, rhs, difference: entropy - rhs })
        })
        .collect()
}

/// Half the worst subspace-mass margin of μ; a usable t₀ for the entropy estimate.
pub fn entropy_t0(mu: &DiscreteSphericalMeasure, q: f64) -> Result<f64> {
    let v = validate_log_data(mu, q)?;
    if !v.ok {
        return Err(GeomError::Precondition(format!("μ violates the subspace mass inequality (margin {:e})", v.worst_margin)));
    }
    Ok(0.5 * v.worst_margin)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSummary {
    pub bodies: usize,
    pub checks: usize,
    pub violations: usize,
    pub worst_slack: f64,
}

/// Checks every coordinate subspace and q ∈ {1, …, n+1} on each body.
pub fn concentration_sweep(bodies: &[HPolytope], tol: f64, cfg: &MeasureConfig) -> Result<ConcentrationSummary> {
    let per: Vec<(usize, usize, f64)> = bodies
        .par_iter()
        .map(|k| {
            let n = k.dim();
            let subspaces = SubspaceSpec::all_coordinate(n);
            let mut checks = 0;
            let mut bad = 0;
            let mut worst = f64::INFINITY;
            for q in 1..=n as u32 + 1 {
                for r in subspace_mass_ratios(k, &subspaces, q, cfg)? {
                    checks += 1;
                    worst = worst.min(r.slack());
                    if r.slack() < -tol {
                        bad += 1;
                    }
                }
            }
            Ok((checks, bad, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConcentrationSummary {
        bodies: bodies.len(),
        checks: per.iter().map(|p| p.0).sum(),
        violations: per.iter().map(|p| p.1).sum(),
        worst_slack: per.iter().map(|p| p.2).fold(f64::INFINITY, f64::min),
    })
}
