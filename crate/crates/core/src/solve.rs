//! Discrete chord Minkowski and symmetric chord log-Minkowski problems.
//!
//! Both problems maximize a 0-homogeneous functional of the support vector
//! over polytopes whose facet normals are the atoms of the data. The chord
//! problem uses Φ = (n+q−1)^{-1} log I_q(K) − log Σ m_i h_i and the log problem
//! uses Φ = −|μ|^{-1} Σ m_i log h_i + (n+q−1)^{-1} log I_q(K). Optimization
//! runs in x = log h with BFGS and Armijo backtracking.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{dot, norm};
use crate::measure::{chord_measure_detailed, measure_diagnostics, DiscreteSphericalMeasure, MeasureConfig};
use crate::polytope::{wulff, HPolytope};
use crate::special::omega;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Armijo {
    pub c: f64,
    pub shrink: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub q: f64,
    pub max_iters: usize,
    /// Initial step length, in units of the (capped) BFGS direction.
    pub step0: f64,
    pub armijo: Armijo,
    pub grad_tol: f64,
    pub residual_tol: f64,
    /// Allowance for quadrature error in the reported residual.
    pub measure_tol_budget: f64,
    pub seed: u64,
    pub symmetric: bool,
    /// Quadrature used inside the ascent loop.
    pub iter_measure: MeasureConfig,
    /// Quadrature used for the final residual.
    pub final_measure: MeasureConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            q: 2.0,
            max_iters: 300,
            step0: 1.0,
            armijo: Armijo { c: 1e-4, shrink: 0.5 },
            grad_tol: 1e-9,
            residual_tol: 1e-3,
            measure_tol_budget: 1e-3,
            seed: 0,
            symmetric: false,
            iter_measure: MeasureConfig { order: 10, check: false, ..MeasureConfig::default() },
            final_measure: MeasureConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_q(q: f64) -> Self {
        SolverConfig { q, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub body: HPolytope,
    pub objective_trace: Vec<f64>,
    /// max_i |F_i(K) − m_i| / m_i (G_i for the log problem).
    pub residual: f64,
    pub unmatched_atoms: Vec<usize>,
    pub scale_lambda: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: String,
    pub detail: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Smallest slack over the checked conditions; negative or zero means violated.
    pub worst_margin: f64,
}

/// Existence conditions for the chord Minkowski problem: μ is not concentrated
/// on a closed hemisphere and Σ m_i u_i = 0 up to `tol`·|μ|.
pub fn validate_chord_data(mu: &DiscreteSphericalMeasure, tol: f64) -> Result<ValidationReport> {
    if mu.is_empty() || !(mu.total_mass() > 0.0) {
        return Err(GeomError::Precondition("measure must be nonzero".into()));
    }
    let d = measure_diagnostics(mu)?;
    let mut violations = Vec::new();
    let hemi = if d.positively_spanning { d.hemisphere_margin / d.total_mass } else { 0.0 };
    if hemi <= 0.0 {
        violations.push(Violation {
            kind: "hemisphere".into(),
            detail: "support lies in a closed hemisphere".into(),
            margin: hemi,
        });
    }
    let c = norm(&d.centroid_vector) / d.total_mass;
    let cm = tol - c;
    if cm < 0.0 {
        violations.push(Violation {
            kind: "centroid".into(),
            detail: format!("|Σ m_i u_i|/|μ| = {c:e} exceeds {tol:e}"),
            margin: cm,
        });
    }
    Ok(ValidationReport { ok: violations.is_empty(), violations, worst_margin: hemi.min(cm) })
}

/// One row of the subspace mass check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceRow {
    pub k: usize,
    pub basis: Vec<Vec<f64>>,
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogValidation {
    pub ok: bool,
    pub worst: Option<SubspaceRow>,
    pub worst_margin: f64,
    pub subspaces_checked: usize,
}

/// Upper bound (k + min(k, q−1))/(n+q−1) on the mass fraction of a k-subspace.
pub fn log_mass_bound(n: usize, k: usize, q: f64) -> f64 {
    (k as f64 + (k as f64).min(q - 1.0)) / (n as f64 + q - 1.0)
}

/// Orthonormal basis of span(vectors), or None when they are dependent.
fn span_basis(vectors: &[&[f64]]) -> Option<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.to_vec();
        for b in &basis {
            let c = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let l = norm(&w);
        if l < 1e-6 {
            return None;
        }
        basis.push(w.iter().map(|x| x / l).collect());
    }
    Some(basis)
}

/// Mass fraction of atoms within angle `tol` of the subspace.
pub(crate) fn subspace_fraction(mu: &DiscreteSphericalMeasure, basis: &[Vec<f64>], tol: f64) -> f64 {
    let inside: f64 = mu
        .atoms()
        .iter()
        .filter(|a| {
            let u = a.u.as_slice();
            let proj: f64 = basis.iter().map(|b| dot(u, b).powi(2)).sum();
            (1.0 - proj).max(0.0).sqrt() <= tol
        })
        .map(|a| a.mass)
        .sum();
    inside / mu.total_mass()
}

/// Subspace mass inequality μ(ξ_k ∩ S^{n−1})/|μ| < (k + min(k, q−1))/(n+q−1)
/// over subspaces spanned by atoms and over coordinate subspaces.
pub fn validate_log_data(mu: &DiscreteSphericalMeasure, q: f64) -> Result<LogValidation> {
    let n = mu.dim();
    let pairs = mu.antipodal_pairs(1e-9)?;
    let reps: Vec<&[f64]> = pairs.iter().map(|&(i, _)| mu.atoms()[i].u.as_slice()).collect();
    let axes: Vec<Vec<f64>> = (0..n).map(|i| crate::body::UnitVector::axis(n, i, 1.0).as_slice().to_vec()).collect();
    let mut seen: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut worst: Option<SubspaceRow> = None;
    let mut worst_margin = f64::INFINITY;
    let mut count = 0;
    for k in 1..n {
        let bound = log_mass_bound(n, k, q);
        let mut candidates: Vec<Vec<Vec<f64>>> = Vec::new();
        for combo in reps.iter().combinations(k) {
            let vs: Vec<&[f64]> = combo.into_iter().copied().collect();
            if let Some(b) = span_basis(&vs) {
                candidates.push(b);
            }
        }
        for combo in axes.iter().combinations(k) {
            let vs: Vec<&[f64]> = combo.iter().map(|v| v.as_slice()).collect();
            candidates.push(span_basis(&vs).expect("coordinate axes are independent"));
        }
        for basis in candidates {
            // Skip subspaces already seen (same projector).
            let same = |other: &Vec<Vec<f64>>| {
                other.len() == basis.len()
                    && basis.iter().all(|b| other.iter().map(|o| dot(b, o).powi(2)).sum::<f64>() > 1.0 - 1e-12)
            };
            if seen.iter().any(same) {
                continue;
            }
            count += 1;
            let ratio = subspace_fraction(mu, &basis, 1e-9);
            let margin = bound - ratio;
            if margin < worst_margin {
                worst_margin = margin;
                worst = Some(SubspaceRow { k, basis: basis.clone(), ratio, bound });
            }
            seen.push(basis);
        }
    }
    Ok(LogValidation { ok: worst_margin > 1e-12, worst, worst_margin, subspaces_checked: count })
}

/// E_μ(K) = −|μ|^{-1} Σ m_i log h_K(u_i).
pub fn entropy(k: &HPolytope, mu: &DiscreteSphericalMeasure) -> Result<f64> {
    if k.dim() != mu.dim() {
        return Err(GeomError::DimensionMismatch { expected: k.dim(), got: mu.dim() });
    }
    let mut s = 0.0;
    for (i, a) in mu.atoms().iter().enumerate() {
        let h = k.support(a.u.as_slice());
        if !(h > 0.0) {
            return Err(GeomError::NonpositiveSupport { atom: i, value: h });
        }
        s += a.mass * h.ln();
    }
    Ok(-s / mu.total_mass())
}

struct Eval {
    phi: f64,
    grad: Vec<f64>,
    residual: f64,
    body: HPolytope,
    lambda: f64,
    /// Newton direction from the facet-area model of the Hessian (n ≤ 3).
    newton: Option<Vec<f64>>,
}

struct Ascent {
    x: Vec<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// BFGS ascent. `recenter` may replace x by an equivalent point (same Φ);
/// `guard` aborts on degeneration.
fn ascend(
    x0: Vec<f64>,
    cfg: &SolverConfig,
    mut eval: impl FnMut(&[f64]) -> Result<Eval>,
    mut recenter: impl FnMut(&[f64], &Eval) -> Option<Vec<f64>>,
    guard: impl Fn(&Eval) -> Result<()>,
) -> Result<Ascent> {
    let d = x0.len();
    let identity = |d: usize| -> Vec<Vec<f64>> {
        (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    };
    let mut x = x0;
    let mut e = eval(&x)?;
    let mut trace = vec![e.phi];
    let mut h = identity(d);
    let mut fresh = true;
    let mut iterations = 0;
    let mut converged = false;
    let mut use_model = true;
    let mut weak_model = 0;
    let mut stalled = 0;
    let noise = 1e-12;
    while iterations < cfg.max_iters {
        guard(&e)?;
        // Three accepted steps without progress in Φ or the residual: quadrature noise floor.
        if e.residual <= 0.5 * cfg.residual_tol || inf_norm(&e.grad) <= cfg.grad_tol || stalled >= 3 {
            converged = true;
            break;
        }
        iterations += 1;
        let model = e.newton.as_ref().filter(|d| use_model && weak_model < 3 && dot(&e.grad, d) > 0.0);
        let mut dir: Vec<f64> = match model {
            Some(d) => d.clone(),
            None => h.iter().map(|row| dot(row, &e.grad)).collect(),
        };
        let mut slope = dot(&e.grad, &dir);
        if !(slope > 0.0) {
            h = identity(d);
            fresh = true;
            dir = e.grad.clone();
            slope = dot(&e.grad, &dir);
        }
        let cap = inf_norm(&dir);
        if cap > 1.0 {
            dir.iter_mut().for_each(|v| *v /= cap);
            slope /= cap;
        }
        let mut alpha = cfg.step0;
        let mut accepted: Option<(Vec<f64>, Eval)> = None;
        while alpha > 1e-10 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
            if let Ok(en) = eval(&xn) {
                if en.phi >= e.phi + cfg.armijo.c * alpha * slope - noise * (1.0 + e.phi.abs()) {
                    accepted = Some((xn, en));
                    break;
                }
            }
            alpha *= cfg.armijo.shrink;
        }
        let Some((xn, en)) = accepted else {
            if model.is_some() {
                use_model = false;
                continue;
            }
            if fresh {
                break;
            }
            h = identity(d);
            fresh = true;
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = e.grad.iter().zip(&en.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..d {
                for j in 0..d {
                    h[i][j] += (sy + yhy) * s[i] * s[j] / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
            fresh = false;
        }
        // A model that keeps needing short steps is misleading here; hand over to BFGS.
        if model.is_some() {
            weak_model = if alpha < 0.1 * cfg.step0 { weak_model + 1 } else { 0 };
        }
        let flat = (en.phi - e.phi).abs() <= noise * (1.0 + e.phi.abs()) && en.residual > 0.9 * e.residual;
        stalled = if flat { stalled + 1 } else { 0 };
        x = xn;
        e = en;
        use_model = true;
        trace.push(e.phi);
        if let Some(xr) = recenter(&x, &e) {
            x = xr;
            e = eval(&x)?;
            h = identity(d);
            fresh = true;
        }
    }
    if !converged {
        converged = e.residual <= cfg.residual_tol;
    }
    Ok(Ascent { x, trace, iterations, converged })
}

/// ∂S_i/∂h_j for n ∈ {2, 3}: L_ij / sin θ_ij off the diagonal and
/// −Σ_j L_ij cot θ_ij on it, L_ij the ridge measure shared by facets i and j.
pub(crate) fn area_jacobian(body: &HPolytope) -> Option<DMatrix<f64>> {
    let n = body.dim();
    if n > 3 {
        return None;
    }
    let m = body.len();
    let normals = body.normals();
    let h = body.offsets();
    let mut a = DMatrix::zeros(m, m);
    for f in body.facets() {
        let i = f.index;
        for r in &f.ridges {
            let mid: Vec<f64> = (0..n).map(|k| r.points.iter().map(|p| p[k]).sum::<f64>() / r.points.len() as f64).collect();
            let len = if n == 3 { crate::linalg::dist(&r.points[0], &r.points[1]) } else { 1.0 };
            // Neighbour: the facet other than i whose normal lies furthest along
            // the ridge's in-plane normal, among planes through the ridge.
            let gap = |j: usize| (dot(normals[j].as_slice(), &mid) - h[j]).abs();
            let tol = 1e-9 * (1.0 + h.iter().cloned().fold(0.0, f64::max));
            let Some(j) = (0..m)
                .filter(|&j| j != i && gap(j) <= tol.max(1e-7 * body.diameter()))
                .max_by(|&x, &y| dot(normals[x].as_slice(), &r.normal).total_cmp(&dot(normals[y].as_slice(), &r.normal)))
            else {
                continue;
            };
            let c = dot(normals[i].as_slice(), normals[j].as_slice());
            let sin = (1.0 - c * c).max(0.0).sqrt();
            if sin < 1e-9 {
                continue;
            }
            a[(i, j)] += len / sin;
            a[(i, i)] -= len * c / sin;
        }
    }
    Some((&a + a.transpose()) * 0.5)
}

/// Model of ∇²I_q = ∂F/∂h: the area Jacobian rescaled by the facet densities
/// F_i/S_i, plus a symmetric rank-two term so that J h = (n+q−2) F holds when
/// the densities are equal. Exact at q = 1.
fn chord_hessian_model(body: &HPolytope, f: &[f64], q: f64) -> Option<DMatrix<f64>> {
    let a = area_jacobian(body)?;
    let s = body.areas();
    let m = f.len();
    let d = DVector::from_iterator(m, (0..m).map(|i| if s[i] > 0.0 { (f[i] / s[i]).max(0.0).sqrt() } else { 0.0 }));
    let mut j = DMatrix::from_fn(m, m, |r, c| d[r] * a[(r, c)] * d[c]);
    if q != 1.0 {
        let c = (q - 1.0) / (2.0 * body.dim() as f64 * body.volume());
        let fv = DVector::from_column_slice(f);
        let sv = DVector::from_column_slice(&s);
        j += (&fv * sv.transpose() + &sv * fv.transpose()) * c;
    }
    Some(j)
}

/// Ascent direction −H⁻¹g restricted to the complement of the invariance
/// directions `null`. The problem is first scaled by the diagonal `weights`
/// (mass fractions), then the eigenvalues of −H are replaced by their
/// absolute values and floored relative to the largest.
fn saddle_free_direction(hess: DMatrix<f64>, grad: &[f64], null: &[Vec<f64>], weights: &[f64]) -> Option<Vec<f64>> {
    let d = grad.len();
    let top_w = weights.iter().cloned().fold(0.0, f64::max);
    let s: Vec<f64> = weights.iter().map(|w| 1.0 / w.max(1e-300 + 1e-14 * top_w).sqrt()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in null {
        let mut w = DVector::from_iterator(d, v.iter().zip(&s).map(|(a, si)| a / si));
        for b in &basis {
            w -= b * b.dot(&w);
        }
        let len = w.norm();
        if len > 1e-12 {
            basis.push(w / len);
        }
    }
    let mut proj = DMatrix::identity(d, d);
    for b in &basis {
        proj -= b * b.transpose();
    }
    let scaled = DMatrix::from_fn(d, d, |r, c| -s[r] * hess[(r, c)] * s[c]);
    let eig = SymmetricEigen::new(&proj * scaled * &proj);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if !(top > 0.0 && top.is_finite()) {
        return None;
    }
    let g = &proj * DVector::from_iterator(d, grad.iter().zip(&s).map(|(a, si)| a * si));
    let coeffs = eig.eigenvectors.transpose() * g;
    let inv = DVector::from_iterator(
        coeffs.len(),
        coeffs.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c / l.abs().max(1e-6 * top)),
    );
    let dir = &proj * (&eig.eigenvectors * inv);
    let out: Vec<f64> = dir.iter().zip(&s).map(|(a, si)| a * si).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Hessian in x = log h from the Hessian H_h and gradient g_h in h.
fn to_log_coordinates(hess_h: DMatrix<f64>, grad_h: &[f64], h: &[f64]) -> DMatrix<f64> {
    let m = h.len();
    DMatrix::from_fn(m, m, |r, c| h[r] * hess_h[(r, c)] * h[c] + if r == c { h[r] * grad_h[r] } else { 0.0 })
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(GeomError::Precondition(format!("q must be positive, got {q}")));
    }
    Ok(())
}

/// Evaluate the chord objective at support vector h on the atom normals.
fn chord_eval(normals: &[crate::body::UnitVector], masses: &[f64], h: &[f64], q: f64, mcfg: &MeasureConfig) -> Result<Eval> {
    let n = normals[0].dim();
    let nq = n as f64 + q - 1.0;
    let body = wulff(normals, h)?;
    let f = chord_measure_detailed(&body, q, mcfg)?;
    let shf: f64 = h.iter().zip(&f.masses).map(|(a, b)| a * b).sum();
    let smh: f64 = h.iter().zip(masses).map(|(a, b)| a * b).sum();
    let iq = if q == 1.0 { body.volume() } else { shf / nq };
    let phi = iq.ln() / nq - smh.ln();
    let grad: Vec<f64> = (0..h.len()).map(|i| h[i] * (f.masses[i] / shf - masses[i] / smh)).collect();
    let scale = smh / shf;
    let residual = masses
        .iter()
        .zip(&f.masses)
        .filter(|(m, _)| **m > 0.0)
        .map(|(m, fi)| (scale * fi - m).abs() / m)
        .fold(0.0, f64::max);
    let lambda = scale.powf(1.0 / (nq - 1.0));
    let newton = chord_hessian_model(&body, &f.masses, q).and_then(|j| {
        let m = h.len();
        let grad_h: Vec<f64> = (0..m).map(|i| f.masses[i] / shf - masses[i] / smh).collect();
        let hess_h = DMatrix::from_fn(m, m, |r, c| {
            j[(r, c)] / shf - nq * f.masses[r] * f.masses[c] / (shf * shf) + masses[r] * masses[c] / (smh * smh)
        });
        // Φ is invariant under scaling (x + c·1) and translation (x_i + v·u_i / h_i).
        let mut null = vec![vec![1.0; m]];
        null.extend((0..n).map(|k| (0..m).map(|i| normals[i].as_slice()[k] / h[i]).collect()));
        let weights: Vec<f64> = (0..m).map(|i| masses[i] * h[i] / smh + f.masses[i] * h[i] / shf).collect();
        saddle_free_direction(to_log_coordinates(hess_h, &grad_h, h), &grad, &null, &weights)
    });
    Ok(Eval { phi, grad, residual, body, lambda, newton })
}

/// Find a polytope K with F_q(K, ·) = μ.
pub fn solve_chord_minkowski(mu: &DiscreteSphericalMeasure, cfg: &SolverConfig) -> Result<SolverResult> {
    check_q(cfg.q)?;
    let report = validate_chord_data(mu, 1e-6_f64.max(cfg.measure_tol_budget))?;
    if !report.ok {
        return Err(GeomError::Precondition(format!("data violates existence conditions: {:?}", report.violations)));
    }
    let normals = mu.directions();
    let masses = mu.masses();
    let q = cfg.q;
    let ascent = ascend(
        vec![0.0; normals.len()],
        cfg,
        |x| {
            let h: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            chord_eval(&normals, &masses, &h, q, &cfg.iter_measure)
        },
        |x, e| {
            // Translate so the Chebyshev center sits at the origin when the
            // origin drifts toward the boundary.
            let h: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
            if hmin >= 0.2 * e.body.inradius() {
                return None;
            }
            let c = e.body.chebyshev_center();
            let shifted: Vec<f64> = normals.iter().zip(&h).map(|(u, hi)| hi - dot(u.as_slice(), c)).collect();
            if shifted.iter().all(|v| *v > 0.0) {
                let mean = shifted.iter().map(|v| v.ln()).sum::<f64>() / shifted.len() as f64;
                Some(shifted.iter().map(|v| v.ln() - mean).collect())
            } else {
                None
            }
        },
        |_| Ok(()),
    )?;
    finish_chord(mu, cfg, ascent)
}

fn finish_chord(mu: &DiscreteSphericalMeasure, cfg: &SolverConfig, ascent: Ascent) -> Result<SolverResult> {
    let normals = mu.directions();
    let masses = mu.masses();
    let h: Vec<f64> = ascent.x.iter().map(|v| v.exp()).collect();
    let fin = chord_eval(&normals, &masses, &h, cfg.q, &cfg.final_measure)?;
    let body = fin.body.scale(fin.lambda)?;
    let unmatched: Vec<usize> = body.redundant();
    if unmatched.len() * 2 > body.len() {
        return Err(GeomError::DegenerateDrift { redundant: unmatched.len(), total: body.len(), unmatched });
    }
    if !(ascent.converged || fin.residual <= cfg.residual_tol) || fin.residual > cfg.residual_tol + cfg.measure_tol_budget {
        return Err(GeomError::NonConvergence { iterations: ascent.iterations, residual: fin.residual });
    }
    Ok(SolverResult {
        body,
        objective_trace: ascent.trace,
        residual: fin.residual,
        unmatched_atoms: unmatched,
        scale_lambda: fin.lambda,
        iterations: ascent.iterations,
        gradient_norm: inf_norm(&fin.grad),
    })
}

/// Cone-chord masses G_i and I_q for the log problem; q = n+1 goes through q = 1.
pub(crate) fn cone_masses(body: &HPolytope, q: f64, mcfg: &MeasureConfig) -> Result<(Vec<f64>, f64)> {
    let n = body.dim();
    let nf = n as f64;
    let h = body.offsets();
    if q == nf + 1.0 {
        let v = body.volume();
        let g: Vec<f64> = body.areas().iter().zip(h).map(|(a, hi)| (nf + 1.0) / omega(n) * v * hi * a / nf).collect();
        return Ok((g, (nf + 1.0) * v * v / omega(n)));
    }
    let f = chord_measure_detailed(body, q, mcfg)?;
    let nq = nf + q - 1.0;
    let g: Vec<f64> = f.masses.iter().zip(h).map(|(fi, hi)| hi * fi / nq).collect();
    let iq = if q == 1.0 { body.volume() } else { g.iter().sum() };
    Ok((g, iq))
}

fn log_eval(
    normals: &[crate::body::UnitVector],
    masses: &[f64],
    pairs: &[(usize, usize)],
    x: &[f64],
    q: f64,
    mcfg: &MeasureConfig,
) -> Result<Eval> {
    let n = normals[0].dim();
    let nq = n as f64 + q - 1.0;
    let mut h = vec![0.0; normals.len()];
    for (&(i, j), v) in pairs.iter().zip(x) {
        h[i] = v.exp();
        h[j] = v.exp();
    }
    let body = wulff(normals, &h)?;
    let (g, iq) = cone_masses(&body, q, mcfg)?;
    let total: f64 = masses.iter().sum();
    let ent: f64 = -masses.iter().zip(&h).map(|(m, hi)| m * hi.ln()).sum::<f64>() / total;
    let phi = ent + iq.ln() / nq;
    let grad: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| -(masses[i] + masses[j]) / total + (g[i] + g[j]) / iq)
        .collect();
    let scale = total / iq;
    let residual = masses
        .iter()
        .zip(&g)
        .filter(|(m, _)| **m > 0.0)
        .map(|(m, gi)| (scale * gi - m).abs() / m)
        .fold(0.0, f64::max);
    let newton = log_newton(&body, &g, iq, masses, total, pairs, &h, q, &grad);
    Ok(Eval { phi, grad, residual, body, lambda: scale.powf(1.0 / nq), newton })
}

/// Newton direction for Φ = log I_q / (n+q−1) − Σ m_i log h_i / |μ| in the
/// pair coordinates.
#[allow(clippy::too_many_arguments)]
fn log_newton(
    body: &HPolytope,
    g: &[f64],
    iq: f64,
    masses: &[f64],
    total: f64,
    pairs: &[(usize, usize)],
    h: &[f64],
    q: f64,
    grad: &[f64],
) -> Option<Vec<f64>> {
    let m = h.len();
    let nq = body.dim() as f64 + q - 1.0;
    let f: Vec<f64> = (0..m).map(|i| nq * g[i] / h[i]).collect();
    let j = chord_hessian_model(body, &f, q)?;
    let grad_h: Vec<f64> = (0..m).map(|i| f[i] / (nq * iq) - masses[i] / (total * h[i])).collect();
    let hess_h = DMatrix::from_fn(m, m, |r, c| {
        j[(r, c)] / (nq * iq) - f[r] * f[c] / (nq * iq * iq) + if r == c { masses[r] / (total * h[r] * h[r]) } else { 0.0 }
    });
    let hx = to_log_coordinates(hess_h, &grad_h, h);
    let k = pairs.len();
    let mut hp = DMatrix::zeros(k, k);
    for (a, &(i1, j1)) in pairs.iter().enumerate() {
        for (b, &(i2, j2)) in pairs.iter().enumerate() {
            hp[(a, b)] = hx[(i1, i2)] + hx[(i1, j2)] + hx[(j1, i2)] + hx[(j1, j2)];
        }
    }
    let weights: Vec<f64> = pairs.iter().map(|&(i, j)| (masses[i] + masses[j]) / total + (g[i] + g[j]) / iq).collect();
    saddle_free_direction(hp, grad, &[vec![1.0; k]], &weights)
}

pub const COLLAPSE_RATIO: f64 = 1e-6;

/// Find an origin-symmetric polytope K with G_q(K, ·) = μ for even μ, 1 ≤ q ≤ n+1.
pub fn solve_chord_log_minkowski(mu: &DiscreteSphericalMeasure, cfg: &SolverConfig) -> Result<SolverResult> {
    let n = mu.dim();
    let q = cfg.q;
    if !(1.0..=n as f64 + 1.0).contains(&q) {
        return Err(GeomError::Precondition(format!("log-Minkowski solver needs 1 ≤ q ≤ {}, got {q}", n + 1)));
    }
    let pairs = mu.antipodal_pairs(1e-9)?;
    let normals = mu.directions();
    let masses = mu.masses();
    let ascent = ascend(
        vec![0.0; pairs.len()],
        cfg,
        |x| log_eval(&normals, &masses, &pairs, x, q, &cfg.iter_measure),
        |_, _| None,
        |e| {
            let ratio = e.body.inradius() / e.body.circumradius();
            if ratio < COLLAPSE_RATIO {
                Err(GeomError::CollapseDetected { ratio })
            } else {
                Ok(())
            }
        },
    )?;
    let fin = log_eval(&normals, &masses, &pairs, &ascent.x, q, &cfg.final_measure)?;
    let ratio = fin.body.inradius() / fin.body.circumradius();
    if ratio < COLLAPSE_RATIO {
        return Err(GeomError::CollapseDetected { ratio });
    }
    let body = fin.body.scale(fin.lambda)?;
    let unmatched = body.redundant();
    if unmatched.len() * 2 > body.len() {
        return Err(GeomError::DegenerateDrift { redundant: unmatched.len(), total: body.len(), unmatched });
    }
    if !(ascent.converged || fin.residual <= cfg.residual_tol) || fin.residual > cfg.residual_tol + cfg.measure_tol_budget {
        return Err(GeomError::NonConvergence { iterations: ascent.iterations, residual: fin.residual });
    }
    Ok(SolverResult {
        body,
        objective_trace: ascent.trace,
        residual: fin.residual,
        unmatched_atoms: unmatched,
        scale_lambda: fin.lambda,
        iterations: ascent.iterations,
        gradient_norm: inf_norm(&fin.grad),
    })
}

/// Φ for the chord problem at a given body (Wulff shape on μ's normals is not
/// required); exposed for homogeneity and translation checks.
pub fn chord_objective(k: &HPolytope, mu: &DiscreteSphericalMeasure, q: f64, mcfg: &MeasureConfig) -> Result<f64> {
    let n = k.dim();
    let nq = n as f64 + q - 1.0;
    let iq = if q == 1.0 {
        k.volume()
    } else if q == n as f64 + 1.0 {
        (n as f64 + 1.0) * k.volume().powi(2) / omega(n)
    } else {
        let f = chord_measure_detailed(k, q, mcfg)?;
        f.masses.iter().zip(k.offsets()).map(|(a, b)| a * b).sum::<f64>() / nq
    };
    let smh: f64 = mu.atoms().iter().map(|a| a.mass * k.support(a.u.as_slice())).sum();
    Ok(iq.ln() / nq - smh.ln())
}

/// Φ for the log problem: E_μ(K) + (n+q−1)^{-1} log I_q(K).
pub fn log_objective(k: &HPolytope, mu: &DiscreteSphericalMeasure, q: f64, mcfg: &MeasureConfig) -> Result<f64> {
    let nq = k.dim() as f64 + q - 1.0;
    let (_, iq) = cone_masses(k, q, mcfg)?;
    Ok(entropy(k, mu)? + iq.ln() / nq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{Body, UnitVector};
    use crate::measure::{cone_chord_measure, Atom};
    use approx::assert_relative_eq;

    fn axes_measure(n: usize, mass: f64) -> DiscreteSphericalMeasure {
        let mut pairs = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                pairs.push((UnitVector::axis(n, i, s).as_slice().to_vec(), mass));
            }
        }
        DiscreteSphericalMeasure::from_pairs(n, &pairs).unwrap()
    }

    #[test]
    fn chord_data_validation_examples() {
        let cube = HPolytope::cube(3, 1.0).unwrap();
        let f2 = crate::measure::chord_measure_polytope(&cube, 2.0, &MeasureConfig::default()).unwrap();
        assert!(validate_chord_data(&f2, 1e-6).unwrap().ok);
        let upper = DiscreteSphericalMeasure::from_pairs(
            3,
            &[(vec![0.0, 0.0, 1.0], 1.0), (vec![1.0, 0.0, 0.2], 1.0), (vec![-1.0, 0.3, 0.1], 1.0), (vec![0.0, -1.0, 0.4], 1.0)],
        )
        .unwrap();
        let r = validate_chord_data(&upper, 1e-6).unwrap();
        assert!(r.violations.iter().any(|v| v.kind == "hemisphere"));
        let two = DiscreteSphericalMeasure::from_pairs(2, &[(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0)]).unwrap();
        let r = validate_chord_data(&two, 1e-6).unwrap();
        assert!(r.violations.iter().any(|v| v.kind == "centroid"));
    }

    #[test]
    fn log_data_validation_examples() {
        for n in [2, 3, 4] {
            let mu = axes_measure(n, 1.0);
            let v = validate_log_data(&mu, 1.0).unwrap();
            assert!(!v.ok);
            assert!(v.worst_margin.abs() < 1e-12);
            let v = validate_log_data(&mu, 2.0).unwrap();
            assert!(v.ok);
            let w = v.worst.unwrap();
            // The tightest subspaces are coordinate hyperplanes.
            assert_eq!(w.k, n - 1);
            assert_relative_eq!(w.bound - w.ratio, 1.0 / (n * (n + 1)) as f64, max_relative = 1e-12);
        }
        let odd = DiscreteSphericalMeasure::from_pairs(2, &[(vec![1.0, 0.0], 1.0), (vec![-1.0, 0.0], 2.0)]).unwrap();
        assert!(matches!(validate_log_data(&odd, 2.0), Err(GeomError::NotEven { .. })));
        let cube = HPolytope::cube(3, 1.0).unwrap();
        let g2 = cone_chord_measure(&cube, 2.0, &MeasureConfig::default()).unwrap();
        let v = validate_log_data(&g2, 2.0).unwrap();
        assert!(v.ok);
        assert_relative_eq!(v.worst_margin, 1.0 / 12.0, max_relative = 1e-9);
    }

    #[test]
    fn entropy_examples() {
        let cube = HPolytope::cube(3, 1.0).unwrap();
        let mu = axes_measure(3, 0.7);
        assert_eq!(entropy(&cube, &mu).unwrap(), 0.0);
        let big = cube.scale(2.0).unwrap();
        assert_relative_eq!(entropy(&big, &mu).unwrap(), -2f64.ln(), max_relative = 1e-14);
        let off = cube.translate(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(entropy(&off, &mu), Err(GeomError::NonpositiveSupport { .. })));
        let p = crate::random::random_polytope(3, 10, 2).unwrap();
        let atoms: Vec<Atom> = p.normals().iter().enumerate().map(|(i, u)| Atom { u: u.clone(), mass: 1.0 + i as f64 }).collect();
        let mu = DiscreteSphericalMeasure::new(3, atoms).unwrap();
        let direct: f64 = -mu.atoms().iter().zip(p.offsets()).map(|(a, h)| a.mass * h.ln()).sum::<f64>() / mu.total_mass();
        assert_relative_eq!(entropy(&p, &mu).unwrap(), direct, max_relative = 1e-12);
    }

    #[test]
    fn objectives_are_zero_homogeneous() {
        let p = crate::random::random_polytope(3, 10, 3).unwrap();
        let cfg = MeasureConfig::default();
        let mu = crate::measure::chord_measure_polytope(&p, 2.0, &cfg).unwrap();
        for q in [1.0, 4.0] {
            let a = chord_objective(&p, &mu, q, &cfg).unwrap();
            let b = chord_objective(&p.scale(1.7).unwrap(), &mu, q, &cfg).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        let a = chord_objective(&p, &mu, 2.0, &cfg).unwrap();
        let b = chord_objective(&p.translate(&[0.05, -0.02, 0.03]).unwrap(), &mu, 2.0, &cfg).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-6);
        let s = crate::random::random_symmetric_polytope(3, 5, true, 3).unwrap();
        let g = cone_chord_measure(&s, 2.0, &cfg).unwrap();
        for q in [1.0, 4.0] {
            let a = log_objective(&s, &g, q, &cfg).unwrap();
            let b = log_objective(&s.scale(0.6).unwrap(), &g, q, &cfg).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn chord_round_trip_cube_q2() {
        let cube = HPolytope::cube(3, 1.0).unwrap();
        let mu = crate::measure::chord_measure_polytope(&cube, 2.0, &MeasureConfig::default()).unwrap();
        let res = solve_chord_minkowski(&mu, &SolverConfig::with_q(2.0)).unwrap();
        assert!(res.residual <= 2e-3, "{res:?}");
        let d = crate::body::hausdorff_up_to_translation(&Body::HPolytope(res.body.clone()), &Body::HPolytope(cube), 64).unwrap();
        assert!(d < 1e-2, "hausdorff {d}");
        assert!(res.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs())));
    }

    #[test]
    fn equal_axis_masses_give_a_cube() {
        let mu = axes_measure(3, 5.0);
        let res = solve_chord_minkowski(&mu, &SolverConfig::with_q(2.0)).unwrap();
        let h = res.body.tight_offsets();
        for hi in &h {
            assert_relative_eq!(*hi, h[0], max_relative = 1e-6);
        }
        assert!(res.residual <= 1e-3);
    }

    #[test]
    fn classical_minkowski_round_trip() {
        let p = crate::random::random_polytope(3, 9, 7).unwrap();
        let mu = crate::measure::chord_measure_polytope(&p, 1.0, &MeasureConfig::default()).unwrap();
        let cfg = SolverConfig { residual_tol: 1e-7, ..SolverConfig::with_q(1.0) };
        let res = solve_chord_minkowski(&mu, &cfg).unwrap();
        let d = crate::body::hausdorff_up_to_translation(&Body::HPolytope(res.body), &Body::HPolytope(p.clone()), 64).unwrap();
        assert!(d <= 1e-3 * p.diameter(), "hausdorff {d}");
    }

    #[test]
    fn log_round_trip_cube_cone_volume() {
        let mu = axes_measure(3, 4.0 / 3.0);
        let mut cfg = SolverConfig::with_q(1.0);
        cfg.symmetric = true;
        // Cross-polytope data is extremal at q = 1; the cube is still the
        // fixed point of the ascent from the symmetric start.
        let res = solve_chord_log_minkowski(&mu, &cfg).unwrap();
        for hi in res.body.tight_offsets() {
            assert_relative_eq!(hi, 1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn log_round_trip_symmetric_q2() {
        let s = crate::random::random_symmetric_polytope(3, 5, false, 11).unwrap();
        let mu = cone_chord_measure(&s, 2.0, &MeasureConfig::default()).unwrap();
        let mut cfg = SolverConfig::with_q(2.0);
        cfg.symmetric = true;
        let res = solve_chord_log_minkowski(&mu, &cfg).unwrap();
        assert!(res.residual <= 2e-3, "{res:?}");
    }

    #[test]
    fn log_collapse_on_violating_data() {
        let mu = DiscreteSphericalMeasure::from_pairs(
            3,
            &[
                (vec![0.0, 0.0, 1.0], 0.5),
                (vec![0.0, 0.0, -1.0], 0.5),
                (vec![1.0, 0.0, 0.0], 0.25),
                (vec![-1.0, 0.0, 0.0], 0.25),
                (vec![0.0, 1.0, 0.0], 0.25),
                (vec![0.0, -1.0, 0.0], 0.25),
            ],
        )
        .unwrap();
        assert!(!validate_log_data(&mu, 1.0).unwrap().ok);
        let mut cfg = SolverConfig::with_q(1.0);
        cfg.symmetric = true;
        let r = solve_chord_log_minkowski(&mu, &cfg);
        assert!(
            matches!(r, Err(GeomError::CollapseDetected { .. }) | Err(GeomError::NonConvergence { .. })),
            "{r:?}"
        );
    }

    #[test]
    fn area_jacobian_matches_finite_differences() {
        for (n, m, seed) in [(2, 7, 3), (3, 12, 4)] {
            let p = crate::random::random_polytope(n, m, seed).unwrap();
            let a = area_jacobian(&p).unwrap();
            let eps = 1e-6;
            for j in 0..p.len() {
                let mut up = p.offsets().to_vec();
                let mut dn = up.clone();
                up[j] += eps;
                dn[j] -= eps;
                let (su, sd) = (p.with_offsets(up).unwrap().areas(), p.with_offsets(dn).unwrap().areas());
                for i in 0..p.len() {
                    let fd = (su[i] - sd[i]) / (2.0 * eps);
                    assert!((fd - a[(i, j)]).abs() < 1e-5 * (1.0 + fd.abs()), "n={n} ({i},{j}): {fd} vs {}", a[(i, j)]);
                }
            }
        }
    }
}