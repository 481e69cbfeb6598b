//! Check suites: each runs a family of identities or round trips at a fixed
//! seed and returns one record per check.

use serde::{Deserialize, Serialize};

use crate::body::{hausdorff_up_to_translation, Ball, Body, Ellipsoid, UnitVector};
use crate::chord::{chord_line_mc, default_line_samples};
use crate::concentration::{concentration_sweep, ellipsoid_chord_bound_check, sharpness_sequence};
use crate::dualv::mean_curvature_limit;
use crate::error::{GeomError, Result};
use crate::linalg::norm;
use crate::measure::{
    chord_integral_quadrature, chord_measure_polytope, cone_chord_measure, log_variational_check, q_zero_limit_check,
    variational_check, MeasureConfig,
};
use crate::polytope::HPolytope;
use crate::random::{random_ellipsoid, random_polytope, random_symmetric_polytope};
use crate::rng::{stream_id, substream};
use crate::solve::{solve_chord_log_minkowski, solve_chord_minkowski, SolverConfig};
use crate::special::omega;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
}

/// One check: `observed` is compared with `bound` under `tolerance`; the
/// comparison itself is named in `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub outcome: Outcome,
    pub observed: f64,
    pub bound: f64,
    pub tolerance: f64,
}

impl CheckRecord {
    /// |observed − bound| ≤ tolerance.
    pub fn near(name: impl Into<String>, observed: f64, bound: f64, tolerance: f64) -> Self {
        Self::from_bool(name, (observed - bound).abs() <= tolerance, observed, bound, tolerance)
    }

    /// observed ≤ bound + tolerance.
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64, tolerance: f64) -> Self {
        Self::from_bool(name, observed <= bound + tolerance, observed, bound, tolerance)
    }

    /// observed ≥ bound − tolerance.
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64, tolerance: f64) -> Self {
        Self::from_bool(name, observed >= bound - tolerance, observed, bound, tolerance)
    }

    fn from_bool(name: impl Into<String>, ok: bool, observed: f64, bound: f64, tolerance: f64) -> Self {
        let outcome = if ok && observed.is_finite() { Outcome::Pass } else { Outcome::Fail };
        CheckRecord { name: name.into(), outcome, observed, bound, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Variational,
    Concentration,
    Limits,
    SolverRoundtrip,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Identities, Suite::Variational, Suite::Concentration, Suite::Limits, Suite::SolverRoundtrip];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Variational => "variational",
            Suite::Concentration => "concentration",
            Suite::Limits => "limits",
            Suite::SolverRoundtrip => "solver-roundtrip",
        }
    }

    pub fn run(self, n: usize, seed: u64) -> Result<Vec<CheckRecord>> {
        match self {
            Suite::Identities => identities(n, seed),
            Suite::Variational => variational(n, seed),
            Suite::Concentration => concentration(n, seed),
            Suite::Limits => limits(n, seed),
            Suite::SolverRoundtrip => solver_roundtrip(n, seed),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn need_dims(n: usize, dims: &[usize]) -> Result<()> {
    if dims.contains(&n) {
        Ok(())
    } else {
        Err(GeomError::Precondition(format!("suite supports n ∈ {dims:?}, got {n}")))
    }
}

/// The unit cube [0, 1]^n.
pub fn unit_cube(n: usize) -> Result<HPolytope> {
    HPolytope::cube(n, 0.5)?.translate(&vec![0.5; n])
}

/// I_1 = V, I_0 = ω_{n−1}S/(nω_n), I_{n+1} = (n+1)V²/ω_n by line Monte Carlo,
/// plus homogeneity and the facet identities on a random polytope.
pub fn identities(n: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    need_dims(n, &[2, 3, 4])?;
    let samples = default_line_samples(n);
    let nf = n as f64;
    let mut out = Vec::new();
    let bodies = [
        ("ball", Body::Ball(Ball::unit(n)?)),
        ("cube", Body::HPolytope(unit_cube(n)?)),
        ("random", Body::HPolytope(random_polytope(n, 10, seed)?)),
    ];
    for (k, (label, body)) in bodies.iter().enumerate() {
        let v = body.volume();
        let s = body.surface_area();
        let targets = [
            (1.0, v, "volume"),
            (0.0, omega(n - 1) * s / (nf * omega(n)), "surface"),
            (nf + 1.0, (nf + 1.0) * v * v / omega(n), "top"),
        ];
        for (j, (q, want, tag)) in targets.into_iter().enumerate() {
            let est = chord_line_mc(body, q, samples, seed.wrapping_add((3 * k + j) as u64))?;
            out.push(CheckRecord::at_most(format!("{label}: I_{q} {tag} relative error"), rel(est.value, want), 5e-3, 0.0));
            if q == 1.0 {
                let z = (est.value - want).abs() / est.std_error.max(1e-300);
                out.push(CheckRecord::at_most(format!("{label}: I_1 volume deviation in σ"), z, 3.0, 0.0));
            }
        }
    }
    let p = random_polytope(n, 10, seed)?;
    let cfg = MeasureConfig::default();
    for q in [0.5, 2.0] {
        // Line Monte Carlo: the facet quadrature would evaluate Σ h_i F_i itself.
        let iq = chord_line_mc(&Body::HPolytope(p.clone()), q, samples, seed.wrapping_add(100))?.value;
        let tol = 1e-2;
        let big = chord_integral_quadrature_or_mc(&p.scale(2.0)?, q, seed)?;
        let small = chord_integral_quadrature_or_mc(&p, q, seed)?;
        out.push(CheckRecord::near(format!("random: I_{q}(2K)/I_{q}(K) / 2^(n+q-1)"), big / small / 2f64.powf(nf + q - 1.0), 1.0, 1e-2));
        let mu = chord_measure_polytope(&p, q, &cfg)?;
        let hf: f64 = mu.atoms().iter().map(|a| a.mass * p.support(a.u.as_slice())).sum();
        out.push(CheckRecord::at_most(format!("random: total-mass identity at q={q}"), rel(hf, (nf + q - 1.0) * iq), tol, 0.0));
        out.push(CheckRecord::at_most(
            format!("random: centroid identity at q={q}"),
            norm(&mu.centroid_vector()) / mu.total_mass(),
            1e-3,
            0.0,
        ));
        let g = cone_chord_measure(&p, q, &cfg)?;
        out.push(CheckRecord::at_most(format!("random: cone-chord total equals I_{q}"), rel(g.total_mass(), iq), tol, 0.0));
    }
    Ok(out)
}

fn chord_integral_quadrature_or_mc(p: &HPolytope, q: f64, seed: u64) -> Result<f64> {
    if p.dim() <= 3 {
        chord_integral_quadrature(p, q, 12)
    } else {
        // Same lines for both bodies: scaling is then exact up to rounding.
        Ok(chord_line_mc(&Body::HPolytope(p.clone()), q, 100_000, seed)?.value)
    }
}

/// Halving sequence 1e−2, 5e−3, … down to about 1e−4.
pub fn halvings() -> Vec<f64> {
    (0..8).map(|i| 1e-2 / 2f64.powi(i)).collect()
}

/// Difference quotients of I_q along Minkowski and logarithmic perturbations.
pub fn variational(n: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    need_dims(n, &[2, 3])?;
    let k = random_polytope(n, 10, seed)?;
    let l = HPolytope::cube(n, 1.0)?;
    let cfg = MeasureConfig::default();
    let mut out = Vec::new();
    for q in [0.5, 2.0, 3.0] {
        let t = variational_check(&k, &l, q, &halvings(), &cfg)?;
        out.push(CheckRecord::at_least(format!("Minkowski q={q}: mismatch rate in t"), t.rate, 0.8, 0.0));
        out.push(CheckRecord::at_most(format!("Minkowski q={q}: terminal mismatch / (n+q-1)I_q"), t.terminal_relative, 1e-3, 0.0));
    }
    let mut rng = substream(seed, stream_id("variational-log", n as u64));
    let g: Vec<f64> = (0..k.len()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
    let t = log_variational_check(&k, &g, 2.0, &halvings(), &cfg)?;
    out.push(CheckRecord::at_least("logarithmic q=2: mismatch rate in t", t.rate, 0.8, 0.0));
    out.push(CheckRecord::at_most("logarithmic q=2: terminal mismatch / (n+q-1)I_q", t.terminal_relative, 1e-3, 0.0));
    Ok(out)
}

/// Subspace concentration, sharpness of the bound, and the ellipsoid estimate.
pub fn concentration(n: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    need_dims(n, &[2, 3, 4])?;
    let cfg = if n <= 3 { MeasureConfig::fast() } else { MeasureConfig { mc_samples: 50_000, seed, ..MeasureConfig::fast() } };
    let bodies = (0..10)
        .map(|i| random_symmetric_polytope(n, n + 2, true, seed.wrapping_mul(1000).wrapping_add(i)))
        .collect::<Result<Vec<_>>>()?;
    let tol = if n <= 3 { 1e-3 } else { 2e-2 };
    let s = concentration_sweep(&bodies, tol, &cfg)?;
    let mut out = vec![
        CheckRecord::at_most("subspace concentration violations", s.violations as f64, 0.0, 0.0),
        CheckRecord::at_least("worst subspace slack", s.worst_slack, 0.0, tol),
    ];
    if n == 3 {
        let t = sharpness_sequence(1, 3, 3, &[1, 2, 4, 8, 16], &cfg)?;
        out.push(CheckRecord::at_least("sharpness (n,k,q)=(3,1,3): final ratio / limit", t.final_fraction(), 0.95, 0.0));
        out.push(CheckRecord::at_least("sharpness (n,k,q)=(3,1,3): monotone", t.monotone() as u8 as f64, 1.0, 0.0));
    }
    let qs: Vec<f64> = (1..=n).map(|m| m as f64 + 0.5).collect();
    let mut worst = f64::INFINITY;
    for i in 0..5 {
        let e = random_ellipsoid(n, 0.05, 1.0, seed.wrapping_mul(100).wrapping_add(i))?;
        for &q in &qs {
            worst = worst.min(ellipsoid_chord_bound_check(&e, q, 200_000, seed.wrapping_add(i))?.slack());
        }
    }
    out.push(CheckRecord::at_least("ellipsoid chord bound: worst rhs - lhs - 3σ", worst, 0.0, 0.0));
    Ok(out)
}

/// Mean-curvature limit of q·Ṽ_{q−1} at boundary points and the q → 0 limit
/// of the chord measure's total mass.
pub fn limits(n: usize, _seed: u64) -> Result<Vec<CheckRecord>> {
    need_dims(n, &[2, 3])?;
    let nf = n as f64;
    let q_seq = [0.05, 0.1, 0.15, 0.2];
    let c = (nf - 1.0) * omega(n - 1) / (2.0 * nf);
    let mut out = Vec::new();
    let ball = Body::Ball(Ball::unit(n)?);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    let fit = mean_curvature_limit(&ball, &z, &q_seq, 0.05)?;
    out.push(CheckRecord::at_most("ball: mean-curvature extrapolate relative error", rel(fit.estimate, c), 0.02, 0.0));
    if n == 3 {
        let e = Ellipsoid::axis_aligned(vec![0.0; 3], &[1.0, 1.0, 2.0])?;
        let body = Body::Ellipsoid(e.clone());
        for (label, w) in [("equator", [1.0, 0.0, 0.0]), ("oblique", [0.6, 0.0, 0.8])] {
            let p = e.boundary_point(&w);
            let fit = mean_curvature_limit(&body, &p, &q_seq, 0.05)?;
            let h = c * e.mean_curvature(&p);
            out.push(CheckRecord::at_most(format!("ellipsoid (1,1,2) {label}: mean-curvature relative error"), rel(fit.estimate, h), 0.05, 0.0));
        }
    }
    let rows = q_zero_limit_check(&ball, &[0.02])?;
    out.push(CheckRecord::at_most("ball: F_q total at q=0.02 vs area measure", rows[0].relative_gap, 0.03, 0.0));
    Ok(out)
}

/// Chord Minkowski (q = 1, 2) and log-Minkowski (q = 2) round trips.
pub fn solver_roundtrip(n: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    need_dims(n, &[2, 3])?;
    let mut out = Vec::new();
    let p = random_polytope(n, 10, seed)?;
    let cfg = MeasureConfig::default();
    for q in [1.0, 2.0] {
        let mu = chord_measure_polytope(&p, q, &cfg)?;
        let mut sc = SolverConfig::with_q(q);
        if q == 1.0 {
            sc.residual_tol = 1e-7;
        }
        let r = solve_chord_minkowski(&mu, &sc)?;
        out.push(CheckRecord::at_most(format!("chord Minkowski q={q}: residual"), r.residual, 1e-2, 0.0));
        if q == 1.0 {
            let d = hausdorff_up_to_translation(&Body::HPolytope(r.body), &Body::HPolytope(p.clone()), 64)?;
            out.push(CheckRecord::at_most("chord Minkowski q=1: Hausdorff / diam", d / p.diameter(), 1e-3, 0.0));
        }
    }
    let s = random_symmetric_polytope(n, n + 2, false, seed)?;
    let mu = cone_chord_measure(&s, 2.0, &cfg)?;
    let sc = SolverConfig { symmetric: true, ..SolverConfig::with_q(2.0) };
    let r = solve_chord_log_minkowski(&mu, &sc)?;
    out.push(CheckRecord::at_most("log-Minkowski q=2: residual", r.residual, 1e-2, 0.0));
    let mut pairs = Vec::new();
    for i in 0..n {
        let m = if i + 1 == n { 2.0 } else { 1.0 };
        for sgn in [1.0, -1.0] {
            pairs.push((UnitVector::axis(n, i, sgn).as_slice().to_vec(), m));
        }
    }
    let bad = crate::measure::DiscreteSphericalMeasure::from_pairs(n, &pairs)?;
    let neg = solve_chord_log_minkowski(&bad, &SolverConfig { symmetric: true, ..SolverConfig::with_q(1.0) });
    let failed = matches!(neg, Err(GeomError::CollapseDetected { .. }) | Err(GeomError::NonConvergence { .. }));
    out.push(CheckRecord::at_least("log-Minkowski on violating data fails", failed as u8 as f64, 1.0, 0.0));
    Ok(out)
}
