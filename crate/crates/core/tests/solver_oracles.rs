use nalgebra::{DMatrix, DVector};
use chordgeom::body::{hausdorff_up_to_translation, Body};
use chordgeom::linalg::dot;
use chordgeom::measure::{chord_measure_polytope, DiscreteSphericalMeasure, MeasureConfig};
use chordgeom::polytope::{wulff, HPolytope};
use chordgeom::random::random_polytope;
use chordgeom::solve::{solve_chord_minkowski, SolverConfig};

/// ∂S_i/∂h_j from ridge lengths: L_ij / sin θ_ij off the diagonal and
/// −Σ_j L_ij cot θ_ij on it (n = 3).
fn area_jacobian(p: &HPolytope) -> DMatrix<f64> {
    let m = p.len();
    let mut a = DMatrix::zeros(m, m);
    for f in p.facets().iter().filter(|f| !f.redundant) {
        let i = f.index;
        let ui = p.normals()[i].as_slice();
        for r in &f.ridges {
            let len = chordgeom::linalg::dist(&r.points[0], &r.points[1]);
            let mid = chordgeom::linalg::mean_point(&r.points);
            let j = (0..m)
                .filter(|&j| j != i)
                .min_by(|&a, &b| {
                    let da = (dot(p.normals()[a].as_slice(), &mid) - p.offsets()[a]).abs();
                    let db = (dot(p.normals()[b].as_slice(), &mid) - p.offsets()[b]).abs();
                    da.total_cmp(&db)
                })
                .unwrap();
            let c = dot(ui, p.normals()[j].as_slice());
            let sin = (1.0 - c * c).sqrt();
            a[(i, j)] += len / sin;
            a[(i, i)] -= len * c / sin;
        }
    }
    a
}

/// Classical Minkowski problem as the convex program
/// min Σ m_i h_i − log V(h), solved by damped Newton steps. Stationarity
/// gives m_i = S_i / V.
fn log_volume_newton(mu: &DiscreteSphericalMeasure) -> HPolytope {
    let n = mu.dim() as f64;
    let normals = mu.directions();
    let masses = DVector::from_vec(mu.masses());
    let total = masses.sum();
    let objective = |h: &DVector<f64>| -> Option<(f64, HPolytope)> {
        let p = wulff(&normals, h.as_slice()).ok()?;
        let v = p.volume();
        (v > 0.0).then(|| (masses.dot(h) - v.ln(), p))
    };
    let mut h = DVector::from_element(normals.len(), n / total);
    let (mut f, mut p) = objective(&h).unwrap();
    for _ in 0..200 {
        let v = p.volume();
        let s = DVector::from_vec(p.areas());
        let grad = &masses - &s / v;
        let worst = grad.component_div(&masses).amax();
        if worst < 1e-10 {
            return p.scale((total / s.sum()).powf(1.0 / (n - 1.0))).unwrap();
        }
        let mut hess = -area_jacobian(&p) / v + &s * s.transpose() / (v * v);
        let ridge = 1e-12 * hess.trace();
        for i in 0..hess.nrows() {
            hess[(i, i)] += ridge;
        }
        let step = hess.cholesky().map(|c| c.solve(&grad)).unwrap_or_else(|| grad.clone());
        let slope = grad.dot(&step);
        let mut t = 1.0;
        loop {
            let trial = &h - &step * t;
            if let Some((ft, pt)) = objective(&trial) {
                if ft <= f - 1e-4 * t * slope + 1e-13 * f.abs() {
                    h = trial;
                    f = ft;
                    p = pt;
                    break;
                }
            }
            t *= 0.5;
            assert!(t > 1e-12, "line search failed at worst {worst:e}");
        }
        let c = p.centroid().to_vec();
        for (hi, u) in h.iter_mut().zip(&normals) {
            *hi -= dot(u.as_slice(), &c);
        }
        p = wulff(&normals, h.as_slice()).unwrap();
    }
    panic!("log-volume Newton did not converge");
}

#[test]
fn q1_solver_agrees_with_area_fixed_point() {
    let cfg = SolverConfig { residual_tol: 1e-7, ..SolverConfig::with_q(1.0) };
    for seed in 0..10 {
        let p = random_polytope(3, 12, 100 + seed).unwrap();
        let mu = chord_measure_polytope(&p, 1.0, &MeasureConfig::default()).unwrap();
        let solved = solve_chord_minkowski(&mu, &cfg).unwrap();
        let oracle = log_volume_newton(&mu);
        let d = hausdorff_up_to_translation(&Body::HPolytope(solved.body), &Body::HPolytope(oracle), 64).unwrap();
        assert!(d <= 1e-3 * p.diameter(), "seed {seed}: hausdorff {d}");
    }
}
