use approx::relative_eq;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use chordgeom::body::{Body, Ellipsoid};
use chordgeom::chord::{chord_line_mc, chord_closed};
use chordgeom::dualv::{dual_v, riesz_dual_v};
use chordgeom::linalg::{dot, norm};
use chordgeom::measure::{
    chord_integral_quadrature, chord_measure_detailed, chord_measure_polytope, cone_chord_measure, MeasureConfig,
};
use chordgeom::polytope::{wulff, HPolytope};
use chordgeom::random::{random_polytope, random_symmetric_polytope};
use chordgeom::rng::{substream, unit_vector};
use chordgeom::solve::{chord_objective, log_objective};
use chordgeom::sphere::SphereQuadrature;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(7), failure_persistence: None, ..ProptestConfig::default() }
}

fn polytope(n: usize) -> impl Strategy<Value = HPolytope> {
    (8usize..14, 0u64..10_000).prop_map(move |(m, seed)| random_polytope(n, m, seed).unwrap())
}

fn direction(n: usize) -> impl Strategy<Value = Vec<f64>> {
    any::<u64>().prop_map(move |s| unit_vector(&mut substream(s, 0), n))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    relative_eq!(a, b, max_relative = rel, epsilon = 1e-300)
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn support_is_additive_on_shared_normals(k in polytope(3), t in 0.1f64..3.0, u in direction(3)) {
        let l = HPolytope::cube(3, 1.0).unwrap();
        let normals = k.normals().to_vec();
        let hl: Vec<f64> = normals.iter().map(|v| l.support(v.as_slice())).collect();
        let sum: Vec<f64> = k.tight_offsets().iter().zip(&hl).map(|(a, b)| a + t * b).collect();
        let kl = wulff(&normals, &sum).unwrap();
        // Additivity holds on the shared normal set.
        for v in &normals {
            let want = k.support(v.as_slice()) + t * l.support(v.as_slice());
            prop_assert!(close(kl.support(v.as_slice()), want, 1e-9));
        }
        // Elsewhere the Wulff shape contains the true Minkowski sum.
        prop_assert!(kl.support(&u) >= k.support(&u) + t * l.support(&u) - 1e-9);
    }

    #[test]
    fn xray_splits_into_radial_functions(k in polytope(3), u in direction(3), w in direction(3), s in 0.0f64..0.9) {
        let body = Body::HPolytope(k.clone());
        let z: Vec<f64> = k.chebyshev_center().iter().zip(&w).map(|(c, wi)| c + s * k.inradius() * wi).collect();
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let x = body.xray(&z, &u);
        prop_assert!((x - body.radial_extended(&z, &u) - body.radial_extended(&z, &neg)).abs() <= 1e-9 * k.diameter());
    }

    #[test]
    fn wulff_of_own_support_is_idempotent(k in polytope(3)) {
        let again = wulff(k.normals(), &k.tight_offsets()).unwrap();
        for (a, b) in again.offsets().iter().zip(k.offsets()) {
            prop_assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn radial_function_is_homogeneous(k in polytope(3), t in 0.2f64..5.0, u in direction(3)) {
        let body = Body::HPolytope(k.clone());
        let tb = Body::HPolytope(k.scale(t).unwrap());
        let z = k.centroid().to_vec();
        let tz: Vec<f64> = z.iter().map(|x| t * x).collect();
        prop_assert!(close(tb.radial_extended(&tz, &u), t * body.radial_extended(&z, &u), 1e-10));
    }

    #[test]
    fn cone_volumes_sum_to_volume(k in polytope(3)) {
        let s: f64 = k.offsets().iter().zip(k.areas()).map(|(h, a)| h * a).sum::<f64>() / 3.0;
        prop_assert!(close(s, k.volume(), 1e-9));
    }

    #[test]
    fn dual_v_translation_is_bitwise(k in polytope(3), y in direction(3), q in 0.5f64..4.0) {
        let quad = SphereQuadrature::product(3, 24);
        let z = k.centroid().to_vec();
        let moved = Body::HPolytope(k.translate(&y).unwrap());
        let zy: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a + b).collect();
        let a = dual_v(&Body::HPolytope(k.clone()), &z, q, &quad).unwrap();
        let b = dual_v(&moved, &zy, q, &quad).unwrap();
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn dual_v_is_homogeneous(k in polytope(3), t in 0.3f64..3.0, q in 0.5f64..4.0) {
        let quad = SphereQuadrature::product(3, 32);
        let z = k.centroid().to_vec();
        let tz: Vec<f64> = z.iter().map(|x| t * x).collect();
        let a = dual_v(&Body::HPolytope(k.clone()), &z, q, &quad).unwrap();
        let b = dual_v(&Body::HPolytope(k.scale(t).unwrap()), &tz, q, &quad).unwrap();
        prop_assert!(close(b, t.powf(q) * a, 1e-9));
    }

    #[test]
    fn dual_v_is_continuous(k in polytope(3), w in direction(3), q in 0.5f64..3.0) {
        let quad = SphereQuadrature::product(3, 64);
        let body = Body::HPolytope(k.clone());
        let c = k.chebyshev_center().to_vec();
        let at = |eps: f64| {
            let z: Vec<f64> = c.iter().zip(&w).map(|(a, b)| a + eps * k.inradius() * b).collect();
            dual_v(&body, &z, q, &quad).unwrap()
        };
        let base = at(0.0);
        let diffs: Vec<f64> = [0.1, 0.01, 0.001].iter().map(|e| (at(*e) - base).abs()).collect();
        prop_assert!(diffs[2] <= diffs[0] + 1e-9 * base);
        prop_assert!(diffs[2] <= 1e-2 * base);
    }

    #[test]
    fn chord_measure_translation_and_scaling(k in polytope(3), y in direction(3), t in 0.5f64..2.0, q in 0.5f64..4.0) {
        let cfg = MeasureConfig::fast();
        let f = chord_measure_detailed(&k, q, &cfg).unwrap();
        let ft = chord_measure_detailed(&k.translate(&y.iter().map(|x| 0.1 * x).collect::<Vec<_>>()).unwrap(), q, &cfg).unwrap();
        let fs = chord_measure_detailed(&k.scale(t).unwrap(), q, &cfg).unwrap();
        let total = f.total();
        for i in 0..f.masses.len() {
            prop_assert!((ft.masses[i] - f.masses[i]).abs() <= 1e-3 * total);
            prop_assert!((fs.masses[i] - t.powf(1.0 + q) * f.masses[i]).abs() <= 1e-9 * t.powf(1.0 + q) * total);
        }
    }

    #[test]
    fn surface_area_measure_is_exact(k in polytope(3)) {
        let f = chord_measure_detailed(&k, 1.0, &MeasureConfig::default()).unwrap();
        for (a, b) in f.masses.iter().zip(k.areas()) {
            prop_assert!((a - b).abs() <= 1e-8 * b);
        }
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn dual_v_evaluators_agree(k in polytope(3), q in 2.0f64..4.0, seed in any::<u64>()) {
        let body = Body::HPolytope(k.clone());
        let z = k.centroid().to_vec();
        let quad = dual_v(&body, &z, q, &SphereQuadrature::product(3, 96)).unwrap();
        let mc = riesz_dual_v(&body, &z, q, 200_000, seed).unwrap();
        prop_assert!((quad - mc.value).abs() <= 3.0 * mc.std_error + 1e-4 * quad, "{quad} vs {mc:?}");
    }

    #[test]
    fn chord_integral_is_homogeneous_and_translation_invariant(k in polytope(3), q in 0.5f64..4.0, seed in any::<u64>()) {
        let body = Body::HPolytope(k.clone());
        let a = chord_line_mc(&body, q, 100_000, seed).unwrap();
        for t in [0.5, 2.0, 3.0] {
            let b = chord_line_mc(&Body::HPolytope(k.scale(t).unwrap()), q, 100_000, seed).unwrap();
            let f = t.powf(3.0 + q - 1.0);
            prop_assert!(close(b.value, f * a.value, 1e-9), "{} vs {}", b.value, f * a.value);
        }
        let moved = chord_line_mc(&Body::HPolytope(k.translate(&[0.3, -0.2, 0.1]).unwrap()), q, 100_000, seed).unwrap();
        let joint = (a.std_error.powi(2) + moved.std_error.powi(2)).sqrt();
        prop_assert!((moved.value - a.value).abs() <= 3.0 * joint + 1e-9 * a.value);
    }

    #[test]
    fn chord_integral_is_monotone(k in polytope(3), q in 0.0f64..4.0, grow in 1.05f64..1.5, seed in any::<u64>()) {
        let inner = chord_line_mc(&Body::HPolytope(k.clone()), q, 100_000, seed).unwrap();
        let outer = chord_line_mc(&Body::HPolytope(k.scale(grow).unwrap()), q, 100_000, seed ^ 1).unwrap();
        let joint = (inner.std_error.powi(2) + outer.std_error.powi(2)).sqrt();
        prop_assert!(inner.value <= outer.value + 3.0 * joint);
    }

    #[test]
    fn jensen_bound_between_indices(k in polytope(3), r in 1.0f64..2.5, ds in 0.5f64..2.0) {
        let s = r + ds;
        let ir = chord_integral_quadrature(&k, r, 12).unwrap();
        let is = chord_integral_quadrature(&k, s, 12).unwrap();
        let e = (r - 1.0) / (s - 1.0);
        let c = r * s.powf(-e);
        let rhs = c * k.volume().powf(1.0 - e) * is.powf(e);
        prop_assert!(ir <= rhs * (1.0 + 1e-6), "{ir} > {rhs}");
    }

    #[test]
    fn chord_measure_identities(k in polytope(3), q in prop::sample::select(vec![0.5, 1.0, 2.0, 3.0, 4.0])) {
        let cfg = MeasureConfig::default();
        let mu = chord_measure_polytope(&k, q, &cfg).unwrap();
        prop_assert!(norm(&mu.centroid_vector()) <= 1e-3 * mu.total_mass());
        let iq = chord_integral_quadrature(&k, q, 12).unwrap();
        let hf: f64 = mu.atoms().iter().map(|a| a.mass * k.support(a.u.as_slice())).sum();
        prop_assert!(close(hf, (2.0 + q) * iq, 1e-3));
        let g = cone_chord_measure(&k, q, &cfg).unwrap();
        prop_assert!(close(g.total_mass(), iq, 1e-3));
    }

    #[test]
    fn objectives_are_zero_homogeneous(k in polytope(3), t in 0.3f64..3.0, q in prop::sample::select(vec![1.0, 4.0])) {
        let cfg = MeasureConfig::fast();
        let mu = chord_measure_polytope(&k, 2.0, &cfg).unwrap();
        let a = chord_objective(&k, &mu, q, &cfg).unwrap();
        let b = chord_objective(&k.scale(t).unwrap(), &mu, q, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn chord_objective_is_translation_invariant(k in polytope(3), y in direction(3), q in 0.5f64..4.0) {
        let cfg = MeasureConfig::fast();
        let mu = chord_measure_polytope(&k, 2.0, &MeasureConfig::default()).unwrap();
        let a = chord_objective(&k, &mu, q, &cfg).unwrap();
        let shift: Vec<f64> = y.iter().map(|x| 0.2 * k.inradius() * x).collect();
        let b = chord_objective(&k.translate(&shift).unwrap(), &mu, q, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-4, "{a} vs {b}");
    }

    #[test]
    fn log_objective_is_zero_homogeneous(pairs in 4usize..7, seed in 0u64..1000, t in 0.3f64..3.0) {
        let s = random_symmetric_polytope(3, pairs, true, seed).unwrap();
        let g = cone_chord_measure(&s, 2.0, &MeasureConfig::fast()).unwrap();
        for q in [1.0, 4.0] {
            let a = log_objective(&s, &g, q, &MeasureConfig::fast()).unwrap();
            let b = log_objective(&s.scale(t).unwrap(), &g, q, &MeasureConfig::fast()).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn ellipsoid_closed_paths_are_exact(a in 0.2f64..1.0, b in 0.2f64..1.0, c in 0.2f64..1.0) {
        let mut axes = [a, b, c];
        axes.sort_by(f64::total_cmp);
        let e = Body::Ellipsoid(Ellipsoid::axis_aligned(vec![0.0; 3], &axes).unwrap());
        let v = chord_closed(&e, 1.0).unwrap().value;
        prop_assert!(close(v, e.volume(), 1e-12));
        let top = chord_closed(&e, 4.0).unwrap().value;
        prop_assert!(close(top, 4.0 * v * v / chordgeom::special::omega(3), 1e-12));
        prop_assert!(dot(&[a], &[1.0]) > 0.0);
    }
}
