//! Seeded generators for test corpora.

use rand::Rng;

use crate::body::{Ellipsoid, UnitVector};
use crate::error::{GeomError, Result};
use crate::polytope::{HPolytope, VPolytope};
use crate::rng::{rotation, stream_id, substream, unit_vector};

const ATTEMPTS: usize = 200;

fn min_separation(normals: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in normals.iter().enumerate() {
        for b in &normals[..i] {
            best = best.min(crate::linalg::dist(a, b));
        }
    }
    best
}

/// Polytope with at most `m` facets (and at least 2m/3), none redundant,
/// origin in the interior. Normals are uniform on the sphere and offsets
/// uniform in [0.6, 1.4]; constraints that end up redundant are dropped.
pub fn random_polytope(n: usize, m: usize, seed: u64) -> Result<HPolytope> {
    if m <= n {
        return Err(GeomError::Precondition(format!("need more than {n} facets, got {m}")));
    }
    let mut rng = substream(seed, stream_id("random-polytope", (n * 1000 + m) as u64));
    for _ in 0..ATTEMPTS {
        let normals: Vec<Vec<f64>> = (0..m).map(|_| unit_vector(&mut rng, n)).collect();
        if min_separation(&normals) < 0.2 {
            continue;
        }
        let offsets: Vec<f64> = (0..m).map(|_| rng.random_range(0.6..1.4)).collect();
        let Ok(p) = HPolytope::from_raw(&normals, &offsets) else { continue };
        let keep: Vec<usize> = (0..m).filter(|i| !p.redundant().contains(i)).collect();
        let kn: Vec<Vec<f64>> = keep.iter().map(|&i| normals[i].clone()).collect();
        let kh: Vec<f64> = keep.iter().map(|&i| offsets[i]).collect();
        if let Ok(p) = HPolytope::from_raw(&kn, &kh) {
            if p.redundant().is_empty() && p.inradius() > 0.1 && keep.len() * 3 >= m * 2 {
                return Ok(p);
            }
        }
    }
    Err(GeomError::Precondition(format!("no valid random polytope with {m} facets in R^{n}")))
}

/// Origin-symmetric polytope with `pairs` antipodal facet pairs. With `axes`,
/// the first n pairs are ±e_i so that coordinate subspaces carry mass.
pub fn random_symmetric_polytope(n: usize, pairs: usize, axes: bool, seed: u64) -> Result<HPolytope> {
    if pairs < n {
        return Err(GeomError::Precondition(format!("need at least {n} facet pairs, got {pairs}")));
    }
    let mut rng = substream(seed, stream_id("random-symmetric-polytope", (n * 1000 + pairs) as u64 * 2 + axes as u64));
    for _ in 0..ATTEMPTS {
        let mut half: Vec<Vec<f64>> = Vec::with_capacity(pairs);
        if axes {
            half.extend((0..n).map(|i| UnitVector::axis(n, i, 1.0).as_slice().to_vec()));
        }
        while half.len() < pairs {
            half.push(unit_vector(&mut rng, n));
        }
        let mut normals = half.clone();
        normals.extend(half.iter().map(|u| u.iter().map(|x| -x).collect::<Vec<f64>>()));
        if min_separation(&normals) < 0.2 {
            continue;
        }
        let hs: Vec<f64> = (0..pairs).map(|_| rng.random_range(0.6..1.4)).collect();
        let offsets: Vec<f64> = hs.iter().chain(hs.iter()).copied().collect();
        if let Ok(p) = HPolytope::from_raw(&normals, &offsets) {
            if p.redundant().is_empty() {
                return Ok(p);
            }
        }
    }
    Err(GeomError::Precondition(format!("no valid symmetric polytope with {pairs} pairs in R^{n}")))
}

/// Simplex with vertices uniform in the unit ball, rejected if too flat.
pub fn random_simplex(n: usize, seed: u64) -> Result<HPolytope> {
    let mut rng = substream(seed, stream_id("random-simplex", n as u64));
    for _ in 0..ATTEMPTS {
        let pts: Vec<Vec<f64>> = (0..=n).map(|_| crate::rng::in_unit_ball(&mut rng, n)).collect();
        if let Ok(v) = VPolytope::new(pts) {
            let p = v.hrep().clone();
            if p.inradius() > 0.05 {
                return Ok(p);
            }
        }
    }
    Err(GeomError::Precondition(format!("no valid random simplex in R^{n}")))
}

/// Ellipsoid centred at the origin with a Haar frame and ascending semi-axes
/// drawn log-uniformly from [a_min, a_max].
pub fn random_ellipsoid(n: usize, a_min: f64, a_max: f64, seed: u64) -> Result<Ellipsoid> {
    if !(0.0 < a_min && a_min <= a_max) {
        return Err(GeomError::Precondition(format!("invalid axis range [{a_min}, {a_max}]")));
    }
    let mut rng = substream(seed, stream_id("random-ellipsoid", n as u64));
    let mut axes: Vec<f64> = (0..n).map(|_| (rng.random_range(a_min.ln()..=a_max.ln())).exp()).collect();
    axes.sort_by(f64::total_cmp);
    let frame = rotation(&mut rng, n);
    Ellipsoid::new(vec![0.0; n], axes, frame)
}
