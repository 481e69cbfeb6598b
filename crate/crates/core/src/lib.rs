//! Integral geometry of convex bodies: chord integrals, dual quermassintegrals,
//! chord measures, and solvers for the discrete chord Minkowski and chord
//! log-Minkowski problems.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod chord;
pub mod concentration;
pub mod error;
pub mod linalg;
pub mod measure;
pub mod polytope;
pub mod potential;
pub mod random;
pub mod rng;
pub mod solve;
pub mod special;
pub mod stats;
pub mod verify;
pub mod dualv;
pub mod sphere;

pub use body::{hausdorff_distance, Ball, Body, BodySpec, Ellipsoid, UnitVector};
pub use error::{GeomError, Result};
pub use polytope::{wulff, FacetGeometry, HPolytope, VPolytope};
pub use sphere::{QuadScheme, SphereQuadrature};
