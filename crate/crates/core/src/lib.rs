//! Shortest closed billiard trajectories in Minkowski gauges.
//!
//! For convex polytopes `K ⊂ V` and `T ⊂ V*` (origin inside `T`), `ξ_T(K)` is
//! the least `‖·‖_T`-length of a closed polyline that does not fit into any
//! translate of the interior of `K`. It equals the Hofer–Zehnder capacity of
//! the Lagrangian product `K × T`, which makes the ratio
//! `n!·vol(K)·vol(T)/ξ_T(K)^n` the quantity Viterbo's conjecture bounds below
//! by one.
//!
//! The crate is organised bottom-up:
//!
//! - [`lp`]: a deterministic dense simplex solver,
//! - [`polytope`]: dual descriptions, polarity, Minkowski sums, volumes,
//!   projections, gauges and the fitting-scale program,
//! - [`bodies`]: simplices, permutohedra, Hanner polytopes and friends with
//!   fixed normalizations,
//! - [`billiards`]: `ξ_T(K)` by normal-cage enumeration, a penalty-method
//!   oracle, reflection-law checks and the Viterbo ratio,
//! - [`lattice`]: the `A_n*` lattice, its Voronoi and Delaunay cells, the
//!   permutohedral covering construction and lattice-avoidance sampling,
//! - [`report`]: the reproduction suite, JSON/CSV/SVG output.

pub mod billiards;
pub mod bodies;
mod error;
mod hull;
pub mod io;
pub mod lattice;
pub mod lp;
pub mod polytope;
pub mod report;

pub use error::{Error, Result};
pub use polytope::{
    fitting_scale, gauge_norm, max_fiber_length, minkowski_sum, minkowski_sum_points, project,
    zonotope, Facet, FittingCertificate, Gauge, Point, Polytope,
};

/// Tolerance for geometric predicates (incidence, containment, coplanarity).
pub const EPS_GEOM: f64 = 1e-9;
/// Tolerance for LP optimality and the non-fitting test `α ≥ 1 − EPS_LP`.
pub const EPS_LP: f64 = 1e-7;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/polytopes.md")]
    mod polytopes {}
    #[doc = include_str!("../../../book/src/bodies.md")]
    mod bodies {}
    #[doc = include_str!("../../../book/src/billiards.md")]
    mod billiards {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
