//! Shortest closed billiard trajectories `ξ_T(K)`.
//!
//! Lengths are measured with `‖d‖_T = max_{p ∈ T} ⟨p, d⟩`, and `ξ_T(K)` is the
//! least length of a closed polyline that does not fit into any translate of
//! `int K`. Such a minimizer needs at most `n+1` points.
//!
//! [`xi_solver`] enumerates normal cages of `K` and solves one LP per cage and
//! cyclic order. [`xi_bruteforce`] is an independent multistart oracle for
//! small dimensions.

mod cages;
mod oracle;
mod reflection;
mod solver;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bodies::cube;
use crate::polytope::{gauge_norm, FittingCertificate, Point, Polytope};
use crate::{Error, Result, EPS_GEOM};

pub use cages::{enumerate_cages, NormalCage};
pub use oracle::{xi_bruteforce, OracleConfig};
pub use reflection::{verify_reflection, BounceCheck, ReflectionReport};
pub use solver::{xi_solver, xi_solver_with, SolverConfig, SolverStats};

/// Cyclic list of points `q₁, …, q_m`, `m ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolylineJson", into = "PolylineJson")]
pub struct ClosedPolyline {
    points: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct PolylineJson {
    points: Vec<Vec<f64>>,
}

impl TryFrom<PolylineJson> for ClosedPolyline {
    type Error = Error;

    fn try_from(value: PolylineJson) -> Result<Self> {
        ClosedPolyline::new(value.points.into_iter().map(DVector::from_vec).collect())
    }
}

impl From<ClosedPolyline> for PolylineJson {
    fn from(value: ClosedPolyline) -> Self {
        PolylineJson {
            points: value.points.iter().map(|p| p.as_slice().to_vec()).collect(),
        }
    }
}

impl ClosedPolyline {
    /// Needs two or more points of one dimension, not all equal.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Precondition("a closed polyline needs at least two points".into()));
        }
        let n = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.len(),
            });
        }
        let spread = points
            .iter()
            .map(|p| (p - &points[0]).amax())
            .fold(0.0f64, f64::max);
        if spread <= EPS_GEOM {
            return Err(Error::Precondition("polyline points are all equal".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Edge vectors `q_{i+1} − q_i`, the last one closing the cycle.
    pub fn edges(&self) -> impl Iterator<Item = Point> + '_ {
        let m = self.points.len();
        (0..m).map(move |i| &self.points[(i + 1) % m] - &self.points[i])
    }

    pub fn translated(&self, t: &Point) -> Self {
        Self {
            points: self.points.iter().map(|p| p + t).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p * factor).collect(),
        }
    }

    /// All vertices plus `per_segment − 1` interior points on every edge.
    pub fn samples(&self, per_segment: usize) -> Vec<Point> {
        let m = self.points.len();
        let mut out = Vec::with_capacity(m * per_segment.max(1));
        for i in 0..m {
            let a = &self.points[i];
            let b = &self.points[(i + 1) % m];
            for k in 0..per_segment.max(1) {
                let t = k as f64 / per_segment.max(1) as f64;
                out.push(a + (b - a) * t);
            }
        }
        out
    }
}

/// A verified non-fitting closed polyline with its bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub length: f64,
    pub polyline: ClosedPolyline,
    /// Facet of `K` carrying each point.
    pub facet_assignment: Vec<usize>,
    /// `p_i ∈ T` paired with the edge `q_{i+1} − q_i`.
    #[serde(with = "crate::io::points_serde")]
    pub momenta: Vec<Point>,
    pub certificate: FittingCertificate,
}

/// `Σ ‖q_{i+1} − q_i‖_T`.
pub fn polyline_length(t: &Polytope, q: &ClosedPolyline) -> Result<f64> {
    q.edges().map(|d| gauge_norm(t, &d)).sum()
}

/// Writes `d` as a nonnegative combination of all but one of the simplex
/// directions `v₀, …, v_n`.
///
/// The returned vector has one coefficient per direction, with a zero at the
/// omitted index. When `Σ v_i = 0` the coefficient sum is the gauge of `d`
/// with unit ball `conv{v_i}`.
pub fn decompose_direction(d: &Point, directions: &[Point]) -> Result<Vec<f64>> {
    let n = d.len();
    if directions.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            found: directions.len(),
        });
    }
    let scale = d.amax().max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut best_residual = f64::INFINITY;
    for skip in 0..=n {
        let cols: Vec<Point> = directions
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != skip)
            .map(|(_, v)| v.clone())
            .collect();
        let m = DMatrix::from_columns(&cols);
        let Some(coef) = m.clone().lu().solve(d) else {
            continue;
        };
        let residual = (&m * &coef - d).amax() / scale;
        let worst = coef.iter().copied().fold(f64::INFINITY, f64::min) / scale;
        best_residual = best_residual.min(residual.max(-worst));
        if residual > 1e-9 || worst < -1e-9 {
            continue;
        }
        if best.as_ref().is_none_or(|(w, _)| worst > *w) {
            let mut full = vec![0.0; n + 1];
            let mut it = coef.iter();
            for (k, slot) in full.iter_mut().enumerate() {
                if k != skip {
                    *slot = it.next().unwrap().max(0.0);
                }
            }
            best = Some((worst, full));
        }
    }
    best.map(|(_, c)| c)
        .ok_or(Error::Decomposition { residual: best_residual })
}

/// `n!·vol(K)·vol(T)/ξ_T(K)^n`.
pub fn viterbo_ratio(k: &Polytope, t: &Polytope) -> Result<f64> {
    let xi = xi_solver(k, t)?.length;
    Ok(ratio_from_xi(k, t, xi))
}

/// [`viterbo_ratio`] for an already computed `ξ`.
pub fn ratio_from_xi(k: &Polytope, t: &Polytope, xi: f64) -> f64 {
    let n = k.dim();
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    fact * k.volume() * t.volume() / xi.powi(n as i32)
}

/// Both sides of `ξ_{[−1,1]^n}(K) ≤ 2·(n!·vol K)^{1/n}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsoperimetricReport {
    pub xi: f64,
    pub bound: f64,
    /// `bound − xi`; nonnegative when the inequality holds.
    pub slack: f64,
    pub holds: bool,
}

/// Compares `ξ_T(K)` for `T = [−1, 1]^n` with the volume bound. Equality
/// holds for the crosspolytope.
pub fn isoperimetric_check(k: &Polytope) -> Result<IsoperimetricReport> {
    let n = k.dim();
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let xi = xi_solver(k, &cube(n)?)?.length;
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    let bound = 2.0 * (fact * k.volume()).powf(1.0 / n as f64);
    let slack = bound - xi;
    Ok(IsoperimetricReport {
        xi,
        bound,
        slack,
        holds: slack >= -1e-6 * bound,
    })
}

/// `T = −T`, which makes `‖·‖_T` symmetric.
pub(crate) fn symmetric_about_origin(t: &Polytope) -> bool {
    let tol = 1e-9 * t.scale();
    t.vertices()
        .iter()
        .all(|v| t.vertices().iter().any(|w| (w + v).amax() <= tol))
}

/// Index of the first vertex of `T` attaining `max ⟨p, d⟩`.
pub(crate) fn maximizing_vertex(t: &Polytope, d: &Point) -> usize {
    let vals: Vec<f64> = t.vertices().iter().map(|p| p.dot(d)).collect();
    let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + best.abs());
    vals.iter().position(|&v| v >= best - tol).unwrap_or(0)
}
