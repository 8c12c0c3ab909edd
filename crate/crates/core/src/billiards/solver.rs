use std::cmp::Ordering;

use itertools::Itertools;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{enumerate_cages, symmetric_about_origin, ClosedPolyline, TrajectoryResult};
use crate::lp::LinearProgram;
use crate::polytope::{fitting_scale, Point, Polytope};
use crate::{Error, Result};

/// Knobs for [`xi_solver_with`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Largest cage size; `None` means `n + 1`.
    pub max_cage_size: Option<usize>,
    /// Relative gap under which two candidate lengths count as equal.
    pub tie_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_cage_size: None,
            tie_tol: 1e-9,
        }
    }
}

/// Counters from one solver run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolverStats {
    pub cages: usize,
    pub programs: usize,
    pub rejected: usize,
}

/// `ξ_T(K)` with the default configuration.
pub fn xi_solver(k: &Polytope, t: &Polytope) -> Result<TrajectoryResult> {
    xi_solver_with(k, t, &SolverConfig::default()).map(|(r, _)| r)
}

struct Candidate {
    length: f64,
    subset: Vec<usize>,
    order: Vec<usize>,
    points: Vec<Point>,
    momenta: Vec<Point>,
}

/// Minimizes `ℓ_T` over polylines with one point on each facet of a cage,
/// visited in some cyclic order, all points inside `K`.
///
/// Every such polyline fails to fit into `int K + t`: moving `K` by `t` with
/// `⟨a_j, t⟩ ≤ 0` on all cage facets is impossible unless `t = 0`, because
/// the cage weights balance the normals. So each LP optimum is a valid
/// candidate and the smallest one is `ξ_T(K)`. The fitting test is still run
/// on the winner as a guard against tolerance trouble.
pub fn xi_solver_with(
    k: &Polytope,
    t: &Polytope,
    config: &SolverConfig,
) -> Result<(TrajectoryResult, SolverStats)> {
    let n = k.dim();
    if t.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: t.dim(),
        });
    }
    if !t.contains_origin_in_interior() {
        return Err(Error::OriginNotInterior);
    }
    let max_size = config.max_cage_size.unwrap_or(n + 1);
    let cages = enumerate_cages(k, max_size)?;
    let symmetric = symmetric_about_origin(t);

    let mut stats = SolverStats {
        cages: cages.len(),
        ..Default::default()
    };
    let mut candidates = Vec::new();
    for cage in &cages {
        for order in cyclic_orders(&cage.facet_indices, symmetric) {
            stats.programs += 1;
            let (length, points, momenta) = solve_cage(k, t, &order)?;
            candidates.push(Candidate {
                length,
                subset: cage.facet_indices.clone(),
                order,
                points,
                momenta,
            });
        }
    }

    candidates.sort_by(|a, b| a.length.total_cmp(&b.length));
    let mut start = 0;
    while start < candidates.len() {
        let floor = candidates[start].length;
        let end = candidates[start..]
            .iter()
            .position(|c| c.length > floor + config.tie_tol * floor.abs().max(1.0))
            .map_or(candidates.len(), |p| start + p);
        let mut group: Vec<&Candidate> = candidates[start..end].iter().collect();
        group.sort_by(|a, b| match a.subset.cmp(&b.subset) {
            Ordering::Equal => a.order.cmp(&b.order),
            o => o,
        });
        for c in group {
            let certificate = fitting_scale(&c.points, k)?;
            if certificate.is_nonfitting() {
                let result = TrajectoryResult {
                    length: c.length,
                    polyline: ClosedPolyline::new(c.points.clone())?,
                    facet_assignment: c.order.clone(),
                    momenta: c.momenta.clone(),
                    certificate,
                };
                return Ok((result, stats));
            }
            stats.rejected += 1;
        }
        start = end;
    }
    Err(Error::NoTrajectory)
}

/// Cyclic orders of `subset` starting at its first element. With a symmetric
/// gauge a cycle and its reversal have equal length, so one of each pair is
/// kept.
fn cyclic_orders(subset: &[usize], symmetric: bool) -> Vec<Vec<usize>> {
    let (first, rest) = subset.split_first().expect("cages are nonempty");
    rest.iter()
        .copied()
        .permutations(rest.len())
        .filter(|p| !symmetric || p.len() < 2 || p[0] < p[p.len() - 1])
        .map(|p| std::iter::once(*first).chain(p).collect())
        .collect()
}

/// The LP for one cyclic facet order. Variables are the points `q_i` followed
/// by one epigraph variable `s_i ≥ ‖q_{i+1} − q_i‖_T` per edge. The multipliers
/// of the epigraph rows of an edge sum to one and average to a maximizing
/// momentum in `T`.
fn solve_cage(k: &Polytope, t: &Polytope, order: &[usize]) -> Result<(f64, Vec<Point>, Vec<Point>)> {
    let n = k.dim();
    let m = order.len();
    let nv = m * n + m;
    let mut lp = LinearProgram::new(nv);
    for i in 0..m {
        lp.set_objective_coef(m * n + i, 1.0);
    }
    let mut entries = Vec::with_capacity(2 * n + 1);
    for i in 0..m {
        let next = (i + 1) % m;
        for p in t.vertices() {
            entries.clear();
            for c in 0..n {
                entries.push((next * n + c, p[c]));
                entries.push((i * n + c, -p[c]));
            }
            entries.push((m * n + i, -1.0));
            lp.add_le_sparse(&entries, 0.0);
        }
    }
    for (i, &assigned) in order.iter().enumerate() {
        for (j, f) in k.facets().iter().enumerate() {
            entries.clear();
            entries.extend((0..n).map(|c| (i * n + c, f.normal[c])));
            if j == assigned {
                lp.add_eq_sparse(&entries, f.offset);
            } else {
                lp.add_le_sparse(&entries, f.offset);
            }
        }
    }
    let sol = lp.solve().map_err(|e| Error::Numerical {
        context: "cage program",
        source: e,
        instance: format!("facet order {order:?}"),
    })?;
    let points: Vec<Point> = (0..m)
        .map(|i| DVector::from_column_slice(&sol.x[i * n..(i + 1) * n]))
        .collect();
    let nt = t.vertices().len();
    let momenta = (0..m)
        .map(|i| {
            let w = &sol.le_duals[i * nt..(i + 1) * nt];
            let total: f64 = w.iter().sum();
            let mut p = DVector::zeros(n);
            for (pv, &wi) in t.vertices().iter().zip(w) {
                p += pv * wi;
            }
            if total > 0.0 {
                p / total
            } else {
                p
            }
        })
        .collect();
    let length = (0..m)
        .map(|i| t.support((&points[(i + 1) % m] - &points[i]).as_slice()))
        .sum();
    Ok((length, points, momenta))
}
