use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::lp::LinearProgram;
use crate::polytope::Polytope;
use crate::{Error, Result};

/// Facets whose outer normals contain the origin in their convex hull.
///
/// A translate of `K` touching a point on each of these facets from inside
/// cannot move without losing one of the points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalCage {
    /// Increasing facet indices.
    pub facet_indices: Vec<usize>,
    /// `Σ w_j a_j ≈ 0`, `Σ w_j = 1`.
    pub weights: Vec<f64>,
}

const CAGE_TOL: f64 = 1e-9;

/// All inclusion-minimal cages with `2 ≤ |S| ≤ max_size`, by increasing size
/// and then lexicographically.
pub fn enumerate_cages(k: &Polytope, max_size: usize) -> Result<Vec<NormalCage>> {
    let f = k.num_facets();
    let words = f.div_ceil(64);
    let mut masks: Vec<Vec<u64>> = Vec::new();
    let mut out = Vec::new();
    for size in 2..=max_size.min(f) {
        for subset in (0..f).combinations(size) {
            let mut mask = vec![0u64; words];
            for &j in &subset {
                mask[j / 64] |= 1 << (j % 64);
            }
            let covered = masks
                .iter()
                .any(|c| c.iter().zip(&mask).all(|(a, b)| a & b == *a));
            if covered {
                continue;
            }
            if let Some(weights) = cage_weights(k, &subset)? {
                masks.push(mask);
                out.push(NormalCage {
                    facet_indices: subset,
                    weights,
                });
            }
        }
    }
    Ok(out)
}

/// `min τ` s.t. `⟨a_j, d⟩ ≤ τ` (j ∈ S), `|d_k| ≤ 1`. The origin lies in the
/// hull of the normals iff `τ* = 0`; the row multipliers are then the weights.
fn cage_weights(k: &Polytope, subset: &[usize]) -> Result<Option<Vec<f64>>> {
    let n = k.dim();
    let mut lp = LinearProgram::new(n + 1);
    lp.set_objective_coef(n, 1.0);
    let mut row = vec![0.0; n + 1];
    for &j in subset {
        row[..n].copy_from_slice(k.facets()[j].normal.as_slice());
        row[n] = -1.0;
        lp.add_le(&row, 0.0);
    }
    for i in 0..n {
        lp.add_le_sparse(&[(i, 1.0)], 1.0);
        lp.add_le_sparse(&[(i, -1.0)], 1.0);
    }
    let sol = lp.solve().map_err(|e| Error::Numerical {
        context: "cage test",
        source: e,
        instance: format!("{subset:?}"),
    })?;
    if sol.objective < -CAGE_TOL {
        return Ok(None);
    }
    Ok(Some(sol.le_duals[..subset.len()].to_vec()))
}
