use serde::{Deserialize, Serialize};

use super::TrajectoryResult;
use crate::lp::LinearProgram;
use crate::polytope::{Point, Polytope};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BounceCheck {
    /// Index of the bounce point; runs of coincident points count once, at
    /// their first index.
    pub index: usize,
    pub active_facets: Vec<usize>,
    pub feasible: bool,
    /// Smallest `ℓ¹` residual of `p − p′ − Σ ν_j a_j` found by the LP.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReflectionReport {
    pub feasible: bool,
    pub bounces: Vec<BounceCheck>,
}

const FACE_TOL: f64 = 1e-7;
const RESIDUAL_TOL: f64 = 1e-6;

/// Checks `p′ − p ∈ −N_K(q)` at every bounce for some choice of momenta `p`
/// maximizing `⟨·, d_in⟩` and `p′` maximizing `⟨·, d_out⟩` over `T`.
pub fn verify_reflection(result: &TrajectoryResult, k: &Polytope, t: &Polytope) -> Result<ReflectionReport> {
    let pts = result.polyline.points();
    let m = pts.len();
    let tol = 1e-9 * k.scale().max(1.0);
    // collapse runs of coincident points
    let mut groups: Vec<usize> = Vec::new();
    for i in 0..m {
        let prev = (i + m - 1) % m;
        if (&pts[i] - &pts[prev]).amax() > tol {
            groups.push(i);
        }
    }
    if groups.len() < 2 {
        return Err(Error::Precondition("polyline has fewer than two distinct points".into()));
    }
    let mut bounces = Vec::with_capacity(groups.len());
    for (g, &i) in groups.iter().enumerate() {
        let prev = groups[(g + groups.len() - 1) % groups.len()];
        let next = groups[(g + 1) % groups.len()];
        let q = &pts[i];
        let d_in = q - &pts[prev];
        let d_out = &pts[next] - q;
        let active = k.active_facets(q, 1e-7 * k.scale().max(1.0));
        let residual = bounce_residual(k, t, &d_in, &d_out, &active)?;
        bounces.push(BounceCheck {
            index: i,
            active_facets: active,
            feasible: residual <= RESIDUAL_TOL * t.scale().max(1.0),
            residual,
        });
    }
    Ok(ReflectionReport {
        feasible: bounces.iter().all(|b| b.feasible),
        bounces,
    })
}

fn face(t: &Polytope, d: &Point) -> Vec<usize> {
    let vals: Vec<f64> = t.vertices().iter().map(|p| p.dot(d)).collect();
    let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = FACE_TOL * d.norm() * t.scale();
    (0..vals.len()).filter(|&i| vals[i] >= best - tol).collect()
}

/// `min Σ|r|` over `p = Σλ_a u_a`, `p′ = Σλ′_b u_b` (convex weights on the two
/// maximizing faces), `ν ≥ 0`, with `p − p′ − Σ ν_j a_j = r`.
fn bounce_residual(k: &Polytope, t: &Polytope, d_in: &Point, d_out: &Point, active: &[usize]) -> Result<f64> {
    let n = k.dim();
    let fin = face(t, d_in);
    let fout = face(t, d_out);
    let (a, b, c) = (fin.len(), fout.len(), active.len());
    // variables: λ (a), λ′ (b), ν (c), r⁺ (n), r⁻ (n)
    let nv = a + b + c + 2 * n;
    let mut lp = LinearProgram::new(nv);
    for v in a + b + c..nv {
        lp.set_objective_coef(v, 1.0);
    }
    for v in 0..nv {
        lp.add_le_sparse(&[(v, -1.0)], 0.0);
    }
    lp.add_eq(&(0..nv).map(|v| if v < a { 1.0 } else { 0.0 }).collect::<Vec<_>>(), 1.0);
    lp.add_eq(
        &(0..nv)
            .map(|v| if (a..a + b).contains(&v) { 1.0 } else { 0.0 })
            .collect::<Vec<_>>(),
        1.0,
    );
    for coord in 0..n {
        let mut row = vec![0.0; nv];
        for (s, &u) in fin.iter().enumerate() {
            row[s] = t.vertices()[u][coord];
        }
        for (s, &u) in fout.iter().enumerate() {
            row[a + s] = -t.vertices()[u][coord];
        }
        for (s, &j) in active.iter().enumerate() {
            row[a + b + s] = -k.facets()[j].normal[coord];
        }
        row[a + b + c + coord] = -1.0;
        row[a + b + c + n + coord] = 1.0;
        lp.add_eq(&row, 0.0);
    }
    let sol = lp.solve().map_err(|e| Error::Numerical {
        context: "reflection check",
        source: e,
        instance: format!("faces {fin:?} {fout:?}, active {active:?}"),
    })?;
    Ok(sol.objective.max(0.0))
}
