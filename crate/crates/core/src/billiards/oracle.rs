use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{maximizing_vertex, ClosedPolyline, TrajectoryResult};
use crate::polytope::{fitting_scale, Point, Polytope};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Largest number of points; `None` means `n + 1`.
    pub m_max: Option<usize>,
    /// Random starts per point count.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            m_max: None,
            restarts: 200,
            seed: 0,
        }
    }
}

const PENALTIES: [f64; 4] = [1e1, 1e2, 1e3, 1e4];

/// Multistart penalty minimization of `ℓ_T(Q) + μ·max(0, 1 − α(Q))`, where
/// `α` is the fitting scale of `Q` against `K`.
///
/// Both `ℓ_T` and `α` are positively homogeneous, so after the penalty phase a
/// configuration is rescaled to `α = 1` and polished on `ℓ_T/α`. The returned
/// length is an upper bound for `ξ_T(K)`, deterministic in the seed.
pub fn xi_bruteforce(k: &Polytope, t: &Polytope, config: &OracleConfig) -> Result<TrajectoryResult> {
    let n = k.dim();
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if t.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: t.dim(),
        });
    }
    if !t.contains_origin_in_interior() {
        return Err(Error::OriginNotInterior);
    }
    let m_max = config.m_max.unwrap_or(n + 1).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k_scale = k.scale();
    let l_scale = k_scale * t.scale();

    let mut best: Option<(f64, Vec<Point>)> = None;
    for m in 2..=m_max {
        let dims = (m - 1) * n;
        let ratio = |x: &[f64]| -> f64 {
            let pts = unpack(x, m, n);
            let alpha = alpha_of(&pts, k);
            if alpha <= 1e-12 {
                return f64::INFINITY;
            }
            length_of(&pts, t) / alpha
        };
        for _ in 0..config.restarts.max(1) {
            let start = random_configuration(k, m, &mut rng);
            let mut x = pack(&start);
            let mut step = 0.25 * k_scale;
            for mu in PENALTIES {
                let mu = mu * l_scale;
                let penalized = |x: &[f64]| -> f64 {
                    let pts = unpack(x, m, n);
                    length_of(&pts, t) + mu * (1.0 - alpha_of(&pts, k)).max(0.0)
                };
                x = nelder_mead(&penalized, &x, &random_frame(dims, step, &mut rng), 60 * (dims + 1)).0;
                step *= 0.5;
            }
            let alpha = alpha_of(&unpack(&x, m, n), k);
            if alpha <= 1e-12 {
                continue;
            }
            x.iter_mut().for_each(|c| *c /= alpha);
            let mut value = ratio(&x);
            let mut step = 0.05 * k_scale;
            let mut stalls = 0;
            while stalls < 4 && step > 1e-9 * k_scale {
                let (nx, nv) = nelder_mead(&ratio, &x, &random_frame(dims, step, &mut rng), 80 * (dims + 1));
                if nv < value - 1e-12 * value.abs() {
                    x = nx;
                    value = nv;
                    stalls = 0;
                } else {
                    stalls += 1;
                    step *= 0.3;
                }
            }
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                let pts = unpack(&x, m, n);
                let alpha = alpha_of(&pts, k);
                best = Some((value, pts.iter().map(|p| p / alpha).collect()));
            }
        }
    }
    let (_, pts) = best.ok_or(Error::NoTrajectory)?;
    finish(k, t, pts)
}

/// Moves the points into `K` and fills in facets and momenta.
fn finish(k: &Polytope, t: &Polytope, pts: Vec<Point>) -> Result<TrajectoryResult> {
    let cert = fitting_scale(&pts, k)?;
    let shift = DVector::from_column_slice(&cert.translate);
    let pts: Vec<Point> = pts.iter().map(|p| p - &shift).collect();
    let polyline = ClosedPolyline::new(pts)?;
    let facet_assignment = polyline
        .points()
        .iter()
        .map(|q| {
            k.facets()
                .iter()
                .enumerate()
                .map(|(j, f)| (j, f.normal.dot(q) - f.offset))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .map_or(0, |(j, _)| j)
        })
        .collect();
    let momenta = polyline
        .edges()
        .map(|d| t.vertices()[maximizing_vertex(t, &d)].clone())
        .collect();
    let length = super::polyline_length(t, &polyline)?;
    let certificate = fitting_scale(polyline.points(), k)?;
    Ok(TrajectoryResult {
        length,
        polyline,
        facet_assignment,
        momenta,
        certificate,
    })
}

/// Random vertices and random points on facets; bounce points of a minimizer
/// sit on the boundary, often at vertices.
fn random_configuration(k: &Polytope, m: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    (0..m)
        .map(|_| {
            if rng.random_bool(0.5) {
                return k.vertices()[rng.random_range(0..k.vertices().len())].clone();
            }
            let f = &k.facets()[rng.random_range(0..k.num_facets())];
            let w: Vec<f64> = (0..f.vertices.len())
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let total: f64 = w.iter().sum();
            f.vertices
                .iter()
                .zip(&w)
                .fold(DVector::zeros(k.dim()), |acc, (&v, wi)| acc + &k.vertices()[v] * (wi / total))
        })
        .collect()
}

/// Points relative to the first one, which is pinned at the origin.
fn pack(points: &[Point]) -> Vec<f64> {
    points[1..]
        .iter()
        .flat_map(|p| (p - &points[0]).iter().copied().collect::<Vec<_>>())
        .collect()
}

fn unpack(x: &[f64], m: usize, n: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(m);
    out.push(DVector::zeros(n));
    for i in 1..m {
        out.push(DVector::from_column_slice(&x[(i - 1) * n..i * n]));
    }
    out
}

fn alpha_of(points: &[Point], k: &Polytope) -> f64 {
    fitting_scale(points, k).map_or(0.0, |c| c.scale)
}

fn length_of(points: &[Point], t: &Polytope) -> f64 {
    let m = points.len();
    (0..m)
        .map(|i| t.support((&points[(i + 1) % m] - &points[i]).as_slice()))
        .sum()
}

/// `d` random orthogonal edge vectors of length `step`. Rotating the start
/// simplex between restarts keeps the search from stalling on a kink aligned
/// with the axes.
fn random_frame(d: usize, step: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let m = nalgebra::DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let q = m.qr().q();
    (0..d)
        .map(|j| q.column(j).iter().map(|x| x * step).collect())
        .collect()
}

/// Nelder–Mead from the simplex `x0, x0 + e_1, …, x0 + e_d`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], edges: &[Vec<f64>], max_evals: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for e in edges {
        let x: Vec<f64> = x0.iter().zip(e).map(|(a, b)| a + b).collect();
        let v = f(&x);
        simplex.push((x, v));
    }
    let mut evals = d + 1;
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[d].1 - simplex[0].1;
        if spread.abs() <= 1e-15 * simplex[0].1.abs().max(1e-300) {
            let size = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0f64, f64::max);
            if size < 1e-13 {
                break;
            }
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let worst = simplex[d].0.clone();
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[d].1 {
                lerp(&centroid, &reflected, 0.5)
            } else {
                lerp(&centroid, &worst, 0.5)
            };
            let fc = f(&contracted);
            evals += 1;
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &entry.0, 0.5);
                    let v = f(&x);
                    *entry = (x, v);
                }
                evals += d;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2);
        let edges = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
        let (x, v) = nelder_mead(&f, &[0.0, 0.0], &edges, 2000);
        assert!(v < 1e-12, "{v}");
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] + 2.0).abs() < 1e-5);
    }
}
