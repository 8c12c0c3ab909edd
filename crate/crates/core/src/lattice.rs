//! The lattice `A_n*`, its Voronoi and Delaunay cells, the permutohedral
//! covering construction, and lattice-avoidance sampling.
//!
//! Everything lives in the frame of [`hyperplane_frame`], so the lattice
//! `Λ = A_n*/√(n²+n)` is generated by the unit-circumradius simplex vertices
//! `v₀, …, v_n` of [`simplex_vertices`], and its Voronoi cell is
//! [`voronoi_cell_pn`] exactly.
//!
//! [`voronoi_cell_pn`]: crate::bodies::voronoi_cell_pn

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::billiards::{decompose_direction, ClosedPolyline};
use crate::bodies::{frame_coordinates, hyperplane_frame, permutohedron, simplex_vertices, Normalization};
use crate::polytope::{complement_basis, fitting_scale, Point, Polytope};
use crate::{Error, Result, EPS_GEOM};

/// A full-rank lattice in `R^n`.
#[derive(Debug, Clone)]
pub struct LatticeBasis {
    generators: Vec<Point>,
    gram: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct BasisJson {
    generators: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    det_gram: f64,
}

impl Serialize for LatticeBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BasisJson {
            generators: self.generators.iter().map(|g| g.as_slice().to_vec()).collect(),
            gram: self
                .gram
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            det_gram: self.det_gram(),
        }
        .serialize(s)
    }
}

impl LatticeBasis {
    pub fn new(generators: Vec<Point>) -> Result<Self> {
        let n = generators.len();
        if n == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if let Some(g) = generators.iter().find(|g| g.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.len(),
            });
        }
        let gram = DMatrix::from_fn(n, n, |i, j| generators[i].dot(&generators[j]));
        if gram.determinant() <= 0.0 {
            return Err(Error::SingularMatrix);
        }
        Ok(Self { generators, gram })
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Point] {
        &self.generators
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn det_gram(&self) -> f64 {
        self.gram.determinant()
    }

    /// Volume of a fundamental domain, `√det Γ`.
    pub fn covolume(&self) -> f64 {
        self.det_gram().sqrt()
    }

    /// Generators as columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.generators)
    }

    pub fn point(&self, coefficients: &[i64]) -> Point {
        self.generators
            .iter()
            .zip(coefficients)
            .fold(DVector::zeros(self.dim()), |acc, (g, &c)| acc + g * c as f64)
    }

    /// Integer coefficient vectors of all lattice points within `radius` of `center`.
    pub fn points_near(&self, center: &Point, radius: f64) -> Vec<Vec<i64>> {
        let n = self.dim();
        let inv = self.matrix().try_inverse().expect("basis is invertible");
        let c = &inv * center;
        let lo: Vec<i64> = (0..n)
            .map(|i| (c[i] - radius * inv.row(i).norm()).floor() as i64)
            .collect();
        let hi: Vec<i64> = (0..n)
            .map(|i| (c[i] + radius * inv.row(i).norm()).ceil() as i64)
            .collect();
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            if (self.point(&cur) - center).norm() <= radius {
                out.push(cur.clone());
            }
            let mut i = 0;
            loop {
                if i == n {
                    return out;
                }
                cur[i] += 1;
                if cur[i] <= hi[i] {
                    break;
                }
                cur[i] = lo[i];
                i += 1;
            }
        }
    }
}

/// `a_i = (n+1)e_i − 𝟙`, `i = 1..n`, read in [`hyperplane_frame`]. The Gram
/// matrix has `n²+n` on the diagonal and `−(n+1)` elsewhere.
pub fn an_star_basis(n: usize) -> Result<LatticeBasis> {
    if n == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    let frame = hyperplane_frame(n);
    let gens = (1..=n)
        .map(|i| {
            let mut a = DVector::from_element(n + 1, -1.0);
            a[i] += (n + 1) as f64;
            frame_coordinates(&frame, &a)
        })
        .collect();
    LatticeBasis::new(gens)
}

/// The lattice generated by the unit-circumradius simplex vertices, which is
/// `A_n*/√(n²+n)`.
pub fn simplex_lattice(n: usize) -> Result<LatticeBasis> {
    if n == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    let v = simplex_vertices(n, Normalization::UnitCircumradius);
    LatticeBasis::new(v[1..].to_vec())
}

/// Voronoi cell of the origin.
///
/// Relevant vectors have norm at most twice the covering radius, which is
/// bounded by `√Σ|g_i|²`. Candidates whose half lies outside another
/// bisector are dropped before the halfspace intersection.
pub fn voronoi_cell(lattice: &LatticeBasis) -> Result<Polytope> {
    let n = lattice.dim();
    let radius = lattice.generators.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt() * (1.0 + 1e-9);
    let zero = DVector::zeros(n);
    let cands: Vec<Point> = lattice
        .points_near(&zero, radius)
        .iter()
        .map(|c| lattice.point(c))
        .filter(|p| p.norm() > EPS_GEOM)
        .collect();
    let scale = radius * radius;
    let relevant: Vec<&Point> = cands
        .iter()
        .filter(|v| {
            cands.iter().all(|u| {
                (u - *v).amax() <= EPS_GEOM || v.dot(u) <= u.norm_squared() - 1e-9 * scale
            })
        })
        .collect();
    let normals: Vec<Point> = relevant.iter().map(|v| v.normalize()).collect();
    let offsets: Vec<f64> = relevant.iter().map(|v| v.norm() / 2.0).collect();
    Polytope::from_halfspaces(n, &normals, &offsets)
}

/// One Delaunay cell class of the simplex lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelaunaySimplex {
    /// `0, v_{π0}, v_{π0}+v_{π1}, …`
    #[serde(with = "crate::io::points_serde")]
    pub vertices: Vec<Point>,
    /// Direction order `π` with `π₀ = 0`.
    pub base_permutation: Vec<usize>,
}

/// Delaunay cells of a lattice up to translation: for each Voronoi vertex
/// `u`, the lattice points nearest to `u`. Cells are returned as coefficient
/// vectors, normalized so the smallest one is zero.
pub fn delaunay_cells(lattice: &LatticeBasis) -> Result<Vec<Vec<Vec<i64>>>> {
    let cell = voronoi_cell(lattice)?;
    let mut seen = BTreeSet::new();
    for u in cell.vertices() {
        let rho = u.norm();
        let tol = 1e-7 * rho.max(1.0);
        let mut pts = lattice.points_near(u, rho + tol);
        let Some(base) = pts.iter().min().cloned() else {
            continue;
        };
        for p in &mut pts {
            for (x, b) in p.iter_mut().zip(&base) {
                *x -= b;
            }
        }
        pts.sort();
        seen.insert(pts);
    }
    Ok(seen.into_iter().collect())
}

/// The `n!` Delaunay simplex classes of the simplex lattice.
///
/// Built from the Voronoi vertices and their nearest lattice points; the
/// direction order is then read off by walking `+v_k` steps from the origin,
/// which must visit every vertex once.
pub fn delaunay_simplices(n: usize) -> Result<Vec<DelaunaySimplex>> {
    let lattice = simplex_lattice(n)?;
    let dirs = simplex_vertices(n, Normalization::UnitCircumradius);
    let mut out = Vec::new();
    for cell in delaunay_cells(&lattice)? {
        if cell.len() != n + 1 {
            return Err(Error::Construction(format!(
                "Delaunay cell with {} vertices in dimension {n}",
                cell.len()
            )));
        }
        let pts: Vec<Point> = cell.iter().map(|c| lattice.point(c)).collect();
        let tol = 1e-9;
        let find = |x: &Point| pts.iter().position(|p| (p - x).amax() <= tol);
        // walk from every vertex; rotate so the first step is along v₀
        let mut perm = Vec::with_capacity(n + 1);
        'outer: for start in &pts {
            perm.clear();
            let mut cur = start.clone();
            let mut used = vec![false; n + 1];
            for _ in 0..=n {
                let Some(k) = (0..=n).find(|&k| !used[k] && find(&(&cur + &dirs[k])).is_some()) else {
                    continue 'outer;
                };
                used[k] = true;
                perm.push(k);
                cur += &dirs[k];
            }
            if perm[0] == 0 {
                break;
            }
        }
        if perm.len() != n + 1 || perm[0] != 0 {
            return Err(Error::Construction("Delaunay cell is not traversed by a v-cycle".into()));
        }
        let mut vertices = Vec::with_capacity(n + 1);
        let mut cur = DVector::zeros(n);
        for &k in &perm {
            vertices.push(cur.clone());
            cur += &dirs[k];
        }
        out.push(DelaunaySimplex {
            vertices,
            base_permutation: perm,
        });
    }
    out.sort_by(|a, b| a.base_permutation.cmp(&b.base_permutation));
    Ok(out)
}

/// The closed cycle through the vertices of `σ` taking one `v_{π_k}` step each.
pub fn delaunay_cycle(sigma: &DelaunaySimplex, directions: &[Point]) -> Result<ClosedPolyline> {
    let n = directions.len().saturating_sub(1);
    if sigma.base_permutation.len() != n + 1 || sigma.vertices.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            found: sigma.base_permutation.len(),
        });
    }
    let mut pts = Vec::with_capacity(n + 1);
    let mut cur = sigma.vertices[0].clone();
    for &k in &sigma.base_permutation {
        if !sigma.vertices.iter().any(|v| (v - &cur).amax() <= 1e-9) {
            return Err(Error::Construction("cycle leaves the simplex".into()));
        }
        pts.push(cur.clone());
        cur += &directions[k];
    }
    let gap = (&cur - &sigma.vertices[0]).amax();
    if gap > 1e-9 {
        return Err(Error::Construction(format!("cycle does not close (gap {gap:.3e})")));
    }
    ClosedPolyline::new(pts)
}

/// Evidence that a polyline lies in `P_n + translate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverResult {
    pub translate: Vec<f64>,
    /// The contracted, shifted polyline of the construction's first step.
    pub scaled_line: ClosedPolyline,
    /// `min_x min_j (b_j − ⟨a_j, x − s⟩)` over 64 samples per segment; at
    /// least `−ε` when covered.
    pub margin: f64,
    /// Fitting scale of the samples against `P_n`.
    pub fitting_scale: f64,
}

const COVER_SAMPLES: usize = 64;

/// Covers a closed polyline whose `‖·‖`-length along each direction `v_i`
/// of the unit-edge simplex is at most `n+1` by a translate of the
/// permutohedron `P_n`.
///
/// Segments are first rewritten as staircases along `v₀, …, v_n`. The
/// construction then contracts the path horizontally, recurses on the
/// horizontal relative motion inside the top facet, and shifts by the
/// per-coordinate minima in the basis `ṽ₁, …, ṽ_n`.
pub fn cover_with_permutohedron(q: &ClosedPolyline, n: usize) -> Result<CoverResult> {
    if q.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: q.dim(),
        });
    }
    let dirs = simplex_vertices(n, Normalization::UnitEdge);
    let mut steps: Vec<(usize, f64)> = Vec::new();
    for d in q.edges() {
        if d.amax() <= EPS_GEOM {
            continue;
        }
        let coef = decompose_direction(&d, &dirs)?;
        steps.extend(coef.iter().enumerate().filter(|(_, &c)| c > 0.0).map(|(k, &c)| (k, c)));
    }
    let mut totals = vec![0.0; n + 1];
    for &(k, c) in &steps {
        totals[k] += c;
    }
    let tau = totals.iter().sum::<f64>() / (n + 1) as f64;
    let spread = totals.iter().map(|t| (t - tau).abs()).fold(0.0f64, f64::max);
    let target = (n + 1) as f64;
    if spread > 1e-7 * target || tau > target * (1.0 + 1e-9) {
        return Err(Error::Precondition(format!(
            "direction totals {totals:?} must be equal and at most {target}"
        )));
    }
    let start = q.points()[0].clone();
    let lambda = target / tau;
    let scaled: Vec<(usize, f64)> = steps.iter().map(|&(k, c)| (k, c * lambda)).collect();
    let (s_scaled, tilde) = cover_steps(&dirs, &start, &scaled)?;
    // the scaled path q₀ + λ(Q − q₀) lies in P_n + s; as P_n ⊂ λP_n the
    // original path lies in P_n + q₀ + (s − q₀)/λ
    let translate = &start + (&s_scaled - &start) / lambda;

    let p = permutohedron(n)?;
    let samples = q.samples(COVER_SAMPLES);
    let margin = samples
        .iter()
        .map(|x| -p.max_violation(&(x - &translate)))
        .fold(f64::INFINITY, f64::min);
    let fit = fitting_scale(&samples, &p)?;
    Ok(CoverResult {
        translate: translate.as_slice().to_vec(),
        scaled_line: ClosedPolyline::new(tilde)?,
        margin,
        fitting_scale: fit.scale,
    })
}

/// One level of the construction for a unit-edge centred simplex `dirs` in
/// `R^k` and a closed step sequence with totals `k+1` per direction. Returns
/// the translate and the shifted contracted vertices.
fn cover_steps(dirs: &[Point], start: &Point, steps: &[(usize, f64)]) -> Result<(Point, Vec<Point>)> {
    let k = dirs.len() - 1;
    if k == 0 {
        return Ok((DVector::zeros(0), vec![DVector::zeros(0)]));
    }
    let mut verts = Vec::with_capacity(steps.len() + 1);
    verts.push(start.clone());
    for &(d, c) in steps {
        let next = verts.last().unwrap() + &dirs[d] * c;
        verts.push(next);
    }
    verts.pop();
    let e = dirs[0].normalize();
    // begin at the highest vertex
    let top = (0..verts.len())
        .max_by(|&a, &b| verts[a].dot(&e).total_cmp(&verts[b].dot(&e)).then(b.cmp(&a)))
        .unwrap_or(0);
    let q0 = verts[top].clone();
    let steps: Vec<(usize, f64)> = steps[top..].iter().chain(&steps[..top]).copied().collect();

    let kf = k as f64;
    let contract = |x: &Point| -> Point {
        let h = x.dot(&e);
        (x - &e * h) / (kf + 1.0) + &e * h
    };
    let basis = complement_basis(&e);
    let horiz = |x: &Point| -> Point { DVector::from_iterator(k - 1, basis.iter().map(|b| b.dot(x))) };

    // horizontal relative motion: k/(k+1) of the horizontal steps, v₀ drops out
    let sub_dirs: Vec<Point> = dirs[1..].iter().map(&horiz).collect();
    let sub_steps: Vec<(usize, f64)> = steps
        .iter()
        .filter(|(d, _)| *d != 0)
        .map(|&(d, c)| (d - 1, c * kf / (kf + 1.0)))
        .collect();
    let (s_sub, _) = cover_steps(&sub_dirs, &DVector::zeros(k - 1), &sub_steps)?;

    // top facet F = k v₀ + Σ_{1≤i<j≤k} [v_i, v_j] sits at this height
    let height = kf * dirs[0].dot(&e) + (kf * (kf - 1.0) / 2.0) * dirs[1].dot(&e);
    let mut s = -&e * height;
    for (b, &x) in basis.iter().zip(s_sub.iter()) {
        s += b * x;
    }

    // coordinates of the contracted path in ṽ₁, …, ṽ_k; shift minima to zero
    let vt: Vec<Point> = dirs[1..].iter().map(&contract).collect();
    let vt_mat = DMatrix::from_columns(&vt);
    let lu = vt_mat.clone().lu();
    let mut cur = DVector::zeros(k);
    let mut tilde = Vec::with_capacity(steps.len());
    let mut mins = DVector::from_element(k, f64::INFINITY);
    for &(d, c) in &steps {
        tilde.push(cur.clone());
        let coords = lu
            .solve(&cur)
            .ok_or_else(|| Error::Construction("contracted directions are singular".into()))?;
        mins = mins.zip_map(&coords, f64::min);
        cur += contract(&dirs[d]) * c;
    }
    let shift = &vt_mat * &mins;
    let tilde = tilde.into_iter().map(|x| x - &shift).collect();
    Ok((q0 + s + shift, tilde))
}

/// Outcome of [`lattice_avoidance_test`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AvoidanceReport {
    /// Every Delaunay cell fits into a translate of `K`.
    pub precondition_holds: bool,
    /// Largest fitting scale of a Delaunay cell against `K`.
    pub worst_cell_scale: f64,
    /// Zero when the precondition fails and sampling is skipped.
    pub samples: usize,
    pub misses: usize,
}

/// Samples translates `K + x` with `x` uniform in a fundamental domain and
/// counts those containing no lattice point.
pub fn lattice_avoidance_test(
    k: &Polytope,
    lattice: &LatticeBasis,
    samples: usize,
    seed: u64,
) -> Result<AvoidanceReport> {
    let n = lattice.dim();
    if k.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: k.dim(),
        });
    }
    let mut worst = 0.0f64;
    for cell in delaunay_cells(lattice)? {
        let pts: Vec<Point> = cell.iter().map(|c| lattice.point(c)).collect();
        worst = worst.max(fitting_scale(&pts, k)?.scale);
    }
    let precondition_holds = worst <= 1.0 + 1e-7;
    if !precondition_holds {
        return Ok(AvoidanceReport {
            precondition_holds,
            worst_cell_scale: worst,
            samples: 0,
            misses: 0,
        });
    }
    let c = k.centroid();
    let r = k.vertices().iter().map(|v| (v - &c).norm()).fold(0.0f64, f64::max);
    let m = lattice.matrix();
    let tol = 1e-9 * k.scale();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut misses = 0;
    for _ in 0..samples {
        let u = DVector::from_fn(n, |_, _| rng.random::<f64>());
        let x = &m * u;
        let hit = lattice
            .points_near(&(&c + &x), r * (1.0 + 1e-9))
            .iter()
            .any(|coef| k.contains(&(lattice.point(coef) - &x), tol));
        if !hit {
            misses += 1;
        }
    }
    Ok(AvoidanceReport {
        precondition_holds,
        worst_cell_scale: worst,
        samples,
        misses,
    })
}
