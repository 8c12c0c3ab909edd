//! Convex polytopes with synchronized vertex and facet descriptions.
//!
//! A [`Polytope`] is always full-dimensional and bounded. Facets are stored as
//! `⟨normal, x⟩ ≤ offset` with unit normals, together with the indices of the
//! vertices they contain. The boundary triangulation produced while hulling is
//! kept as well; it gives volumes without a second pass.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hull::{self, convex_hull};
use crate::lp::LinearProgram;
use crate::{Error, Result, EPS_GEOM, EPS_LP};

pub type Point = DVector<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Point,
    pub offset: f64,
    /// Indices into [`Polytope::vertices`].
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Point>,
    facets: Vec<Facet>,
    triangulation: Vec<Vec<usize>>,
}

impl Polytope {
    /// Convex hull of a point set spanning `R^dim`.
    pub fn from_vertices(dim: usize, points: &[Point]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidBody("non-finite coordinate".into()));
            }
        }
        let raw: Vec<Vec<f64>> = points.iter().map(|p| p.as_slice().to_vec()).collect();
        let h = convex_hull(&raw, dim, EPS_GEOM)?;
        let mut index = vec![usize::MAX; points.len()];
        for (k, &i) in h.vertices.iter().enumerate() {
            index[i] = k;
        }
        let vertices = h.vertices.iter().map(|&i| points[i].clone()).collect();
        let facets = h
            .facets
            .into_iter()
            .map(|f| Facet {
                normal: DVector::from_vec(f.normal),
                offset: f.offset,
                vertices: f.vertices.iter().map(|&v| index[v]).collect(),
            })
            .collect();
        let triangulation = h
            .triangulation
            .into_iter()
            .map(|s| s.into_iter().map(|v| index[v]).collect())
            .collect();
        Ok(Self {
            dim,
            vertices,
            facets,
            triangulation,
        })
    }

    /// Intersection of the halfspaces `⟨normals[j], x⟩ ≤ offsets[j]`.
    pub fn from_halfspaces(dim: usize, normals: &[Point], offsets: &[f64]) -> Result<Self> {
        if normals.len() != offsets.len() {
            return Err(Error::InvalidBody("normal/offset count mismatch".into()));
        }
        if normals.len() <= dim {
            return Err(Error::InvalidBody(format!(
                "{} halfspaces cannot bound a body in dimension {dim}",
                normals.len()
            )));
        }
        for a in normals {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
        }
        // Chebyshev center, radius capped so unbounded regions stay solvable.
        let mut lp = LinearProgram::new(dim + 1);
        lp.set_objective_coef(dim, -1.0);
        let mut row = vec![0.0; dim + 1];
        for (a, &b) in normals.iter().zip(offsets) {
            row[..dim].copy_from_slice(a.as_slice());
            row[dim] = a.norm();
            lp.add_le(&row, b);
        }
        lp.add_le_sparse(&[(dim, 1.0)], 1.0);
        let sol = lp.solve().map_err(|e| match e {
            crate::lp::LpError::Infeasible => Error::InvalidBody("empty intersection".into()),
            other => Error::Numerical {
                context: "interior point of halfspaces",
                source: other,
                instance: halfspace_dump(normals, offsets),
            },
        })?;
        let radius = sol.x[dim];
        let center = DVector::from_column_slice(&sol.x[..dim]);
        let scale = offsets.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        if radius <= EPS_GEOM * scale {
            return Err(Error::Degenerate("halfspaces have empty interior".into()));
        }
        let dual: Vec<Point> = normals
            .iter()
            .zip(offsets)
            .map(|(a, &b)| a / (b - a.dot(&center)))
            .collect();
        let dual_body = Polytope::from_vertices(dim, &dual)
            .map_err(|_| Error::InvalidBody("halfspaces do not bound a polytope".into()))?;
        if dual_body.facets.iter().any(|f| f.offset <= EPS_GEOM) {
            return Err(Error::InvalidBody("halfspaces do not bound a polytope".into()));
        }
        let verts: Vec<Point> = dual_body
            .facets
            .iter()
            .map(|f| &center + &f.normal / f.offset)
            .collect();
        Polytope::from_vertices(dim, &verts)
    }

    /// The single point `R^0`; only produced by projecting a segment.
    pub fn point0() -> Self {
        Self {
            dim: 0,
            vertices: vec![DVector::zeros(0)],
            facets: Vec::new(),
            triangulation: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    /// Vertex centroid; an interior point.
    pub fn centroid(&self) -> Point {
        let mut c = DVector::zeros(self.dim);
        for v in &self.vertices {
            c += v;
        }
        c / self.vertices.len() as f64
    }

    /// Largest absolute vertex coordinate, at least 1. Used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(1.0f64, |m, x| m.max(x.abs()))
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.facets
            .iter()
            .all(|f| f.normal.dot(x) <= f.offset + tol)
    }

    /// Support function `h(q) = max_{p ∈ P} ⟨p, q⟩`.
    pub fn support(&self, q: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| hull::dot(v.as_slice(), q))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains_origin_in_interior(&self) -> bool {
        let tol = EPS_GEOM * self.scale();
        self.dim > 0 && self.facets.iter().all(|f| f.offset > tol)
    }

    pub fn is_centrally_symmetric(&self) -> bool {
        let tol = 1e-7 * self.scale();
        let c = self.centroid();
        self.vertices.iter().all(|v| {
            let mirrored = 2.0 * &c - v;
            self.vertices
                .iter()
                .any(|w| (w - &mirrored).amax() <= tol)
        })
    }

    pub fn translate(&self, t: &Point) -> Polytope {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v += t;
        }
        for f in &mut out.facets {
            f.offset += f.normal.dot(t);
        }
        out
    }

    /// Homothety about the origin; `factor` must be positive.
    pub fn scaled(&self, factor: f64) -> Polytope {
        assert!(factor > 0.0, "scale factor must be positive");
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v *= factor;
        }
        for f in &mut out.facets {
            f.offset *= factor;
        }
        out
    }

    /// Image under an invertible linear map.
    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<Polytope> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        let inv_t = m
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix)?
            .transpose();
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v = m * &*v;
        }
        for f in &mut out.facets {
            let n = &inv_t * &f.normal;
            let len = n.norm();
            f.normal = n / len;
            f.offset /= len;
        }
        Ok(out)
    }

    /// Lebesgue volume, summing simplices spanned by the vertex centroid and
    /// the boundary triangulation.
    pub fn volume(&self) -> f64 {
        if self.dim == 0 {
            return 1.0;
        }
        let d = self.dim;
        let c = self.centroid();
        let mut fact = 1.0;
        for k in 2..=d {
            fact *= k as f64;
        }
        let mut buf = vec![0.0; d * d];
        let mut total = 0.0;
        for s in &self.triangulation {
            for (r, &vi) in s.iter().enumerate() {
                for k in 0..d {
                    buf[r * d + k] = self.vertices[vi][k] - c[k];
                }
            }
            total += hull::determinant(&mut buf, d).abs();
        }
        total / fact
    }

    /// Polar body `{p : ⟨p, q⟩ ≤ 1 for all q ∈ P}`.
    pub fn polar(&self) -> Result<Polytope> {
        if !self.contains_origin_in_interior() {
            return Err(Error::OriginNotInterior);
        }
        let pts: Vec<Point> = self
            .facets
            .iter()
            .map(|f| &f.normal / f.offset)
            .collect();
        Polytope::from_vertices(self.dim, &pts)
    }

    /// Largest ratio of a facet inequality violation, `max_j (⟨a_j,x⟩ − b_j)`.
    pub fn max_violation(&self, x: &Point) -> f64 {
        self.facets
            .iter()
            .map(|f| f.normal.dot(x) - f.offset)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Facets active at `x` within `tol`.
    pub fn active_facets(&self, x: &Point, tol: f64) -> Vec<usize> {
        self.facets
            .iter()
            .enumerate()
            .filter(|(_, f)| f.normal.dot(x) >= f.offset - tol)
            .map(|(j, _)| j)
            .collect()
    }
}

fn halfspace_dump(normals: &[Point], offsets: &[f64]) -> String {
    let rows: Vec<(Vec<f64>, f64)> = normals
        .iter()
        .zip(offsets)
        .map(|(a, &b)| (a.as_slice().to_vec(), b))
        .collect();
    serde_json::to_string(&rows).unwrap_or_default()
}

fn points_dump(points: &[Point]) -> String {
    let rows: Vec<Vec<f64>> = points.iter().map(|p| p.as_slice().to_vec()).collect();
    serde_json::to_string(&rows).unwrap_or_default()
}

/// `‖q‖_T = max_{p ∈ T} ⟨p, q⟩`. Positively homogeneous and subadditive, but
/// not symmetric unless `T` is.
pub fn gauge_norm(t: &Polytope, q: &Point) -> Result<f64> {
    if q.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: q.len(),
        });
    }
    if t.vertices().is_empty() {
        return Err(Error::InvalidBody("gauge body has no vertices".into()));
    }
    Ok(t.support(q.as_slice()))
}

/// A body `T ⊂ V*` viewed as the gauge `q ↦ max_{p ∈ T} ⟨p, q⟩` on `V`.
#[derive(Debug, Clone)]
pub struct Gauge {
    body: Polytope,
}

impl Gauge {
    pub fn new(body: Polytope) -> Self {
        Self { body }
    }

    pub fn body(&self) -> &Polytope {
        &self.body
    }

    pub fn norm(&self, q: &Point) -> f64 {
        self.body.support(q.as_slice())
    }

    /// The unit ball `{q : ‖q‖ ≤ 1}`, i.e. the polar of the body.
    pub fn unit_ball(&self) -> Result<Polytope> {
        self.body.polar()
    }
}

/// `P + Q`, the hull of all pairwise vertex sums.
pub fn minkowski_sum(p: &Polytope, q: &Polytope) -> Result<Polytope> {
    minkowski_sum_points(p, q.vertices())
}

/// `P + conv(points)`; the second summand may be lower-dimensional
/// (a point or a segment, say).
pub fn minkowski_sum_points(p: &Polytope, points: &[Point]) -> Result<Polytope> {
    if let Some(bad) = points.iter().find(|x| x.len() != p.dim()) {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: bad.len(),
        });
    }
    let sums: Vec<Point> = p
        .vertices()
        .iter()
        .flat_map(|v| points.iter().map(move |w| v + w))
        .collect();
    Polytope::from_vertices(p.dim(), &sums)
}

/// Sum of segments `[a_k, b_k]`, reducing to the hull after every step once the
/// partial sum is full-dimensional.
pub fn zonotope(dim: usize, segments: &[(Point, Point)]) -> Result<Polytope> {
    let mut cloud: Vec<Point> = vec![DVector::zeros(dim)];
    let mut body: Option<Polytope> = None;
    for (a, b) in segments {
        if a.len() != dim || b.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a.len().max(b.len()),
            });
        }
        let ends = [a.clone(), b.clone()];
        match &body {
            Some(p) => body = Some(minkowski_sum_points(p, &ends)?),
            None => {
                let mut next: Vec<Point> = Vec::with_capacity(cloud.len() * 2);
                for v in &cloud {
                    for e in &ends {
                        let s = v + e;
                        if !next.iter().any(|w: &Point| (w - &s).amax() <= EPS_GEOM) {
                            next.push(s);
                        }
                    }
                }
                cloud = next;
                if cloud.len() > dim {
                    if let Ok(p) = Polytope::from_vertices(dim, &cloud) {
                        body = Some(p);
                    }
                }
            }
        }
    }
    body.ok_or_else(|| Error::Degenerate("segments do not span the space".into()))
}

/// Orthonormal basis of `u^⊥`, built by Gram–Schmidt on the coordinate axes
/// ordered from least to most aligned with `u`. For `u = ±e_k` this is the
/// remaining axes in their natural order.
pub fn complement_basis(u: &Point) -> Vec<Point> {
    let n = u.len();
    let u = u.normalize();
    let mut axes: Vec<usize> = (0..n).collect();
    axes.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()).then(a.cmp(&b)));
    let mut basis: Vec<Point> = Vec::with_capacity(n - 1);
    for &k in &axes {
        if basis.len() == n - 1 {
            break;
        }
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        e -= &u * u.dot(&e);
        for b in &basis {
            e -= b * b.dot(&e);
        }
        let len = e.norm();
        if len > 1e-9 {
            basis.push(e / len);
        }
    }
    basis.sort_by_key(|b| b.iamax());
    basis
}

/// Orthogonal projection onto the hyperplane through the origin with normal
/// `normal`, expressed in [`complement_basis`] coordinates.
pub fn project(p: &Polytope, normal: &Point) -> Result<Polytope> {
    if normal.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: normal.len(),
        });
    }
    if normal.norm() <= EPS_GEOM {
        return Err(Error::Degenerate("zero hyperplane normal".into()));
    }
    if p.dim() == 1 {
        return Ok(Polytope::point0());
    }
    let basis = complement_basis(normal);
    let pts: Vec<Point> = p
        .vertices()
        .iter()
        .map(|v| DVector::from_iterator(basis.len(), basis.iter().map(|b| b.dot(v))))
        .collect();
    Polytope::from_vertices(p.dim() - 1, &pts)
}

/// Longest chord of `P` parallel to `direction`.
pub fn max_fiber_length(p: &Polytope, direction: &Point) -> Result<f64> {
    let n = p.dim();
    if direction.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: direction.len(),
        });
    }
    let u = direction.normalize();
    // variables (x, λ): maximize λ with x and x + λu both in P
    let mut lp = LinearProgram::new(n + 1);
    lp.set_objective_coef(n, -1.0);
    let mut row = vec![0.0; n + 1];
    for f in p.facets() {
        row[..n].copy_from_slice(f.normal.as_slice());
        row[n] = 0.0;
        lp.add_le(&row, f.offset);
        row[n] = f.normal.dot(&u);
        lp.add_le(&row, f.offset);
    }
    let sol = lp.solve().map_err(|e| Error::Numerical {
        context: "max_fiber_length",
        source: e,
        instance: points_dump(p.vertices()),
    })?;
    Ok(sol.x[n].max(0.0))
}

/// Optimal homothety `αK + t` covering a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittingCertificate {
    pub scale: f64,
    pub translate: Vec<f64>,
    /// Points touching the boundary of `αK + t`.
    pub tight_indices: Vec<usize>,
}

impl FittingCertificate {
    /// The point set does not fit into any translate of `int K`.
    pub fn is_nonfitting(&self) -> bool {
        self.scale >= 1.0 - EPS_LP
    }
}

/// Smallest `α ≥ 0` such that every point lies in `αK + t` for some `t`.
///
/// The program is posed for `K` recentred at its vertex centroid (so every
/// facet offset is positive) and the translate is mapped back, so the
/// certificate satisfies `⟨a_j, q_i − t⟩ ≤ α b_j` for the facets of `K` itself.
pub fn fitting_scale(points: &[Point], k: &Polytope) -> Result<FittingCertificate> {
    let n = k.dim();
    if points.is_empty() {
        return Err(Error::Precondition("fitting_scale needs at least one point".into()));
    }
    if let Some(bad) = points.iter().find(|x| x.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let c = k.centroid();
    let shifted: Vec<f64> = k.facets().iter().map(|f| f.offset - f.normal.dot(&c)).collect();

    // variables (α, t'): ⟨a_j, q_i − t'⟩ ≤ α b'_j
    let mut lp = LinearProgram::new(n + 1);
    lp.set_objective_coef(0, 1.0);
    let mut row = vec![0.0; n + 1];
    for q in points {
        for (f, &b) in k.facets().iter().zip(&shifted) {
            row[0] = -b;
            for i in 0..n {
                row[i + 1] = -f.normal[i];
            }
            lp.add_le(&row, -f.normal.dot(q));
        }
    }
    lp.add_le_sparse(&[(0, -1.0)], 0.0);
    let sol = lp.solve().map_err(|e| Error::Numerical {
        context: "fitting_scale",
        source: e,
        instance: points_dump(points),
    })?;
    let alpha = sol.x[0].max(0.0);
    let t_shift = DVector::from_column_slice(&sol.x[1..]);
    let t = t_shift - &c * alpha;

    let tol = EPS_LP * k.scale().max(1.0);
    let tight_indices = points
        .iter()
        .enumerate()
        .filter(|(_, q)| {
            let d = *q - &t;
            k.facets()
                .iter()
                .any(|f| f.normal.dot(&d) >= alpha * f.offset - tol)
        })
        .map(|(i, _)| i)
        .collect();
    Ok(FittingCertificate {
        scale: alpha,
        translate: t.as_slice().to_vec(),
        tight_indices,
    })
}
