//! Generators for the named bodies, with fixed normalizations.
//!
//! Regular simplices are built from the equidistant configuration
//! `w_i = e_i − 𝟙/(n+1)` in the hyperplane `Σx = 0` of `R^{n+1}`, read in the
//! orthonormal frame of [`hyperplane_frame`]. That frame puts `v₀` on the
//! positive last axis, and the lattice module uses the same frame, so the
//! permutohedron and the Voronoi cell of `A_n*` agree without a rotation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::polytope::{zonotope, Point, Polytope};
use crate::{Error, Result};

/// Which of the two simplex scalings is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// All edges of length one.
    #[default]
    UnitEdge,
    /// All vertices at distance one from the barycenter.
    UnitCircumradius,
}

/// Orthonormal basis of `{x ∈ R^{n+1} : Σx = 0}`, as `n` vectors of length `n+1`.
///
/// Gram–Schmidt on `w₀, w₁, …, w_{n−1}`, with the `w₀` direction moved to the
/// last slot.
pub fn hyperplane_frame(n: usize) -> Vec<DVector<f64>> {
    let w = |i: usize| -> DVector<f64> {
        let mut x = DVector::from_element(n + 1, -1.0 / (n + 1) as f64);
        x[i] += 1.0;
        x
    };
    let mut gs: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = w(i);
        for b in &gs {
            x -= b * b.dot(&x);
        }
        gs.push(x.normalize());
    }
    gs.rotate_left(1);
    gs
}

/// Coordinates of a vector of the hyperplane `Σx = 0` in [`hyperplane_frame`].
pub fn frame_coordinates(frame: &[DVector<f64>], x: &DVector<f64>) -> Point {
    DVector::from_iterator(frame.len(), frame.iter().map(|b| b.dot(x)))
}

/// Vertices `v₀, …, v_n` of the centred regular simplex, `v₀` on `+e_n`.
pub fn simplex_vertices(n: usize, normalization: Normalization) -> Vec<Point> {
    assert!(n >= 1, "simplex dimension must be positive");
    let frame = hyperplane_frame(n);
    let factor = match normalization {
        Normalization::UnitEdge => 1.0 / 2f64.sqrt(),
        Normalization::UnitCircumradius => ((n + 1) as f64 / n as f64).sqrt(),
    };
    (0..=n)
        .map(|i| {
            let mut w = DVector::from_element(n + 1, -1.0 / (n + 1) as f64);
            w[i] += 1.0;
            frame_coordinates(&frame, &w) * factor
        })
        .collect()
}

pub fn regular_simplex(n: usize, normalization: Normalization) -> Result<Polytope> {
    check_dim(n)?;
    Polytope::from_vertices(n, &simplex_vertices(n, normalization))
}

pub fn polar_simplex(n: usize, normalization: Normalization) -> Result<Polytope> {
    regular_simplex(n, normalization)?.polar()
}

/// `Σ_{i<j} [v_i, v_j]` over the unit-edge simplex.
pub fn permutohedron(n: usize) -> Result<Polytope> {
    check_dim(n)?;
    zonotope(n, &simplex_edges(&simplex_vertices(n, Normalization::UnitEdge)))
}

/// `(1/(n+1))·Σ_{i<j} [v_i, v_j]` over the unit-circumradius simplex; the
/// Voronoi cell of the lattice generated by its vertices.
pub fn voronoi_cell_pn(n: usize) -> Result<Polytope> {
    check_dim(n)?;
    let z = zonotope(
        n,
        &simplex_edges(&simplex_vertices(n, Normalization::UnitCircumradius)),
    )?;
    Ok(z.scaled(1.0 / (n + 1) as f64))
}

fn simplex_edges(v: &[Point]) -> Vec<(Point, Point)> {
    let mut out = Vec::new();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            out.push((v[i].clone(), v[j].clone()));
        }
    }
    out
}

/// `[−1, 1]^n`.
pub fn cube(n: usize) -> Result<Polytope> {
    check_dim(n)?;
    let pts: Vec<Point> = (0..1usize << n)
        .map(|m| DVector::from_iterator(n, (0..n).map(|k| if m >> k & 1 == 1 { 1.0 } else { -1.0 })))
        .collect();
    Polytope::from_vertices(n, &pts)
}

/// `conv{±e_i}`.
pub fn crosspolytope(n: usize) -> Result<Polytope> {
    check_dim(n)?;
    let mut pts = Vec::with_capacity(2 * n);
    for k in 0..n {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[k] = s;
            pts.push(e);
        }
    }
    Polytope::from_vertices(n, &pts)
}

/// Image of `[−1, 1]^n` under `m`.
pub fn parallelotope(m: &DMatrix<f64>) -> Result<Polytope> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.determinant().abs() <= crate::EPS_GEOM {
        return Err(Error::SingularMatrix);
    }
    cube(m.nrows())?.linear_image(m)
}

pub fn cartesian_product(a: &Polytope, b: &Polytope) -> Result<Polytope> {
    let dim = a.dim() + b.dim();
    let pts: Vec<Point> = a
        .vertices()
        .iter()
        .flat_map(|x| {
            b.vertices().iter().map(move |y| {
                DVector::from_iterator(dim, x.iter().chain(y.iter()).copied())
            })
        })
        .collect();
    Polytope::from_vertices(dim, &pts)
}

/// `conv(A × {0} ∪ {0} × B)`; both summands need the origin inside.
pub fn free_sum(a: &Polytope, b: &Polytope) -> Result<Polytope> {
    if !a.contains_origin_in_interior() || !b.contains_origin_in_interior() {
        return Err(Error::OriginNotInterior);
    }
    let dim = a.dim() + b.dim();
    let mut pts: Vec<Point> = Vec::with_capacity(a.vertices().len() + b.vertices().len());
    for x in a.vertices() {
        pts.push(DVector::from_iterator(
            dim,
            x.iter().copied().chain(std::iter::repeat_n(0.0, b.dim())),
        ));
    }
    for y in b.vertices() {
        pts.push(DVector::from_iterator(
            dim,
            std::iter::repeat_n(0.0, a.dim()).chain(y.iter().copied()),
        ));
    }
    Polytope::from_vertices(dim, &pts)
}

/// A Hanner polytope as an expression over `[−1, 1]`, products and free sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HannerExpr {
    Segment,
    Product(Vec<HannerExpr>),
    FreeSum(Vec<HannerExpr>),
}

impl HannerExpr {
    pub fn cube(n: usize) -> Self {
        HannerExpr::Product(vec![HannerExpr::Segment; n])
    }

    pub fn crosspolytope(n: usize) -> Self {
        HannerExpr::FreeSum(vec![HannerExpr::Segment; n])
    }

    pub fn dim(&self) -> usize {
        match self {
            HannerExpr::Segment => 1,
            HannerExpr::Product(c) | HannerExpr::FreeSum(c) => c.iter().map(|e| e.dim()).sum(),
        }
    }

    /// The expression of the polar body: products and free sums swap.
    pub fn dual(&self) -> Self {
        match self {
            HannerExpr::Segment => HannerExpr::Segment,
            HannerExpr::Product(c) => HannerExpr::FreeSum(c.iter().map(|e| e.dual()).collect()),
            HannerExpr::FreeSum(c) => HannerExpr::Product(c.iter().map(|e| e.dual()).collect()),
        }
    }

    pub fn build(&self) -> Result<Polytope> {
        match self {
            HannerExpr::Segment => Polytope::from_vertices(
                1,
                &[DVector::from_element(1, -1.0), DVector::from_element(1, 1.0)],
            ),
            HannerExpr::Product(c) | HannerExpr::FreeSum(c) => {
                let (first, rest) = c.split_first().ok_or_else(|| {
                    Error::MalformedExpression("operator without operands".into())
                })?;
                let mut acc = first.build()?;
                for e in rest {
                    let next = e.build()?;
                    acc = match self {
                        HannerExpr::Product(_) => cartesian_product(&acc, &next)?,
                        _ => free_sum(&acc, &next)?,
                    };
                }
                Ok(acc)
            }
        }
    }
}

/// Serializable description of a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyRecipe {
    RegularSimplex {
        dim: usize,
        #[serde(default)]
        normalization: Normalization,
    },
    PolarSimplex {
        dim: usize,
        #[serde(default)]
        normalization: Normalization,
    },
    Permutohedron {
        dim: usize,
    },
    VoronoiCellPn {
        dim: usize,
    },
    Cube {
        dim: usize,
    },
    Crosspolytope {
        dim: usize,
    },
    /// Rows of the generator matrix.
    Parallelotope {
        matrix: Vec<Vec<f64>>,
    },
    HannerExpression {
        expression: HannerExpr,
    },
    FreeSum {
        left: Box<BodyRecipe>,
        right: Box<BodyRecipe>,
    },
    CartesianProduct {
        left: Box<BodyRecipe>,
        right: Box<BodyRecipe>,
    },
}

impl BodyRecipe {
    pub fn build(&self) -> Result<Polytope> {
        match self {
            BodyRecipe::RegularSimplex { dim, normalization } => regular_simplex(*dim, *normalization),
            BodyRecipe::PolarSimplex { dim, normalization } => polar_simplex(*dim, *normalization),
            BodyRecipe::Permutohedron { dim } => permutohedron(*dim),
            BodyRecipe::VoronoiCellPn { dim } => voronoi_cell_pn(*dim),
            BodyRecipe::Cube { dim } => cube(*dim),
            BodyRecipe::Crosspolytope { dim } => crosspolytope(*dim),
            BodyRecipe::Parallelotope { matrix } => {
                let n = matrix.len();
                if matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::MalformedExpression("matrix must be square".into()));
                }
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                parallelotope(&DMatrix::from_row_slice(n, n, &flat))
            }
            BodyRecipe::HannerExpression { expression } => expression.build(),
            BodyRecipe::FreeSum { left, right } => free_sum(&left.build()?, &right.build()?),
            BodyRecipe::CartesianProduct { left, right } => {
                cartesian_product(&left.build()?, &right.build()?)
            }
        }
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > 6 {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(())
}

/// Hull of `num_points` points uniform in `[−1, 1]^n`, resampled until
/// full-dimensional.
pub fn random_hull<R: rand::Rng + ?Sized>(n: usize, num_points: usize, rng: &mut R) -> Result<Polytope> {
    check_dim(n)?;
    for _ in 0..100 {
        let pts: Vec<Point> = (0..num_points.max(n + 1))
            .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        if let Ok(p) = Polytope::from_vertices(n, &pts) {
            if p.volume() > 1e-3 {
                return Ok(p);
            }
        }
    }
    Err(Error::Degenerate("could not sample a full-dimensional hull".into()))
}

/// Hull of points at random directions with radii in `[0.4, 1.2]`, resampled
/// until the origin is well inside.
pub fn random_gauge_body<R: rand::Rng + ?Sized>(n: usize, num_points: usize, rng: &mut R) -> Result<Polytope> {
    check_dim(n)?;
    for _ in 0..100 {
        let pts: Vec<Point> = (0..num_points.max(n + 1))
            .map(|_| {
                let d = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let r = rng.random_range(0.4..1.2);
                d.normalize() * r
            })
            .collect();
        if let Ok(p) = Polytope::from_vertices(n, &pts) {
            if p.facets().iter().all(|f| f.offset > 0.05) {
                return Ok(p);
            }
        }
    }
    Err(Error::Degenerate("could not sample a body around the origin".into()))
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn vertex_set_distance(a: &[Point], b: &[Point]) -> f64 {
    let one_way = |x: &[Point], y: &[Point]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0f64, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}
