//! Dimension-generic convex hull (beneath–beyond) for small point sets.
//!
//! The boundary is maintained as a simplicial complex. Coplanar simplicial
//! pieces are merged afterwards by walking ridge adjacency, which recovers the
//! non-simplicial facets of bodies such as the permutohedron. Points lying on
//! the boundary without being extreme are pruned and the hull is rebuilt from
//! the extreme points, so the returned triangulation only references vertices.

use std::collections::HashMap;

use crate::Error;

#[derive(Debug, Clone)]
pub(crate) struct HullFacet {
    pub normal: Vec<f64>,
    pub offset: f64,
    /// Indices into the input point list.
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Hull {
    /// Indices of the extreme points, ascending.
    pub vertices: Vec<usize>,
    pub facets: Vec<HullFacet>,
    /// Simplicial decomposition of the boundary, indices into the input.
    pub triangulation: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
struct Simplex {
    verts: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
}

const NORMAL_MERGE_TOL: f64 = 1e-7;

pub(crate) fn convex_hull(points: &[Vec<f64>], dim: usize, eps: f64) -> Result<Hull, Error> {
    let candidates: Vec<usize> = (0..points.len()).collect();
    let hull = hull_of(points, &candidates, dim, eps)?;
    if hull.vertices.len() == count_used(&hull.triangulation, points.len()) {
        return Ok(hull);
    }
    // Boundary points that are not extreme were part of the triangulation;
    // rebuild from the extreme points only.
    let second = hull_of(points, &hull.vertices, dim, eps)?;
    Ok(second)
}

fn count_used(tri: &[Vec<usize>], n: usize) -> usize {
    let mut used = vec![false; n];
    for s in tri {
        for &v in s {
            used[v] = true;
        }
    }
    used.iter().filter(|&&u| u).count()
}

fn scale_of(points: &[Vec<f64>], idx: &[usize]) -> f64 {
    idx.iter()
        .flat_map(|&i| points[i].iter())
        .fold(1.0f64, |a, &v| a.max(v.abs()))
}

fn hull_of(points: &[Vec<f64>], idx: &[usize], dim: usize, eps: f64) -> Result<Hull, Error> {
    if idx.is_empty() {
        return Err(Error::Degenerate("empty point set".into()));
    }
    let tol = eps * scale_of(points, idx);
    if dim == 1 {
        return hull_1d(points, idx, tol);
    }
    let uniq = dedupe(points, idx, tol);
    if uniq.len() < dim + 1 {
        return Err(Error::Degenerate(format!(
            "{} distinct points cannot span dimension {dim}",
            uniq.len()
        )));
    }

    let init = initial_simplex(points, &uniq, dim, tol)?;
    let mut interior = vec![0.0; dim];
    for &i in &init {
        for (c, x) in interior.iter_mut().zip(&points[i]) {
            *c += x / (dim + 1) as f64;
        }
    }

    let mut facets: Vec<Option<Simplex>> = Vec::new();
    for skip in 0..=dim {
        let mut verts: Vec<usize> = init
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != skip)
            .map(|(_, &v)| v)
            .collect();
        verts.sort_unstable();
        facets.push(Some(make_simplex(points, verts, &interior)?));
    }

    let mut rest: Vec<usize> = uniq.iter().copied().filter(|i| !init.contains(i)).collect();
    // Far points first: fewer boundary points get inserted and later dropped.
    let dist2 = |i: usize| -> f64 {
        points[i]
            .iter()
            .zip(&interior)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    rest.sort_by(|&a, &b| dist2(b).total_cmp(&dist2(a)).then(a.cmp(&b)));

    let mut free: Vec<usize> = Vec::new();
    let mut visible = Vec::new();
    let mut ridges: HashMap<Vec<usize>, u32> = HashMap::new();
    for p in rest {
        visible.clear();
        for (fi, f) in facets.iter().enumerate() {
            if let Some(f) = f {
                if dot(&f.normal, &points[p]) - f.offset > tol {
                    visible.push(fi);
                }
            }
        }
        if visible.is_empty() {
            continue;
        }
        ridges.clear();
        for &fi in &visible {
            let f = facets[fi].as_ref().expect("live facet");
            for skip in 0..f.verts.len() {
                let ridge: Vec<usize> = f
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        for &fi in &visible {
            facets[fi] = None;
            free.push(fi);
        }
        let mut horizon: Vec<&Vec<usize>> = ridges
            .iter()
            .filter(|&(_, &c)| c == 1)
            .map(|(r, _)| r)
            .collect();
        horizon.sort();
        for ridge in horizon {
            let mut verts = ridge.clone();
            verts.push(p);
            verts.sort_unstable();
            let s = make_simplex(points, verts, &interior)?;
            match free.pop() {
                Some(slot) => facets[slot] = Some(s),
                None => facets.push(Some(s)),
            }
        }
    }

    let simplices: Vec<Simplex> = facets.into_iter().flatten().collect();
    merge_facets(points, simplices, dim, tol)
}

fn hull_1d(points: &[Vec<f64>], idx: &[usize], tol: f64) -> Result<Hull, Error> {
    let mut lo = idx[0];
    let mut hi = idx[0];
    for &i in idx {
        if points[i][0] < points[lo][0] {
            lo = i;
        }
        if points[i][0] > points[hi][0] {
            hi = i;
        }
    }
    if points[hi][0] - points[lo][0] <= tol {
        return Err(Error::Degenerate("segment of zero length".into()));
    }
    let mut vertices = vec![lo, hi];
    vertices.sort_unstable();
    Ok(Hull {
        vertices,
        facets: vec![
            HullFacet {
                normal: vec![-1.0],
                offset: -points[lo][0],
                vertices: vec![lo],
            },
            HullFacet {
                normal: vec![1.0],
                offset: points[hi][0],
                vertices: vec![hi],
            },
        ],
        triangulation: vec![vec![lo], vec![hi]],
    })
}

fn dedupe(points: &[Vec<f64>], idx: &[usize], tol: f64) -> Vec<usize> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(a.cmp(&b))
    });
    let mut keep: Vec<usize> = Vec::with_capacity(order.len());
    let mut kept = vec![false; points.len()];
    for (k, &i) in order.iter().enumerate() {
        let mut duplicate = false;
        for &j in order[..k].iter().rev() {
            if points[i][0] - points[j][0] > tol {
                break;
            }
            if max_abs_diff(&points[i], &points[j]) <= tol && kept[j] {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            kept[i] = true;
            keep.push(i);
        }
    }
    keep.sort_unstable();
    keep
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn initial_simplex(
    points: &[Vec<f64>],
    uniq: &[usize],
    dim: usize,
    tol: f64,
) -> Result<Vec<usize>, Error> {
    let first = *uniq
        .iter()
        .min_by(|&&a, &&b| {
            points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("nonempty");
    let mut chosen = vec![first];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for _ in 0..dim {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for &i in uniq {
            if chosen.contains(&i) {
                continue;
            }
            let mut r: Vec<f64> = points[i]
                .iter()
                .zip(&points[first])
                .map(|(a, b)| a - b)
                .collect();
            for b in &basis {
                let c = dot(&r, b);
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
            let d = norm(&r);
            if best.as_ref().is_none_or(|(_, bd, _)| d > *bd) {
                best = Some((i, d, r));
            }
        }
        match best {
            Some((i, d, r)) if d > tol => {
                chosen.push(i);
                basis.push(r.iter().map(|x| x / d).collect());
            }
            _ => {
                return Err(Error::Degenerate(format!(
                    "points are contained in a hyperplane of dimension < {dim}"
                )))
            }
        }
    }
    Ok(chosen)
}

fn make_simplex(points: &[Vec<f64>], verts: Vec<usize>, interior: &[f64]) -> Result<Simplex, Error> {
    let d = interior.len();
    let base = &points[verts[0]];
    let rows: Vec<Vec<f64>> = verts[1..]
        .iter()
        .map(|&v| points[v].iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let mut normal = null_vector(&rows, d);
    let len = norm(&normal);
    if len.is_nan() || len <= 0.0 || !len.is_finite() {
        return Err(Error::Degenerate("degenerate boundary simplex".into()));
    }
    for x in &mut normal {
        *x /= len;
    }
    let mut offset = dot(&normal, base);
    if dot(&normal, interior) > offset {
        for x in &mut normal {
            *x = -*x;
        }
        offset = -offset;
    }
    Ok(Simplex {
        verts,
        normal,
        offset,
    })
}

/// Generalized cross product of `d − 1` vectors in `R^d`.
fn null_vector(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    let mut minor = vec![0.0; (d - 1) * (d - 1)];
    for (k, o) in out.iter_mut().enumerate() {
        for (r, row) in rows.iter().enumerate() {
            let mut c = 0;
            for (col, &v) in row.iter().enumerate() {
                if col != k {
                    minor[r * (d - 1) + c] = v;
                    c += 1;
                }
            }
        }
        let det = determinant(&mut minor, d - 1);
        *o = if k % 2 == 0 { det } else { -det };
    }
    out
}

/// Determinant by Gaussian elimination with partial pivoting; clobbers `a`.
pub(crate) fn determinant(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        let p = a[piv * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            det = -det;
        }
        det *= p;
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
            }
        }
    }
    det
}

fn merge_facets(
    points: &[Vec<f64>],
    simplices: Vec<Simplex>,
    dim: usize,
    tol: f64,
) -> Result<Hull, Error> {
    let mut parent: Vec<usize> = (0..simplices.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut ridge_owner: HashMap<Vec<usize>, usize> = HashMap::new();
    for (si, s) in simplices.iter().enumerate() {
        for skip in 0..s.verts.len() {
            let ridge: Vec<usize> = s
                .verts
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != skip)
                .map(|(_, &v)| v)
                .collect();
            if let Some(&other) = ridge_owner.get(&ridge) {
                let o = &simplices[other];
                let coplanar = max_abs_diff(&s.normal, &o.normal) < NORMAL_MERGE_TOL
                    && (s.offset - o.offset).abs() < NORMAL_MERGE_TOL.max(tol) * (1.0 + s.offset.abs());
                if coplanar {
                    let (a, b) = (find(&mut parent, si), find(&mut parent, other));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            } else {
                ridge_owner.insert(ridge, si);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of: HashMap<usize, usize> = HashMap::new();
    for si in 0..simplices.len() {
        let root = find(&mut parent, si);
        let g = *group_of.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(si);
    }

    let mut facets: Vec<HullFacet> = groups
        .iter()
        .map(|members| {
            let mut normal = vec![0.0; dim];
            let mut verts: Vec<usize> = Vec::new();
            for &si in members {
                for (n, x) in normal.iter_mut().zip(&simplices[si].normal) {
                    *n += x;
                }
                verts.extend_from_slice(&simplices[si].verts);
            }
            let len = norm(&normal);
            for n in &mut normal {
                *n /= len;
            }
            verts.sort_unstable();
            verts.dedup();
            let offset = verts
                .iter()
                .map(|&v| dot(&normal, &points[v]))
                .fold(f64::NEG_INFINITY, f64::max);
            HullFacet {
                normal,
                offset,
                vertices: verts,
            }
        })
        .collect();

    // Extreme points are exactly those whose incident facet normals span R^d.
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (fi, f) in facets.iter().enumerate() {
        for &v in &f.vertices {
            incident.entry(v).or_default().push(fi);
        }
    }
    let mut vertices: Vec<usize> = incident
        .iter()
        .filter(|(_, fs)| {
            let normals: Vec<&[f64]> = fs.iter().map(|&f| facets[f].normal.as_slice()).collect();
            rank(&normals, 1e-7) >= dim
        })
        .map(|(&v, _)| v)
        .collect();
    vertices.sort_unstable();
    for f in &mut facets {
        f.vertices.retain(|v| vertices.binary_search(v).is_ok());
    }
    facets.sort_by(|a, b| {
        a.normal
            .iter()
            .zip(&b.normal)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let triangulation = simplices.into_iter().map(|s| s.verts).collect();
    Ok(Hull {
        vertices,
        facets,
        triangulation,
    })
}

/// Numerical rank via modified Gram–Schmidt.
pub(crate) fn rank(vectors: &[&[f64]], tol: f64) -> usize {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut r = v.to_vec();
        for b in &basis {
            let c = dot(&r, b);
            for (x, y) in r.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let n = norm(&r);
        if n > tol {
            basis.push(r.into_iter().map(|x| x / n).collect());
        }
    }
    basis.len()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
