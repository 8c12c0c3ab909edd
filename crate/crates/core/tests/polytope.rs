use minkowski_billiards::bodies::{
    crosspolytope, cube, permutohedron, polar_simplex, random_gauge_body, random_hull, regular_simplex,
    simplex_vertices, vertex_set_distance, Normalization,
};
use minkowski_billiards::{
    fitting_scale, gauge_norm, max_fiber_length, minkowski_sum, minkowski_sum_points, project, zonotope,
    Point, Polytope,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn v(c: &[f64]) -> Point {
    DVector::from_column_slice(c)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

/// Smallest `λ` with `q ∈ λ·B`, by bisection on membership.
fn gauge_by_bisection(ball: &Polytope, q: &Point) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while !ball.scaled(hi).contains(q, 0.0) {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ball.scaled(mid).contains(q, 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// For two points the fitting scale is the gauge of `b − a` in `K − K`.
fn pair_scale_oracle(a: &Point, b: &Point, k: &Polytope) -> f64 {
    let neg = k.linear_image(&-DMatrix::<f64>::identity(k.dim(), k.dim())).unwrap();
    let diff = minkowski_sum(k, &neg).unwrap();
    diff.facets()
        .iter()
        .map(|f| f.normal.dot(&(b - a)) / f.offset)
        .fold(0.0, f64::max)
}

#[test]
fn gauge_of_cube_is_l1_and_of_crosspolytope_is_linf() {
    let q = v(&[1.0, -2.0, 3.0]);
    assert!(close(gauge_norm(&cube(3).unwrap(), &q).unwrap(), 6.0, 1e-12));
    assert!(close(gauge_norm(&crosspolytope(3).unwrap(), &q).unwrap(), 3.0, 1e-12));
}

#[test]
fn gauge_of_polar_triangle_at_a_vertex() {
    let t = polar_simplex(2, Normalization::UnitEdge).unwrap();
    let v0 = &simplex_vertices(2, Normalization::UnitEdge)[0];
    assert!(close(gauge_norm(&t, v0).unwrap(), 1.0, 1e-12));
    let ball = regular_simplex(2, Normalization::UnitEdge).unwrap();
    assert!(close(gauge_by_bisection(&ball, v0), 1.0, 1e-12));
}

#[test]
fn polar_of_cube_and_mahler_product() {
    let p = cube(3).unwrap().polar().unwrap();
    let c = crosspolytope(3).unwrap();
    assert!(vertex_set_distance(p.vertices(), c.vertices()) < 1e-12);
    for n in 1..=5usize {
        let s = regular_simplex(n, Normalization::UnitEdge).unwrap();
        let nf = n as f64;
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let expected = (nf + 1.0).powf(nf + 1.0) / (fact * fact);
        assert!(close(s.volume() * s.polar().unwrap().volume(), expected, 1e-9), "n = {n}");
    }
    let h = permutohedron(2).unwrap();
    let back = h.polar().unwrap().polar().unwrap();
    assert!(vertex_set_distance(h.vertices(), back.vertices()) < 1e-12);
}

#[test]
fn minkowski_sums() {
    let unit = |i: usize| {
        let mut e = DVector::zeros(2);
        e[i] = 1.0;
        (DVector::zeros(2), e)
    };
    let sq = zonotope(2, &[unit(0), unit(1)]).unwrap();
    assert!(close(sq.volume(), 1.0, 1e-12));
    assert!(vertex_set_distance(
        sq.vertices(),
        &[v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 1.0])]
    ) < 1e-12);

    let s = simplex_vertices(2, Normalization::UnitEdge);
    let edges: Vec<(Point, Point)> = vec![
        (s[0].clone(), s[1].clone()),
        (s[1].clone(), s[2].clone()),
        (s[2].clone(), s[0].clone()),
    ];
    let hex = zonotope(2, &edges).unwrap();
    assert_eq!(hex.vertices().len(), 6);
    assert!(close(hex.volume(), 3f64.powf(1.5) / 2.0, 1e-12));

    let p = permutohedron(2).unwrap();
    let shift = v(&[0.3, -1.2]);
    let moved = minkowski_sum_points(&p, std::slice::from_ref(&shift)).unwrap();
    assert!(vertex_set_distance(moved.vertices(), p.translate(&shift).vertices()) < 1e-12);
}

#[test]
fn volumes() {
    assert!(close(cube(3).unwrap().volume(), 8.0, 1e-12));
    let s3 = regular_simplex(3, Normalization::UnitEdge).unwrap();
    assert!(close(s3.volume(), 2.0 / (2f64.powf(1.5) * 6.0), 1e-12));
    assert!(close(permutohedron(3).unwrap().volume(), 32.0 / (2.0 * 2f64.sqrt()), 1e-12));
}

#[test]
fn fitting_scale_examples() {
    let k = permutohedron(2).unwrap();
    let all = fitting_scale(k.vertices(), &k).unwrap();
    assert!(close(all.scale, 1.0, 1e-9));
    assert!(all.translate.iter().all(|t| t.abs() < 1e-9));
    assert!(all.is_nonfitting());

    let one = fitting_scale(&[v(&[0.2, 0.1])], &k).unwrap();
    assert!(one.scale.abs() < 1e-12);

    // width chord of the hexagon between midpoints of opposite facets
    let h = 3f64.sqrt() / 2.0;
    let (a, b) = (v(&[0.0, -h]), v(&[0.0, h]));
    let chord = fitting_scale(&[a.clone(), b.clone()], &k).unwrap();
    assert!(close(chord.scale, 1.0, 1e-9));
    assert!(close(pair_scale_oracle(&a, &b, &k), 1.0, 1e-12));
    // no translate of a slightly smaller hexagon holds both ends
    let smaller = k.scaled(0.99);
    for i in 0..=200 {
        for j in 0..=200 {
            let t = v(&[-1.0 + 0.01 * i as f64, -1.0 + 0.01 * j as f64]);
            let moved = smaller.translate(&t);
            assert!(!(moved.contains(&a, 0.0) && moved.contains(&b, 0.0)));
        }
    }
}

#[test]
fn projections() {
    let e3 = v(&[0.0, 0.0, 1.0]);
    let sq = project(&cube(3).unwrap(), &e3).unwrap();
    assert_eq!(sq.dim(), 2);
    assert!(close(sq.volume(), 4.0, 1e-12));

    let p3 = permutohedron(3).unwrap();
    let shadow = project(&p3, &e3).unwrap();
    let fiber = max_fiber_length(&p3, &e3).unwrap();
    assert!(shadow.volume() * fiber >= p3.volume() * (1.0 - 1e-9));

    let seg = Polytope::from_vertices(3, &[v(&[0.0, 0.0, -1.0]), v(&[0.0, 0.0, 1.0])]);
    // bodies must be full-dimensional, so the segment case is checked in R^1
    assert!(seg.is_err());
    let flat = zonotope(1, &[(v(&[-1.0]), v(&[1.0]))]).unwrap();
    let pt = project(&flat, &v(&[1.0])).unwrap();
    assert_eq!(pt.dim(), 0);
}

#[test]
fn fiber_lengths() {
    assert!(close(max_fiber_length(&cube(3).unwrap(), &v(&[0.0, 0.0, 1.0])).unwrap(), 2.0, 1e-9));
    assert!(close(
        max_fiber_length(&crosspolytope(3).unwrap(), &v(&[1.0, 0.0, 0.0])).unwrap(),
        2.0,
        1e-9
    ));
    // random triangle against a scan of vertical chords
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = random_hull(2, 3, &mut rng).unwrap();
    let u = v(&[0.0, 1.0]);
    let exact = max_fiber_length(&k, &u).unwrap();
    let (lo, hi) = k
        .vertices()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[0]), h.max(p[0])));
    let mut best = 0.0f64;
    for i in 0..=20_000 {
        let x = lo + (hi - lo) * i as f64 / 20_000.0;
        let (mut top, mut bottom) = (f64::INFINITY, f64::NEG_INFINITY);
        for f in k.facets() {
            // n0 x + n1 y ≤ b
            let rest = f.offset - f.normal[0] * x;
            if f.normal[1] > 1e-12 {
                top = top.min(rest / f.normal[1]);
            } else if f.normal[1] < -1e-12 {
                bottom = bottom.max(rest / f.normal[1]);
            }
        }
        best = best.max(top - bottom);
    }
    assert!(exact >= best - 1e-12 && exact - best < 1e-3, "{exact} vs {best}");
}

fn body_strategy(n: usize) -> impl Strategy<Value = Polytope> {
    any::<u64>().prop_map(move |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_gauge_body(n, 3 * n + 2, &mut rng).unwrap()
    })
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-3.0..3.0f64, n).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn polar_is_an_involution(p in body_strategy(3)) {
        let back = p.polar().unwrap().polar().unwrap();
        prop_assert!(vertex_set_distance(p.vertices(), back.vertices()) < 1e-9);
    }

    #[test]
    fn gauge_matches_bisection(t in body_strategy(2), q in vec_strategy(2)) {
        let ball = t.polar().unwrap();
        let g = gauge_norm(&t, &q).unwrap();
        prop_assert!(close(g, gauge_by_bisection(&ball, &q), 1e-9));
    }

    #[test]
    fn support_is_additive(a in body_strategy(2), b in body_strategy(2), u in vec_strategy(2)) {
        let s = minkowski_sum(&a, &b).unwrap();
        let lhs = s.support(u.as_slice());
        let rhs = a.support(u.as_slice()) + b.support(u.as_slice());
        prop_assert!(close(lhs, rhs, 1e-9));
    }

    #[test]
    fn volume_under_linear_maps(p in body_strategy(3), entries in prop::collection::vec(-1.0..1.0f64, 9)) {
        let m = DMatrix::from_vec(3, 3, entries) + DMatrix::identity(3, 3) * 1.5;
        let det = m.determinant();
        prop_assume!(det.abs() > 0.1);
        let image = p.linear_image(&m).unwrap();
        prop_assert!(close(image.volume(), det.abs() * p.volume(), 1e-9));
        prop_assert!(close(p.scaled(1.7).volume(), 1.7f64.powi(3) * p.volume(), 1e-9));
    }

    #[test]
    fn fitting_scale_is_homogeneous_and_translation_invariant(
        k in body_strategy(2),
        pts in prop::collection::vec(vec_strategy(2), 2..6),
        shift in vec_strategy(2),
        lambda in 0.2..4.0f64,
    ) {
        let base = fitting_scale(&pts, &k).unwrap().scale;
        let moved: Vec<Point> = pts.iter().map(|p| p * lambda + &shift).collect();
        prop_assert!(close(fitting_scale(&moved, &k).unwrap().scale, lambda * base, 1e-7));
    }

    #[test]
    fn pair_fitting_scale_is_a_difference_body_gauge(k in body_strategy(2), a in vec_strategy(2), b in vec_strategy(2)) {
        let s = fitting_scale(&[a.clone(), b.clone()], &k).unwrap().scale;
        prop_assert!(close(s, pair_scale_oracle(&a, &b, &k), 1e-7));
    }
}
