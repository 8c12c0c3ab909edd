use minkowski_billiards::billiards::{
    decompose_direction, enumerate_cages, isoperimetric_check, polyline_length, ratio_from_xi,
    verify_reflection, viterbo_ratio, xi_bruteforce, xi_solver, ClosedPolyline, OracleConfig,
    TrajectoryResult,
};
use minkowski_billiards::bodies::{
    crosspolytope, cube, permutohedron, polar_simplex, random_gauge_body, random_hull, regular_simplex,
    simplex_vertices, voronoi_cell_pn, Normalization,
};
use minkowski_billiards::io::to_json_string;
use minkowski_billiards::{fitting_scale, gauge_norm, Point, Polytope};
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

fn hexagon_gauge() -> (Polytope, Polytope) {
    (permutohedron(2).unwrap(), polar_simplex(2, Normalization::UnitEdge).unwrap())
}

/// Wraps a hand-made polyline so the reflection check can read it.
fn as_result(points: Vec<Point>, k: &Polytope, t: &Polytope) -> TrajectoryResult {
    let polyline = ClosedPolyline::new(points).unwrap();
    TrajectoryResult {
        length: polyline_length(t, &polyline).unwrap(),
        certificate: fitting_scale(polyline.points(), k).unwrap(),
        facet_assignment: vec![0; polyline.len()],
        momenta: Vec::new(),
        polyline,
    }
}

/// The classical 4-bounce trajectory through the midpoints of four facets
/// of the hexagon.
fn hexagon_classical() -> Vec<Point> {
    let r = 3f64.sqrt();
    vec![
        v(&[-0.75, r / 4.0]),
        v(&[-0.75, -r / 4.0]),
        v(&[0.0, -r / 2.0]),
        v(&[0.0, r / 2.0]),
    ]
}

#[test]
fn polyline_lengths() {
    let sq = ClosedPolyline::new(vec![v(&[-1.0, -1.0]), v(&[1.0, -1.0]), v(&[1.0, 1.0]), v(&[-1.0, 1.0])]).unwrap();
    assert!(close(polyline_length(&cube(2).unwrap(), &sq).unwrap(), 8.0, 1e-15));

    let t = regular_simplex(2, Normalization::UnitEdge).unwrap();
    let (a, b) = (v(&[0.3, -0.2]), v(&[-1.1, 0.7]));
    let h = |d: &Point| t.vertices().iter().map(|p| p.dot(d)).fold(f64::NEG_INFINITY, f64::max);
    let two = ClosedPolyline::new(vec![a.clone(), b.clone()]).unwrap();
    assert!(close(polyline_length(&t, &two).unwrap(), h(&(&b - &a)) + h(&(&a - &b)), 1e-15));

    for n in 1..=5 {
        let dirs = simplex_vertices(n, Normalization::UnitEdge);
        let mut pts = vec![DVector::zeros(n)];
        for d in &dirs[..n] {
            pts.push(pts.last().unwrap() + d);
        }
        let line = ClosedPolyline::new(pts).unwrap();
        let len = polyline_length(&polar_simplex(n, Normalization::UnitEdge).unwrap(), &line).unwrap();
        assert!(close(len, (n + 1) as f64, 1e-12), "n = {n}");
    }
    assert!(ClosedPolyline::new(vec![v(&[1.0, 0.0])]).is_err());
    assert!(ClosedPolyline::new(vec![v(&[1.0, 0.0]), v(&[1.0, 0.0])]).is_err());
}

#[test]
fn direction_decomposition() {
    let dirs = simplex_vertices(3, Normalization::UnitEdge);
    let a = decompose_direction(&dirs[1], &dirs).unwrap();
    assert!(close(a[1], 1.0, 1e-12) && a[0].abs() < 1e-12 && a[2].abs() < 1e-12 && a[3].abs() < 1e-12);
    let b = decompose_direction(&(&dirs[1] + &dirs[2]), &dirs).unwrap();
    assert!(close(b[1], 1.0, 1e-12) && close(b[2], 1.0, 1e-12) && b[0].abs() < 1e-12 && b[3].abs() < 1e-12);
}

#[test]
fn cages_of_standard_bodies() {
    let c = enumerate_cages(&cube(3).unwrap(), 4).unwrap();
    assert_eq!(c.len(), 3);
    assert!(c.iter().all(|g| g.facet_indices.len() == 2));
    let tri = enumerate_cages(&regular_simplex(2, Normalization::UnitEdge).unwrap(), 3).unwrap();
    assert_eq!(tri.len(), 1);
    assert_eq!(tri[0].facet_indices.len(), 3);
    let hex = enumerate_cages(&permutohedron(2).unwrap(), 3).unwrap();
    assert_eq!(hex.iter().filter(|g| g.facet_indices.len() == 2).count(), 3);
    assert_eq!(hex.iter().filter(|g| g.facet_indices.len() == 3).count(), 2);
    for g in &hex {
        let k = permutohedron(2).unwrap();
        let s = g
            .facet_indices
            .iter()
            .zip(&g.weights)
            .fold(DVector::zeros(2), |acc, (&j, &w)| acc + &k.facets()[j].normal * w);
        assert!(s.norm() < 1e-9);
    }
}

#[test]
fn reference_values() {
    let (k, t) = hexagon_gauge();
    assert!(close(xi_solver(&k, &t).unwrap().length, 9.0, 1e-9));
    let p3 = permutohedron(3).unwrap();
    assert!(close(xi_solver(&p3, &polar_simplex(3, Normalization::UnitEdge).unwrap()).unwrap().length, 16.0, 1e-9));
    for n in [2, 3] {
        let pn = voronoi_cell_pn(n).unwrap();
        let tn = polar_simplex(n, Normalization::UnitCircumradius).unwrap();
        assert!(close(xi_solver(&pn, &tn).unwrap().length, (n + 1) as f64, 1e-9));
    }
    for n in 2..=4 {
        let c = cube(n).unwrap();
        assert!(close(xi_solver(&c, &c.polar().unwrap()).unwrap().length, 4.0, 1e-9));
        assert!(close(viterbo_ratio(&c, &c.polar().unwrap()).unwrap(), 1.0, 1e-9));
    }
}

#[test]
fn oracle_reference_values() {
    let (k, t) = hexagon_gauge();
    let cfg = OracleConfig { restarts: 20, ..Default::default() };
    assert!(close(xi_bruteforce(&k, &t, &cfg).unwrap().length, 9.0, 1e-4));
    let sq = cube(2).unwrap();
    assert!(close(xi_bruteforce(&sq, &sq, &cfg).unwrap().length, 4.0, 1e-4));
    assert!(close(xi_solver(&sq, &sq).unwrap().length, 4.0, 1e-9));
}

#[test]
fn oracle_agrees_in_three_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = random_hull(3, 8, &mut rng).unwrap();
    let t = random_gauge_body(3, 8, &mut rng).unwrap();
    let s = xi_solver(&k, &t).unwrap().length;
    let o = xi_bruteforce(&k, &t, &OracleConfig { restarts: 20, ..Default::default() }).unwrap().length;
    assert!(close(o, s, 1e-4), "solver {s}, oracle {o}");
}

#[test]
fn reflection_law() {
    // axis bounce in the cube with momenta in the crosspolytope
    let c = cube(3).unwrap();
    let x = crosspolytope(3).unwrap();
    let chord = as_result(vec![v(&[-1.0, 0.2, 0.1]), v(&[1.0, 0.2, 0.1])], &c, &x);
    assert!(verify_reflection(&chord, &c, &x).unwrap().feasible);

    let (k, t) = hexagon_gauge();
    let best = xi_solver(&k, &t).unwrap();
    assert!(verify_reflection(&best, &k, &t).unwrap().feasible);

    let classical = as_result(hexagon_classical(), &k, &t);
    assert!(close(classical.length, 9.0, 1e-12));
    assert!(close(classical.certificate.scale, 1.0, 1e-9));
    let report = verify_reflection(&classical, &k, &t).unwrap();
    assert!(report.feasible);
    assert_eq!(report.bounces.len(), 4);
    assert!(report.bounces.iter().all(|b| b.active_facets.len() == 1));

    // the same points traversed backwards break the law for this asymmetric gauge
    let mut backwards = hexagon_classical();
    backwards.reverse();
    let wrong = as_result(backwards, &k, &t);
    assert!(!verify_reflection(&wrong, &k, &t).unwrap().feasible);
    assert!(wrong.length > 9.0 + 1.0);
}

#[test]
fn isoperimetric_inequality() {
    let c = crosspolytope(2).unwrap();
    let r = isoperimetric_check(&c).unwrap();
    assert!(close(r.xi, r.bound, 1e-9) && r.holds);
    // confirm the equality case independently of the cage solver
    let o = xi_bruteforce(&c, &cube(2).unwrap(), &OracleConfig { restarts: 20, ..Default::default() }).unwrap();
    assert!(close(o.length, r.bound, 1e-6));

    let sq = isoperimetric_check(&cube(2).unwrap()).unwrap();
    assert!(sq.holds && sq.slack > 0.1);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        assert!(isoperimetric_check(&random_hull(2, 6, &mut rng).unwrap()).unwrap().holds);
    }
}

#[test]
fn random_three_dimensional_instances_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let simplex = regular_simplex(3, Normalization::UnitEdge).unwrap();
    for _ in 0..15 {
        let k = random_hull(3, 12, &mut rng).unwrap();
        let g = random_gauge_body(3, 8, &mut rng).unwrap();
        for t in [&simplex, &g] {
            let r = xi_solver(&k, t).unwrap();
            assert!(r.certificate.is_nonfitting());
            assert!(ratio_from_xi(&k, t, r.length) >= 1.0 - 1e-6);
        }
    }
}

#[test]
fn results_are_deterministic_and_round_trip() {
    let (k, t) = hexagon_gauge();
    let a = to_json_string(&xi_solver(&k, &t).unwrap()).unwrap();
    let b = to_json_string(&xi_solver(&k, &t).unwrap()).unwrap();
    assert_eq!(a, b);
    let back: TrajectoryResult = serde_json::from_str(&a).unwrap();
    assert_eq!(to_json_string(&back).unwrap(), a);

    let cfg = OracleConfig { restarts: 5, seed: 4, ..Default::default() };
    let o1 = to_json_string(&xi_bruteforce(&k, &t, &cfg).unwrap()).unwrap();
    let o2 = to_json_string(&xi_bruteforce(&k, &t, &cfg).unwrap()).unwrap();
    assert_eq!(o1, o2);
}

fn pair_strategy() -> impl Strategy<Value = (Polytope, Polytope)> {
    any::<u64>().prop_map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_hull(2, 7, &mut rng).unwrap(), random_gauge_body(2, 6, &mut rng).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_matches_the_gauge(d in prop::collection::vec(-2.0..2.0f64, 3)) {
        let d = DVector::from_vec(d);
        let dirs = simplex_vertices(3, Normalization::UnitEdge);
        let a = decompose_direction(&d, &dirs).unwrap();
        let sum = dirs.iter().zip(&a).fold(DVector::zeros(3), |acc, (v, &c)| acc + v * c);
        prop_assert!((sum - &d).norm() < 1e-9);
        prop_assert!(a.iter().all(|&c| c >= -1e-12));
        let gauge = gauge_norm(&polar_simplex(3, Normalization::UnitEdge).unwrap(), &d).unwrap();
        prop_assert!(close(a.iter().sum::<f64>(), gauge, 1e-9));
    }

    #[test]
    fn xi_is_homogeneous_and_translation_invariant((k, t) in pair_strategy(), lambda in 0.2..5.0f64, shift in prop::collection::vec(-3.0..3.0f64, 2)) {
        let base = xi_solver(&k, &t).unwrap().length;
        prop_assert!(close(xi_solver(&k.scaled(lambda), &t).unwrap().length, lambda * base, 1e-9));
        prop_assert!(close(xi_solver(&k, &t.scaled(lambda)).unwrap().length, lambda * base, 1e-9));
        let moved = k.translate(&DVector::from_vec(shift));
        prop_assert!(close(xi_solver(&moved, &t).unwrap().length, base, 1e-9));
    }

    #[test]
    fn xi_is_monotone((k, t) in pair_strategy(), extra in prop::collection::vec(-1.5..1.5f64, 2)) {
        let mut pts = k.vertices().to_vec();
        pts.push(DVector::from_vec(extra));
        let bigger = Polytope::from_vertices(2, &pts).unwrap();
        prop_assert!(xi_solver(&k, &t).unwrap().length <= xi_solver(&bigger, &t).unwrap().length * (1.0 + 1e-9));
    }

    #[test]
    fn xi_is_invariant_under_dual_linear_maps((k, t) in pair_strategy(), m in prop::collection::vec(-0.7..0.7f64, 4)) {
        let m = DMatrix::from_vec(2, 2, m) + DMatrix::identity(2, 2);
        prop_assume!(m.determinant().abs() > 0.2);
        let inv_t = m.clone().try_inverse().unwrap().transpose();
        let base = xi_solver(&k, &t).unwrap().length;
        let image = xi_solver(&k.linear_image(&m).unwrap(), &t.linear_image(&inv_t).unwrap()).unwrap().length;
        prop_assert!(close(image, base, 1e-9));
    }

    #[test]
    fn minimizers_are_verified((k, t) in pair_strategy()) {
        let r = xi_solver(&k, &t).unwrap();
        prop_assert!(r.certificate.is_nonfitting());
        prop_assert!(close(polyline_length(&t, &r.polyline).unwrap(), r.length, 1e-12));
        prop_assert!(r.polyline.points().iter().all(|q| k.contains(q, 1e-9)));
        prop_assert!(verify_reflection(&r, &k, &t).unwrap().feasible);
        // any non-fitting polyline is at least as long, e.g. K's own vertices
        let all = ClosedPolyline::new(k.vertices().to_vec()).unwrap();
        prop_assert!(r.length <= polyline_length(&t, &all).unwrap() * (1.0 + 1e-9));
    }

    #[test]
    fn oracle_never_beats_the_solver((k, t) in pair_strategy(), seed in any::<u64>()) {
        let s = xi_solver(&k, &t).unwrap().length;
        let o = xi_bruteforce(&k, &t, &OracleConfig { restarts: 2, seed, ..Default::default() }).unwrap();
        prop_assert!(o.certificate.scale >= 1.0 - 1e-7);
        prop_assert!(o.length >= s * (1.0 - 1e-7));
    }
}
