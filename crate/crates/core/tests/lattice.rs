use itertools::Itertools;
use minkowski_billiards::billiards::{polyline_length, xi_solver, ClosedPolyline};
use minkowski_billiards::bodies::{
    permutohedron, polar_simplex, random_hull, simplex_vertices, voronoi_cell_pn, Normalization,
};
use minkowski_billiards::lattice::{
    an_star_basis, cover_with_permutohedron, delaunay_cycle, delaunay_simplices, lattice_avoidance_test,
    simplex_lattice, voronoi_cell, LatticeBasis,
};
use minkowski_billiards::report::random_admissible_polyline;
use minkowski_billiards::{fitting_scale, Point};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(c: &[f64]) -> Point {
    DVector::from_column_slice(c)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

/// Nearest lattice point by scanning all coefficients in `[-r, r]^n`.
fn nearest_by_scan(lat: &LatticeBasis, x: &Point, r: i64) -> f64 {
    (0..lat.dim())
        .map(|_| -r..=r)
        .multi_cartesian_product()
        .map(|c| (lat.point(&c) - x).norm())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn gram_matrix_of_an_star() {
    let b = an_star_basis(2).unwrap();
    assert!(close(b.det_gram(), 27.0, 1e-12));
    let mut ev: Vec<f64> = b.gram().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    assert!(close(ev[0], 3.0, 1e-12) && close(ev[1], 9.0, 1e-12));
    for n in 1..=5usize {
        let b = an_star_basis(n).unwrap();
        let nf = n as f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { nf * nf + nf } else { -(nf + 1.0) };
                assert!(close(b.gram()[(i, j)], want, 1e-12));
            }
        }
        let vol = permutohedron(n).unwrap().volume();
        assert!(close(b.covolume(), 2f64.powf(nf / 2.0) * vol, 1e-9), "n = {n}");
    }
    assert!(an_star_basis(0).is_err());
}

#[test]
fn voronoi_cells() {
    let hex = voronoi_cell(&an_star_basis(2).unwrap()).unwrap();
    assert_eq!(hex.vertices().len(), 6);
    assert!(close(hex.volume(), 27f64.sqrt(), 1e-9));
    let cell3 = voronoi_cell(&an_star_basis(3).unwrap()).unwrap();
    assert_eq!(cell3.num_facets(), 14);
    for n in 1..=4 {
        let lat = simplex_lattice(n).unwrap();
        let cell = voronoi_cell(&lat).unwrap();
        assert!(close(cell.volume(), lat.covolume(), 1e-9), "n = {n}");
        let reference = voronoi_cell_pn(n).unwrap();
        assert!(close(cell.volume(), reference.volume(), 1e-9));
    }
}

#[test]
fn voronoi_cell_is_the_nearest_point_region() {
    let lat = simplex_lattice(2).unwrap();
    let cell = voronoi_cell(&lat).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..400 {
        let x = DVector::from_fn(2, |_, _| rng.random_range(-1.2..1.2));
        let inside = cell.contains(&x, 0.0);
        let nearest = nearest_by_scan(&lat, &x, 4);
        let origin_wins = x.norm() <= nearest + 1e-12;
        assert_eq!(inside, origin_wins, "{x:?}");
    }
}

#[test]
fn delaunay_cycles_close_up() {
    for n in 2..=3usize {
        let dirs = simplex_vertices(n, Normalization::UnitCircumradius);
        let t = polar_simplex(n, Normalization::UnitCircumradius).unwrap();
        let simplices = delaunay_simplices(n).unwrap();
        let fact: usize = (1..=n).product();
        assert_eq!(simplices.len(), fact);
        for s in &simplices {
            let cyc = delaunay_cycle(s, &dirs).unwrap();
            assert_eq!(cyc.len(), n + 1);
            let mut seen = s.base_permutation.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..=n).collect::<Vec<_>>());
            for d in cyc.edges() {
                assert!(close(d.norm(), 1.0, 1e-12));
            }
            assert!(close(polyline_length(&t, &cyc).unwrap(), (n + 1) as f64, 1e-12));
            // the cycle spans a simplex that fits K = p_n exactly
            let scale = fitting_scale(cyc.points(), &voronoi_cell_pn(n).unwrap()).unwrap().scale;
            assert!(scale <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn one_dimensional_cover() {
    let q = ClosedPolyline::new(vec![v(&[0.3]), v(&[1.3])]).unwrap();
    let r = cover_with_permutohedron(&q, 1).unwrap();
    assert!(r.margin >= -1e-9);
    assert!(close(r.fitting_scale, 1.0, 1e-9));
    let short = ClosedPolyline::new(vec![v(&[0.0]), v(&[0.4])]).unwrap();
    assert!(cover_with_permutohedron(&short, 1).unwrap().fitting_scale < 1.0);
    assert!(cover_with_permutohedron(&q, 2).is_err());
}

#[test]
fn planar_covers() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let q = random_admissible_polyline(2, 3.0, &mut rng).unwrap();
        let r = cover_with_permutohedron(&q, 2).unwrap();
        assert!(r.margin >= -1e-9 && r.fitting_scale <= 1.0 + 1e-9);
        // the translate really works: every vertex lies in P_2 + s
        let p = permutohedron(2).unwrap().translate(&DVector::from_vec(r.translate.clone()));
        assert!(q.points().iter().all(|x| p.contains(x, 1e-9)));

        let shrunk = ClosedPolyline::new(q.points().iter().map(|x| x * 0.9).collect()).unwrap();
        assert!(fitting_scale(shrunk.points(), &permutohedron(2).unwrap()).unwrap().scale < 1.0);
    }
}

#[test]
fn avoidance() {
    let p2 = voronoi_cell_pn(2).unwrap();
    let r = lattice_avoidance_test(&p2, &simplex_lattice(2).unwrap(), 1000, 0).unwrap();
    assert!(r.precondition_holds);
    assert_eq!((r.samples, r.misses), (1000, 0));

    let tiny = p2.scaled(0.2);
    let skipped = lattice_avoidance_test(&tiny, &simplex_lattice(2).unwrap(), 1000, 0).unwrap();
    assert!(!skipped.precondition_holds);
    assert_eq!(skipped.samples, 0);

    // a body with ξ = n + 1 against the simplex gauge
    let t2 = polar_simplex(2, Normalization::UnitCircumradius).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k = random_hull(2, 7, &mut rng).unwrap();
    let k = k.scaled(3.0 / xi_solver(&k, &t2).unwrap().length);
    let r = lattice_avoidance_test(&k, &simplex_lattice(2).unwrap(), 1000, 1).unwrap();
    assert!(r.precondition_holds);
    assert_eq!(r.misses, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn admissible_polylines_are_covered(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_admissible_polyline(n, (n + 1) as f64, &mut rng).unwrap();
        let r = cover_with_permutohedron(&q, n).unwrap();
        prop_assert!(r.margin >= -1e-9);
        prop_assert!(fitting_scale(q.points(), &permutohedron(n).unwrap()).unwrap().scale <= 1.0 + 1e-9);
    }

    #[test]
    fn lattice_points_near_a_center_are_complete(x in prop::collection::vec(-2.0..2.0f64, 2), radius in 0.1..1.5f64) {
        let lat = simplex_lattice(2).unwrap();
        let c = DVector::from_vec(x);
        let found = lat.points_near(&c, radius);
        for coef in (0..2).map(|_| -6i64..=6).multi_cartesian_product() {
            let inside = (lat.point(&coef) - &c).norm() <= radius;
            if inside {
                prop_assert!(found.contains(&coef));
            }
        }
    }
}
