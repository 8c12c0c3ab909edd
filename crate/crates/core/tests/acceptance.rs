//! One line per acceptance criterion. Pass `--ignored` or
//! `--include-ignored` to add the slow n = 4 equality case.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use minkowski_billiards::billiards::{
    ratio_from_xi, xi_bruteforce, xi_solver, OracleConfig,
};
use minkowski_billiards::bodies::{
    cartesian_product, parallelotope, permutohedron, polar_simplex, random_gauge_body, random_hull,
    regular_simplex, voronoi_cell_pn, Normalization,
};
use minkowski_billiards::lattice::{
    an_star_basis, cover_with_permutohedron, lattice_avoidance_test, simplex_lattice,
};
use minkowski_billiards::report::{hanner_cases, random_admissible_polyline};
use minkowski_billiards::{Polytope, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn check(name: &'static str, limit: Option<Duration>, f: impl FnOnce() -> Result<(bool, String)>) -> Line {
    let start = Instant::now();
    let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let detail = if in_time {
        detail
    } else {
        format!("{detail}; over the {:?} limit", limit.unwrap())
    };
    let line = Line {
        name,
        pass: ok && in_time,
        detail,
        elapsed,
    };
    println!(
        "{} {:<44} {:>9.2?}  {}",
        if line.pass { "PASS" } else { "FAIL" },
        line.name,
        line.elapsed,
        line.detail
    );
    line
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn xi(k: &Polytope, t: &Polytope) -> Result<f64> {
    Ok(xi_solver(k, t)?.length)
}

fn random_box<R: Rng>(n: usize, rng: &mut R) -> Result<Polytope> {
    loop {
        let m = DMatrix::<f64>::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) + rng.random_range(-0.5..0.5));
        if m.determinant().abs() > 0.2 {
            return parallelotope(&m);
        }
    }
}

fn acceptance() -> bool {
    let secs = Duration::from_secs;
    let mut lines = Vec::new();

    lines.push(check("1 xi(P2, polar simplex) = 9", Some(secs(5)), || {
        let v = xi(&permutohedron(2)?, &polar_simplex(2, Normalization::UnitEdge)?)?;
        Ok((rel(v, 9.0) <= 1e-6, format!("xi = {v:.12}")))
    }));

    lines.push(check("2 xi(P3, polar simplex) = 16", Some(secs(60)), || {
        let v = xi(&permutohedron(3)?, &polar_simplex(3, Normalization::UnitEdge)?)?;
        Ok((rel(v, 16.0) <= 1e-6, format!("xi = {v:.12}")))
    }));

    lines.push(check("3 xi(H, polar H) = 4 for Hanner trees", Some(secs(120)), || {
        let mut worst = 0.0f64;
        let cases = hanner_cases();
        for (_, e) in &cases {
            let h = e.build()?;
            worst = worst.max(rel(xi(&h, &h.polar()?)?, 4.0));
        }
        Ok((worst <= 1e-6, format!("{} bodies, worst rel err {worst:.2e}", cases.len())))
    }));

    lines.push(check("4 volume closed forms, n = 1..5", Some(secs(30)), || {
        let mut worst = 0.0f64;
        for n in 1..=5 {
            let nf = n as f64;
            let p = permutohedron(n)?.volume();
            worst = worst.max(rel(p, (nf + 1.0).powf(nf - 0.5) / 2f64.powf(nf / 2.0)));
            let s = regular_simplex(n, Normalization::UnitEdge)?;
            let vs = s.volume();
            worst = worst.max(rel(vs, (nf + 1.0).sqrt() / (2f64.powf(nf / 2.0) * factorial(n))));
            let mahler = vs * s.polar()?.volume();
            worst = worst.max(rel(mahler, (nf + 1.0).powf(nf + 1.0) / factorial(n).powi(2)));
        }
        Ok((worst <= 1e-6, format!("worst rel err {worst:.2e}")))
    }));

    lines.push(check("5 viterbo ratio of P_n x polar simplex = 1", None, || {
        let mut worst = 0.0f64;
        for n in [2, 3] {
            let (k, t) = (permutohedron(n)?, polar_simplex(n, Normalization::UnitEdge)?);
            worst = worst.max(rel(ratio_from_xi(&k, &t, xi(&k, &t)?), 1.0));
        }
        Ok((worst <= 1e-6, format!("worst rel err {worst:.2e}")))
    }));

    lines.push(check("6 Gram determinant and spectrum, n = 2..5", None, || {
        let (mut det_err, mut eig_err) = (0.0f64, 0.0f64);
        for n in 2..=5usize {
            let nf = n as f64;
            let b = an_star_basis(n)?;
            det_err = det_err.max(rel(b.det_gram(), (nf + 1.0).powi(2 * n as i32 - 1)));
            let mut ev: Vec<f64> = b.gram().symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            eig_err = eig_err.max(rel(ev[0], nf + 1.0));
            for &l in &ev[1..] {
                eig_err = eig_err.max(rel(l, (nf + 1.0).powi(2)));
            }
        }
        Ok((
            det_err <= 1e-9 && eig_err <= 1e-9,
            format!("det rel err {det_err:.2e}, eigen rel err {eig_err:.2e}"),
        ))
    }));

    let suite_start = Instant::now();
    lines.push(check("7a ratio >= 1 for simplex and box momenta", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = f64::INFINITY;
        let mut count = 0;
        for (n, instances) in [(2usize, 50), (3, 20)] {
            let simplex = regular_simplex(n, Normalization::UnitEdge)?;
            for _ in 0..instances {
                let k = random_hull(n, 4 * n, &mut rng)?;
                let boxed = random_box(n, &mut rng)?;
                for t in [&simplex, &boxed] {
                    worst = worst.min(ratio_from_xi(&k, t, xi(&k, t)?));
                    count += 1;
                }
            }
        }
        Ok((worst >= 1.0 - 1e-6, format!("{count} pairs, min ratio {worst:.6}")))
    }));

    lines.push(check("7b ratio >= 1 for segment x segment momenta", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let seg = |a: f64, b: f64| Polytope::from_vertices(1, &[DVector::from_element(1, a), DVector::from_element(1, b)]);
        let t = cartesian_product(&seg(-0.5, 1.0)?, &seg(-1.0, 1.0)?)?;
        let mut worst = f64::INFINITY;
        for _ in 0..10 {
            let k = random_hull(2, 8, &mut rng)?;
            worst = worst.min(ratio_from_xi(&k, &t, xi(&k, &t)?));
        }
        Ok((worst >= 1.0 - 1e-6, format!("10 bodies, min ratio {worst:.6}")))
    }));

    lines.push(check("7c solver agrees with the penalty oracle", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut worst = 0.0f64;
        for i in 0..50u64 {
            let k = random_hull(2, 7, &mut rng)?;
            let t = random_gauge_body(2, 6, &mut rng)?;
            let s = xi(&k, &t)?;
            let o = xi_bruteforce(&k, &t, &OracleConfig { seed: i, ..Default::default() })?.length;
            worst = worst.max(rel(o, s));
        }
        Ok((worst <= 1e-4, format!("50 pairs, worst rel gap {worst:.2e}")))
    }));

    lines.push(check("7d admissible polylines are covered by P_n", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut margin = f64::INFINITY;
        for n in [2usize, 3] {
            for _ in 0..100 {
                let q = random_admissible_polyline(n, (n + 1) as f64, &mut rng)?;
                margin = margin.min(cover_with_permutohedron(&q, n)?.margin);
            }
        }
        Ok((margin >= -1e-9, format!("200 polylines, min margin {margin:.2e}")))
    }));

    lines.push(check("7e lattice translates always meet the lattice", None, || {
        let t2 = polar_simplex(2, Normalization::UnitCircumradius)?;
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut cases = vec![
            (voronoi_cell_pn(2)?, simplex_lattice(2)?),
            (voronoi_cell_pn(3)?, simplex_lattice(3)?),
        ];
        for _ in 0..3 {
            let k = random_hull(2, 7, &mut rng)?;
            let s = 3.0 / xi(&k, &t2)?;
            cases.push((k.scaled(s), simplex_lattice(2)?));
        }
        let mut misses = 0;
        let mut ready = true;
        for (i, (k, lat)) in cases.iter().enumerate() {
            let r = lattice_avoidance_test(k, lat, 1000, i as u64)?;
            ready &= r.precondition_holds && r.samples == 1000;
            misses += r.misses;
        }
        Ok((
            ready && misses == 0,
            format!("{} cases x 1000 translates, {misses} misses", cases.len()),
        ))
    }));

    lines.push(check("7f scaling, monotonicity, affine invariance", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let k = random_hull(2, 7, &mut rng)?;
            let t = random_gauge_body(2, 6, &mut rng)?;
            let base = xi(&k, &t)?;
            let lambda = rng.random_range(0.3..3.0);
            worst = worst.max(rel(xi(&k.scaled(lambda), &t)?, lambda * base));
            worst = worst.max(rel(xi(&k, &t.scaled(lambda))?, lambda * base));
            // K ⊂ K': ξ(K) ≤ ξ(K')
            let mut pts = k.vertices().to_vec();
            pts.push(DVector::from_fn(2, |_, _| rng.random_range(-1.4..1.4)));
            let bigger = Polytope::from_vertices(2, &pts)?;
            worst = worst.max(((base - xi(&bigger, &t)?) / base).max(0.0));
            let m = DMatrix::<f64>::from_fn(2, 2, |i, j| f64::from(u8::from(i == j)) + rng.random_range(-0.6..0.6));
            let m_inv_t = m.clone().try_inverse().expect("near identity").transpose();
            let (ka, ta) = (k.linear_image(&m)?, t.linear_image(&m_inv_t)?);
            worst = worst.max(rel(xi(&ka, &ta)?, base));
        }
        Ok((worst <= 1e-6, format!("worst deviation {worst:.2e}")))
    }));
    let suite_time = suite_start.elapsed();
    println!("property suite total {suite_time:.2?} (limit 10 min)");

    let in_budget = suite_time <= secs(600);
    if !in_budget {
        println!("FAIL property suite over the 10 min budget");
    }
    let failed: Vec<&str> = lines.iter().filter(|l| !l.pass).map(|l| l.name).collect();
    if !failed.is_empty() {
        println!("failed: {failed:?}");
    }
    in_budget && failed.is_empty()
}

/// The n = 4 equality case; slow, so only run on request.
fn permutohedron_four_is_an_equality_case() -> bool {
    let line = check("P4 xi = 25 and ratio = 1", None, || {
        let (k, t) = (permutohedron(4)?, polar_simplex(4, Normalization::UnitEdge)?);
        let v = xi(&k, &t)?;
        let r = ratio_from_xi(&k, &t, v);
        Ok((rel(v, 25.0) <= 1e-6 && rel(r, 1.0) <= 1e-6, format!("xi = {v:.12}, ratio = {r:.12}")))
    });
    line.pass
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    // cargo test --workspace -- --list, filters and similar flags
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let only_ignored = args.iter().any(|a| a == "--ignored");
    let with_ignored = only_ignored || args.iter().any(|a| a == "--include-ignored");
    let mut ok = true;
    if !only_ignored {
        ok &= acceptance();
    }
    if with_ignored {
        ok &= permutohedron_four_is_an_equality_case();
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
