//! The reproduction suite and its JSON/CSV/SVG output.
//!
//! [`run_suite`] evaluates every reference value and property check and
//! collects one [`CaseRow`] per case. Rows are sorted by case name. Wall
//! times live in their own column (CSV) or metadata block (JSON) so that the
//! remaining output is byte-identical across runs with the same seed.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::billiards::{
    polyline_length, ratio_from_xi, verify_reflection, xi_bruteforce, xi_solver, ClosedPolyline,
    OracleConfig, TrajectoryResult,
};
use crate::bodies::{
    cartesian_product, crosspolytope, cube, parallelotope, permutohedron, polar_simplex, random_gauge_body,
    random_hull, regular_simplex, simplex_vertices, voronoi_cell_pn, HannerExpr, Normalization,
};
use crate::lattice::{
    an_star_basis, cover_with_permutohedron, delaunay_cycle, delaunay_simplices, lattice_avoidance_test,
    simplex_lattice, voronoi_cell,
};
use crate::polytope::{Point, Polytope};
use crate::{Error, Result};

/// How a computed value is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `|computed − expected| ≤ tol·|expected|`.
    Relative,
    /// `|computed − expected| ≤ tol`.
    Absolute,
    /// `computed ≥ expected − tol`.
    AtLeast,
    /// `computed ≤ expected + tol`.
    AtMost,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseRow {
    pub case: String,
    pub computed: f64,
    pub expected: f64,
    pub rel_err: f64,
    pub tol: f64,
    pub check: Check,
    pub pass: bool,
    /// What the expected value asserts.
    pub claim: String,
    #[serde(skip)]
    pub ms: u128,
}

impl CaseRow {
    pub fn new(case: &str, computed: f64, expected: f64, tol: f64, check: Check, claim: &str) -> Self {
        let diff = computed - expected;
        let rel_err = if expected != 0.0 { diff.abs() / expected.abs() } else { diff.abs() };
        let pass = computed.is_finite()
            && match check {
                Check::Relative => diff.abs() <= tol * expected.abs(),
                Check::Absolute => diff.abs() <= tol,
                Check::AtLeast => diff >= -tol,
                Check::AtMost => diff <= tol,
            };
        Self {
            case: case.to_string(),
            computed,
            expected,
            rel_err,
            tol,
            check,
            pass,
            claim: claim.to_string(),
            ms: 0,
        }
    }

    fn failed(case: &str, err: &Error, claim: &str) -> Self {
        let mut row = Self::new(case, f64::NAN, 0.0, 0.0, Check::Absolute, claim);
        row.claim = format!("{claim} (error: {err})");
        row
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Size of the random 2-D corpora; the other corpora scale with it.
    pub random_cases: usize,
    /// Case-name prefixes to run; empty runs everything.
    pub only: Vec<String>,
    pub oracle_restarts: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            random_cases: 50,
            only: Vec::new(),
            oracle_restarts: 200,
        }
    }
}

impl SuiteConfig {
    fn wants(&self, prefix: &str) -> bool {
        self.only.is_empty()
            || self
                .only
                .iter()
                .any(|o| o.starts_with(prefix) || prefix.starts_with(o.as_str()))
    }

    fn keeps(&self, case: &str) -> bool {
        self.only.is_empty() || self.only.iter().any(|o| case.starts_with(o.as_str()))
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<CaseRow>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    all_passed: bool,
    rows: &'a [CaseRow],
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<Metadata>,
}

#[derive(Serialize)]
struct Metadata {
    wall_ms: Vec<(String, u128)>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// `case,computed,expected,rel_err,tol,status,ms`.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from("case,computed,expected,rel_err,tol,status,ms\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.case,
                crate::io::format_f64(r.computed),
                crate::io::format_f64(r.expected),
                crate::io::format_f64(r.rel_err),
                crate::io::format_f64(r.tol),
                if r.pass { "pass" } else { "fail" },
                if with_timing { r.ms } else { 0 }
            );
        }
        out
    }

    /// Rows plus an optional metadata block with wall times.
    pub fn to_json(&self, with_timing: bool) -> Result<String> {
        let metadata = with_timing.then(|| Metadata {
            wall_ms: self.rows.iter().map(|r| (r.case.clone(), r.ms)).collect(),
        });
        crate::io::to_json_string(&ReportJson {
            all_passed: self.all_passed(),
            rows: &self.rows,
            metadata,
        })
    }
}

struct Collector<'a> {
    config: &'a SuiteConfig,
    rows: Vec<CaseRow>,
}

impl Collector<'_> {
    /// Times `f` and records its rows, or one failed row if it errors.
    fn run(&mut self, case: &str, claim: &str, f: impl FnOnce() -> Result<Vec<CaseRow>>) {
        if !self.config.wants(case) {
            return;
        }
        let start = Instant::now();
        let rows = f().unwrap_or_else(|e| vec![CaseRow::failed(case, &e, claim)]);
        let ms = start.elapsed().as_millis();
        let count = rows.len().max(1) as u128;
        for mut r in rows {
            if self.config.keeps(&r.case) {
                r.ms = ms / count;
                self.rows.push(r);
            }
        }
    }
}

/// Runs the suite. Individual failures are recorded as failing rows.
pub fn run_suite(config: &SuiteConfig) -> SuiteReport {
    let mut c = Collector {
        config,
        rows: Vec::new(),
    };
    let rc = config.random_cases;
    xi_cases(&mut c);
    volume_cases(&mut c);
    viterbo_cases(&mut c);
    gram_cases(&mut c);
    lattice_cases(&mut c, rc);
    property_cases(&mut c, rc);
    c.rows.sort_by(|a, b| a.case.cmp(&b.case));
    SuiteReport { rows: c.rows }
}

fn one(row: CaseRow) -> Result<Vec<CaseRow>> {
    Ok(vec![row])
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Hanner polytopes used by the suite, by name.
pub fn hanner_cases() -> Vec<(&'static str, HannerExpr)> {
    use HannerExpr::{FreeSum, Product, Segment};
    vec![
        ("square", HannerExpr::cube(2)),
        ("cube3", HannerExpr::cube(3)),
        ("cross3", HannerExpr::crosspolytope(3)),
        ("cube4", HannerExpr::cube(4)),
        ("cross4", HannerExpr::crosspolytope(4)),
        ("square_plus_segment", FreeSum(vec![HannerExpr::cube(2), Segment])),
        ("diamond_times_segment", Product(vec![HannerExpr::crosspolytope(2), Segment])),
        (
            "square_plus_segment_times_segment",
            Product(vec![FreeSum(vec![HannerExpr::cube(2), Segment]), Segment]),
        ),
        (
            "square_plus_square",
            FreeSum(vec![HannerExpr::cube(2), HannerExpr::cube(2)]),
        ),
        (
            "diamond_times_segment_plus_segment",
            FreeSum(vec![Product(vec![HannerExpr::crosspolytope(2), Segment]), Segment]),
        ),
    ]
}

fn xi_cases(c: &mut Collector) {
    let claim_p = "shortest trajectory of the permutohedron in the polar-simplex gauge is (n+1)^2";
    for n in [2usize, 3] {
        let case = format!("xi/permutohedron_polar_simplex/n{n}");
        c.run(&case, claim_p, || {
            let k = permutohedron(n)?;
            let t = polar_simplex(n, Normalization::UnitEdge)?;
            let xi = xi_solver(&k, &t)?.length;
            one(CaseRow::new(&case, xi, ((n + 1) * (n + 1)) as f64, 1e-6, Check::Relative, claim_p))
        });
    }
    let claim_h = "Hanner polytopes have shortest trajectory 4 in the gauge of their polar";
    for (name, expr) in hanner_cases() {
        let case = format!("xi/hanner/{name}");
        c.run(&case, claim_h, || {
            let h = expr.build()?;
            let xi = xi_solver(&h, &h.polar()?)?.length;
            one(CaseRow::new(&case, xi, 4.0, 1e-6, Check::Relative, claim_h))
        });
    }
    let claim_v = "the Voronoi cell p_n of the simplex lattice has shortest trajectory n+1";
    for n in [2usize, 3] {
        let case = format!("xi/voronoi_cell_simplex/n{n}");
        c.run(&case, claim_v, || {
            let k = voronoi_cell_pn(n)?;
            let t = polar_simplex(n, Normalization::UnitCircumradius)?;
            let xi = xi_solver(&k, &t)?.length;
            one(CaseRow::new(&case, xi, (n + 1) as f64, 1e-6, Check::Relative, claim_v))
        });
    }
    let claim_r = "the minimizer found for the hexagon satisfies the reflection law";
    c.run("xi/reflection/hexagon", claim_r, || {
        let k = permutohedron(2)?;
        let t = polar_simplex(2, Normalization::UnitEdge)?;
        let r = xi_solver(&k, &t)?;
        let ok = verify_reflection(&r, &k, &t)?.feasible;
        one(CaseRow::new(
            "xi/reflection/hexagon",
            f64::from(u8::from(ok)),
            1.0,
            0.0,
            Check::Absolute,
            claim_r,
        ))
    });
}

fn volume_cases(c: &mut Collector) {
    for n in 1..=5usize {
        let nf = n as f64;
        let case = format!("volume/permutohedron/n{n}");
        let claim = "vol P_n = (n+1)^(n-1/2) / 2^(n/2)";
        c.run(&case, claim, || {
            let v = permutohedron(n)?.volume();
            one(CaseRow::new(
                &case,
                v,
                (nf + 1.0).powf(nf - 0.5) / 2f64.powf(nf / 2.0),
                1e-6,
                Check::Relative,
                claim,
            ))
        });
        let case = format!("volume/simplex/n{n}");
        let claim = "vol of the unit-edge simplex = sqrt(n+1) / (2^(n/2) n!)";
        c.run(&case, claim, || {
            let v = regular_simplex(n, Normalization::UnitEdge)?.volume();
            let expected = (nf + 1.0).sqrt() / (2f64.powf(nf / 2.0) * factorial(n));
            one(CaseRow::new(&case, v, expected, 1e-6, Check::Relative, claim))
        });
        let case = format!("volume/simplex_mahler/n{n}");
        let claim = "vol(simplex) vol(polar simplex) = (n+1)^(n+1) / (n!)^2";
        c.run(&case, claim, || {
            let s = regular_simplex(n, Normalization::UnitEdge)?;
            let v = s.volume() * s.polar()?.volume();
            let expected = (nf + 1.0).powf(nf + 1.0) / factorial(n).powi(2);
            one(CaseRow::new(&case, v, expected, 1e-6, Check::Relative, claim))
        });
    }
    for n in [2usize, 3] {
        let case = format!("volume/voronoi_cell_chain/n{n}");
        let claim = "vol(p_n) vol(simplex) n! / (n+1)^n = 1";
        c.run(&case, claim, || {
            let v = voronoi_cell_pn(n)?.volume() * polar_simplex(n, Normalization::UnitCircumradius)?.volume();
            let value = v * factorial(n) / ((n + 1) as f64).powi(n as i32);
            one(CaseRow::new(&case, value, 1.0, 1e-6, Check::Relative, claim))
        });
    }
}

fn viterbo_cases(c: &mut Collector) {
    let claim = "permutohedron x polar simplex is an equality case";
    for n in [2usize, 3] {
        let case = format!("viterbo/permutohedron_polar_simplex/n{n}");
        c.run(&case, claim, || {
            let k = permutohedron(n)?;
            let t = polar_simplex(n, Normalization::UnitEdge)?;
            let xi = xi_solver(&k, &t)?.length;
            one(CaseRow::new(&case, ratio_from_xi(&k, &t, xi), 1.0, 1e-6, Check::Relative, claim))
        });
    }
    let claim = "Hanner polytope x polar is an equality case";
    for (name, expr) in hanner_cases() {
        let case = format!("viterbo/hanner/{name}");
        c.run(&case, claim, || {
            let h = expr.build()?;
            let t = h.polar()?;
            let xi = xi_solver(&h, &t)?.length;
            one(CaseRow::new(&case, ratio_from_xi(&h, &t, xi), 1.0, 1e-6, Check::Relative, claim))
        });
    }
}

fn gram_cases(c: &mut Collector) {
    for n in 2..=5usize {
        let nf = n as f64;
        let case = format!("gram/det/n{n}");
        let claim = "det Gram(A_n*) = (n+1)^(2n-1)";
        c.run(&case, claim, || {
            let det = an_star_basis(n)?.det_gram();
            one(CaseRow::new(&case, det, (nf + 1.0).powi(2 * n as i32 - 1), 1e-9, Check::Relative, claim))
        });
        let case = format!("gram/eigen/n{n}");
        let claim = "Gram(A_n*) has eigenvalue n+1 once and (n+1)^2 with multiplicity n-1";
        c.run(&case, claim, || {
            let g = an_star_basis(n)?.gram().clone();
            let mut ev: Vec<f64> = g.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            let lo = CaseRow::new(&format!("{case}/simple"), ev[0], nf + 1.0, 1e-9, Check::Relative, claim);
            let worst = ev[1..]
                .iter()
                .copied()
                .max_by(|a, b| (a - (nf + 1.0).powi(2)).abs().total_cmp(&(b - (nf + 1.0).powi(2)).abs()))
                .unwrap_or(f64::NAN);
            let hi = CaseRow::new(&format!("{case}/multiple"), worst, (nf + 1.0).powi(2), 1e-9, Check::Relative, claim);
            Ok(vec![lo, hi])
        });
        let case = format!("gram/covolume/n{n}");
        let claim = "covolume of A_n* = 2^(n/2) vol P_n";
        c.run(&case, claim, || {
            let cov = an_star_basis(n)?.covolume();
            let v = 2f64.powf(nf / 2.0) * permutohedron(n)?.volume();
            one(CaseRow::new(&case, cov, v, 1e-6, Check::Relative, claim))
        });
    }
}

/// Steps along the unit-edge simplex directions with total `total` per
/// direction, in random order and pieces, from a random start.
pub fn random_admissible_polyline<R: Rng + ?Sized>(n: usize, total: f64, rng: &mut R) -> Result<ClosedPolyline> {
    let dirs = simplex_vertices(n, Normalization::UnitEdge);
    let mut steps = Vec::new();
    for k in 0..=n {
        let pieces = rng.random_range(1..=4);
        let w: Vec<f64> = (0..pieces).map(|_| rng.random_range(0.1..1.0)).collect();
        let sum: f64 = w.iter().sum();
        steps.extend(w.into_iter().map(|x| (k, x / sum * total)));
    }
    for i in (1..steps.len()).rev() {
        steps.swap(i, rng.random_range(0..=i));
    }
    let mut pts = vec![DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0))];
    for &(k, len) in &steps[..steps.len() - 1] {
        let next = pts.last().expect("nonempty") + &dirs[k] * len;
        pts.push(next);
    }
    ClosedPolyline::new(pts)
}

fn lattice_cases(c: &mut Collector, rc: usize) {
    for n in 1..=4usize {
        let case = format!("lattice/voronoi_is_scaled_permutohedron/n{n}");
        let claim = "the Voronoi cell of A_n* is sqrt(2) P_n";
        c.run(&case, claim, || {
            let v = voronoi_cell(&an_star_basis(n)?)?;
            let p = permutohedron(n)?.scaled(2f64.sqrt());
            let d = crate::bodies::vertex_set_distance(v.vertices(), p.vertices());
            one(CaseRow::new(&case, d, 0.0, 1e-9, Check::AtMost, claim))
        });
    }
    for n in [2usize, 3] {
        let case = format!("lattice/delaunay_cycle_length/n{n}");
        let claim = "every Delaunay cycle closes with length n+1 in the simplex gauge";
        c.run(&case, claim, || {
            let dirs = simplex_vertices(n, Normalization::UnitCircumradius);
            let t = polar_simplex(n, Normalization::UnitCircumradius)?;
            let sims = delaunay_simplices(n)?;
            let mut worst = 0.0f64;
            for s in &sims {
                let l = polyline_length(&t, &delaunay_cycle(s, &dirs)?)?;
                worst = worst.max((l - (n + 1) as f64).abs());
            }
            Ok(vec![
                CaseRow::new(&case, worst, 0.0, 1e-9, Check::AtMost, claim),
                CaseRow::new(
                    &format!("lattice/delaunay_classes/n{n}"),
                    sims.len() as f64,
                    factorial(n),
                    0.0,
                    Check::Absolute,
                    "n! Delaunay simplex classes",
                ),
            ])
        });
    }
    for n in [2usize, 3] {
        let case = format!("lattice/cover_margin/n{n}");
        let claim = "admissible polylines are covered by a translate of P_n";
        c.run(&case, claim, || {
            let mut rng = c.config.rng(100 + n as u64);
            let mut margin = f64::INFINITY;
            let mut fit = 0.0f64;
            for _ in 0..2 * rc {
                let q = random_admissible_polyline(n, (n + 1) as f64, &mut rng)?;
                let r = cover_with_permutohedron(&q, n)?;
                margin = margin.min(r.margin);
                fit = fit.max(r.fitting_scale);
            }
            Ok(vec![
                CaseRow::new(&case, margin, 0.0, 1e-9, Check::AtLeast, claim),
                CaseRow::new(
                    &format!("lattice/cover_fitting_scale/n{n}"),
                    fit,
                    1.0,
                    1e-9,
                    Check::AtMost,
                    claim,
                ),
            ])
        });
        let case = format!("lattice/cover_shrunk/n{n}");
        let claim = "shorter admissible polylines fit a smaller homothet of P_n";
        c.run(&case, claim, || {
            let mut rng = c.config.rng(200 + n as u64);
            let mut fit = 0.0f64;
            for _ in 0..rc {
                let q = random_admissible_polyline(n, 0.9 * (n + 1) as f64, &mut rng)?;
                fit = fit.max(cover_with_permutohedron(&q, n)?.fitting_scale);
            }
            one(CaseRow::new(&case, fit, 0.9, 1e-9, Check::AtMost, claim))
        });
    }
    let claim = "every translate of a body covering all Delaunay simplices meets the lattice";
    c.run("lattice/avoidance/voronoi_cell_n2", claim, || {
        let r = lattice_avoidance_test(&voronoi_cell_pn(2)?, &simplex_lattice(2)?, 1000, c.config.seed)?;
        avoidance_rows("lattice/avoidance/voronoi_cell_n2", &r, claim)
    });
    c.run("lattice/avoidance/voronoi_cell_n3", claim, || {
        let r = lattice_avoidance_test(&voronoi_cell_pn(3)?, &simplex_lattice(3)?, 1000, c.config.seed)?;
        avoidance_rows("lattice/avoidance/voronoi_cell_n3", &r, claim)
    });
    c.run("lattice/avoidance/random_hull", claim, || {
        let mut rng = c.config.rng(300);
        let t = polar_simplex(2, Normalization::UnitCircumradius)?;
        let lat = simplex_lattice(2)?;
        let mut misses = 0;
        let mut ok = true;
        for i in 0..3u64 {
            let k = random_hull(2, 7, &mut rng)?;
            let xi = xi_solver(&k, &t)?.length;
            let r = lattice_avoidance_test(&k.scaled(3.0 / xi), &lat, 1000, c.config.seed + i)?;
            ok &= r.precondition_holds && r.samples == 1000;
            misses += r.misses;
        }
        let mut rows = vec![CaseRow::new(
            "lattice/avoidance/random_hull",
            misses as f64,
            0.0,
            0.0,
            Check::Absolute,
            claim,
        )];
        rows.push(CaseRow::new(
            "lattice/avoidance/random_hull_precondition",
            f64::from(u8::from(ok)),
            1.0,
            0.0,
            Check::Absolute,
            "bodies scaled to shortest trajectory n+1 cover every Delaunay simplex",
        ));
        Ok(rows)
    });
    let claim = "a tiny body fails the covering precondition and sampling is skipped";
    c.run("lattice/avoidance/tiny_body", claim, || {
        let r = lattice_avoidance_test(&crosspolytope(2)?.scaled(0.05), &simplex_lattice(2)?, 1000, 0)?;
        let skipped = !r.precondition_holds && r.samples == 0;
        one(CaseRow::new(
            "lattice/avoidance/tiny_body",
            f64::from(u8::from(skipped)),
            1.0,
            0.0,
            Check::Absolute,
            claim,
        ))
    });
}

fn avoidance_rows(case: &str, r: &crate::lattice::AvoidanceReport, claim: &str) -> Result<Vec<CaseRow>> {
    let misses = if r.precondition_holds && r.samples > 0 {
        r.misses as f64
    } else {
        f64::NAN
    };
    one(CaseRow::new(case, misses, 0.0, 0.0, Check::Absolute, claim))
}

/// Smallest ratio over a corpus, or the first error.
fn min_ratio(pairs: impl Iterator<Item = Result<(Polytope, Polytope)>>) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for p in pairs {
        let (k, t) = p?;
        let xi = xi_solver(&k, &t)?.length;
        worst = worst.min(ratio_from_xi(&k, &t, xi));
    }
    Ok(worst)
}

fn random_parallelotope<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Polytope> {
    loop {
        let m = DMatrix::from_fn(n, n, |i, j| {
            f64::from(u8::from(i == j)) + rng.random_range(-0.5..0.5)
        });
        if m.determinant().abs() > 0.2 {
            return parallelotope(&m);
        }
    }
}

fn property_cases(c: &mut Collector, rc: usize) {
    let claim = "the conjectured inequality holds for a simplex in the momentum factor";
    for (n, count, salt) in [(2usize, rc, 1u64), (3, 2 * rc / 5, 2)] {
        let case = format!("property/ratio_simplex/n{n}");
        c.run(&case, claim, || {
            let mut rng = c.config.rng(salt);
            let t = regular_simplex(n, Normalization::UnitEdge)?;
            let worst = min_ratio((0..count).map(|_| Ok((random_hull(n, 4 * n, &mut rng)?, t.clone()))))?;
            one(CaseRow::new(&case, worst, 1.0, 1e-6, Check::AtLeast, claim))
        });
    }
    let claim = "the conjectured inequality holds for a parallelotope in the momentum factor";
    for (n, count, salt) in [(2usize, rc, 3u64), (3, 2 * rc / 5, 4)] {
        let case = format!("property/ratio_parallelotope/n{n}");
        c.run(&case, claim, || {
            let mut rng = c.config.rng(salt);
            let worst = min_ratio((0..count).map(|_| {
                let k = random_hull(n, 4 * n, &mut rng)?;
                Ok((k, random_parallelotope(n, &mut rng)?))
            }))?;
            one(CaseRow::new(&case, worst, 1.0, 1e-6, Check::AtLeast, claim))
        });
    }
    let claim = "the conjectured inequality holds for a product of a segment simplex and a segment";
    c.run("property/ratio_simplex_times_segment", claim, || {
        let mut rng = c.config.rng(5);
        let seg = |a: f64, b: f64| {
            Polytope::from_vertices(1, &[DVector::from_element(1, a), DVector::from_element(1, b)])
        };
        let t = cartesian_product(&seg(-0.5, 1.0)?, &seg(-1.0, 1.0)?)?;
        let worst = min_ratio((0..rc.div_ceil(5)).map(|_| Ok((random_hull(2, 8, &mut rng)?, t.clone()))))?;
        one(CaseRow::new("property/ratio_simplex_times_segment", worst, 1.0, 1e-6, Check::AtLeast, claim))
    });
    let claim = "cage solver and penalty oracle agree";
    c.run("property/solver_vs_oracle", claim, || {
        let mut rng = c.config.rng(6);
        let mut worst = 0.0f64;
        for i in 0..rc {
            let k = random_hull(2, 7, &mut rng)?;
            let t = random_gauge_body(2, 6, &mut rng)?;
            let s = xi_solver(&k, &t)?.length;
            let cfg = OracleConfig {
                m_max: None,
                restarts: c.config.oracle_restarts,
                seed: c.config.seed.wrapping_add(i as u64),
            };
            let o = xi_bruteforce(&k, &t, &cfg)?.length;
            worst = worst.max((o - s).abs() / s);
        }
        one(CaseRow::new("property/solver_vs_oracle", worst, 0.0, 1e-4, Check::AtMost, claim))
    });
    c.run("property/invariants", "scaling, monotonicity and affine invariance", || {
        invariant_rows(c.config.rng(7), rc)
    });
    let claim = "l1 trajectories obey xi <= 2 (n! vol K)^(1/n), with equality on the crosspolytope";
    c.run("property/isoperimetric", claim, || {
        let mut rows = Vec::new();
        for n in [2usize, 3] {
            let r = crate::billiards::isoperimetric_check(&crosspolytope(n)?)?;
            rows.push(CaseRow::new(
                &format!("property/isoperimetric/crosspolytope_n{n}"),
                r.xi,
                r.bound,
                1e-6,
                Check::Relative,
                claim,
            ));
        }
        let r = crate::billiards::isoperimetric_check(&cube(2)?)?;
        rows.push(CaseRow::new(
            "property/isoperimetric/square_slack",
            r.slack,
            0.0,
            -1e-3,
            Check::AtLeast,
            "the square is not an equality case",
        ));
        let mut rng = c.config.rng(8);
        let mut worst = f64::INFINITY;
        for _ in 0..rc {
            let r = crate::billiards::isoperimetric_check(&random_hull(2, 7, &mut rng)?)?;
            worst = worst.min(r.slack / r.bound);
        }
        rows.push(CaseRow::new(
            "property/isoperimetric/random_hulls",
            worst,
            0.0,
            1e-6,
            Check::AtLeast,
            claim,
        ));
        Ok(rows)
    });
}

fn invariant_rows(mut rng: ChaCha8Rng, rc: usize) -> Result<Vec<CaseRow>> {
    let mut scale_err = 0.0f64;
    let mut mono_violation = f64::NEG_INFINITY;
    let mut affine_err = 0.0f64;
    let mut order_violation = 0.0f64;
    for _ in 0..rc.div_ceil(5) {
        let k = random_hull(2, 7, &mut rng)?;
        let t = random_gauge_body(2, 6, &mut rng)?;
        let xi = xi_solver(&k, &t)?.length;
        for lambda in [0.5, 2.0] {
            let a = xi_solver(&k.scaled(lambda), &t)?.length;
            let b = xi_solver(&k, &t.scaled(lambda))?.length;
            scale_err = scale_err.max((a / (lambda * xi) - 1.0).abs()).max((b / (lambda * xi) - 1.0).abs());
        }
        // a larger body: add random points around K
        let mut pts: Vec<Point> = k.vertices().to_vec();
        pts.extend((0..3).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.3..1.3))));
        let bigger = Polytope::from_vertices(2, &pts)?;
        let xb = xi_solver(&bigger, &t)?.length;
        mono_violation = mono_violation.max((xi - xb) / xi);
        let m = loop {
            let m = DMatrix::<f64>::from_fn(2, 2, |_, _| rng.random_range(-1.5..1.5));
            if m.determinant().abs() > 0.3 {
                break m;
            }
        };
        let inv_t = m.clone().try_inverse().ok_or(Error::SingularMatrix)?.transpose();
        let (ka, ta) = (k.linear_image(&m)?, t.linear_image(&inv_t)?);
        let r0 = ratio_from_xi(&k, &t, xi);
        let r1 = ratio_from_xi(&ka, &ta, xi_solver(&ka, &ta)?.length);
        affine_err = affine_err.max((r1 / r0 - 1.0).abs());
        // two-bounce bound: the best width chord is never shorter than ξ
        let width = width_chord(&k, &t)?;
        order_violation = order_violation.max((xi - width) / xi);
    }
    Ok(vec![
        CaseRow::new("property/invariants/scaling", scale_err, 0.0, 1e-6, Check::AtMost, "xi is 1-homogeneous in K and in T"),
        CaseRow::new("property/invariants/monotone", mono_violation, 0.0, 1e-9, Check::AtMost, "xi is monotone in K"),
        CaseRow::new("property/invariants/affine", affine_err, 0.0, 1e-6, Check::AtMost, "the ratio is invariant under (A K, A^-T T)"),
        CaseRow::new("property/invariants/two_bounce", order_violation, 0.0, 1e-9, Check::AtMost, "xi is at most the best two-bounce length"),
    ])
}

/// Best two-bounce length over antipodal facet/vertex chords, found by
/// sampling directions; an upper bound used only as a sanity check.
fn width_chord(k: &Polytope, t: &Polytope) -> Result<f64> {
    let mut best = f64::INFINITY;
    for a in k.vertices() {
        for b in k.vertices() {
            if (a - b).norm() <= 1e-12 {
                continue;
            }
            let d = b - a;
            let cert = crate::polytope::fitting_scale(&[a.clone(), b.clone()], k)?;
            if cert.scale <= 0.0 {
                continue;
            }
            let len = (t.support(d.as_slice()) + t.support((-&d).as_slice())) / cert.scale;
            best = best.min(len);
        }
    }
    Ok(best)
}

/// 800×800 drawing of `K`, the gauge unit ball `T°` centred at the vertex
/// centroid of `K`, the polyline with arrowheads, and the facet normals at
/// the bounce points.
pub fn export_svg(result: &TrajectoryResult, k: &Polytope, t: &Polytope) -> Result<String> {
    if k.dim() != 2 {
        return Err(Error::UnsupportedDimension(k.dim()));
    }
    if result.polyline.len() < 2 {
        return Err(Error::Precondition("nothing to draw".into()));
    }
    let ball = t.polar()?;
    let c = k.centroid();
    let ring = |p: &Polytope, shift: &Point| -> Vec<Point> {
        let mut v: Vec<Point> = p.vertices().iter().map(|x| x + shift).collect();
        let center = v.iter().fold(DVector::zeros(2), |a, x| a + x) / v.len() as f64;
        v.sort_by(|a, b| {
            let ta = (a[1] - center[1]).atan2(a[0] - center[0]);
            let tb = (b[1] - center[1]).atan2(b[0] - center[0]);
            ta.total_cmp(&tb)
        });
        v
    };
    let k_ring = ring(k, &DVector::zeros(2));
    let b_ring = ring(&ball, &c);
    let pts = result.polyline.points();
    let all: Vec<&Point> = k_ring.iter().chain(&b_ring).chain(pts).collect();
    let (mut lo, mut hi) = (DVector::from_element(2, f64::INFINITY), DVector::from_element(2, f64::NEG_INFINITY));
    for p in &all {
        lo = lo.zip_map(p, f64::min);
        hi = hi.zip_map(p, f64::max);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = 680.0 / span;
    let mid = (&lo + &hi) / 2.0;
    let xy = |p: &Point| -> (f64, f64) { (400.0 + (p[0] - mid[0]) * scale, 400.0 - (p[1] - mid[1]) * scale) };
    let poly = |ring: &[Point]| -> String {
        ring.iter()
            .map(|p| {
                let (x, y) = xy(p);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    s.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n");
    s.push_str("<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"8\" markerHeight=\"8\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#c0392b\"/></marker></defs>\n");
    s.push_str("<rect width=\"800\" height=\"800\" fill=\"white\"/>\n");
    let _ = writeln!(s, "<polygon points=\"{}\" fill=\"#eef3fb\" stroke=\"#2c3e50\" stroke-width=\"2\"/>", poly(&k_ring));
    let _ = writeln!(
        s,
        "<polygon points=\"{}\" fill=\"none\" stroke=\"#7f8c8d\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>",
        poly(&b_ring)
    );
    let m = pts.len();
    for i in 0..m {
        let (a, b) = (&pts[i], &pts[(i + 1) % m]);
        if (b - a).norm() <= 1e-12 {
            continue;
        }
        let (x1, y1) = xy(a);
        let (x2, y2) = xy(b);
        let _ = writeln!(
            s,
            "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"#c0392b\" stroke-width=\"2.5\" marker-end=\"url(#arrow)\"/>"
        );
    }
    for (p, &j) in pts.iter().zip(&result.facet_assignment) {
        let Some(f) = k.facets().get(j) else { continue };
        let (x1, y1) = xy(p);
        let tip = p + &f.normal * (40.0 / scale);
        let (x2, y2) = xy(&tip);
        let _ = writeln!(
            s,
            "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"#27ae60\" stroke-width=\"1.5\"/>"
        );
        let _ = writeln!(s, "<circle cx=\"{x1:.3}\" cy=\"{y1:.3}\" r=\"4\" fill=\"#c0392b\"/>");
    }
    let _ = writeln!(
        s,
        "<text x=\"20\" y=\"30\" font-family=\"monospace\" font-size=\"16\">length {:.9}</text>",
        result.length
    );
    s.push_str("</svg>\n");
    Ok(s)
}
