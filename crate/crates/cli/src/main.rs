//! `mbill`: shortest Minkowski billiard trajectories from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use minkowski_billiards::billiards::{
    ratio_from_xi, verify_reflection, xi_bruteforce, xi_solver, ClosedPolyline, OracleConfig, TrajectoryResult,
};
use minkowski_billiards::bodies::{BodyRecipe, HannerExpr, Normalization};
use minkowski_billiards::io::{parse_body, to_json_string, BodyJson};
use minkowski_billiards::lattice::{
    an_star_basis, cover_with_permutohedron, delaunay_cycle, delaunay_simplices, voronoi_cell,
};
use minkowski_billiards::report::{export_svg, run_suite, SuiteConfig};
use minkowski_billiards::{Error, Polytope};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mbill", version, about = "Shortest closed billiard trajectories in Minkowski gauges")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for pass/fail judgements.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Leave wall times out so repeated runs are byte-identical.
    #[arg(long, global = true)]
    no_timing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Permutohedron,
    Simplex,
    PolarSimplex,
    VoronoiCell,
    Cube,
    Crosspolytope,
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    UnitEdge,
    UnitCircumradius,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Basis,
    Voronoi,
    Cycles,
}

#[derive(Subcommand)]
enum Command {
    /// Build a body and print it as JSON.
    Body {
        #[arg(long, value_enum, required_unless_present = "hanner")]
        kind: Option<Kind>,
        #[arg(long, required_unless_present = "hanner")]
        dim: Option<usize>,
        #[arg(long, value_enum, default_value_t = Norm::UnitEdge)]
        normalization: Norm,
        /// A Hanner expression such as '{"free_sum":["segment","segment"]}'.
        #[arg(long, conflicts_with = "kind")]
        hanner: Option<String>,
    },
    /// Shortest closed billiard trajectory of K in the gauge of T.
    Xi {
        #[arg(long = "K", alias = "k")]
        k: PathBuf,
        #[arg(long = "T", alias = "t")]
        t: PathBuf,
        /// Use the multistart penalty search instead of the exact solver.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        /// Also draw the trajectory (2-D only).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// The ratio n! vol K vol T / ξ^n.
    Ratio {
        #[arg(long = "K", alias = "k")]
        k: PathBuf,
        #[arg(long = "T", alias = "t")]
        t: PathBuf,
    },
    /// The lattice A_n*, its Voronoi cell or its Delaunay cycles.
    Lattice {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = Emit::Basis)]
        emit: Emit,
    },
    /// Cover an admissible closed polyline by a translate of P_n.
    Cover {
        #[arg(long)]
        line: PathBuf,
        #[arg(long)]
        dim: usize,
    },
    /// Run the reference suite.
    Suite {
        /// Case-name prefixes to run; repeat or separate with commas.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long, default_value_t = 50)]
        random_cases: usize,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
    },
    /// Draw a saved trajectory.
    ExportSvg {
        #[arg(long)]
        result: PathBuf,
        #[arg(long = "K", alias = "k")]
        k: PathBuf,
        #[arg(long = "T", alias = "t")]
        t: PathBuf,
    },
}

/// Failures split by exit code.
enum Failure {
    /// Bad input: exit 2.
    Usage(String),
    /// A computation failed or a check did not pass: exit 1.
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Failed(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("mbill: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("mbill: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_body(path: &Path) -> Result<Polytope, Failure> {
    parse_body(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(g: &Global, text: &str) -> Result<(), Failure> {
    match &g.out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    Ok(to_json_string(value)?)
}

#[derive(Serialize)]
struct Metadata {
    wall_ms: f64,
}

#[derive(Serialize)]
struct XiOutput<'a> {
    #[serde(flatten)]
    result: &'a TrajectoryResult,
    reflection_feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<Metadata>,
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Body {
            kind,
            dim,
            normalization,
            hanner,
        } => {
            let recipe = match hanner {
                Some(text) => BodyRecipe::HannerExpression {
                    expression: serde_json::from_str::<HannerExpr>(text)
                        .map_err(|e| Failure::Usage(format!("bad Hanner expression: {e}")))?,
                },
                None => {
                    let (kind, dim) = (kind.expect("clap requires kind"), dim.expect("clap requires dim"));
                    let normalization = match normalization {
                        Norm::UnitEdge => Normalization::UnitEdge,
                        Norm::UnitCircumradius => Normalization::UnitCircumradius,
                    };
                    match kind {
                        Kind::Permutohedron => BodyRecipe::Permutohedron { dim },
                        Kind::Simplex => BodyRecipe::RegularSimplex { dim, normalization },
                        Kind::PolarSimplex => BodyRecipe::PolarSimplex { dim, normalization },
                        Kind::VoronoiCell => BodyRecipe::VoronoiCellPn { dim },
                        Kind::Cube => BodyRecipe::Cube { dim },
                        Kind::Crosspolytope => BodyRecipe::Crosspolytope { dim },
                    }
                }
            };
            let body = recipe.build().map_err(|e| Failure::Usage(e.to_string()))?;
            emit(g, &json(&BodyJson::from_polytope(&body, Some(recipe)))?)?;
            Ok(true)
        }
        Command::Xi {
            k,
            t,
            oracle,
            restarts,
            svg,
        } => {
            let (k, t) = (read_body(k)?, read_body(t)?);
            let start = Instant::now();
            let result = if *oracle {
                let cfg = OracleConfig {
                    m_max: None,
                    restarts: *restarts,
                    seed: g.seed,
                };
                xi_bruteforce(&k, &t, &cfg)?
            } else {
                xi_solver(&k, &t)?
            };
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let feasible = verify_reflection(&result, &k, &t)?.feasible;
            let out = XiOutput {
                result: &result,
                reflection_feasible: feasible,
                metadata: (!g.no_timing).then_some(Metadata { wall_ms }),
            };
            emit(g, &json(&out)?)?;
            if let Some(path) = svg {
                write_file(path, &export_svg(&result, &k, &t)?)?;
            }
            Ok(true)
        }
        Command::Ratio { k, t } => {
            let (k, t) = (read_body(k)?, read_body(t)?);
            let xi = xi_solver(&k, &t)?.length;
            let ratio = ratio_from_xi(&k, &t, xi);
            #[derive(Serialize)]
            struct RatioOutput {
                xi: f64,
                ratio: f64,
            }
            let text = match g.format {
                Format::Json => json(&RatioOutput { xi, ratio })?,
                Format::Csv => format!(
                    "xi,ratio\n{},{}\n",
                    minkowski_billiards::io::format_f64(xi),
                    minkowski_billiards::io::format_f64(ratio)
                ),
            };
            emit(g, &text)?;
            Ok(true)
        }
        Command::Lattice { dim, emit: what } => {
            let basis = an_star_basis(*dim).map_err(|e| Failure::Usage(e.to_string()))?;
            let text = match what {
                Emit::Basis => json(&basis)?,
                Emit::Voronoi => json(&BodyJson::from_polytope(&voronoi_cell(&basis)?, None))?,
                Emit::Cycles => {
                    let dirs = minkowski_billiards::bodies::simplex_vertices(*dim, Normalization::UnitCircumradius);
                    let mut cycles = Vec::new();
                    for s in delaunay_simplices(*dim)? {
                        cycles.push(delaunay_cycle(&s, &dirs)?);
                    }
                    json(&cycles)?
                }
            };
            emit(g, &text)?;
            Ok(true)
        }
        Command::Cover { line, dim } => {
            let q: ClosedPolyline = serde_json::from_str(&read(line)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", line.display())))?;
            let r = cover_with_permutohedron(&q, *dim)?;
            emit(g, &json(&r)?)?;
            Ok(r.margin >= -g.tol)
        }
        Command::Suite {
            only,
            random_cases,
            restarts,
        } => {
            let cfg = SuiteConfig {
                seed: g.seed,
                random_cases: *random_cases,
                only: only.clone(),
                oracle_restarts: *restarts,
            };
            let report = run_suite(&cfg);
            let text = match g.format {
                Format::Json => report.to_json(!g.no_timing)?,
                Format::Csv => report.to_csv(!g.no_timing),
            };
            emit(g, &text)?;
            for r in report.failures() {
                eprintln!("FAIL {}: computed {} expected {} ({})", r.case, r.computed, r.expected, r.claim);
            }
            if report.rows.is_empty() {
                return Err(Failure::Usage("no case matches the filter".into()));
            }
            Ok(report.all_passed())
        }
        Command::ExportSvg { result, k, t } => {
            let r: TrajectoryResult = serde_json::from_str(&read(result)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", result.display())))?;
            let (k, t) = (read_body(k)?, read_body(t)?);
            emit(g, &export_svg(&r, &k, &t)?)?;
            Ok(true)
        }
    }
}
