//! Batch front end: load a problem file, construct relaxations, sweep
//! parameter grids, and emit values, subgradients, and verification reports
//! as CSV/text.
//!
//! Exit codes: 0 success; 1 verification found a property violation;
//! 2 file, argument, or parse errors; 3 relaxation construction errors;
//! 4 relaxation infeasible at the queried point.

use clap::{Args, Parser, Subcommand};
use irelax::newton::{newton_multistart, NewtonOptions};
use irelax::problem::{BuiltProblem, ProblemError};
use irelax::vector_implicit::RelaxSense;
use irelax::verify::run_verification;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "irelax",
    about = "Convex/concave relaxations of implicit functions with valid subgradients",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a parameter grid and emit relaxation values plus the reference
    /// root as CSV.
    Relax(RelaxArgs),
    /// Compute a subgradient of one relaxation at one parameter point.
    Subgrad(SubgradArgs),
    /// Run randomized property checks (subgradient inequality, sandwich,
    /// convexity, derivative consistency) and report pass/fail counts.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RelaxArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Grid points per parameter: one count, or one per parameter,
    /// comma-separated. A single-point grid uses the range midpoint.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<usize>,
    /// Component of the implicit function (1-based).
    #[arg(long, default_value_t = 1)]
    component: usize,
    /// Relaxation side to query; the CSV always carries both columns, the
    /// flag is accepted for interface symmetry.
    #[arg(long, value_parser = parse_sense)]
    sense: Option<RelaxSense>,
    /// Override the active-constraint tolerance from the problem file.
    #[arg(long)]
    tol_active: Option<f64>,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SubgradArgs {
    problem: PathBuf,
    /// Parameter point, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    point: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    component: usize,
    /// cv or cc.
    #[arg(long, default_value = "cv", value_parser = parse_sense)]
    sense: RelaxSense,
    #[arg(long)]
    tol_active: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    problem: PathBuf,
    /// Random samples per property check.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Seed for the sampling generator (problem-file seed when absent).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_active: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_sense(s: &str) -> Result<RelaxSense, String> {
    match s {
        "cv" => Ok(RelaxSense::Cv),
        "cc" => Ok(RelaxSense::Cc),
        other => Err(format!("expected `cv` or `cc`, got `{other}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Relax(args) => cmd_relax(args),
        Command::Subgrad(args) => cmd_subgrad(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        let code = if e.is_file_error() { 2 } else { 3 };
        Failure::new(code, e.to_string())
    }
}

fn load(path: &Path, tol_active: Option<f64>) -> Result<BuiltProblem, Failure> {
    let mut file = irelax::problem::read_problem_file(path)?;
    if let Some(tol) = tol_active {
        file.options.tol_active = tol;
    }
    Ok(irelax::problem::build_problem(&file)?)
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::new(2, format!("cannot write {}: {e}", path.display()))),
    }
}

/// Format a value for CSV: shortest round-trip form, `+inf`/`-inf` for the
/// infeasibility convention.
fn fmt_value(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Lexicographic grid over the parameter box: the first parameter varies
/// slowest. A count of 1 places the point at the range midpoint.
fn grid_points(built: &BuiltProblem, counts: &[usize]) -> Result<Vec<Vec<f64>>, Failure> {
    let n_p = built.p_box.len();
    let counts: Vec<usize> = if counts.len() == 1 {
        vec![counts[0]; n_p]
    } else if counts.len() == n_p {
        counts.to_vec()
    } else {
        return Err(Failure::new(
            2,
            format!("--grid expects 1 or {n_p} counts, got {}", counts.len()),
        ));
    };
    if counts.contains(&0) {
        return Err(Failure::new(2, "--grid counts must be positive"));
    }
    let axes: Vec<Vec<f64>> = built
        .p_box
        .iter()
        .zip(&counts)
        .map(|(b, &n)| {
            if n == 1 {
                vec![b.midpoint()]
            } else {
                (0..n)
                    .map(|k| b.lo() + b.width() * k as f64 / (n - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for stem in &points {
            for &v in axis {
                let mut p = stem.clone();
                p.push(v);
                next.push(p);
            }
        }
        points = next;
    }
    Ok(points)
}

fn component_index(built: &BuiltProblem, component: usize) -> Result<usize, Failure> {
    if component == 0 || component > built.vector.n_x() {
        return Err(Failure::new(
            2,
            format!("--component must be in 1..={}", built.vector.n_x()),
        ));
    }
    Ok(component - 1)
}

fn cmd_relax(args: RelaxArgs) -> Result<ExitCode, Failure> {
    let built = load(&args.problem, args.tol_active)?;
    let i = component_index(&built, args.component)?;
    let points = grid_points(&built, &args.grid)?;
    let n_p = built.p_box.len();
    let mut csv = String::new();
    let names: Vec<String> = (1..=n_p).map(|k| format!("p{k}")).collect();
    csv.push_str(&format!("# irelax relax v1: {},x_cv,x_cc,x_newton\n", names.join(",")));
    let newton_opts = NewtonOptions::default();
    for p in &points {
        let (cv, cc) = if let Some(scalar) = &built.scalar {
            scalar.relax_eval(p)
        } else {
            let cv = built
                .vector
                .relax_value(p, i, RelaxSense::Cv)
                .map_err(|e| Failure::new(3, e.to_string()))?
                .0;
            let cc = built
                .vector
                .relax_value(p, i, RelaxSense::Cc)
                .map_err(|e| Failure::new(3, e.to_string()))?
                .0;
            (cv, cc)
        };
        let root = newton_multistart(&built.graphs, p, &built.z_box, &newton_opts)
            .map(|x| fmt_value(x[i]))
            .unwrap_or_default();
        let mut row: Vec<String> = p.iter().map(|v| fmt_value(*v)).collect();
        row.push(fmt_value(cv));
        row.push(fmt_value(cc));
        row.push(root);
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write_output(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_subgrad(args: SubgradArgs) -> Result<ExitCode, Failure> {
    let built = load(&args.problem, args.tol_active)?;
    let i = component_index(&built, args.component)?;
    let p = args.point;
    if p.len() != built.p_box.len() {
        return Err(Failure::new(
            2,
            format!("--point expects {} coordinates, got {}", built.p_box.len(), p.len()),
        ));
    }
    if !p.iter().zip(&built.p_box).all(|(v, b)| b.contains(*v)) {
        return Err(Failure::new(2, "--point lies outside the parameter box"));
    }
    if let Ok(margin) = built.vector.slater_margin(&p) {
        if margin < 1e-8 {
            eprintln!(
                "warning: strict-feasibility margin {margin:.3e} at this point; \
                 sensitivity results may be unreliable"
            );
        }
    }
    // closed form for single-state problems, LP machinery otherwise
    let (value, subgradient, regime, lps, early): (f64, Vec<f64>, String, usize, Option<usize>) =
        if let Some(scalar) = &built.scalar {
            let (cv, cc) = scalar.relax_eval(&p);
            let value = match args.sense {
                RelaxSense::Cv => cv,
                RelaxSense::Cc => cc,
            };
            if !value.is_finite() {
                return Err(Failure::new(4, "relaxation infeasible at this point"));
            }
            let (s_cv, s_cc) = scalar
                .subgradients(&p)
                .map_err(|e| Failure::new(4, e.to_string()))?;
            let s = match args.sense {
                RelaxSense::Cv => s_cv,
                RelaxSense::Cc => s_cc,
            };
            (value, s, "closed_form".into(), 0, None)
        } else {
            use irelax::vector_implicit::SubgradError;
            let r = built.vector.subgradient(&p, i, args.sense).map_err(|e| match e {
                SubgradError::InfeasibleAt => {
                    Failure::new(4, "relaxation infeasible at this point")
                }
                other => Failure::new(3, other.to_string()),
            })?;
            (r.value, r.subgradient, r.regime.to_string(), r.lps_solved, r.early_stop_stage)
        };
    let n_p = built.p_box.len();
    let mut csv = String::new();
    let p_names: Vec<String> = (1..=n_p).map(|k| format!("p{k}")).collect();
    let s_names: Vec<String> = (1..=n_p).map(|k| format!("s{k}")).collect();
    csv.push_str(&format!(
        "# irelax subgrad v1: {},value,{},regime,lps_solved,early_stop_stage\n",
        p_names.join(","),
        s_names.join(",")
    ));
    let mut row: Vec<String> = p.iter().map(|v| fmt_value(*v)).collect();
    row.push(fmt_value(value));
    row.extend(subgradient.iter().map(|v| fmt_value(*v)));
    row.push(regime);
    row.push(lps.to_string());
    row.push(early.map(|s| s.to_string()).unwrap_or_default());
    csv.push_str(&row.join(","));
    csv.push('\n');
    write_output(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Failure> {
    let built = load(&args.problem, args.tol_active)?;
    let seed = args.seed.unwrap_or(built.options.seed);
    let report = run_verification(&built, args.samples, seed);
    write_output(&args.out, &report.render())?;
    if report.all_passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
