use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use delay_noether::document::{ProblemDocument, TrajectoryDocument};
use delay_noether::functional;
use delay_noether::report::{FitMode, Sampling};
use delay_noether::solver::{self, GridSpec, Init, SolveOptions, SolveResult};
use delay_noether::{conditions, noether, PiecewiseTrajectory, Problem};
use serde::Serialize;

mod output;

const TOLERANCE_ENV: &str = "DELAY_NOETHER_TOL";

/// Optimality conditions and Noether charges for variational problems with
/// time delay.
#[derive(Debug, Parser)]
#[command(name = "delay-noether", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the action along the document's trajectory.
    Action {
        file: PathBuf,
        #[command(flatten)]
        select: Select,
        #[arg(long)]
        json: bool,
    },
    /// Run one condition along the trajectory; exit 0 iff it holds.
    Check {
        which: Which,
        file: PathBuf,
        #[command(flatten)]
        select: Select,
        #[command(flatten)]
        sample: SampleArgs,
        /// Fit mode of the integral Euler-Lagrange check.
        #[arg(long, value_enum, default_value_t = Mode::Regional)]
        mode: Mode,
        /// Write the sampled series as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Minimize the discrete action of a first-order problem.
    Minimize {
        file: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Write the problem document with the solved trajectory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the node values as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run every check and classify the trajectory.
    Report {
        file: PathBuf,
        #[command(flatten)]
        select: Select,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    El,
    ElIntegral,
    Dbr,
    Invariance,
    Noether,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Regional,
    Global,
}

#[derive(Debug, Args)]
struct Select {
    /// Trajectory variant: `trajectory_<NAME>` in the document.
    #[arg(long, value_name = "NAME")]
    trajectory: Option<String>,
    /// Use the minimizer of the discrete action instead of a stored
    /// trajectory.
    #[arg(long, conflicts_with = "trajectory")]
    from_solver: bool,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Grid step; must divide both tau and t2 - t1.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = solver::DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Number of interior sample points.
    #[arg(long, default_value_t = 200)]
    grid: usize,
}

/// Failures that map to exit status 2.
#[derive(Debug)]
struct Usage(anyhow::Error);

fn load(path: &Path) -> Result<(ProblemDocument, Problem)> {
    let doc = ProblemDocument::from_path(path)?;
    let problem = doc.problem().with_context(|| format!("{}", path.display()))?;
    Ok((doc, problem))
}

fn tolerance(doc: &ProblemDocument) -> Result<f64> {
    match std::env::var(TOLERANCE_ENV) {
        Ok(text) => {
            let tol: f64 = text
                .trim()
                .parse()
                .with_context(|| format!("{TOLERANCE_ENV}={text} is not a number"))?;
            if tol.is_nan() || tol <= 0.0 {
                bail!("{TOLERANCE_ENV} must be positive");
            }
            Ok(tol)
        }
        Err(_) => Ok(doc.tolerances().first_integral),
    }
}

fn solve(doc: &ProblemDocument, problem: &Problem, args: &SolveArgs) -> Result<SolveResult> {
    let Some(h) = args.h else {
        bail!("--h is required to run the solver");
    };
    let grid = GridSpec::new(problem, h)?;
    let options = SolveOptions {
        max_iter: args.max_iter,
        grad_tol: doc.tolerances().gradient,
    };
    Ok(solver::minimize(problem, &grid, Init::Prehistory, options)?)
}

fn trajectory(doc: &ProblemDocument, problem: &Problem, select: &Select) -> Result<PiecewiseTrajectory> {
    if select.from_solver {
        return Ok(solve(doc, problem, &select.solve)?.trajectory);
    }
    Ok(doc.trajectory(select.trajectory.as_deref())?)
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn code(holds: bool) -> ExitCode {
    if holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, Usage> {
    match cli.command {
        Command::Action { file, select, json } => {
            let (doc, problem) = load(&file).map_err(Usage)?;
            let q = trajectory(&doc, &problem, &select).map_err(Usage)?;
            let report = functional::action(&problem, &q, doc.quadrature()).map_err(|e| Usage(e.into()))?;
            if json {
                print_json(&report);
            } else {
                println!("action = {}", report.action);
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            which,
            file,
            select,
            sample,
            mode,
            csv,
            json,
        } => {
            let (doc, problem) = load(&file).map_err(Usage)?;
            let q = trajectory(&doc, &problem, &select).map_err(Usage)?;
            let sampling = Sampling {
                points: sample.grid,
                tolerance: tolerance(&doc).map_err(Usage)?,
            };
            let holds = check(&doc, &problem, &q, which, mode, &sampling, csv.as_deref(), json).map_err(Usage)?;
            Ok(code(holds))
        }
        Command::Minimize {
            file,
            solve: args,
            out,
            csv,
            json,
        } => {
            let (doc, problem) = load(&file).map_err(Usage)?;
            let result = solve(&doc, &problem, &args).map_err(Usage)?;
            if let Some(path) = out {
                let solved = ProblemDocument {
                    trajectory: Some(TrajectoryDocument {
                        breakpoints: result.times.clone(),
                        segments: None,
                        values: Some(result.nodes.clone()),
                    }),
                    ..doc.clone()
                };
                std::fs::write(&path, solved.to_json() + "\n")
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Usage)?;
            }
            if let Some(path) = csv {
                output::write_nodes_csv(&path, &result).map_err(Usage)?;
            }
            if json {
                print_json(&result);
            } else {
                output::print_solve(&result);
            }
            Ok(code(result.converged))
        }
        Command::Report {
            file,
            select,
            sample,
            json,
        } => {
            let (doc, problem) = load(&file).map_err(Usage)?;
            let q = trajectory(&doc, &problem, &select).map_err(Usage)?;
            let sampling = Sampling {
                points: sample.grid,
                tolerance: tolerance(&doc).map_err(Usage)?,
            };
            let report = output::full_report(&doc, &problem, &q, &sampling).map_err(Usage)?;
            if json {
                print_json(&report);
            } else {
                output::print_full_report(&report);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn check(
    doc: &ProblemDocument,
    problem: &Problem,
    q: &PiecewiseTrajectory,
    which: Which,
    mode: Mode,
    sampling: &Sampling,
    csv: Option<&Path>,
    json: bool,
) -> Result<bool> {
    let (holds, samples) = match which {
        Which::El => {
            let r = conditions::el_residual_report(problem, q, sampling)?;
            emit(&r, json, output::print_residual);
            (r.verdict.holds(), r.samples)
        }
        Which::ElIntegral => {
            let mode = match mode {
                Mode::Regional => FitMode::Regional,
                Mode::Global => FitMode::Global,
            };
            let r = conditions::el_first_integral(problem, q, sampling, mode)?;
            emit(&r, json, output::print_first_integral);
            (r.verdict.holds(), r.samples)
        }
        Which::Dbr => {
            let r = conditions::dbr_first_integral(problem, q, sampling)?;
            emit(&r, json, output::print_first_integral);
            (r.verdict.holds(), r.samples)
        }
        Which::Invariance => {
            let sym = doc.symmetry()?;
            let r = noether::invariance_report(problem, q, &sym, sampling)?;
            emit(&r, json, output::print_residual);
            (r.verdict.holds(), r.samples)
        }
        Which::Noether => {
            let sym = doc.symmetry()?;
            let r = noether::check_conservation(problem, q, &sym, sampling)?;
            emit(&r, json, output::print_conservation);
            (r.report.verdict.holds(), r.report.samples)
        }
    };
    if let Some(path) = csv {
        output::write_samples_csv(path, &samples)?;
    }
    Ok(holds)
}

fn emit<T: Serialize>(report: &T, json: bool, human: fn(&T)) {
    if json {
        print_json(report);
    } else {
        human(report);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
