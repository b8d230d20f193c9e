//! The `ftw` command-line front end.
//!
//! Exit codes: 0 for success or an optimal certificate, 1 for invalid input
//! or an infeasible point, 2 when the iteration budget ran out or a
//! certificate is not optimal.

pub mod document;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::certify::{certify, vi_certificate, Verdict, DEFAULT_VI_SAMPLES};
use crate::error::Error;
use crate::oracle::{final_grid_pitch, grid_search_2d, projected_subgradient, OracleConfig};
use crate::sets::MEMBERSHIP_TOL;
use crate::stability::{continuity_probe, PerturbationSpec};
use crate::weiszfeld::{solve, SolveStatus};

pub use document::{parse_instance, parse_vector, serialize_instance, InstanceDocument, LoadedInstance, ResultDocument};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_OPTIMAL: i32 = 2;

/// Relative agreement required by `compare`.
const COMPARE_REL_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "ftw", about = "Constrained Fermat-Weber location solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the projected Weiszfeld iteration.
    Solve {
        file: PathBuf,
        /// Feasible starting point, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        /// Step-norm stopping tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        /// Write the iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the result document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a feasible point.
    Certify {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Probe how the solution moves when the anchors are perturbed.
    Stability {
        file: PathBuf,
        /// Comma-separated, strictly decreasing.
        #[arg(long, default_value = "1e-1,1e-2,1e-3,1e-4")]
        deltas: String,
        #[arg(long, default_value_t = 8)]
        dirs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the Weiszfeld solution against the reference solvers.
    Compare {
        file: PathBuf,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug)]
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(format!("i/o error: {e}"))
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `argv` (program name first) and runs the subcommand, writing
/// regular output to `stdout` and diagnostics to `stderr`.
pub fn run_command<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Solve {
            file,
            x0,
            tol,
            max_iter,
            trace,
            out,
        } => cmd_solve(&file, x0.as_deref(), tol, max_iter, trace.as_deref(), out.as_deref(), stdout),
        Command::Certify { file, point, tol } => cmd_certify(&file, &point, tol, stdout),
        Command::Stability {
            file,
            deltas,
            dirs,
            seed,
            out,
        } => cmd_stability(&file, &deltas, dirs, seed, out.as_deref(), stdout),
        Command::Compare { file, iters, seed } => cmd_compare(&file, iters, seed, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INVALID
        }
    }
}

fn load(path: &Path) -> std::result::Result<LoadedInstance, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn emit(bytes: &[u8], out: Option<&Path>, stdout: &mut dyn Write) -> std::io::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes),
        None => stdout.write_all(bytes),
    }
}

fn cmd_solve(
    file: &Path,
    x0: Option<&str>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    trace: Option<&Path>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> CmdResult {
    let LoadedInstance {
        instance,
        mut tolerances,
    } = load(file)?;
    if let Some(eps) = tol {
        tolerances.epsilon = eps;
    }
    if let Some(n) = max_iter {
        tolerances.max_iter = n;
    }
    let start = x0.map(parse_vector).transpose()?;
    let result = solve(&instance, &tolerances, start.as_ref())?;

    let feasible = instance.constraint().contains(&result.x_final, MEMBERSHIP_TOL);
    let certificate = match result.status {
        SolveStatus::CollinearRefused => None,
        _ => Some(certify(
            &instance,
            &result.x_final,
            10.0 * tolerances.epsilon,
            tolerances.eta_anchor,
        )?),
    };
    if let Some(path) = trace {
        let f = fs::File::create(path)?;
        document::write_trace_csv(std::io::BufWriter::new(f), &result.trace)?;
    }
    let doc = ResultDocument::new(&result, certificate.as_ref(), feasible);
    emit(&document::to_json(&doc), out, stdout)?;

    Ok(match result.status {
        SolveStatus::Converged | SolveStatus::AnchorOptimal(_) => EXIT_OK,
        SolveStatus::MaxIterations => EXIT_NOT_OPTIMAL,
        SolveStatus::CollinearRefused => EXIT_INVALID,
    })
}

fn cmd_certify(file: &Path, point: &str, tol: f64, stdout: &mut dyn Write) -> CmdResult {
    let LoadedInstance { instance, tolerances } = load(file)?;
    let x = parse_vector(point)?;
    let cert = certify(&instance, &x, tol, tolerances.eta_anchor)?;
    let doc = document::CertificateDocument::from(&cert);
    stdout.write_all(&document::to_json(&doc))?;
    Ok(match cert.verdict {
        Verdict::Optimal => EXIT_OK,
        Verdict::NotOptimal | Verdict::Inconclusive => EXIT_NOT_OPTIMAL,
    })
}

fn cmd_stability(
    file: &Path,
    deltas: &str,
    dirs: usize,
    seed: u64,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> CmdResult {
    let LoadedInstance { instance, tolerances } = load(file)?;
    let deltas: Vec<f64> = parse_vector(deltas)?.iter().copied().collect();
    let spec = PerturbationSpec::random(deltas, dirs, seed);
    let report = continuity_probe(&instance, &spec, &tolerances)?;
    let mut buf = Vec::new();
    document::write_stability_csv(&mut buf, &report)?;
    emit(&buf, out, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_compare(file: &Path, iters: Option<usize>, seed: u64, stdout: &mut dyn Write) -> CmdResult {
    let LoadedInstance { instance, tolerances } = load(file)?;
    let result = solve(&instance, &tolerances, None)?;
    if result.status == SolveStatus::CollinearRefused {
        return Err(Failure("anchors are collinear; nothing to compare".into()));
    }
    let mut cfg = OracleConfig::for_instance(&instance);
    cfg.seed = seed;
    if let Some(n) = iters {
        cfg.iterations = n;
    }

    let f_ref = result.objective;
    let tolerance = COMPARE_REL_TOL * (1.0 + f_ref.abs());
    let mut rows = vec![("weiszfeld", result.x_final.clone(), f_ref)];
    let sg = projected_subgradient(&instance, &cfg)?;
    rows.push(("subgradient", sg.x_final, sg.objective));
    if instance.dim() == 2 {
        let p = grid_search_2d(&instance, &cfg)?;
        let fp = instance.objective(&p)?;
        rows.push(("grid", p, fp));
    }

    writeln!(stdout, "{:<12} {:>24} {:>12} {:>12}", "method", "f", "|df|", "|dx|")?;
    let mut agree = true;
    for (name, x, f) in &rows {
        let df = (f - f_ref).abs();
        let dx = (x - &result.x_final).norm();
        agree &= df <= tolerance;
        writeln!(stdout, "{name:<12} {f:>24.16e} {df:>12.3e} {dx:>12.3e}")?;
    }
    writeln!(stdout, "status: {}  iterations: {}", result.status, result.iterations)?;
    if instance.dim() == 2 {
        writeln!(stdout, "grid pitch: {:.3e}", final_grid_pitch(&cfg))?;
    }
    if !matches!(result.status, SolveStatus::AnchorOptimal(_)) {
        let vi = vi_certificate(
            &instance,
            &result.x_final,
            DEFAULT_VI_SAMPLES,
            seed,
            tolerances.eta_anchor,
        )?;
        writeln!(stdout, "vi residual: {vi:.3e}")?;
    }
    writeln!(stdout, "tolerance: {tolerance:.3e}  agreement: {}", if agree { "yes" } else { "no" })?;
    Ok(if agree { EXIT_OK } else { EXIT_NOT_OPTIMAL })
}
