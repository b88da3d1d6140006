//! The `sigmak` command line.
//!
//! Exit codes: 0 success, 1 verification or check failure, 2 unsupported
//! regime or seed construction failure, 3 divergence or non-convergence,
//! 64 usage or configuration error, 65 malformed field file.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::checks::expand_check;
use crate::error::Error;
use crate::geometry::{GridSpec, Mode, ScalarField};
use crate::mu::{convex_mu, seed_mu, validate_mu};
use crate::nonlinear::{
    picard_solve, reconstruct_u, residual_f, verify_summary, SolverConfig, DEFAULT_EPSILON,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::psi::PsiExpr;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_UNSUPPORTED: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

pub const DEFAULT_GRID: usize = 21;
pub const DEFAULT_BOUND: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(
    name = "sigmak",
    version,
    about = "Local solutions of sigma_k-curvature and sigma_k-Hessian equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Construct and validate a seed mu with sigma_k(mu) = M.
    Mu(MuArgs),
    /// Solve sigma_k = psi near the origin and write the field and a report.
    Solve(SolveArgs),
    /// Re-difference a written field and compare against psi.
    Verify(VerifyArgs),
    /// Randomized checks of the expansion order and Newton's inequality.
    ExpandCheck(ExpandArgs),
}

#[derive(Debug, Args)]
struct MuArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long = "M", allow_negative_numbers = true)]
    m: f64,
    /// Use the convex seed (requires M > 0).
    #[arg(long)]
    convex: bool,
}

#[derive(Debug, Args, Default)]
struct ProblemArgs {
    /// JSON run configuration; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    /// Nodes per axis (odd).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Seed with the convex choice instead of the default construction.
    #[arg(long)]
    convex: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    out_field: Option<PathBuf>,
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// CSV written by `solve`.
    #[arg(long)]
    field: PathBuf,
    #[command(flatten)]
    problem: ProblemArgs,
    /// Pass threshold on the inner-region error.
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bound: f64,
}

#[derive(Debug, Args)]
struct ExpandArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// On-disk run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub mode: Mode,
    pub psi: String,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_out_field")]
    pub out_field: PathBuf,
    #[serde(default = "default_out_report")]
    pub out_report: PathBuf,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_grid() -> usize {
    DEFAULT_GRID
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_out_field() -> PathBuf {
    "field.csv".into()
}
fn default_out_report() -> PathBuf {
    "report.json".into()
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    fn data(message: impl Into<String>) -> Self {
        Self::new(EXIT_DATA, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Unsupported(_) | Error::Ellipticity { .. } | Error::Internal(_) => {
                EXIT_UNSUPPORTED
            }
            Error::Diverged { .. } | Error::Numeric { .. } => EXIT_DIVERGED,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the command line with `args` (including the program name) and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Mu(a) => cmd_mu(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::ExpandCheck(a) => cmd_expand_check(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn io_usage(e: std::io::Error, path: &Path) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

fn cmd_mu(a: MuArgs, out: &mut dyn Write) -> CliResult<i32> {
    let mu = if a.convex {
        convex_mu(a.n, a.k, a.m)
    } else {
        seed_mu(a.n, a.k, a.m)
    }
    .map_err(|e| Failure::new(EXIT_UNSUPPORTED, format!("seed construction failed: {e}")))?;
    let report = validate_mu(&mu);
    let doc = serde_json::json!({
        "n": mu.n(),
        "k": mu.k(),
        "M": mu.target(),
        "mu": mu.entries(),
        "margin": mu.margin(),
    });
    writeln!(out, "{doc}").ok();
    writeln!(out, "{}", serde_json::json!({ "validation": report })).ok();
    Ok(if report.passed { EXIT_OK } else { EXIT_FAIL })
}

impl ProblemArgs {
    /// Merges the optional config file with the flags.
    fn resolve(&self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_usage(e, path))?;
                Some(
                    serde_json::from_str::<RunConfig>(&text)
                        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
                )
            }
            None => None,
        };
        let missing =
            |name: &str| Failure::usage(format!("missing --{name} (or a --config providing it)"));
        let n = self
            .n
            .or(base.as_ref().map(|b| b.n))
            .ok_or_else(|| missing("n"))?;
        let k = self
            .k
            .or(base.as_ref().map(|b| b.k))
            .ok_or_else(|| missing("k"))?;
        let mode = self
            .mode
            .or(base.as_ref().map(|b| b.mode))
            .ok_or_else(|| missing("mode"))?;
        let psi = self
            .psi
            .clone()
            .or(base.as_ref().map(|b| b.psi.clone()))
            .ok_or_else(|| missing("psi"))?;
        Ok(RunConfig {
            n,
            k,
            mode,
            psi,
            epsilon: self
                .eps
                .or(base.as_ref().map(|b| b.epsilon))
                .unwrap_or(DEFAULT_EPSILON),
            grid: self
                .grid
                .or(base.as_ref().map(|b| b.grid))
                .unwrap_or(DEFAULT_GRID),
            max_iter: self
                .max_iter
                .or(base.as_ref().map(|b| b.max_iter))
                .unwrap_or(DEFAULT_MAX_ITER),
            tol: self
                .tol
                .or(base.as_ref().map(|b| b.tol))
                .unwrap_or(DEFAULT_TOL),
            out_field: base
                .as_ref()
                .map_or_else(default_out_field, |b| b.out_field.clone()),
            out_report: base
                .as_ref()
                .map_or_else(default_out_report, |b| b.out_report.clone()),
        })
    }
}

/// Builds the solver configuration for a run.
pub fn solver_config(run: &RunConfig, convex: bool) -> crate::error::Result<SolverConfig> {
    if !(2..=3).contains(&run.n) {
        return Err(Error::Domain(format!("n must be 2 or 3, got {}", run.n)));
    }
    let psi = PsiExpr::parse(&run.psi, run.n)?;
    let grid = GridSpec::new(run.n, run.grid)?;
    let cfg = if convex {
        let mu = convex_mu(run.n, run.k, psi.at_origin()?)?;
        SolverConfig::new(run.mode, mu, psi, run.epsilon, grid)?
    } else {
        SolverConfig::seeded(run.k, run.mode, psi, run.epsilon, grid)?
    };
    Ok(cfg.with_tolerance(run.tol, run.max_iter))
}

fn csv_header(n: usize) -> String {
    let mut cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    cols.extend((1..=n).map(|i| format!("xt{i}")));
    cols.extend(["w", "u", "residual"].map(String::from));
    cols.join(",")
}

/// Writes `x, xt, w, u, residual` for every node in row-major order.
pub fn write_field_csv(
    path: &Path,
    cfg: &SolverConfig,
    w: &ScalarField,
    u: &ScalarField,
    residual: &ScalarField,
) -> std::io::Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{}", csv_header(cfg.n()))?;
    for p in 0..cfg.grid.len() {
        let mut row: Vec<String> = cfg
            .grid
            .coords(p)
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect();
        row.extend(cfg.physical_coords(p).iter().map(|v| format!("{v:.16e}")));
        for v in [w.values()[p], u.values()[p], residual.values()[p]] {
            row.push(format!("{v:.16e}"));
        }
        writeln!(f, "{}", row.join(","))?;
    }
    f.flush()
}

/// Columns of a field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl FieldTable {
    pub fn column(&self, offset: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[offset]).collect()
    }

    /// The `u` column.
    pub fn u(&self) -> Vec<f64> {
        self.column(2 * self.n + 1)
    }

    pub fn w(&self) -> Vec<f64> {
        self.column(2 * self.n)
    }
}

/// Reads a field file, checking the header against dimension `n`.
pub fn read_field_csv(path: &Path, n: usize) -> std::result::Result<FieldTable, String> {
    let file = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or("empty file")?
        .map_err(|e| e.to_string())?;
    let expected = csv_header(n);
    if header.trim_end() != expected {
        return Err(format!("header `{header}` does not match `{expected}`"));
    }
    let width = 2 * n + 3;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format!("line {}: {e}", i + 2))?;
        if row.len() != width {
            return Err(format!(
                "line {}: expected {width} fields, found {}",
                i + 2,
                row.len()
            ));
        }
        rows.push(row);
    }
    Ok(FieldTable { n, rows })
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write) -> CliResult<i32> {
    let mut run = a.problem.resolve()?;
    if let Some(p) = a.out_field {
        run.out_field = p;
    }
    if let Some(p) = a.out_report {
        run.out_report = p;
    }
    let cfg = solver_config(&run, a.problem.convex)?;
    let (w, report) = picard_solve(&cfg)?;
    let u = reconstruct_u(&w, &cfg)?;
    let residual = residual_f(&w, &cfg)?;
    write_field_csv(&run.out_field, &cfg, &w, &u, &residual)
        .map_err(|e| io_usage(e, &run.out_field))?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::new(EXIT_FAIL, e.to_string()))?;
    fs::write(&run.out_report, json + "\n").map_err(|e| io_usage(e, &run.out_report))?;
    writeln!(
        out,
        "iterations {}  residual {:.3e}  |w|_inf {:.6e}  converged {}",
        report.iterations,
        report.final_residual(),
        report.final_w_maxnorm,
        report.converged
    )
    .ok();
    writeln!(out, "field  {}", run.out_field.display()).ok();
    writeln!(out, "report {}", run.out_report.display()).ok();
    if report.converged {
        Ok(EXIT_OK)
    } else {
        Err(Failure::new(
            EXIT_DIVERGED,
            format!(
                "no convergence within {} iterations (residual {:e}); try --eps {}",
                report.iterations,
                report.final_residual(),
                cfg.epsilon / 2.0
            ),
        ))
    }
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> CliResult<i32> {
    let run = a.problem.resolve()?;
    let cfg = solver_config(&run, a.problem.convex)?;
    let table = read_field_csv(&a.field, cfg.n()).map_err(Failure::data)?;
    if table.rows.len() != cfg.grid.len() {
        return Err(Failure::data(format!(
            "{} rows for a grid of {} nodes",
            table.rows.len(),
            cfg.grid.len()
        )));
    }
    let u = ScalarField::from_values(cfg.grid, table.u())?;
    let summary = verify_summary(&u, &cfg)?;
    let passed = summary.inner_max_error <= a.bound;
    let doc = serde_json::json!({
        "max_error": summary.max_error,
        "inner_max_error": summary.inner_max_error,
        "origin_error": summary.origin_error,
        "bound": a.bound,
        "passed": passed,
    });
    writeln!(out, "{doc}").ok();
    writeln!(
        out,
        "refinement: rerun solve and verify with --grid {}; the inner error should drop by about 4x",
        2 * cfg.grid.points() - 1
    )
    .ok();
    Ok(if passed { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_expand_check(a: ExpandArgs, out: &mut dyn Write) -> CliResult<i32> {
    if a.n == 0 || a.n > 8 || a.k == 0 || a.k > a.n {
        return Err(Failure::usage(format!(
            "need 1 <= k <= n <= 8, got n = {}, k = {}",
            a.n, a.k
        )));
    }
    let rows = expand_check(a.n, a.k, a.trials, a.seed)?;
    writeln!(
        out,
        "n = {}  k = {}  trials = {}  seed = {}",
        a.n, a.k, a.trials, a.seed
    )
    .ok();
    for r in &rows {
        match &r.skipped {
            Some(reason) => writeln!(out, "{:<24} SKIP  {reason}", r.name),
            None => writeln!(
                out,
                "{:<24} {}  failures {}/{}  worst {:.6e}  ({})",
                r.name,
                if r.passed() { "PASS" } else { "FAIL" },
                r.failures,
                r.trials,
                r.worst,
                r.detail
            ),
        }
        .ok();
    }
    Ok(if rows.iter().all(|r| r.passed()) {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}
