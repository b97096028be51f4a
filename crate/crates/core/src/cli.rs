//! `alpn` command line: `solve`, `generate` and `bench`.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::AlpnError;
use crate::gen::generate;
use crate::io::{read_instance, write_instance_file, write_report, InstanceFileV1, ReportFormat};
use crate::model::{SolveReport, SolveStatus};
use crate::{solve, SolverParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNBOUNDED: i32 = 2;
pub const EXIT_ITERATION_LIMIT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub const BENCH_HEADER: &str =
    "m,n,dims,reps,ok,mean_time_s,mean_iterations,mean_initial_hyperplanes,mean_final_hyperplanes,failures";

#[derive(Debug, Parser)]
#[command(name = "alpn", version, about = "SOCP solver using adaptive polyhedral outer approximation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance file and write a report.
    Solve(SolveArgs),
    /// Write a random instance with a known interior point.
    Generate(GenerateArgs),
    /// Run seeded solves over a grid of problem shapes and print a summary table.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Clone)]
pub struct ParamArgs {
    /// Feasibility tolerance of the stopping test.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Outer iteration cap.
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Starting gamma.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma0: Option<f64>,
}

impl ParamArgs {
    pub fn to_params(&self) -> Result<SolverParams, AlpnError> {
        let mut p = SolverParams::default();
        if let Some(t) = self.tol {
            p.tol_feas = t;
        }
        p.max_outer_iterations = self.max_iter;
        p.gamma0 = self.gamma0;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file.
    pub input: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Report destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Iteration log destination (CSV).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Format of the `--out` file: structured or csv-log.
    #[arg(long, default_value = "structured")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of equality constraints.
    #[arg(long)]
    pub m: usize,
    /// Block sizes, e.g. `5x4` or `1x2,3x1`.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Dims,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Cells separated by `;`, each `M:DIMS`, e.g. `10:1x20;10:2x10`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Grid,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Seed of the first repetition; repetition r uses `seed + r`.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Summary destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Expanded block sizes plus the text they came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dims {
    pub text: String,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<(usize, Dims)>);

/// Parses `SIZExCOUNT[,SIZExCOUNT...]`.
pub fn parse_dims(s: &str) -> Result<Dims, String> {
    let mut sizes = Vec::new();
    for group in s.split(',') {
        let group = group.trim();
        let (size, count) =
            group.split_once('x').ok_or_else(|| format!("dims group `{group}` is not of the form SIZExCOUNT"))?;
        let size: usize = size.trim().parse().map_err(|_| format!("bad block size in `{group}`"))?;
        let count: usize = count.trim().parse().map_err(|_| format!("bad block count in `{group}`"))?;
        if size == 0 || count == 0 {
            return Err(format!("dims group `{group}` must have positive size and count"));
        }
        sizes.extend(std::iter::repeat_n(size, count));
    }
    Ok(Dims { text: s.trim().to_string(), sizes })
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let mut cells = Vec::new();
    for cell in s.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let (m, dims) = cell.split_once(':').ok_or_else(|| format!("grid cell `{cell}` is not of the form M:DIMS"))?;
        let m: usize = m.trim().parse().map_err(|_| format!("bad m in grid cell `{cell}`"))?;
        if m == 0 {
            return Err(format!("grid cell `{cell}` needs m >= 1"));
        }
        cells.push((m, parse_dims(dims)?));
    }
    if cells.is_empty() {
        return Err("grid is empty".into());
    }
    Ok(Grid(cells))
}

pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::RelaxationUnbounded | SolveStatus::DualUnbounded => EXIT_UNBOUNDED,
        SolveStatus::IterationLimit => EXIT_ITERATION_LIMIT,
        SolveStatus::NumericalFailure => EXIT_NUMERICAL,
    }
}

fn error_exit_code(err: &AlpnError) -> i32 {
    match err {
        AlpnError::NumericalFailure(_) | AlpnError::InnerIterationLimit(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a, stdout),
        Command::Generate(a) => cmd_generate(&a, stdout),
        Command::Bench(a) => cmd_bench(&a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            error_exit_code(&e)
        }
    }
}

pub fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write) -> Result<i32, AlpnError> {
    let params = args.params.to_params()?;
    let instance = read_instance(&args.input)?;
    let report = solve(&instance, &params)?;
    if let Some(out) = &args.out {
        write_report(&report, out, args.format)?;
    }
    if let Some(log) = &args.log {
        write_report(&report, log, ReportFormat::CsvLog)?;
    }
    writeln!(
        stdout,
        "status={} objective={:?} iterations={} hyperplanes={}->{} residual={:.3e}",
        report.status.as_str(),
        report.objective,
        report.iterations,
        report.initial_hyperplanes,
        report.final_hyperplanes,
        report.residuals.max()
    )?;
    Ok(exit_code(report.status))
}

pub fn cmd_generate(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<i32, AlpnError> {
    let g = generate(args.m, &args.dims.sizes, args.seed)?;
    write_instance_file(&InstanceFileV1::from_generated(&g), &args.out)?;
    writeln!(
        stdout,
        "wrote m={} n={} blocks={} to {}",
        args.m,
        g.instance.n(),
        args.dims.sizes.len(),
        args.out.display()
    )?;
    Ok(EXIT_OK)
}

/// One summary row of a bench run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub dims: String,
    pub reps: usize,
    pub ok: usize,
    pub mean_time: f64,
    pub mean_iterations: f64,
    pub mean_initial_hyperplanes: f64,
    pub mean_final_hyperplanes: f64,
    /// `status:count` pairs for runs that did not end Optimal.
    pub failures: String,
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{},{},{},{}",
            self.m,
            self.n,
            self.dims,
            self.reps,
            self.ok,
            self.mean_time,
            self.mean_iterations,
            self.mean_initial_hyperplanes,
            self.mean_final_hyperplanes,
            self.failures
        )
    }
}

fn run_one(
    m: usize,
    dims: &[usize],
    seed: u64,
    params: &SolverParams,
) -> (std::result::Result<SolveReport, String>, f64) {
    let start = Instant::now();
    let result = generate(m, dims, seed).and_then(|g| solve(&g.instance, params)).map_err(|e| match e {
        AlpnError::NumericalFailure(_) | AlpnError::InnerIterationLimit(_) => "numerical_failure".to_string(),
        _ => "error".to_string(),
    });
    (result, start.elapsed().as_secs_f64())
}

fn summarize(m: usize, dims: &Dims, runs: &[(std::result::Result<SolveReport, String>, f64)]) -> BenchRow {
    let reps = runs.len();
    let n = dims.sizes.iter().sum();
    let mut ok = 0;
    let mut failures: Vec<(String, usize)> = Vec::new();
    let (mut t, mut it, mut h0, mut h1, mut counted) = (0.0, 0.0, 0.0, 0.0, 0usize);
    for (res, secs) in runs {
        t += secs;
        let tag = match res {
            Ok(r) => {
                it += r.iterations as f64;
                h0 += r.initial_hyperplanes as f64;
                h1 += r.final_hyperplanes as f64;
                counted += 1;
                if r.status == SolveStatus::Optimal {
                    ok += 1;
                    continue;
                }
                r.status.as_str().to_string()
            }
            Err(tag) => tag.clone(),
        };
        match failures.iter_mut().find(|(s, _)| *s == tag) {
            Some(entry) => entry.1 += 1,
            None => failures.push((tag, 1)),
        }
    }
    let mean = |s: f64, k: usize| if k == 0 { f64::NAN } else { s / k as f64 };
    BenchRow {
        m,
        n,
        dims: dims.text.replace(',', "+"),
        reps,
        ok,
        mean_time: mean(t, reps),
        mean_iterations: mean(it, counted),
        mean_initial_hyperplanes: mean(h0, counted),
        mean_final_hyperplanes: mean(h1, counted),
        failures: failures.iter().map(|(s, k)| format!("{s}:{k}")).collect::<Vec<_>>().join(" "),
    }
}

/// Runs every `(cell, repetition)` pair, in parallel when allowed, and
/// returns the rows in grid order.
pub fn run_bench(grid: &Grid, reps: usize, seed: u64, params: &SolverParams) -> Result<Vec<BenchRow>, AlpnError> {
    let threads = std::env::var("ALPN_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AlpnError::InvalidParams(format!("thread pool: {e}")))?;
    let jobs: Vec<(usize, u64)> =
        (0..grid.0.len()).flat_map(|c| (0..reps as u64).map(move |r| (c, seed.wrapping_add(r)))).collect();
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, s)| {
                let (m, dims) = &grid.0[c];
                run_one(*m, &dims.sizes, s, params)
            })
            .collect()
    });
    Ok(grid
        .0
        .iter()
        .enumerate()
        .map(|(c, (m, dims))| summarize(*m, dims, &results[c * reps..(c + 1) * reps]))
        .collect())
}

pub fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<i32, AlpnError> {
    if args.reps == 0 {
        return Err(AlpnError::InvalidParams("--reps must be at least 1".into()));
    }
    let params = args.params.to_params()?;
    let rows = run_bench(&args.grid, args.reps, args.seed, &params)?;
    let mut text = String::from(BENCH_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    match &args.out {
        Some(path) => std::fs::write(path, &text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}
