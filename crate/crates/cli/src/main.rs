//! Command-line front end: solve SDPA files, generate block-arrow
//! instances, run benchmark sweeps, and inspect decompositions.
//!
//! Results go to stdout (or `--out`); diagnostics go to stderr. Exit codes:
//! 0 solved, 2 iteration cap reached, 1 any error.

mod bench;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chordal_sdp::{
    decompose, decompose_dense, solver::DENSE_REFERENCE_MAX_N, BlockArrowSpec, DecomposedProblem,
    ResultFormat, SdpaFile, SolverConfig, SolverResult, SolverStatus,
};

#[derive(Parser)]
#[command(
    name = "chordal-sdp",
    version,
    about = "ADMM solver for sparse SDPs via chordal decomposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem in SDPA sparse format (.dat-s)
    Solve(SolveArgs),
    /// Generate a random block-arrow instance as a .dat-s file
    Generate(GenerateArgs),
    /// Sweep a block-arrow parameter and benchmark the solvers
    Bench(bench::BenchArgs),
    /// Print problem size and clique statistics without solving
    Info(InfoArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Primal,
    Dual,
}

#[derive(Args)]
struct SolveArgs {
    /// Input file in SDPA sparse format
    file: PathBuf,
    /// Which decomposed form to iterate
    #[arg(long, value_enum, default_value_t = Form::Dual)]
    form: Form,
    /// ADMM penalty parameter
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Termination tolerance on max(eps_p, eps_d)
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Enable residual-balancing adaptation of rho
    #[arg(long)]
    adaptive_rho: bool,
    /// Solve on the full cone (dense reference path, small instances only)
    #[arg(long)]
    no_decompose: bool,
    /// Run clique projections in parallel (cap with CHORDAL_SDP_THREADS)
    #[arg(long)]
    parallel: bool,
    /// Write the JSON result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-iteration CSV trace here
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of diagonal blocks (l)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    blocks: u32,
    /// Side of each diagonal block (d)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    block_size: u32,
    /// Width of the arrow head (h)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    arrow: u32,
    /// Number of affine constraints (m)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    num_constraints: u32,
    /// RNG seed; the same seed reproduces the file byte for byte
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InfoArgs {
    /// Input file in SDPA sparse format
    file: PathBuf,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Solve(args) => cmd_solve(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Bench(args) => bench::cmd_bench(args),
        Command::Info(args) => cmd_info(args),
    }
}

fn parse_file(path: &PathBuf) -> Result<SdpaFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    SdpaFile::parse(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn solver_config(
    rho: f64,
    tol: f64,
    max_iter: usize,
    adaptive_rho: bool,
    parallel: bool,
) -> SolverConfig {
    SolverConfig {
        rho,
        eps_tol: tol,
        max_iter,
        adaptive_rho,
        parallel_projections: parallel,
        ..Default::default()
    }
}

/// Decomposes (or embeds densely) and factors, returning the setup seconds.
pub fn prepare(
    problem: chordal_sdp::SdpProblem,
    no_decompose: bool,
) -> Result<(DecomposedProblem, f64)> {
    let start = std::time::Instant::now();
    if no_decompose && problem.n() > DENSE_REFERENCE_MAX_N {
        anyhow::bail!(
            "--no-decompose is limited to n <= {DENSE_REFERENCE_MAX_N} (got n = {})",
            problem.n()
        );
    }
    let mut dp = if no_decompose {
        decompose_dense(problem)?
    } else {
        decompose(problem)?
    };
    dp.factor_kkt()?;
    Ok((dp, start.elapsed().as_secs_f64()))
}

pub fn run_form(
    dp: &DecomposedProblem,
    form: Form,
    cfg: &SolverConfig,
) -> Result<SolverResult, chordal_sdp::SolverError> {
    match form {
        Form::Primal => chordal_sdp::solve_primal(dp, cfg),
        Form::Dual => chordal_sdp::solve_dual(dp, cfg),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let file = parse_file(&args.file)?;
    let (dp, setup_s) = prepare(file.to_problem(), args.no_decompose)?;
    let cfg = solver_config(
        args.rho,
        args.tol,
        args.max_iter,
        args.adaptive_rho,
        args.parallel,
    );
    let mut result = run_form(&dp, args.form, &cfg)?;
    result.timings.setup_s = setup_s;

    if let Some(path) = &args.trace {
        std::fs::write(path, chordal_sdp::write_result(&result, ResultFormat::Csv))
            .with_context(|| format!("cannot write trace to {}", path.display()))?;
    }
    let json = chordal_sdp::write_result(&result, ResultFormat::Json);
    match &args.out {
        Some(path) => std::fs::write(path, json)
            .with_context(|| format!("cannot write result to {}", path.display()))?,
        None => print!("{json}"),
    }
    eprintln!(
        "{:?} in {} iterations: objective {:.6e}, eps ({:.2e}, {:.2e}), setup {:.3}s, solve {:.3}s",
        result.status,
        result.iterations,
        result.objective,
        result.eps_p,
        result.eps_d,
        setup_s,
        result.timings.solve_s
    );
    Ok(match result.status {
        SolverStatus::Solved => ExitCode::from(0),
        SolverStatus::MaxIterReached => ExitCode::from(2),
        SolverStatus::NumericalError => ExitCode::from(1),
    })
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    let spec = BlockArrowSpec {
        blocks: args.blocks as usize,
        block_size: args.block_size as usize,
        arrow_head: args.arrow as usize,
        constraints: args.num_constraints as usize,
        seed: args.seed,
    };
    let text = chordal_sdp::generate_block_arrow_sdpa(&spec).to_canonical_string();
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    eprintln!(
        "generated block-arrow instance: n = {}, m = {}, seed = {}",
        spec.n(),
        spec.constraints,
        spec.seed
    );
    Ok(ExitCode::from(0))
}

fn cmd_info(args: InfoArgs) -> Result<ExitCode> {
    let file = parse_file(&args.file)?;
    let problem = file.to_problem();
    let pattern_nnz = problem.pattern().nnz();
    let density = problem.pattern_graph().density();
    let dp = decompose(problem)?;
    let stats = dp.clique_stats();
    println!("n: {}", dp.n());
    println!("m: {}", dp.m());
    println!("pattern nnz: {pattern_nnz}");
    println!("pattern density: {density:.6}");
    println!("extended nnz: {}", dp.pattern().nnz());
    println!("cliques p: {}", stats.count);
    println!("max clique size: {}", stats.max_size);
    println!("min clique size: {}", stats.min_size);
    Ok(ExitCode::from(0))
}
