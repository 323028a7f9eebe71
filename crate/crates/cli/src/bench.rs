//! Benchmark harness: sweeps one block-arrow parameter, averages timings
//! over repeated random instances, and emits a CSV table.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use chordal_sdp::{generate_block_arrow, BlockArrowSpec, SolverStatus};

use crate::{prepare, run_form, solver_config, Form};

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    /// Sweep the number of constraints
    M,
    /// Sweep the number of blocks
    L,
    /// Sweep the block size
    D,
}

impl Vary {
    fn case_name(self) -> &'static str {
        match self {
            Vary::M => "vary-m",
            Vary::L => "vary-l",
            Vary::D => "vary-d",
        }
    }
}

#[derive(Args)]
pub struct BenchArgs {
    /// Which parameter the sweep varies
    #[arg(long, value_enum)]
    vary: Vary,
    /// Sweep values, comma separated (e.g. 50,100,200)
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<u32>,
    /// Base number of diagonal blocks (l)
    #[arg(long, default_value_t = 4)]
    blocks: u32,
    /// Base block size (d)
    #[arg(long, default_value_t = 4)]
    block_size: u32,
    /// Base arrow-head width (h)
    #[arg(long, default_value_t = 2)]
    arrow: u32,
    /// Base number of constraints (m)
    #[arg(long, default_value_t = 20)]
    num_constraints: u32,
    /// Random instances averaged per cell
    #[arg(long, default_value_t = 5)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run the undecomposed dense reference path
    #[arg(long)]
    with_dense: bool,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long)]
    adaptive_rho: bool,
    /// Parallel clique projections within each solve
    #[arg(long)]
    parallel: bool,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Measurement {
    setup_s: f64,
    iterations: usize,
    total_s: f64,
    objective: f64,
}

#[derive(Default)]
struct CellAccumulator {
    runs: Vec<Measurement>,
    failures: usize,
}

impl CellAccumulator {
    fn record(&mut self, outcome: Result<Measurement>) {
        match outcome {
            Ok(m) => self.runs.push(m),
            Err(err) => {
                eprintln!("bench cell failure: {err:#}");
                self.failures += 1;
            }
        }
    }

    fn row(&self, case: &str, params: &str, solver: &str) -> String {
        let status = if self.failures == 0 {
            "ok".to_string()
        } else {
            format!("error({}/{})", self.failures, self.failures + self.runs.len())
        };
        if self.runs.is_empty() {
            return format!("{case},{params},{solver},,,,,{status}\n");
        }
        let count = self.runs.len() as f64;
        let mean = |f: fn(&Measurement) -> f64| self.runs.iter().map(f).sum::<f64>() / count;
        format!(
            "{case},{params},{solver},{},{},{},{},{status}\n",
            mean(|m| m.setup_s),
            mean(|m| m.iterations as f64),
            mean(|m| m.total_s),
            mean(|m| m.objective),
        )
    }
}

fn spec_for(args: &BenchArgs, value: u32, seed: u64) -> BlockArrowSpec {
    let mut spec = BlockArrowSpec {
        blocks: args.blocks as usize,
        block_size: args.block_size as usize,
        arrow_head: args.arrow as usize,
        constraints: args.num_constraints as usize,
        seed,
    };
    match args.vary {
        Vary::M => spec.constraints = value as usize,
        Vary::L => spec.blocks = value as usize,
        Vary::D => spec.block_size = value as usize,
    }
    spec
}

fn run_cell(
    spec: &BlockArrowSpec,
    form: Option<Form>,
    cfg: &chordal_sdp::SolverConfig,
) -> Result<Measurement> {
    let start = std::time::Instant::now();
    let problem = generate_block_arrow(spec);
    let (dp, setup_s) = prepare(problem, form.is_none())?;
    let result = run_form(&dp, form.unwrap_or(Form::Primal), cfg)?;
    if result.status == SolverStatus::NumericalError {
        anyhow::bail!("numerical error");
    }
    Ok(Measurement {
        setup_s,
        iterations: result.iterations,
        total_s: start.elapsed().as_secs_f64(),
        objective: result.objective,
    })
}

pub fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let cfg = solver_config(args.rho, args.tol, args.max_iter, args.adaptive_rho, args.parallel);
    let mut csv = String::from("case,params,solver,setup_s,iter,total_s,objective,status\n");
    let solvers: Vec<(&str, Option<Form>)> = {
        let mut s = vec![("primal", Some(Form::Primal)), ("dual", Some(Form::Dual))];
        if args.with_dense {
            s.push(("dense", None));
        }
        s
    };
    for &value in &args.values {
        let mut cells: Vec<CellAccumulator> =
            solvers.iter().map(|_| CellAccumulator::default()).collect();
        for rep in 0..args.reps {
            let spec = spec_for(&args, value, args.seed.wrapping_add(rep as u64));
            for (cell, (_, form)) in cells.iter_mut().zip(&solvers) {
                cell.record(run_cell(&spec, *form, &cfg));
            }
        }
        let spec = spec_for(&args, value, args.seed);
        let params = format!(
            "l={};d={};h={};m={}",
            spec.blocks, spec.block_size, spec.arrow_head, spec.constraints
        );
        for (cell, (name, _)) in cells.iter().zip(&solvers) {
            csv.push_str(&cell.row(args.vary.case_name(), &params, name));
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::from(0))
}
