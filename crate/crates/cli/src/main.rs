//! `relsec`: secrecy-rate analysis of compress-forward relay-eavesdropper
//! channels from JSON spec files.
//!
//! Data goes to stdout as CSV, diagnostics and timings to stderr. Exit
//! codes: 0 success, 2 parse or validation error, 3 configuration or usage
//! error, 4 internal assertion failure. `RELSEC_THREADS` sets the worker
//! count; output does not depend on it.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext};
use relsec::io::{emit_csv, report, Destination, SpecFile};
use relsec::optimize::{optimize_design, sweep, Objective, OptimizerConfig};
use relsec::regime::{best_case_rate, case_rate, check_equivocation_bound, DEFAULT_TOL};
use relsec::sim::{simulate_blocks, EquivocationMode, SimConfig};
use relsec::{assemble_joint, classify, compute_info_quantities, oracle_max_rate, ChannelSpec, Error, InfoQuantities, OracleConfig, Result};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "relsec", version, about = "Secrecy rates for compress-forward relay-eavesdropper channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the information quantities of the spec's design.
    Info { spec: PathBuf },
    /// Print the regime leaves the design falls in.
    Classify {
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Closed-form rate of every matching leaf.
    Rate {
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Brute-force search over operating points.
    Oracle {
        spec: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        grid: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Search input designs for the best secrecy rate.
    Optimize(OptimizeArgs),
    /// Monte Carlo run of the coding scheme.
    Simulate(SimulateArgs),
    /// Best rate and wiretap baseline across a one-parameter family.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Case,
    Oracle,
}

#[derive(clap::Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 6)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest compression alphabet tried [default: |X2||Y2| + 1].
    #[arg(long)]
    comp_max: Option<usize>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Case)]
    objective: ObjectiveArg,
    /// Grid step of the oracle objective.
    #[arg(long, default_value_t = 0.01)]
    grid: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
}

impl SearchArgs {
    fn config(&self, spec: &ChannelSpec) -> OptimizerConfig {
        let base = OptimizerConfig::for_alphabets(spec.alphabets());
        OptimizerConfig {
            restarts: self.restarts,
            seed: self.seed,
            comp_size_max: self.comp_max.unwrap_or(base.comp_size_max),
            max_iters: self.max_iters,
            objective: match self.objective {
                ObjectiveArg::Case => Objective::BestCaseRate,
                ObjectiveArg::Oracle => Objective::OracleRate { step: self.grid },
            },
            ..base
        }
    }
}

#[derive(clap::Args)]
struct OptimizeArgs {
    spec: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Where to write the best design as a spec file [default: <spec>.optimized.json].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EquivocationArg {
    Off,
    Exact,
}

#[derive(clap::Args)]
struct SimulateArgs {
    spec: PathBuf,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.15)]
    eps_typ: f64,
    #[arg(long, value_enum, default_value_t = EquivocationArg::Off)]
    equivocation: EquivocationArg,
    #[arg(long, default_value_t = 200)]
    eve_samples: usize,
    /// Rates default to the best closed-form operating point of the design.
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    r_tilde1: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long)]
    r_hat: Option<f64>,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Spec file whose string entries are expressions in `x`.
    template: PathBuf,
    /// JSON pointer of a number in the template set to `x` at each point.
    #[arg(long)]
    param: Option<String>,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    steps: usize,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Validation(_) => 2,
        Error::Config(_) | Error::Usage(_) | Error::Io { .. } => 3,
        Error::Internal(_) => 4,
    }
}

fn read_with_design(path: &Path, command: &str) -> Result<(SpecFile, InfoQuantities)> {
    let file = SpecFile::read(path)?;
    let design = file.require_design(command)?;
    let q = compute_info_quantities(&assemble_joint(&file.spec, design)?);
    Ok((file, q))
}

fn stdout(table: &report::ResultTable) -> Result<()> {
    emit_csv(table, Destination::Stdout)
}

fn run_rate(spec: &Path, tol: f64) -> Result<()> {
    let (_, q) = read_with_design(spec, "rate")?;
    let mut rows = Vec::new();
    for case in classify(&q, tol)? {
        let choice = case_rate(&q, case.leaf, tol)?;
        check_equivocation_bound(&choice)?;
        rows.push((case, choice));
    }
    // First maximal row, as in the best-rate selection.
    let best = rows.iter().enumerate().fold(0, |b, (i, (_, c))| if c.r1 > rows[b].1.r1 { i } else { b });
    stdout(&report::rate_table(&rows, best))
}

fn run_optimize(args: &OptimizeArgs) -> Result<()> {
    let file = SpecFile::read(&args.spec)?;
    let cfg = args.search.config(&file.spec);
    let res = optimize_design(&file.spec, &cfg)?;
    let out = args.out.clone().unwrap_or_else(|| args.spec.with_extension("optimized.json"));
    SpecFile { design: Some(res.design.clone()), ..file }.write(&out)?;
    eprintln!("best design written to {}", out.display());
    eprintln!("search took {:.3}s over {} trace points", res.wall_seconds, res.trace.len());
    stdout(&report::optimize_table(&res))
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let (file, q) = read_with_design(&args.spec, "simulate")?;
    let (_, point) = best_case_rate(&q, DEFAULT_TOL)?;
    let cfg = SimConfig {
        n: args.n,
        blocks: args.blocks,
        r1: args.r1.unwrap_or(point.r1),
        r_tilde1: args.r_tilde1.unwrap_or(point.r_tilde1),
        r2: args.r2.unwrap_or(point.r2),
        r_hat: args.r_hat.unwrap_or(point.r_hat),
        eps_typ: args.eps_typ,
        trials: args.trials,
        seed: args.seed,
        equivocation: match args.equivocation {
            EquivocationArg::Off => EquivocationMode::Off,
            EquivocationArg::Exact => EquivocationMode::ExactMicro,
        },
        eve_samples: args.eve_samples,
    };
    let res = simulate_blocks(&file.spec, file.require_design("simulate")?, &cfg)?;
    eprintln!("simulation took {:.3}s", res.elapsed_seconds);
    stdout(&report::simulate_table(&res))
}

/// Replaces every string under `/channel` and `/design` with its value as
/// an expression in `x`.
fn evaluate_expressions(v: &mut Value, path: &str, ctx: &HashMapContext<DefaultNumericTypes>) -> Result<()> {
    match v {
        Value::String(expr) => {
            let x = evalexpr::eval_number_with_context(expr, ctx)
                .map_err(|e| Error::Parse { location: path.to_string(), message: format!("`{expr}`: {e}") })?;
            *v = Value::from(x);
        }
        Value::Array(items) => {
            for (i, item) in items.iter_mut().enumerate() {
                evaluate_expressions(item, &format!("{path}/{i}"), ctx)?;
            }
        }
        Value::Object(map) => {
            for (k, item) in map.iter_mut() {
                evaluate_expressions(item, &format!("{path}/{k}"), ctx)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn instantiate(template: &Value, param: Option<&str>, x: f64) -> Result<ChannelSpec> {
    let mut v = template.clone();
    if let Some(p) = param {
        let slot = v.pointer_mut(p).ok_or_else(|| Error::Usage(format!("template has no field at `{p}`")))?;
        *slot = Value::from(x);
    }
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    ctx.set_value("x".into(), evalexpr::Value::Float(x)).expect("fresh context accepts x");
    for key in ["channel", "design"] {
        if let Some(sub) = v.get_mut(key) {
            evaluate_expressions(sub, &format!("/{key}"), &ctx)?;
        }
    }
    Ok(SpecFile::from_value(&v)?.spec)
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    if args.steps == 0 {
        return Err(Error::Config("--steps must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&args.template)
        .map_err(|source| Error::Io { path: args.template.display().to_string(), source })?;
    let template: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Parse { location: format!("line {} column {}", e.line(), e.column()), message: e.to_string() })?;
    let param = args.param.as_deref();
    let first = instantiate(&template, param, args.from)?;
    let cfg = args.search.config(&first);
    let grid: Vec<f64> = (0..args.steps)
        .map(|i| if args.steps == 1 { args.from } else { args.from + (args.to - args.from) * i as f64 / (args.steps - 1) as f64 })
        .collect();
    let t0 = Instant::now();
    let rows = sweep(&grid, |x| instantiate(&template, param, x), &cfg);
    for row in &rows {
        if let Err(e) = &row.outcome {
            eprintln!("x = {}: {e}", row.param);
        }
    }
    eprintln!("sweep took {:.3}s", t0.elapsed().as_secs_f64());
    let table = report::sweep_table(&rows);
    match &args.out {
        Some(p) => emit_csv(&table, Destination::File(p)),
        None => stdout(&table),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Info { spec } => stdout(&report::info_table(&read_with_design(&spec, "info")?.1)),
        Command::Classify { spec, tol } => {
            let (_, q) = read_with_design(&spec, "classify")?;
            stdout(&report::classify_table(&classify(&q, tol)?))
        }
        Command::Rate { spec, tol } => run_rate(&spec, tol),
        Command::Oracle { spec, grid, tol } => {
            let (_, q) = read_with_design(&spec, "oracle")?;
            let choice = oracle_max_rate(&q, &OracleConfig { tol, ..OracleConfig::new(grid) })?;
            stdout(&report::oracle_table(&choice))
        }
        Command::Optimize(args) => run_optimize(&args),
        Command::Simulate(args) => run_simulate(&args),
        Command::Sweep(args) => run_sweep(&args),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("RELSEC_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("RELSEC_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let t0 = Instant::now();
    let result = configure_threads().and_then(|_| run(cli));
    eprintln!("elapsed {:.3}s", t0.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
