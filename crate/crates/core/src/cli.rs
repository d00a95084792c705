//! Command-line front end: `generate`, `solve`, `verify`, `bench`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::harness::{
    default_suite, evaluate_run, generate_planted_system, oracle_solve, Metrics, OracleOptions, ProblemInstance,
    Structure,
};
use crate::solver::{solve_baseline_fb, solve_with_monitor, AlgoParams, BetaSchedule, SolveStatus, StopReason};
use crate::verify::{run_property_suite, InvariantChecker, InvariantCounts, SampleConfig};
use crate::{Error, Vector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MAX_ITERATIONS: i32 = 3;
pub const EXIT_LINESEARCH_FAILURE: i32 = 4;
pub const EXIT_IO: i32 = 5;

pub const SEED_ENV: &str = "SPLITSYS_SEED";

#[derive(Debug, Parser)]
#[command(name = "splitsys", version, about = "Solve systems of monotone inclusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance with a planted solution.
    Generate(GenerateArgs),
    /// Run the solver on one instance.
    Solve(SolveArgs),
    /// Run sampled invariant checks and a short verified solve.
    Verify(VerifyArgs),
    /// Run the solver over a suite of instances and parameter cells.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum StructureArg {
    AffineVi,
    MixedL1,
}

impl From<StructureArg> for Structure {
    fn from(s: StructureArg) -> Self {
        match s {
            StructureArg::AffineVi => Structure::AffineVi,
            StructureArg::MixedL1 => Structure::MixedL1,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorSpec {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: Option<u64>,
    #[arg(long, value_enum, default_value = "affine_vi")]
    pub structure: StructureArg,
    /// Overridden by the SPLITSYS_SEED environment variable.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub spec: GeneratorSpec,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    Midpoint,
    Constant,
    Geometric,
}

/// Overrides for [`AlgoParams`].
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub beta_lo: Option<f64>,
    #[arg(long)]
    pub beta_hi: Option<f64>,
    #[arg(long, value_enum)]
    pub beta_schedule: Option<ScheduleArg>,
    /// Step for the constant schedule.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Period of the geometric schedule.
    #[arg(long, default_value_t = 10)]
    pub beta_period: usize,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Outer stopping tolerance on the natural residual.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Per-component fixed-point tolerance.
    #[arg(long)]
    pub tol_inner: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long = "max-ls")]
    pub max_linesearch: Option<usize>,
}

impl ParamArgs {
    pub fn resolve(&self) -> crate::Result<AlgoParams> {
        let mut p = AlgoParams::default();
        if let Some(v) = self.beta_lo {
            p.beta_lo = v;
        }
        if let Some(v) = self.beta_hi {
            p.beta_hi = v;
        }
        p.beta_schedule = match (self.beta_schedule, self.beta) {
            (Some(ScheduleArg::Geometric), _) => BetaSchedule::Geometric {
                period: self.beta_period,
            },
            (Some(ScheduleArg::Midpoint), _) => BetaSchedule::Midpoint,
            (Some(ScheduleArg::Constant), None) => {
                return Err(Error::Config("constant schedule needs --beta".into()))
            }
            (_, Some(beta)) => BetaSchedule::Constant { beta },
            (None, None) => BetaSchedule::Midpoint,
        };
        if let Some(v) = self.theta {
            p.theta = v;
        }
        if let Some(v) = self.delta {
            p.delta = v;
        }
        p.radius = self.radius;
        if let Some(v) = self.tol {
            p.tol_outer = v;
        }
        if let Some(v) = self.tol_inner {
            p.tol_component = v;
        }
        if let Some(v) = self.max_outer {
            p.max_outer = v;
        }
        if let Some(v) = self.max_linesearch {
            p.max_linesearch = v;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Instance JSON file; otherwise one is generated from the flags below.
    #[arg(long, conflicts_with_all = ["n", "m"])]
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub spec: GeneratorSpec,
    /// Accept affine maps whose symmetric part is indefinite.
    #[arg(long)]
    pub allow_unchecked: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Comma-separated starting point; defaults to the instance's start.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Assert the per-iteration invariants and stop at the first violation.
    #[arg(long)]
    pub verify: bool,
    /// Run the fixed-step forward-backward baseline with this step instead.
    #[arg(long)]
    pub baseline_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Random pairs per sampled property.
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    /// Random steps for the step-independence check.
    #[arg(long, default_value_t = 100)]
    pub betas: usize,
    /// Outer iteration cap of the verified solve.
    #[arg(long, default_value_t = 10_000)]
    pub solve_iters: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Named generated suite; `default` is the 20-instance acceptance suite.
    #[arg(long)]
    pub suite: Option<String>,
    /// Instance files to include.
    #[arg(long, num_args = 1..)]
    pub instances: Vec<PathBuf>,
    /// Comma-separated theta values (cells are the product with --delta).
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub max_outer: usize,
    /// Step of the baseline run on single-component instances.
    #[arg(long, default_value_t = 0.5)]
    pub baseline_step: f64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::LinesearchFailure { .. } => EXIT_LINESEARCH_FAILURE,
        _ => EXIT_USAGE,
    }
}

pub fn status_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Solved => EXIT_OK,
        SolveStatus::MaxIterations => EXIT_MAX_ITERATIONS,
        SolveStatus::LinesearchFailure => EXIT_LINESEARCH_FAILURE,
        SolveStatus::Interrupted => EXIT_VERIFY_FAILED,
    }
}

fn effective_seed(flag: u64) -> crate::Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn generate_from(spec: &GeneratorSpec) -> crate::Result<ProblemInstance> {
    let (Some(n), Some(m)) = (spec.n, spec.m) else {
        return Err(Error::Config("need --instance or both --n and --m".into()));
    };
    generate_planted_system(n as usize, m as usize, effective_seed(spec.seed)?, spec.structure.into())
}

/// Resolves an instance from a file or a generator spec.
pub fn resolve_instance(args: &InstanceArgs) -> crate::Result<ProblemInstance> {
    match &args.instance {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            ProblemInstance::from_json(&text, args.allow_unchecked)
        }
        None => generate_from(&args.spec),
    }
}

pub fn cmd_generate(args: &GenerateArgs) -> crate::Result<i32> {
    let inst = generate_from(&args.spec)?;
    inst.save(&args.out)?;
    let beta = AlgoParams::default().beta_mid();
    let res = inst.planted_residual(beta)?.unwrap_or(f64::NAN);
    println!("wrote {}", args.out.display());
    println!("planted residual {res:e}");
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub solver: &'static str,
    pub status: SolveStatus,
    pub stop_reason: Option<StopReason>,
    pub message: Option<String>,
    pub params: AlgoParams,
    pub x_final: Vec<f64>,
    /// `wall_time_ms` inside is volatile.
    pub metrics: Metrics,
    pub invariants: Option<InvariantCounts>,
}

fn write_outputs(dir: &Path, trace: &crate::SolveTrace, report: &RunReport) -> crate::Result<()> {
    fs::create_dir_all(dir)?;
    trace.write_csv(fs::File::create(dir.join("trace.csv"))?)?;
    fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> crate::Result<i32> {
    let inst = resolve_instance(&args.instance)?;
    let params = args.params.resolve()?;
    let x0 = match &args.x0 {
        Some(v) => Vector::from_vec(v.clone()),
        None => inst.default_start(),
    };

    let (outcome, invariants, solver) = if let Some(step) = args.baseline_step {
        let out = solve_baseline_fb(&inst, &x0, step, params.max_outer, params.tol_outer)?;
        (out, None, "baseline_fb")
    } else if args.verify {
        let mut checker = InvariantChecker::new(&inst, &params, true);
        let out = solve_with_monitor(&inst, &params, &x0, &mut checker)?;
        (out, Some(checker.counts), "splitsys")
    } else {
        let out = solve_with_monitor(&inst, &params, &x0, &mut ())?;
        (out, None, "splitsys")
    };

    let metrics = evaluate_run(&outcome.trace, &inst)?;
    println!(
        "status {} after {} iterations, residual {:e}",
        outcome.status.as_str(),
        metrics.iterations,
        metrics.final_residual
    );
    if let Some(msg) = &outcome.message {
        eprintln!("{msg}");
    }
    let report = RunReport {
        instance: inst.name.clone(),
        solver,
        status: outcome.status,
        stop_reason: outcome.stop_reason,
        message: outcome.message.clone(),
        params,
        x_final: outcome.x_final.as_slice().to_vec(),
        metrics,
        invariants,
    };
    write_outputs(&args.out_dir, &outcome.trace, &report)?;
    Ok(status_code(outcome.status))
}

pub fn cmd_verify(args: &VerifyArgs) -> crate::Result<i32> {
    let inst = resolve_instance(&args.instance)?;
    let params = args.params.resolve()?;
    let cfg = SampleConfig {
        pairs: args.pairs,
        betas: args.betas,
        seed: inst.seed.unwrap_or(0),
    };
    let results = run_property_suite(&inst, &params, &cfg)?;
    let mut first_failure = None;
    for r in &results {
        if r.passed() {
            println!("PASS {} ({} checked)", r.name, r.checked);
        } else {
            println!("FAIL {} ({} checked, {} failed, worst excess {:e})", r.name, r.checked, r.failures, r.worst);
            if first_failure.is_none() {
                first_failure = Some(r.clone());
            }
        }
    }

    let solve_params = AlgoParams {
        max_outer: args.solve_iters.min(params.max_outer),
        ..params.clone()
    };
    let mut checker = InvariantChecker::new(&inst, &solve_params, false);
    let out = solve_with_monitor(&inst, &solve_params, &inst.default_start(), &mut checker)?;
    let c = &checker.counts;
    for (name, count) in [
        ("outer Fejer monotonicity", c.fejer_outer_violations),
        ("intra-sweep Fejer chain", c.fejer_chain_violations),
        ("solution inside separating halfspaces", c.containment_violations),
        ("accepted-step inequality", c.accepted_step_violations),
        ("iterates stay in X", c.outside_x_violations),
    ] {
        let tag = if count == 0 { "PASS" } else { "FAIL" };
        println!("{tag} solve: {name} ({} steps, {count} violations)", c.component_steps);
    }
    println!(
        "solve status {} after {} iterations, max linesearch j {}",
        out.status.as_str(),
        out.iterations(),
        c.max_j
    );

    if let Some(r) = first_failure {
        println!("{}", serde_json::to_string(&r)?);
        return Ok(EXIT_VERIFY_FAILED);
    }
    if let Some(v) = &checker.first_violation {
        println!("{}", serde_json::json!({ "violation": v }));
        return Ok(EXIT_VERIFY_FAILED);
    }
    Ok(EXIT_OK)
}

/// Short stable hash of a parameter set.
pub fn params_hash(p: &AlgoParams) -> String {
    let json = serde_json::to_string(p).expect("params serialize");
    hex::encode(Sha256::digest(json.as_bytes()))[..12].to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub params_hash: String,
    pub solver: String,
    pub status: String,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    /// Volatile.
    pub time_ms: f64,
}

fn bench_instance(inst: &ProblemInstance, cells: &[AlgoParams], baseline_step: f64) -> Vec<BenchRow> {
    let x0 = inst.default_start();
    let excluded = oracle_solve(inst, &OracleOptions::for_instance(inst)).is_err();
    let mut rows = Vec::new();
    for p in cells {
        let row = |solver: &str, res: Option<crate::Result<crate::SolveOutcome>>| {
            let mut row = BenchRow {
                instance: inst.name.clone(),
                params_hash: params_hash(p),
                solver: solver.into(),
                status: "excluded".into(),
                iterations: None,
                residual: None,
                time_ms: 0.0,
            };
            match res {
                None => {}
                Some(Ok(out)) => {
                    row.status = out.status.as_str().into();
                    row.iterations = Some(out.iterations());
                    row.residual = Some(out.final_residual());
                    row.time_ms = out.trace.last().map_or(0.0, |r| r.elapsed_ms);
                }
                Some(Err(e)) => row.status = format!("error: {e}"),
            }
            row
        };
        let run = |f: &dyn Fn() -> crate::Result<crate::SolveOutcome>| (!excluded).then(f);
        rows.push(row("splitsys", run(&|| solve_with_monitor(inst, p, &x0, &mut ()))));
        if inst.m == 1 {
            rows.push(row(
                "baseline_fb",
                run(&|| solve_baseline_fb(inst, &x0, baseline_step, p.max_outer, p.tol_outer)),
            ));
        }
    }
    rows
}

pub fn cmd_bench(args: &BenchArgs) -> crate::Result<i32> {
    let mut instances = Vec::new();
    match args.suite.as_deref() {
        Some("default") => {
            for (seed, n, m, s) in default_suite() {
                instances.push(generate_planted_system(n, m, seed, s)?);
            }
        }
        Some(other) => return Err(Error::Config(format!("unknown suite {other:?}"))),
        None => {}
    }
    for path in &args.instances {
        instances.push(ProblemInstance::load(path, false)?);
    }
    if instances.is_empty() {
        return Err(Error::Config("empty suite: pass --suite or --instances".into()));
    }

    let mut cells = Vec::new();
    for &theta in &args.theta {
        for &delta in &args.delta {
            let p = AlgoParams {
                theta,
                delta,
                max_outer: args.max_outer,
                ..AlgoParams::default()
            };
            p.validate()?;
            cells.push(p);
        }
    }

    let mut rows: Vec<BenchRow> = instances
        .par_iter()
        .flat_map_iter(|inst| bench_instance(inst, &cells, args.baseline_step))
        .collect();
    rows.sort_by(|a, b| {
        (&a.instance, &a.params_hash, &a.solver).cmp(&(&b.instance, &b.params_hash, &b.solver))
    });

    let sink: Box<dyn std::io::Write> = match &args.out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let all_failed = rows
        .iter()
        .all(|r| r.status != SolveStatus::Solved.as_str());
    Ok(if all_failed { EXIT_MAX_ITERATIONS } else { EXIT_OK })
}
