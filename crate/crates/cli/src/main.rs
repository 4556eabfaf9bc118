//! `failover` command-line harness.
//!
//! Exit codes: 0 success, 2 input error, 3 limits refusal, 4 invariant breach
//! (including a report whose recomputed feasibility is false).

mod bench;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use failover::configlp::{make_types, solve_config_lp_with, LpOptions, PricingMode, TypeMode};
use failover::convergence::{estimate_c, ProxyMethod};
use failover::instances::{sample, DistributionSpec, InstanceFile};
use failover::oracle::{brute_max_prefix, brute_opt_mach, SearchLimits};
use failover::model::ProblemParams;
use serde_json::json;

#[derive(Parser)]
#[command(name = "failover", version, about = "Demand placement on machine pairs under failover capacity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an instance file.
    Gen(GenArgs),
    /// Run one algorithm on one instance and print a report.
    Run(run::RunArgs),
    /// Utilization table over machine counts and trials.
    ///
    /// CSV columns: m, trial, alg, utilization (sum of placed sizes),
    /// ratio (utilization / (min(m, (m - 1) B) / 2)).
    Bench(bench::BenchArgs),
    /// Machines per demand of quantile instances, as CSV `T,machines,ratio,diff`.
    Converge(ConvergeArgs),
    /// Exact brute-force answers for small instances.
    Oracle(OracleArgs),
    /// Solve the configuration LP of an instance.
    Lp(LpArgs),
}

pub fn parse_dist(s: &str) -> std::result::Result<DistributionSpec, String> {
    s.parse().map_err(|e: failover::Error| e.to_string())
}

/// Writes to `out`, or stdout when absent.
pub fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(failover::Error::from)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn read_instance(path: &Path) -> Result<InstanceFile> {
    InstanceFile::read(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Clone, Copy, ValueEnum)]
enum InstanceFormat {
    Json,
    Text,
}

#[derive(Args)]
struct GenArgs {
    /// `uniform:LO:HI`, `point:V`, `discrete:V1,V2:W1,W2` or `mixture:W1@SPEC1;W2@SPEC2`.
    #[arg(long, value_parser = parse_dist)]
    dist: DistributionSpec,
    #[arg(long)]
    n: usize,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InstanceFormat::Json)]
    format: InstanceFormat,
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let params = ProblemParams::new(a.b, a.m)?;
    let d = sample(&a.dist, a.n, a.seed, &params)?;
    let file = InstanceFile { failover_capacity: a.b, m: a.m, sizes: d.into_inner() };
    let text = match a.format {
        InstanceFormat::Json => file.to_json()? + "\n",
        InstanceFormat::Text => file.to_text(),
    };
    emit(&a.out, &text)
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    OfflineMin,
    Brute,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, value_parser = parse_dist)]
    dist: DistributionSpec,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    /// Comma-separated quantile instance sizes.
    #[arg(long = "T", value_delimiter = ',', num_args = 0..)]
    t: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Method::OfflineMin)]
    method: Method,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
}

fn cmd_converge(a: ConvergeArgs) -> Result<()> {
    let method = match a.method {
        Method::OfflineMin => ProxyMethod::OfflineMin,
        Method::Brute => ProxyMethod::Brute,
    };
    let series = estimate_c(&a.dist, a.b, &a.t, method)?;
    let text = match a.format {
        TableFormat::Csv => series.to_csv(),
        TableFormat::Json => serde_json::to_string_pretty(&series)? + "\n",
    };
    emit(&a.out, &text)
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    Optmach,
    Prefix,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = OracleMode::Optmach)]
    mode: OracleMode,
    /// Machine count for `prefix`; defaults to the instance's.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = SearchLimits::default().max_demands)]
    max_demands: usize,
    #[arg(long, default_value_t = SearchLimits::default().max_machines)]
    max_machines: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let file = read_instance(&a.instance)?;
    let limits = SearchLimits { max_demands: a.max_demands, max_machines: a.max_machines, ..Default::default() };
    let b = file.failover_capacity;
    let value = match a.mode {
        OracleMode::Optmach => {
            let opt = brute_opt_mach(&file.sizes, b, &limits)?;
            json!({ "mode": "optmach", "B": b, "n": file.sizes.len(), "opt_mach": opt })
        }
        OracleMode::Prefix => {
            let m = a.m.or(file.m).ok_or_else(|| failover::Error::Config("prefix mode needs --m".into()))?;
            let (prefix, total) = brute_max_prefix(&file.sizes, b, m, &limits)?;
            json!({ "mode": "prefix", "B": b, "m": m, "prefix": prefix, "utilization": total })
        }
    };
    emit(&a.out, &(serde_json::to_string_pretty(&value)? + "\n"))
}

#[derive(Clone, Copy, ValueEnum)]
enum Types {
    BySize,
    PerDemand,
}

#[derive(Args)]
struct LpArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Types::BySize)]
    types: Types,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Approximate pricing with this accuracy instead of exact pricing.
    #[arg(long)]
    fptas: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_lp(a: LpArgs) -> Result<()> {
    let file = read_instance(&a.instance)?;
    let mode = match a.types {
        Types::BySize => TypeMode::BySize,
        Types::PerDemand => TypeMode::PerDemand,
    };
    let partition = make_types(&file.demands()?, mode);
    let pricing = a.fptas.map_or(PricingMode::Exact, PricingMode::Fptas);
    let opts = LpOptions { tol: a.tol, pricing, ..Default::default() };
    let r = solve_config_lp_with(&partition, file.failover_capacity, &opts)?;
    let columns: Vec<_> =
        r.columns.iter().map(|(c, x)| json!({ "counts": c.counts(), "value": x })).collect();
    let value = json!({
        "objective": r.objective,
        "columns": columns,
        "iterations": r.iterations,
        "types": partition.types(),
    });
    emit(&a.out, &(serde_json::to_string_pretty(&value)? + "\n"))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use failover::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::LimitExceeded(_) | E::IterationLimit { .. }) => 3,
        Some(E::Invariant(_)) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => run::cmd_run(a),
        Command::Bench(a) => bench::cmd_bench(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Lp(a) => cmd_lp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
