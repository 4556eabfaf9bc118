use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, ValueEnum};
use failover::instances::{sample, sample_stream, DistributionSpec};
use failover::model::{check_feasible, compute_loads, Assignment, DemandSequence, ProblemParams};
use failover::offline_min::{default_epsilon, offline_min_failover};
use failover::stochastic::{failover_stochastic, StochasticParams};
use failover::worstcase::{
    run_online, run_small_demands, tail_index, BestFitPair, FailoverWorstCase, LexFirstFit, OnlinePolicy, SmallDemands,
    SpreadFirst,
};
use failover::Error;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::{emit, parse_dist, read_instance, TableFormat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Alg {
    Worstcase,
    Small,
    Stochastic,
    OfflineMin,
    LexFirstFit,
    SpreadFirst,
    BestFitPair,
}

impl Alg {
    pub fn name(self) -> &'static str {
        match self {
            Alg::Worstcase => "worstcase",
            Alg::Small => "small",
            Alg::Stochastic => "stochastic",
            Alg::OfflineMin => "offline-min",
            Alg::LexFirstFit => "lex-first-fit",
            Alg::SpreadFirst => "spread-first",
            Alg::BestFitPair => "best-fit-pair",
        }
    }
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    alg: Alg,
    /// Instance file (JSON or text); otherwise demands are sampled from --dist.
    #[arg(long, conflicts_with = "dist")]
    instance: Option<PathBuf>,
    #[arg(long, value_parser = parse_dist)]
    dist: Option<DistributionSpec>,
    /// Demands to sample; stochastic runs sample without end when absent.
    #[arg(long)]
    n: Option<usize>,
    /// Failover capacity; overrides the instance file.
    #[arg(long = "B")]
    b: Option<f64>,
    /// Machine budget; overrides the instance file.
    #[arg(long)]
    m: Option<usize>,
    /// Offline accuracy; defaults to min(0.9, n^(-1/6)).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    cst1: f64,
    /// Clique parameter L of the small-demands algorithm; defaults to max(3, ceil(m^(1/3))).
    #[arg(long)]
    tail_index: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    format: TableFormat,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub algorithm: String,
    pub instance_digest: String,
    pub m: Option<usize>,
    #[serde(rename = "B")]
    pub failover_capacity: f64,
    pub n: usize,
    pub placed: usize,
    pub utilization: f64,
    pub machines_opened: usize,
    pub stop_index: Option<usize>,
    pub feasible: bool,
    pub wall_time_ms: f64,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub details: Map<String, Value>,
}

impl RunReport {
    const CSV_HEADER: &'static str =
        "algorithm,instance_digest,m,B,n,placed,utilization,machines_opened,stop_index,feasible,wall_time_ms,seed";

    fn csv(&self) -> String {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{}\n{},{},{},{},{},{},{:.6},{},{},{},{:.3},{}\n",
            Self::CSV_HEADER,
            self.algorithm,
            self.instance_digest,
            opt(self.m),
            self.failover_capacity,
            self.n,
            self.placed,
            self.utilization,
            self.machines_opened,
            opt(self.stop_index),
            self.feasible,
            self.wall_time_ms,
            self.seed.map(|s| s.to_string()).unwrap_or_default()
        )
    }
}

/// First 16 hex digits of SHA-256 over B, m and the size bit patterns.
pub fn instance_digest(b: f64, m: Option<usize>, sizes: &[f64]) -> String {
    let mut h = Sha256::new();
    h.update(b.to_le_bytes());
    h.update((m.map_or(u64::MAX, |m| m as u64)).to_le_bytes());
    for s in sizes {
        h.update(s.to_le_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Recomputes feasibility of `assignment` from scratch.
pub fn recheck(assignment: &Assignment, sizes: &[f64], params: &ProblemParams<f64>) -> Result<bool> {
    let d = DemandSequence::new(sizes.to_vec(), params)?;
    Ok(check_feasible(&compute_loads(assignment, &d)?, params, 1e-9).is_ok())
}

pub fn policy(alg: Alg, params: &ProblemParams<f64>, l: Option<usize>) -> Result<Box<dyn OnlinePolicy<f64>>> {
    Ok(match alg {
        Alg::Worstcase => Box::new(FailoverWorstCase::new(params)?),
        Alg::Small => Box::new(SmallDemands::new(params, l.unwrap_or(tail_index(params.budget()?)))?),
        Alg::LexFirstFit => Box::new(LexFirstFit::new(params)?),
        Alg::SpreadFirst => Box::new(SpreadFirst::new(params)?),
        Alg::BestFitPair => Box::new(BestFitPair::new(params)?),
        Alg::Stochastic | Alg::OfflineMin => {
            return Err(Error::Config(format!("{} is not an online policy", alg.name())).into())
        }
    })
}

/// Outcome of one algorithm run before feasibility is rechecked.
pub struct RawRun {
    pub sizes: Vec<f64>,
    pub assignment: Assignment,
    pub machines_opened: usize,
    pub stop_index: Option<usize>,
    pub details: Map<String, Value>,
}

pub enum Source<'a> {
    Fixed(Vec<f64>),
    Stream(&'a mut dyn Iterator<Item = f64>),
}

pub fn execute(
    alg: Alg,
    source: Source<'_>,
    params: &ProblemParams<f64>,
    epsilon: Option<f64>,
    cst1: f64,
    l: Option<usize>,
) -> Result<RawRun> {
    let mut details = Map::new();
    match (alg, source) {
        (Alg::Stochastic, source) => {
            let mut fixed;
            let stream: &mut dyn Iterator<Item = f64> = match source {
                Source::Fixed(sizes) => {
                    fixed = sizes.into_iter();
                    &mut fixed
                }
                Source::Stream(s) => s,
            };
            let run = failover_stochastic(stream, params, &StochasticParams { cst1 })?;
            details.insert("rounds".into(), json!(run.rounds.len()));
            details.insert("rejected".into(), json!(run.rejected));
            let consumed = run.sizes.len();
            Ok(RawRun {
                machines_opened: run.machines_opened,
                stop_index: Some(consumed),
                assignment: run.assignment,
                sizes: run.sizes,
                details,
            })
        }
        (_, Source::Stream(_)) => Err(Error::Input(format!("{} needs a finite instance", alg.name())).into()),
        (Alg::OfflineMin, Source::Fixed(sizes)) => {
            let eps = epsilon.unwrap_or_else(|| default_epsilon(sizes.len()));
            let r = offline_min_failover(&sizes, params.failover_capacity, eps)?;
            details.insert("lp_value".into(), json!(r.lp_value));
            details.insert("epsilon".into(), json!(r.epsilon));
            details.insert("breakdown".into(), serde_json::to_value(r.breakdown)?);
            details.insert("machines".into(), json!(r.machines));
            Ok(RawRun { machines_opened: r.machines, stop_index: None, assignment: r.assignment, sizes, details })
        }
        (alg, Source::Fixed(sizes)) => {
            let d = DemandSequence::new(sizes, params)?;
            let (assignment, stop) = if alg == Alg::Small {
                run_small_demands(&d, params, l.unwrap_or(tail_index(params.budget()?)))?
            } else {
                run_online(policy(alg, params, l)?.as_mut(), &d, params)?
            };
            Ok(RawRun {
                machines_opened: assignment.machines_opened(),
                stop_index: Some(stop),
                assignment,
                sizes: d.into_inner(),
                details,
            })
        }
    }
}

pub fn cmd_run(a: RunArgs) -> Result<()> {
    let (b, m, source_sizes, seed) = match (&a.instance, &a.dist) {
        (Some(path), _) => {
            let file = read_instance(path)?;
            (a.b.unwrap_or(file.failover_capacity), a.m.or(file.m), Some(file.sizes), None)
        }
        (None, Some(_)) => (a.b.unwrap_or(1.0), a.m, None, Some(a.seed)),
        (None, None) => return Err(Error::Input("give --instance or --dist".into()).into()),
    };
    let params = ProblemParams::new(b, m)?;
    let start = Instant::now();
    let raw = match (source_sizes, &a.dist, a.n) {
        (Some(sizes), _, _) => execute(a.alg, Source::Fixed(sizes), &params, a.epsilon, a.cst1, a.tail_index)?,
        (None, Some(dist), Some(n)) => {
            let d = sample(dist, n, a.seed, &params)?;
            execute(a.alg, Source::Fixed(d.into_inner()), &params, a.epsilon, a.cst1, a.tail_index)?
        }
        (None, Some(dist), None) if a.alg == Alg::Stochastic => {
            let mut stream = sample_stream(dist, a.seed, &params)?;
            execute(a.alg, Source::Stream(&mut stream), &params, a.epsilon, a.cst1, a.tail_index)?
        }
        _ => return Err(Error::Input("--n is required for this algorithm".into()).into()),
    };
    let wall = start.elapsed();
    let feasible = recheck(&raw.assignment, &raw.sizes, &params)?;
    let report = RunReport {
        algorithm: a.alg.name().into(),
        instance_digest: instance_digest(b, m, &raw.sizes),
        m,
        failover_capacity: b,
        n: raw.sizes.len(),
        placed: raw.assignment.len(),
        utilization: raw.assignment.placements().map(|(j, _)| raw.sizes[j]).sum(),
        machines_opened: raw.machines_opened,
        stop_index: raw.stop_index,
        feasible,
        wall_time_ms: wall.as_secs_f64() * 1e3,
        seed,
        details: raw.details,
    };
    let text = match a.format {
        TableFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
        TableFormat::Csv => report.csv(),
    };
    emit(&a.out, &text)?;
    if !report.feasible {
        return Err(Error::Invariant(format!("{} produced an infeasible assignment", report.algorithm)).into());
    }
    Ok(())
}
