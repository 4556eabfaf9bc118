use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use failover::instances::{sample, sample_stream, trial_seed, DistributionSpec};
use failover::model::ProblemParams;
use failover::Error;
use rayon::prelude::*;

use crate::run::{execute, recheck, Alg, Source};
use crate::{emit, parse_dist};

pub const HEADER: &str = "m,trial,alg,utilization,ratio";

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated algorithms; offline-min is not a utilization algorithm.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "worstcase")]
    alg: Vec<Alg>,
    /// Comma-separated machine counts.
    #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "125,1000")]
    m: Vec<usize>,
    /// Trials per (m, alg); 0 gives a header-only table.
    #[arg(long, default_value_t = 50)]
    trials: u64,
    #[arg(long, value_parser = parse_dist, default_value = "uniform:0:0.5")]
    dist: DistributionSpec,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    /// Stream length per machine for the finite-stream algorithms.
    #[arg(long, default_value_t = 8)]
    stream_factor: usize,
    #[arg(long, default_value_t = 1.0)]
    cst1: f64,
    #[arg(long)]
    tail_index: Option<usize>,
    /// Master seed; trial t uses the derived seed of (seed, t) for every m and alg.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// `min(m, (m - 1) B) / 2`.
pub fn utilization_bound(m: usize, b: f64) -> f64 {
    (m as f64).min((m as f64 - 1.0) * b) / 2.0
}

fn trial_row(a: &BenchArgs, m: usize, trial: u64, alg: Alg) -> Result<String> {
    let params = ProblemParams::new(a.b, Some(m))?;
    let seed = trial_seed(a.seed, trial);
    let raw = if alg == Alg::Stochastic {
        let mut stream = sample_stream(&a.dist, seed, &params)?;
        execute(alg, Source::Stream(&mut stream), &params, None, a.cst1, a.tail_index)?
    } else {
        let d = sample(&a.dist, a.stream_factor * m, seed, &params)?;
        execute(alg, Source::Fixed(d.into_inner()), &params, None, a.cst1, a.tail_index)?
    };
    if !recheck(&raw.assignment, &raw.sizes, &params)? {
        return Err(Error::Invariant(format!("{} infeasible at m = {m}, trial {trial}", alg.name())).into());
    }
    let u: f64 = raw.assignment.placements().map(|(j, _)| raw.sizes[j]).sum();
    Ok(format!("{m},{trial},{},{u:.6},{:.6}\n", alg.name(), u / utilization_bound(m, a.b)))
}

pub fn cmd_bench(a: BenchArgs) -> Result<()> {
    if a.alg.contains(&Alg::OfflineMin) {
        return Err(Error::Input("offline-min minimizes machines; bench measures utilization".into()).into());
    }
    if a.jobs == 0 {
        return Err(Error::Input("--jobs must be positive".into()).into());
    }
    if let Some(&m) = a.m.iter().find(|&&m| m < 2) {
        return Err(Error::Input(format!("m must be at least 2, got {m}")).into());
    }
    let mut work = Vec::new();
    for &m in &a.m {
        for t in 0..a.trials {
            work.extend(a.alg.iter().map(|&alg| (m, t, alg)));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let rows: Vec<Result<String>> =
        pool.install(|| work.par_iter().map(|&(m, t, alg)| trial_row(&a, m, t, alg)).collect());
    let mut text = format!("{HEADER}\n");
    for row in rows {
        text.push_str(&row?);
    }
    emit(&a.out, &text)
}
