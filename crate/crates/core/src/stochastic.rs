//! Learn-and-pack online algorithm for i.i.d. demand sizes.
//!
//! Each round works in phases `k = 0, 1, ...`: the first `2^k` demands of the
//! round are solved offline into a template, and the next `2^k` arrivals are
//! matched into template slots of at least their size. Rounds never reuse
//! machines of earlier rounds.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Assignment, Pair, ProblemParams};
use crate::offline_min::{default_epsilon, offline_min_failover};

/// Open template slots ordered by size, then id.
#[derive(Debug, Clone, Default)]
pub struct MatcherState {
    open: BTreeSet<(u64, usize)>,
}

// Nonnegative floats order like their bit patterns.
fn key(size: f64) -> u64 {
    size.max(0.0).to_bits()
}

impl MatcherState {
    pub fn new(slots: impl IntoIterator<Item = (f64, usize)>) -> Self {
        Self { open: slots.into_iter().map(|(s, id)| (key(s), id)).collect() }
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }
}

/// Best fit: removes and returns the smallest open slot of size at least
/// `size`, lowest id among equals.
pub fn online_monotone_match(state: &mut MatcherState, size: f64) -> Option<usize> {
    let found = *state.open.range((key(size), 0)..).next()?;
    state.open.remove(&found);
    Some(found.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StochasticParams {
    pub cst1: f64,
}

impl Default for StochasticParams {
    fn default() -> Self {
        Self { cst1: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RoundOutcome {
    /// The stop rule fired before a phase.
    Stopped,
    /// An unmatched demand needed machines beyond the budget; it was rejected.
    Failed,
    /// The stream ended.
    Exhausted,
    /// Budget below two machines; nothing was consumed.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseLog {
    pub k: u32,
    pub n_k: usize,
    pub template_machines: usize,
    pub matched: usize,
    pub unmatched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub budget: usize,
    pub first_demand: usize,
    pub consumed: usize,
    pub opened: usize,
    pub outcome: RoundOutcome,
    pub phases: Vec<PhaseLog>,
}

/// Stop-rule slack `cst1 sqrt(n) ln(n)^(3/4) + 2 m^(5/6)`.
pub fn stop_slack(n_k: usize, m: usize, cst1: f64) -> f64 {
    let n = n_k as f64;
    let log_term = if n_k <= 1 { 0.0 } else { n.ln().powf(0.75) };
    cst1 * n.sqrt() * log_term + 2.0 * (m as f64).powf(5.0 / 6.0)
}

/// Stream consumed so far plus the cursor of the next unseen demand.
pub struct Arrivals<'a> {
    source: &'a mut dyn Iterator<Item = f64>,
    pub seen: Vec<f64>,
}

impl<'a> Arrivals<'a> {
    pub fn new(source: &'a mut dyn Iterator<Item = f64>) -> Self {
        Self { source, seen: Vec::new() }
    }

    fn next(&mut self) -> Option<(usize, f64)> {
        let s = self.source.next()?;
        self.seen.push(s);
        Some((self.seen.len() - 1, s))
    }
}

/// One round on at most `budget` machines numbered from `offset`.
pub fn one_round(
    arrivals: &mut Arrivals<'_>,
    assignment: &mut Assignment,
    budget: usize,
    m: usize,
    failover: f64,
    offset: usize,
    params: &StochasticParams,
) -> Result<RoundReport> {
    let first_demand = arrivals.seen.len();
    let mut report = RoundReport {
        budget,
        first_demand,
        consumed: 0,
        opened: 0,
        outcome: RoundOutcome::Skipped,
        phases: Vec::new(),
    };
    if budget < 2 {
        return Ok(report);
    }
    let Some((j, _)) = arrivals.next() else {
        report.outcome = RoundOutcome::Exhausted;
        return Ok(report);
    };
    assignment.place(j, Pair::of(offset, offset + 1));
    report.opened = 2;
    report.consumed = 1;
    for k in 0u32.. {
        let n_k = 1usize << k;
        let history = &arrivals.seen[first_demand..first_demand + n_k];
        let offline = offline_min_failover(history, failover, default_epsilon(n_k))?;
        if !offline.feasible {
            return Err(Error::Invariant(format!("template for phase {k} is infeasible")));
        }
        let template = offline.template;
        let need = report.opened as f64 + template.machines as f64 + stop_slack(n_k, m, params.cst1);
        if need > budget as f64 {
            report.outcome = RoundOutcome::Stopped;
            return Ok(report);
        }
        let base = offset + report.opened;
        report.opened += template.machines;
        let mut matcher =
            MatcherState::new(template.slots.iter().enumerate().map(|(id, s)| (s.size, id)));
        let mut log =
            PhaseLog { k, n_k, template_machines: template.machines, matched: 0, unmatched: 0 };
        for _ in 0..n_k {
            let Some((j, s)) = arrivals.next() else {
                report.phases.push(log);
                report.outcome = RoundOutcome::Exhausted;
                return Ok(report);
            };
            match online_monotone_match(&mut matcher, s) {
                Some(id) => {
                    let slot = &template.slots[id];
                    if s > slot.size {
                        return Err(Error::Invariant(format!(
                            "demand {s} matched to smaller slot {}",
                            slot.size
                        )));
                    }
                    assignment.place(j, Pair::of(base + slot.edge.lo(), base + slot.edge.hi()));
                    log.matched += 1;
                    report.consumed += 1;
                }
                None => {
                    if report.opened + 2 > budget {
                        report.consumed += 1;
                        report.phases.push(log);
                        report.outcome = RoundOutcome::Failed;
                        return Ok(report);
                    }
                    let u = offset + report.opened;
                    assignment.place(j, Pair::of(u, u + 1));
                    report.opened += 2;
                    log.unmatched += 1;
                    report.consumed += 1;
                }
            }
        }
        report.phases.push(log);
    }
    unreachable!("phase loop only exits by returning")
}

#[derive(Debug, Clone, Serialize)]
pub struct StochasticRun {
    pub sizes: Vec<f64>,
    #[serde(skip)]
    pub assignment: Assignment,
    pub machines_opened: usize,
    pub rounds: Vec<RoundReport>,
    /// Demands rejected by a failing round.
    pub rejected: Vec<usize>,
}

impl StochasticRun {
    pub fn utilization(&self) -> f64 {
        self.assignment.placements().map(|(j, _)| self.sizes[j]).sum()
    }
}

/// `ceil(ln m / ln(4/3))`, at least 1.
pub fn round_count(m: usize) -> usize {
    ((m as f64).ln() / (4.0f64 / 3.0).ln()).ceil().max(1.0) as usize
}

/// Runs the round loop over `stream` until the rounds or the stream run out.
pub fn failover_stochastic(
    stream: &mut dyn Iterator<Item = f64>,
    problem: &ProblemParams<f64>,
    params: &StochasticParams,
) -> Result<StochasticRun> {
    let m = problem.budget()?;
    if !(params.cst1 >= 0.0 && params.cst1.is_finite()) {
        return Err(Error::Config(format!("cst1 must be a nonnegative number, got {}", params.cst1)));
    }
    let max = problem.max_size();
    let mut checked = stream.map(|s| s.clamp(0.0, max));
    let mut arrivals = Arrivals::new(&mut checked);
    let mut assignment = Assignment::new();
    let mut opened = 0;
    let mut rounds = Vec::new();
    let mut rejected = Vec::new();
    for _ in 0..round_count(m) {
        let r = one_round(
            &mut arrivals,
            &mut assignment,
            m - opened,
            m,
            problem.failover_capacity,
            opened,
            params,
        )?;
        opened += r.opened;
        if r.outcome == RoundOutcome::Failed {
            rejected.push(r.first_demand + r.consumed - 1);
        }
        let done = r.outcome == RoundOutcome::Exhausted;
        rounds.push(r);
        if done {
            break;
        }
    }
    Ok(StochasticRun { sizes: arrivals.seen, assignment, machines_opened: opened, rounds, rejected })
}
