//! Quantile proxies for the optimum, Hall deficiency of monotone matchings,
//! and the identities behind the convergence of `opt_mach / T`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{quantile_instance, sample, trial_seed, DistributionSpec};
use crate::model::ProblemParams;
use crate::offline_min::{default_epsilon, offline_min_failover};
use crate::oracle::{brute_opt_mach, SearchLimits};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficiencyReport {
    /// `def(j)` for `j = 1..T`.
    pub def: Vec<i64>,
    pub max_def: i64,
    pub matched: usize,
    pub unmatched: usize,
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Greedy monotone matching of `sources` into `targets` (each source to the
/// smallest unused target at least as large). Returns the matched count.
pub fn greedy_monotone_matching(sources: &[f64], targets: &[f64]) -> usize {
    let (x, s) = (sorted(sources), sorted(targets));
    let mut i = 0;
    let mut matched = 0;
    for &v in &x {
        while i < s.len() && s[i] < v {
            i += 1;
        }
        if i == s.len() {
            break;
        }
        matched += 1;
        i += 1;
    }
    matched
}

/// `def(j) = #{X > s_(j-1)} - (T - j)` over ascending `s`, with the greedy
/// matching of `X` into `s`.
pub fn max_deficiency(x: &[f64], s: &[f64]) -> Result<DeficiencyReport> {
    if x.len() != s.len() {
        return Err(Error::Input(format!("|X| = {} but |s| = {}", x.len(), s.len())));
    }
    let t = s.len();
    let xs = sorted(x);
    let ss = sorted(s);
    let above = |v: f64| (xs.len() - xs.partition_point(|&a| a <= v)) as i64;
    let def: Vec<i64> = (1..=t).map(|j| above(ss[j - 1]) - (t - j) as i64).collect();
    let max_def = def.iter().copied().max().unwrap_or(0);
    let matched = greedy_monotone_matching(x, s);
    let unmatched = t - matched;
    if unmatched as i64 != max_def.max(0) {
        return Err(Error::Invariant(format!(
            "greedy left {unmatched} unmatched but the maximum deficiency is {max_def}"
        )));
    }
    Ok(DeficiencyReport { def, max_def, matched, unmatched })
}

/// Roles swapped: `def'(j) = T - j - #{X >= s_j}` for `j = 0..T-1`, and the
/// greedy matching of `s` into `X`.
pub fn reverse_deficiency(x: &[f64], s: &[f64]) -> Result<DeficiencyReport> {
    if x.len() != s.len() {
        return Err(Error::Input(format!("|X| = {} but |s| = {}", x.len(), s.len())));
    }
    let t = s.len();
    let xs = sorted(x);
    let ss = sorted(s);
    let at_least = |v: f64| (xs.len() - xs.partition_point(|&a| a < v)) as i64;
    let def: Vec<i64> = (0..t).map(|j| (t - j) as i64 - at_least(ss[j])).collect();
    let max_def = def.iter().copied().max().unwrap_or(0);
    let matched = greedy_monotone_matching(s, x);
    let unmatched = t - matched;
    if unmatched as i64 != max_def.max(0) {
        return Err(Error::Invariant(format!(
            "greedy left {unmatched} unmatched but the maximum deficiency is {max_def}"
        )));
    }
    Ok(DeficiencyReport { def, max_def, matched, unmatched })
}

/// Checks `T - j >= T mu((s_(j-1), 1]) - 1` and `T - j <= T mu([s_j, 1])`
/// with `s_j = mu^-1(j/T)`, `j = 1..T`.
pub fn quantile_measure_check(spec: &DistributionSpec, t: usize) -> Result<bool> {
    if t == 0 {
        return Err(Error::Input("T must be positive".into()));
    }
    let tf = t as f64;
    for j in 1..=t {
        let prev = spec.quantile((j - 1) as f64 / tf)?;
        let cur = spec.quantile(j as f64 / tf)?;
        let rest = (t - j) as f64;
        if rest < tf * (1.0 - spec.cdf(prev)) - 1.0 - 1e-9 || rest > tf * (1.0 - spec.cdf_left(cur)) + 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ProxyMethod {
    Brute,
    /// Offline pipeline with `epsilon = T^(-1/6)` (clamped to 0.9).
    OfflineMin,
}

impl ProxyMethod {
    pub fn label(&self, t: usize) -> String {
        match self {
            ProxyMethod::Brute => "brute".into(),
            ProxyMethod::OfflineMin => format!("offline-min({:.4})", default_epsilon(t)),
        }
    }
}

/// Machines for the quantile instance `mu_T`; exact for `Brute`, an upper
/// bound for `OfflineMin`.
pub fn proxy_opt(spec: &DistributionSpec, failover: f64, t: usize, method: ProxyMethod) -> Result<usize> {
    let q = quantile_instance(spec, t)?;
    let params = ProblemParams::new(failover, None)?;
    q.demands(&params)?;
    match method {
        ProxyMethod::Brute => brute_opt_mach(&q.sizes, failover, &SearchLimits::default()),
        ProxyMethod::OfflineMin => {
            let r = offline_min_failover(&q.sizes, failover, default_epsilon(t))?;
            if !r.feasible {
                return Err(Error::Invariant(format!("offline solution for T = {t} is infeasible")));
            }
            Ok(r.machines)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub t: usize,
    pub machines: usize,
    pub ratio: f64,
    pub method: String,
    /// `r(T) - r(previous T)`.
    pub diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConvergenceSeries {
    pub records: Vec<ConvergenceRecord>,
}

impl ConvergenceSeries {
    /// Ratio at the largest evaluated `T`.
    pub fn c_estimate(&self) -> Option<f64> {
        self.records.last().map(|r| r.ratio)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,machines,ratio,diff\n");
        for r in &self.records {
            let diff = r.diff.map(|d| format!("{d:.6}")).unwrap_or_default();
            out.push_str(&format!("{},{},{:.6},{}\n", r.t, r.machines, r.ratio, diff));
        }
        out
    }
}

pub fn estimate_c(
    spec: &DistributionSpec,
    failover: f64,
    t_list: &[usize],
    method: ProxyMethod,
) -> Result<ConvergenceSeries> {
    let mut series = ConvergenceSeries::default();
    let mut prev: Option<f64> = None;
    for &t in t_list {
        let machines = proxy_opt(spec, failover, t, method)?;
        let ratio = machines as f64 / t as f64;
        series.records.push(ConvergenceRecord {
            t,
            machines,
            ratio,
            method: method.label(t),
            diff: prev.map(|p| ratio - p),
        });
        prev = Some(ratio);
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LbCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `opt(mu_T) >= T opt(mu_n) / n - 2 - 2 T^2 / n`, both sides exact.
pub fn lb_identity_check(spec: &DistributionSpec, failover: f64, t: usize, n: usize) -> Result<LbCheck> {
    if t == 0 || t > n {
        return Err(Error::Input(format!("need 1 <= T <= n, got T = {t}, n = {n}")));
    }
    let lhs = proxy_opt(spec, failover, t, ProxyMethod::Brute)? as f64;
    let opt_n = proxy_opt(spec, failover, n, ProxyMethod::Brute)? as f64;
    let (tf, nf) = (t as f64, n as f64);
    let rhs = tf * opt_n / nf - 2.0 - 2.0 * tf * tf / nf;
    Ok(LbCheck { lhs, rhs, holds: lhs >= rhs - 1e-9 })
}

/// `opt(J1 + J2) <= opt(J1) + opt(J2)` by the exact oracle.
pub fn subadditivity_check(j1: &[f64], j2: &[f64], failover: f64) -> Result<bool> {
    let limits = SearchLimits::default();
    let opt = |j: &[f64]| if j.is_empty() { Ok(0) } else { brute_opt_mach(j, failover, &limits) };
    let joint: Vec<f64> = j1.iter().chain(j2).copied().collect();
    Ok(opt(&joint)? <= opt(j1)? + opt(j2)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficiencyStats {
    pub t: usize,
    pub trials: usize,
    /// Mean of `max(0, max_j def(j))`.
    pub mean_max_def: f64,
    pub normalized: f64,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

/// Monte-Carlo over samples `X` of size `T` against the quantile grid of `spec`.
pub fn deficiency_statistics(spec: &DistributionSpec, t: usize, trials: usize, seed: u64) -> Result<DeficiencyStats> {
    if trials == 0 {
        return Err(Error::Input("trials must be positive".into()));
    }
    let grid = quantile_instance(spec, t)?.sizes;
    // Sizes up to 1 need failover capacity 2 to be valid demands.
    let params = ProblemParams::new(2.0, None)?;
    let mut defs = Vec::with_capacity(trials);
    for trial in 0..trials {
        let x = sample(spec, t, trial_seed(seed, trial as u64), &params)?;
        defs.push(max_deficiency(x.sizes(), &grid)?.max_def.max(0) as f64);
    }
    let mean = defs.iter().sum::<f64>() / trials as f64;
    defs.sort_by(f64::total_cmp);
    let q = |p: f64| defs[((p * trials as f64).ceil() as usize).clamp(1, trials) - 1];
    Ok(DeficiencyStats {
        t,
        trials,
        mean_max_def: mean,
        normalized: mean / (t as f64).sqrt(),
        p50: q(0.5),
        p90: q(0.9),
        max: defs[trials - 1],
    })
}
