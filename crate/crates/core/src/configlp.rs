//! Configuration LP for machine minimization.
//!
//! Demands are grouped into types `(s_t, n_t)`. A configuration is a multiset
//! of types one machine can host: `sum n_t(C) s_t <= 1` and
//! `sum n_t(C) s_t + max s_t <= B`. The LP
//!
//! ```text
//! min sum_C x_C   s.t.  sum_C n_t(C) x_C >= 2 n_t,  x >= 0
//! ```
//!
//! is solved by column generation. The restricted master is solved in its
//! dual (packing) form, whose row multipliers are the `x_C`; pricing is a
//! bounded knapsack per candidate largest type.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DemandSequence;
use crate::simplex::PackingTableau;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeMode {
    PerDemand,
    BySize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypePartition {
    types: Vec<(f64, usize)>,
}

impl TypePartition {
    pub fn new(types: Vec<(f64, usize)>) -> Result<Self> {
        for &(s, n) in &types {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Input(format!("type size {s} is not a finite nonnegative number")));
            }
            if n == 0 {
                return Err(Error::Input(format!("type of size {s} has zero demands")));
            }
        }
        Ok(Self { types })
    }

    pub fn empty() -> Self {
        Self { types: Vec::new() }
    }

    pub fn types(&self) -> &[(f64, usize)] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn size(&self, t: usize) -> f64 {
        self.types[t].0
    }

    pub fn count(&self, t: usize) -> usize {
        self.types[t].1
    }

    pub fn demands(&self) -> usize {
        self.types.iter().map(|&(_, n)| n).sum()
    }

    /// Merges types of bitwise-equal size, ordered by size.
    pub fn merged(&self) -> Self {
        let mut types = self.types.clone();
        types.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, usize)> = Vec::new();
        for (s, n) in types {
            match out.last_mut() {
                Some(last) if last.0.to_bits() == s.to_bits() => last.1 += n,
                _ => out.push((s, n)),
            }
        }
        Self { types: out }
    }

    /// Every count multiplied by `k`.
    pub fn scaled(&self, k: usize) -> Self {
        Self { types: self.types.iter().map(|&(s, n)| (s, n * k)).collect() }
    }
}

pub fn make_types(demands: &DemandSequence<f64>, mode: TypeMode) -> TypePartition {
    let singles = TypePartition { types: demands.sizes().iter().map(|&s| (s, 1)).collect() };
    match mode {
        TypeMode::PerDemand => singles,
        TypeMode::BySize => singles.merged(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Configuration {
    counts: Vec<u32>,
}

impl Configuration {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn empty(types: usize) -> Self {
        Self { counts: vec![0; types] }
    }

    pub fn singleton(types: usize, t: usize) -> Self {
        let mut c = Self::empty(types);
        c.counts[t] = 1;
        c
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, t: usize) -> u32 {
        self.counts[t]
    }

    pub fn set(&mut self, t: usize, n: u32) {
        self.counts[t] = n;
    }

    pub fn items(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    pub fn load(&self, partition: &TypePartition) -> f64 {
        self.counts.iter().enumerate().map(|(t, &c)| c as f64 * partition.size(t)).sum()
    }

    pub fn largest(&self, partition: &TypePartition) -> f64 {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(t, _)| partition.size(t))
            .fold(0.0, f64::max)
    }
}

pub fn config_valid(config: &Configuration, partition: &TypePartition, failover: f64, tol: f64) -> bool {
    if config.counts.len() != partition.len() {
        return false;
    }
    let load = config.load(partition);
    load <= 1.0 + tol && load + config.largest(partition) <= failover + tol
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PricingMode {
    Exact,
    /// Knapsack FPTAS with relative error `epsilon` per candidate largest type.
    Fptas(f64),
}

const VALUE_EPS: f64 = 1e-12;

/// Largest count of a type a configuration may hold on its own.
fn count_cap(size: f64, n: usize, tol: f64) -> u32 {
    if size <= 0.0 {
        (2 * n) as u32
    } else {
        ((1.0 + tol) / size).floor() as u32
    }
}

#[derive(Clone, Copy)]
struct Item {
    t: usize,
    size: f64,
    value: f64,
    cap: u32,
}

struct Knapsack<'a> {
    items: &'a [Item],
    best_value: f64,
    best: Vec<u32>,
    current: Vec<u32>,
    tol: f64,
}

impl Knapsack<'_> {
    fn bound(&self, from: usize, mut room: f64) -> f64 {
        let mut v = 0.0;
        for it in &self.items[from..] {
            if it.size <= 0.0 {
                v += it.value * it.cap as f64;
                continue;
            }
            if room <= 0.0 {
                break;
            }
            let take = (room / it.size).min(it.cap as f64);
            v += take * it.value;
            room -= take * it.size;
        }
        v
    }

    fn search(&mut self, i: usize, room: f64, value: f64) {
        if value > self.best_value + VALUE_EPS {
            self.best_value = value;
            self.best.clone_from(&self.current);
        }
        if i == self.items.len() || value + self.bound(i, room.max(0.0)) <= self.best_value + VALUE_EPS {
            return;
        }
        let it = self.items[i];
        let fit = if it.size <= 0.0 {
            it.cap
        } else {
            (((room + self.tol) / it.size).floor().max(0.0) as u32).min(it.cap)
        };
        for c in (0..=fit).rev() {
            self.current[i] = c;
            self.search(i + 1, room - c as f64 * it.size, value + c as f64 * it.value);
        }
        self.current[i] = 0;
    }
}

/// Best configuration with `t_star` as a largest type, by branch and bound.
fn price_with_largest(
    duals: &[f64],
    partition: &TypePartition,
    failover: f64,
    t_star: usize,
    incumbent: f64,
    tol: f64,
    mode: PricingMode,
) -> Result<Option<(Configuration, f64)>> {
    let s_star = partition.size(t_star);
    let room = (1.0 - s_star).min(failover - 2.0 * s_star);
    if room < -tol {
        return Ok(None);
    }
    let mut items: Vec<Item> = (0..partition.len())
        .filter(|&t| duals[t] > 0.0 && partition.size(t) <= s_star)
        .map(|t| {
            let mut cap = count_cap(partition.size(t), partition.count(t), tol);
            if t == t_star {
                cap = cap.saturating_sub(1);
            }
            Item { t, size: partition.size(t), value: duals[t], cap }
        })
        .filter(|it| it.cap > 0)
        .collect();
    items.sort_by(|a, b| {
        let da = if a.size > 0.0 { a.value / a.size } else { f64::INFINITY };
        let db = if b.size > 0.0 { b.value / b.size } else { f64::INFINITY };
        db.total_cmp(&da).then(a.t.cmp(&b.t))
    });
    let room = room.max(0.0);
    let counts = match mode {
        PricingMode::Exact => {
            let mut k = Knapsack {
                items: &items,
                best_value: -1.0,
                best: vec![0; items.len()],
                current: vec![0; items.len()],
                tol,
            };
            let ub = duals[t_star] + k.bound(0, room);
            if ub <= incumbent + VALUE_EPS {
                return Ok(None);
            }
            k.search(0, room, 0.0);
            k.best
        }
        PricingMode::Fptas(eps) => fptas_knapsack(&items, room, eps, tol)?,
    };
    let mut config = Configuration::empty(partition.len());
    config.set(t_star, 1);
    for (it, &c) in items.iter().zip(&counts) {
        config.counts[it.t] += c;
    }
    let value = config.counts.iter().enumerate().map(|(t, &c)| c as f64 * duals[t]).sum();
    Ok(Some((config, value)))
}

/// Profit-scaling knapsack FPTAS over binary-split copies of each item.
fn fptas_knapsack(items: &[Item], room: f64, eps: f64, tol: f64) -> Result<Vec<u32>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("FPTAS epsilon must lie in (0, 1), got {eps}")));
    }
    // (item index, multiplicity, size, value)
    let mut bundles: Vec<(usize, u32, f64, f64)> = Vec::new();
    for (i, it) in items.iter().enumerate() {
        let fit = if it.size > 0.0 { (((room + tol) / it.size).floor() as u32).min(it.cap) } else { it.cap };
        let mut left = fit;
        let mut k = 1;
        while left > 0 {
            let take = k.min(left);
            bundles.push((i, take, take as f64 * it.size, take as f64 * it.value));
            left -= take;
            k *= 2;
        }
    }
    let mut counts = vec![0; items.len()];
    let Some(vmax) = bundles.iter().map(|b| b.3).reduce(f64::max) else {
        return Ok(counts);
    };
    let n = bundles.len();
    let scale = eps * vmax / n as f64;
    let profit: Vec<usize> = bundles.iter().map(|b| (b.3 / scale).floor() as usize).collect();
    let total: usize = profit.iter().sum();
    if n.saturating_mul(total + 1) > 50_000_000 {
        return Err(Error::LimitExceeded(format!(
            "FPTAS table of {n} x {} entries is too large",
            total + 1
        )));
    }
    // weight[p]: least size reaching scaled profit exactly p.
    let mut weight = vec![f64::INFINITY; total + 1];
    weight[0] = 0.0;
    let mut take = vec![vec![false; total + 1]; n];
    for (b, &p) in profit.iter().enumerate() {
        for q in (p..=total).rev() {
            let w = weight[q - p] + bundles[b].2;
            if w < weight[q] && w <= room + tol {
                weight[q] = w;
                take[b][q] = true;
            }
        }
    }
    let mut q = (0..=total).rev().find(|&q| weight[q].is_finite()).unwrap_or(0);
    for b in (0..n).rev() {
        if take[b][q] {
            counts[bundles[b].0] += bundles[b].1;
            q -= profit[b];
        }
    }
    Ok(counts)
}

/// Valid configuration maximizing `sum_t n_t(C) y_t` (exactly, or within
/// `1 - epsilon` in FPTAS mode). Types with zero dual are never used.
pub fn price_column(
    duals: &[f64],
    partition: &TypePartition,
    failover: f64,
    mode: PricingMode,
) -> Result<(Configuration, f64)> {
    price_column_tol(duals, partition, failover, mode, 1e-9)
}

pub fn price_column_tol(
    duals: &[f64],
    partition: &TypePartition,
    failover: f64,
    mode: PricingMode,
    tol: f64,
) -> Result<(Configuration, f64)> {
    if duals.len() != partition.len() {
        return Err(Error::Input(format!(
            "{} duals for {} types",
            duals.len(),
            partition.len()
        )));
    }
    let mut best = (Configuration::empty(partition.len()), 0.0);
    // Larger types first: their bound tends to be highest and prunes the rest.
    let mut order: Vec<usize> = (0..partition.len()).filter(|&t| duals[t] > 0.0).collect();
    order.sort_by(|&a, &b| partition.size(b).total_cmp(&partition.size(a)).then(a.cmp(&b)));
    for t in order {
        if let Some((c, v)) = price_with_largest(duals, partition, failover, t, best.1, tol, mode)? {
            if v > best.1 + VALUE_EPS || (v > best.1 - VALUE_EPS && c < best.0) {
                best = (c, v);
            }
        }
    }
    debug_assert!(config_valid(&best.0, partition, failover, 2.0 * tol));
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub pricing: PricingMode,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iterations: 20_000, pricing: PricingMode::Exact }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LPResult {
    /// Columns with positive value.
    pub columns: Vec<(Configuration, f64)>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub basic: bool,
    pub iterations: usize,
}

impl LPResult {
    /// `sum_C n_t(C) x_C` per type.
    pub fn coverage(&self, types: usize) -> Vec<f64> {
        let mut cov = vec![0.0; types];
        for (c, x) in &self.columns {
            for (t, &n) in c.counts().iter().enumerate() {
                cov[t] += n as f64 * x;
            }
        }
        cov
    }
}

pub fn solve_config_lp(partition: &TypePartition, failover: f64, tol: f64) -> Result<LPResult> {
    solve_config_lp_with(partition, failover, &LpOptions { tol, ..LpOptions::default() })
}

pub fn solve_config_lp_with(
    partition: &TypePartition,
    failover: f64,
    opts: &LpOptions,
) -> Result<LPResult> {
    let t_count = partition.len();
    if t_count == 0 {
        return Ok(LPResult {
            columns: Vec::new(),
            objective: 0.0,
            duals: Vec::new(),
            basic: true,
            iterations: 0,
        });
    }
    for t in 0..t_count {
        let s = partition.size(t);
        if s > 1.0 + opts.tol || 2.0 * s > failover + opts.tol {
            return Err(Error::Input(format!("type size {s} fits in no configuration")));
        }
    }
    let rhs: Vec<f64> = partition.types().iter().map(|&(_, n)| 2.0 * n as f64).collect();
    let mut master = PackingTableau::new(rhs.clone());
    let mut columns: Vec<Configuration> = Vec::new();
    let mut seen: HashSet<Configuration> = HashSet::new();
    let add = |master: &mut PackingTableau<f64>, c: Configuration, columns: &mut Vec<Configuration>| {
        let row: Vec<f64> = c.counts().iter().map(|&n| n as f64).collect();
        master.add_row(&row, 1.0).map(|_| columns.push(c))
    };
    for t in 0..t_count {
        let c = Configuration::singleton(t_count, t);
        seen.insert(c.clone());
        add(&mut master, c, &mut columns)?;
    }
    let pivot_cap = 50 * (t_count + 10) * (t_count + 10);
    let mut iterations = 0;
    loop {
        master.solve(pivot_cap)?;
        let duals = master.primal();
        let (config, value) =
            price_column_tol(&duals, partition, failover, opts.pricing, opts.tol)?;
        if value <= 1.0 + opts.tol || !seen.insert(config.clone()) {
            break;
        }
        iterations += 1;
        if iterations > opts.max_iterations {
            return Err(Error::IterationLimit {
                iterations,
                best_objective: master.objective_value(),
            });
        }
        add(&mut master, config, &mut columns)?;
    }
    let x = master.row_duals();
    let duals = master.primal();
    let positive: Vec<(Configuration, f64)> = columns
        .into_iter()
        .zip(x)
        .filter(|&(_, v)| v > 1e-9)
        .collect();
    let result = LPResult {
        objective: positive.iter().map(|(_, v)| v).sum(),
        basic: positive.len() <= t_count,
        columns: positive,
        duals,
        iterations,
    };
    for (t, cov) in result.coverage(t_count).into_iter().enumerate() {
        if cov < rhs[t] - 1e-7 {
            return Err(Error::Invariant(format!(
                "LP coverage of type {t} is {cov}, needs {}",
                rhs[t]
            )));
        }
    }
    Ok(result)
}

/// `ceil(x_C)` copies of each positive column, then topped up with
/// singletons if float slack left a type short.
pub fn round_up(result: &LPResult, partition: &TypePartition) -> Vec<Configuration> {
    let mut out = Vec::new();
    for (c, x) in &result.columns {
        let copies = (x - 1e-9).ceil().max(0.0) as usize;
        out.extend(std::iter::repeat_n(c.clone(), copies));
    }
    let t_count = partition.len();
    let mut cov = vec![0usize; t_count];
    for c in &out {
        for t in 0..t_count {
            cov[t] += c.count(t) as usize;
        }
    }
    for t in 0..t_count {
        let need = 2 * partition.count(t);
        if cov[t] < need {
            let per = count_cap(partition.size(t), partition.count(t), 1e-9).max(1) as usize;
            let per = per.min(need);
            let mut left = need - cov[t];
            while left > 0 {
                let k = per.min(left);
                let mut c = Configuration::empty(t_count);
                c.set(t, k as u32);
                out.push(c);
                left -= k;
            }
        }
    }
    out
}

/// LP values of `split` and of the same demands with equal sizes merged.
pub fn lp_value_merge_invariant(split: &TypePartition, failover: f64) -> Result<(f64, f64)> {
    let a = solve_config_lp(split, failover, 1e-9)?.objective;
    let b = solve_config_lp(&split.merged(), failover, 1e-9)?.objective;
    Ok((a, b))
}
