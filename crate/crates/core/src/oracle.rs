//! Exhaustive ground truth for desk-scale instances.
//!
//! Sizes are quantized to integer units of `1e-9` (rounded to nearest) so the
//! search compares loads exactly. Demands are placed largest first; a new
//! machine always takes the lowest unused id, and equal consecutive demands
//! are placed on lexicographically nondecreasing pairs. Both rules only
//! remove symmetric copies of the same assignment.

use crate::error::{Error, Result};
use crate::model::{Assignment, Pair};

const UNITS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_demands: usize,
    pub max_machines: usize,
    /// Search nodes allowed per call before refusing.
    pub node_budget: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { max_demands: 8, max_machines: 8, node_budget: 200_000_000 }
    }
}

fn quantize(x: f64) -> Result<i64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Input(format!("cannot quantize {x}")));
    }
    let q = (x * UNITS).round();
    if q > i64::MAX as f64 / 4.0 {
        return Err(Error::LimitExceeded(format!("value {x} too large for the oracle")));
    }
    Ok(q as i64)
}

struct Search {
    sizes: Vec<i64>,
    order: Vec<usize>,
    /// Suffix sums of `sizes`.
    remaining: Vec<i64>,
    failover: i64,
    limit: usize,
    node: Vec<i64>,
    max_edge: Vec<i64>,
    edge: Vec<i64>,
    used: usize,
    chosen: Vec<Pair>,
    nodes: u64,
    budget: u64,
}

const NOMINAL: i64 = UNITS as i64;

impl Search {
    fn new(sizes: Vec<i64>, order: Vec<usize>, failover: i64, limit: usize, budget: u64) -> Self {
        let mut remaining = vec![0; sizes.len() + 1];
        for i in (0..sizes.len()).rev() {
            remaining[i] = remaining[i + 1] + sizes[i];
        }
        Self {
            sizes,
            order,
            remaining,
            failover,
            limit,
            node: vec![0; limit],
            max_edge: vec![0; limit],
            edge: vec![0; limit * limit],
            used: 0,
            chosen: Vec::new(),
            nodes: 0,
            budget,
        }
    }

    fn fits(&self, u: usize, v: usize, s: i64) -> bool {
        let e = self.edge[u * self.limit + v] + s;
        [u, v].iter().all(|&w| {
            let load = self.node[w] + s;
            load <= NOMINAL && load + self.max_edge[w].max(e) <= self.failover
        })
    }

    /// Applies a placement and returns the undo record.
    fn apply(&mut self, u: usize, v: usize, s: i64) -> (i64, i64, usize) {
        let undo = (self.max_edge[u], self.max_edge[v], self.used);
        self.edge[u * self.limit + v] += s;
        let e = self.edge[u * self.limit + v];
        self.node[u] += s;
        self.node[v] += s;
        self.max_edge[u] = self.max_edge[u].max(e);
        self.max_edge[v] = self.max_edge[v].max(e);
        self.used = self.used.max(v + 1);
        undo
    }

    fn revert(&mut self, u: usize, v: usize, s: i64, undo: (i64, i64, usize)) {
        self.edge[u * self.limit + v] -= s;
        self.node[u] -= s;
        self.node[v] -= s;
        self.max_edge[u] = undo.0;
        self.max_edge[v] = undo.1;
        self.used = undo.2;
    }

    fn spare_nominal(&self) -> i64 {
        let open: i64 = self.node[..self.used].iter().map(|l| NOMINAL - l).sum();
        open + (self.limit - self.used) as i64 * NOMINAL
    }

    fn solve(&mut self, idx: usize) -> Result<bool> {
        if idx == self.sizes.len() {
            return Ok(true);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::LimitExceeded(format!(
                "oracle node budget of {} exhausted",
                self.budget
            )));
        }
        if 2 * self.remaining[idx] > self.spare_nominal() {
            return Ok(false);
        }
        let s = self.sizes[idx];
        let floor = match self.chosen.last() {
            Some(&prev) if idx > 0 && self.sizes[idx - 1] == s => Some(prev),
            _ => None,
        };
        let used = self.used;
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for u in 0..used {
            for v in u + 1..used {
                candidates.push((u, v));
            }
        }
        if used < self.limit {
            for u in 0..used {
                candidates.push((u, used));
            }
        }
        if used + 1 < self.limit {
            candidates.push((used, used + 1));
        }
        for (u, v) in candidates {
            let pair = Pair::of(u, v);
            if floor.is_some_and(|f| pair < f) || !self.fits(u, v, s) {
                continue;
            }
            let undo = self.apply(u, v, s);
            self.chosen.push(pair);
            if self.solve(idx + 1)? {
                return Ok(true);
            }
            self.chosen.pop();
            self.revert(u, v, s, undo);
        }
        Ok(false)
    }

    fn witness(&self) -> Assignment {
        let mut a = Assignment::new();
        for (k, &pair) in self.chosen.iter().enumerate() {
            a.place(self.order[k], pair);
        }
        a
    }
}

fn prepare(sizes: &[f64], failover: f64) -> Result<(Vec<i64>, Vec<usize>, i64)> {
    let q = sizes.iter().map(|&s| quantize(s)).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| q[b].cmp(&q[a]).then(a.cmp(&b)));
    let sorted = order.iter().map(|&i| q[i]).collect();
    let b = quantize(failover.min(1e6))?;
    if b < NOMINAL {
        return Err(Error::Config(format!("failover capacity {failover} < 1")));
    }
    if q.iter().any(|&s| s > NOMINAL || 2 * s > b) {
        return Err(Error::Input("a demand exceeds min(1, B/2)".into()));
    }
    Ok((sorted, order, b))
}

/// Feasible assignment of all demands onto machines `0..m`, if one exists.
pub fn brute_witness(
    sizes: &[f64],
    failover: f64,
    m: usize,
    limits: &SearchLimits,
) -> Result<Option<Assignment>> {
    if sizes.len() > limits.max_demands {
        return Err(Error::LimitExceeded(format!(
            "{} demands exceed the oracle limit of {}",
            sizes.len(),
            limits.max_demands
        )));
    }
    let (sorted, order, b) = prepare(sizes, failover)?;
    witness_unchecked(sorted, order, b, m, limits.node_budget)
}

fn witness_unchecked(
    sorted: Vec<i64>,
    order: Vec<usize>,
    b: i64,
    m: usize,
    budget: u64,
) -> Result<Option<Assignment>> {
    if sorted.is_empty() {
        return Ok(Some(Assignment::new()));
    }
    if m < 2 {
        return Ok(None);
    }
    let mut search = Search::new(sorted, order, b, m, budget);
    Ok(search.solve(0)?.then(|| search.witness()))
}

/// Whether all demands fit on at most `m` machines.
pub fn brute_feasible(sizes: &[f64], failover: f64, m: usize, limits: &SearchLimits) -> Result<bool> {
    if m > limits.max_machines {
        return Err(Error::LimitExceeded(format!(
            "{m} machines exceed the oracle limit of {}",
            limits.max_machines
        )));
    }
    Ok(brute_witness(sizes, failover, m, limits)?.is_some())
}

/// Exact minimum number of machines that host all demands.
pub fn brute_opt_mach(sizes: &[f64], failover: f64, limits: &SearchLimits) -> Result<usize> {
    Ok(brute_opt_mach_with_witness(sizes, failover, limits)?.0)
}

pub fn brute_opt_mach_with_witness(
    sizes: &[f64],
    failover: f64,
    limits: &SearchLimits,
) -> Result<(usize, Assignment)> {
    if sizes.len() > limits.max_demands {
        return Err(Error::LimitExceeded(format!(
            "{} demands exceed the oracle limit of {}",
            sizes.len(),
            limits.max_demands
        )));
    }
    if sizes.is_empty() {
        return Ok((0, Assignment::new()));
    }
    let (sorted, order, b) = prepare(sizes, failover)?;
    let total: i64 = sorted.iter().sum();
    let lower = ((2 * total + NOMINAL - 1) / NOMINAL).max(2) as usize;
    for m in lower..=2 * sizes.len() {
        if let Some(w) = witness_unchecked(sorted.clone(), order.clone(), b, m, limits.node_budget)? {
            return Ok((m, w));
        }
    }
    Err(Error::Invariant("two machines per demand always suffice".into()))
}

/// Whether `remaining` can be added on machines `0..m` on top of `fixed`
/// placements `(size, pair)`.
pub fn brute_extension_feasible(
    fixed: &[(f64, Pair)],
    remaining: &[f64],
    failover: f64,
    m: usize,
    limits: &SearchLimits,
) -> Result<bool> {
    if fixed.len() + remaining.len() > limits.max_demands || m > limits.max_machines {
        return Err(Error::LimitExceeded("instance exceeds oracle limits".into()));
    }
    let (sorted, order, b) = prepare(remaining, failover)?;
    let mut search = Search::new(sorted, order, b, m, limits.node_budget);
    for &(s, pair) in fixed {
        if pair.hi() >= m {
            return Err(Error::Input(format!("fixed pair {pair:?} uses a machine >= {m}")));
        }
        let q = quantize(s)?;
        if !search.fits(pair.lo(), pair.hi(), q) {
            return Ok(false);
        }
        search.apply(pair.lo(), pair.hi(), q);
    }
    // Fixed machines keep their ids; fresh ones start above them.
    search.chosen.clear();
    search.solve(0)
}

/// Longest feasible prefix on `m` machines and its total size.
pub fn brute_max_prefix(
    sizes: &[f64],
    failover: f64,
    m: usize,
    limits: &SearchLimits,
) -> Result<(usize, f64)> {
    let mut best = 0;
    for p in 1..=sizes.len() {
        if !brute_feasible(&sizes[..p], failover, m, limits)? {
            break;
        }
        best = p;
    }
    Ok((best, sizes[..best].iter().sum()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_feasible, DemandSequence, ProblemParams};

    fn lim() -> SearchLimits {
        SearchLimits::default()
    }

    #[test]
    fn two_halves() {
        assert_eq!(brute_opt_mach(&[0.5, 0.5], 1.0, &lim()).unwrap(), 4);
        assert_eq!(brute_opt_mach(&[0.5, 0.5], 2.0, &lim()).unwrap(), 2);
        assert_eq!(brute_opt_mach(&[0.3], 1.0, &lim()).unwrap(), 2);
        assert_eq!(brute_opt_mach(&[], 1.0, &lim()).unwrap(), 0);
    }

    #[test]
    fn six_quarters_on_four_machines() {
        assert!(brute_feasible(&[0.25; 6], 1.0, 4, &lim()).unwrap());
        assert!(!brute_feasible(&[0.3], 1.0, 1, &lim()).unwrap());
        // Fixing two per edge on ab and cd blocks the remaining two.
        let fixed = [
            (0.25, Pair::of(0, 1)),
            (0.25, Pair::of(0, 1)),
            (0.25, Pair::of(2, 3)),
            (0.25, Pair::of(2, 3)),
        ];
        assert!(!brute_extension_feasible(&fixed, &[0.25, 0.25], 1.0, 4, &lim()).unwrap());
        let good = [
            (0.25, Pair::of(0, 1)),
            (0.25, Pair::of(0, 2)),
            (0.25, Pair::of(1, 3)),
            (0.25, Pair::of(2, 3)),
        ];
        assert!(brute_extension_feasible(&good, &[0.25, 0.25], 1.0, 4, &lim()).unwrap());
    }

    #[test]
    fn adversary_instances() {
        let (p, u) = brute_max_prefix(&[0.1, 0.1, 0.9, 0.9], 1e6, 4, &lim()).unwrap();
        assert_eq!(p, 4);
        assert!((u - 2.0).abs() < 1e-12);
        let forced = [(0.1, Pair::of(0, 1)), (0.1, Pair::of(2, 3))];
        assert!(!brute_extension_feasible(&forced, &[1.0], 1e6, 4, &lim()).unwrap());
        let (p, _) = brute_max_prefix(&[0.1, 0.1, 1.0], 1e6, 4, &lim()).unwrap();
        assert_eq!(p, 3);
        assert_eq!(brute_max_prefix(&[], 1.0, 4, &lim()).unwrap(), (0, 0.0));
    }

    #[test]
    fn refuses_large_inputs() {
        assert!(matches!(
            brute_opt_mach(&[0.1; 9], 1.0, &lim()),
            Err(Error::LimitExceeded(_))
        ));
        assert!(matches!(
            brute_feasible(&[0.1], 1.0, 9, &lim()),
            Err(Error::LimitExceeded(_))
        ));
        let tiny = SearchLimits { node_budget: 3, ..lim() };
        assert!(matches!(
            brute_opt_mach(&[0.3, 0.3, 0.3, 0.3, 0.3], 1.0, &tiny),
            Err(Error::LimitExceeded(_))
        ));
    }

    #[test]
    fn witnesses_are_feasible() {
        let sizes = [0.45, 0.3, 0.3, 0.2, 0.15, 0.1, 0.05, 0.05];
        for b in [1.0, 1.3, 2.0] {
            let (m, w) = brute_opt_mach_with_witness(&sizes, b, &lim()).unwrap();
            let params = ProblemParams::new(b, None).unwrap();
            let d = DemandSequence::new(sizes.to_vec(), &params).unwrap();
            assert!(is_feasible(&w, &d, &params).unwrap());
            assert_eq!(w.len(), sizes.len());
            assert!(w.machines_opened() <= m);
        }
    }

    #[test]
    fn eight_demands_finish_quickly() {
        let sizes = [0.5, 0.45, 0.4, 0.35, 0.3, 0.25, 0.2, 0.15];
        let start = std::time::Instant::now();
        let m = brute_opt_mach(&sizes, 1.0, &lim()).unwrap();
        assert!(m >= 6);
        assert!(start.elapsed().as_secs() < 30);
    }
}
