//! Deterministic online placement in the worst-case arrival model.
//!
//! [`FailoverWorstCase`] buckets demands by size into intervals
//! `I_k = (min{1/k, B/(k+1)}, min{1/(k-1), B/k}]` for `k = 2..L-1` and serves
//! bucket `k` with `k`-cliques, one demand per edge. Sizes up to
//! `min{1/(L-1), B/L}` go to `L`-cliques by first-fit with that per-edge cap.
//! [`SmallDemands`] is the first-fit clique algorithm for streams whose sizes
//! are all at most `1/L`.

use crate::error::{Error, Result};
use crate::model::{Assignment, DemandSequence, LoadState, Pair, ProblemParams};
use crate::num::Scalar;
use crate::oracle::{brute_max_prefix, SearchLimits};

/// Deterministic online placement rule.
pub trait OnlinePolicy<S> {
    fn name(&self) -> String;

    /// Pair for the next demand, or `None` to stop. Policies keep their own
    /// bookkeeping; the caller only forwards sizes in arrival order.
    fn place(&mut self, size: S) -> Option<Pair>;
}

/// Runs a policy over a stream. Stops at the first refusal, at a pair outside
/// the budget, or at a placement that would break a capacity constraint.
/// Returns the prefix assignment and the index of the first unplaced demand.
pub fn run_online<S: Scalar>(
    policy: &mut dyn OnlinePolicy<S>,
    demands: &DemandSequence<S>,
    params: &ProblemParams<S>,
) -> Result<(Assignment, usize)> {
    let m = params.budget()?;
    let mut loads = LoadState::new(params, S::default_tol());
    let mut assignment = Assignment::new();
    for (j, &s) in demands.sizes().iter().enumerate() {
        match policy.place(s) {
            Some(pair) if pair.hi() < m && loads.fits(pair, s) => {
                loads.add(pair, s);
                assignment.place(j, pair);
            }
            _ => return Ok((assignment, j)),
        }
    }
    Ok((assignment, demands.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bucket {
    Interval { k: usize },
    SmallTail,
}

/// `L = max(3, ceil(m^(1/3)))`.
pub fn tail_index(m: usize) -> usize {
    let mut l = 1usize;
    while l * l * l < m {
        l += 1;
    }
    l.max(3)
}

fn ratio<S: Scalar>(num: S, den: usize) -> S {
    num / S::of_count(den)
}

/// `min{1/(L-1), B/L}`, the upper end of the small bucket and the per-edge
/// cap of its cliques.
pub fn small_tail_cap<S: Scalar>(failover: S, l: usize) -> S {
    ratio(S::one(), l - 1).min_of(ratio(failover, l))
}

/// `(lower, upper)` limits of `I_k`.
pub fn interval_bounds<S: Scalar>(failover: S, k: usize) -> (S, S) {
    let lo = ratio(S::one(), k).min_of(ratio(failover, k + 1));
    let hi = ratio(S::one(), k - 1).min_of(ratio(failover, k));
    (lo, hi)
}

pub fn bucket_of<S: Scalar>(size: S, failover: S, l: usize) -> Result<Bucket> {
    if l < 3 {
        return Err(Error::Config(format!("L must be >= 3, got {l}")));
    }
    if size < S::zero() {
        return Err(Error::Input(format!("negative size {size}")));
    }
    if size <= small_tail_cap(failover, l) {
        return Ok(Bucket::SmallTail);
    }
    for k in (2..l).rev() {
        let (_, hi) = interval_bounds(failover, k);
        if size <= hi {
            return Ok(Bucket::Interval { k });
        }
    }
    let (_, top) = interval_bounds(failover, 2);
    if S::le_tol(size, top, S::default_tol()) {
        return Ok(Bucket::Interval { k: 2 });
    }
    Err(Error::Input(format!("size {size} exceeds the largest bucket limit {top}")))
}

#[derive(Debug, Clone)]
struct Clique<S> {
    bucket: Bucket,
    edges: Vec<Pair>,
    load: Vec<S>,
    count: Vec<u32>,
    /// Interval cliques fill edges in order; this is the first empty one.
    next_empty: usize,
}

impl<S: Scalar> Clique<S> {
    fn new(bucket: Bucket, first: usize, size: usize) -> Self {
        let mut edges = Vec::with_capacity(size * (size - 1) / 2);
        for a in 0..size {
            for b in a + 1..size {
                edges.push(Pair::of(first + a, first + b));
            }
        }
        let n = edges.len();
        Self { bucket, edges, load: vec![S::zero(); n], count: vec![0; n], next_empty: 0 }
    }

    fn put(&mut self, e: usize, size: S) -> Pair {
        self.load[e] += size;
        self.count[e] += 1;
        self.edges[e]
    }
}

/// Interval-bucket clique algorithm.
#[derive(Debug, Clone)]
pub struct FailoverWorstCase<S> {
    failover: S,
    budget: usize,
    l: usize,
    tail_cap: S,
    tol: S,
    cliques: Vec<Clique<S>>,
    next_free: usize,
}

impl<S: Scalar> FailoverWorstCase<S> {
    pub fn new(params: &ProblemParams<S>) -> Result<Self> {
        let m = params.budget()?;
        let l = tail_index(m);
        Ok(Self::with_tail_index(params.failover_capacity, m, l))
    }

    pub fn with_tail_index(failover: S, budget: usize, l: usize) -> Self {
        Self {
            failover,
            budget,
            l,
            tail_cap: small_tail_cap(failover, l),
            tol: S::default_tol(),
            cliques: Vec::new(),
            next_free: 0,
        }
    }

    pub fn tail_index(&self) -> usize {
        self.l
    }

    fn open(&mut self, bucket: Bucket, size: usize) -> Option<usize> {
        if self.next_free + size > self.budget {
            return None;
        }
        self.cliques.push(Clique::new(bucket, self.next_free, size));
        self.next_free += size;
        Some(self.cliques.len() - 1)
    }

    /// Number of machines handed to cliques so far.
    pub fn machines_used(&self) -> usize {
        self.next_free
    }

    /// Per-clique `(bucket, [(pair, load, count)])`, in creation order.
    pub fn cliques(&self) -> Vec<(Bucket, Vec<(Pair, S, u32)>)> {
        self.cliques
            .iter()
            .map(|c| {
                let edges =
                    (0..c.edges.len()).map(|e| (c.edges[e], c.load[e], c.count[e])).collect();
                (c.bucket, edges)
            })
            .collect()
    }

    pub fn tail_cap(&self) -> S {
        self.tail_cap
    }
}

impl<S: Scalar> OnlinePolicy<S> for FailoverWorstCase<S> {
    fn name(&self) -> String {
        "worstcase".into()
    }

    fn place(&mut self, size: S) -> Option<Pair> {
        let bucket = bucket_of(size, self.failover, self.l).ok()?;
        match bucket {
            Bucket::Interval { k } => {
                let found = self
                    .cliques
                    .iter()
                    .position(|c| c.bucket == bucket && c.next_empty < c.edges.len());
                let c = match found {
                    Some(c) => c,
                    None => self.open(bucket, k)?,
                };
                let clique = &mut self.cliques[c];
                let e = clique.next_empty;
                clique.next_empty += 1;
                Some(clique.put(e, size))
            }
            Bucket::SmallTail => {
                let cap = self.tail_cap;
                let tol = self.tol;
                for clique in self.cliques.iter_mut().filter(|c| c.bucket == Bucket::SmallTail) {
                    if let Some(e) = (0..clique.edges.len())
                        .find(|&e| S::le_tol(clique.load[e] + size, cap, tol))
                    {
                        return Some(clique.put(e, size));
                    }
                }
                let c = self.open(Bucket::SmallTail, self.l)?;
                Some(self.cliques[c].put(0, size))
            }
        }
    }
}

/// Runs [`FailoverWorstCase`] with `L = max(3, ceil(m^(1/3)))`.
pub fn run_failover_worstcase<S: Scalar>(
    demands: &DemandSequence<S>,
    params: &ProblemParams<S>,
) -> Result<(Assignment, usize)> {
    let mut alg = FailoverWorstCase::new(params)?;
    run_online(&mut alg, demands, params)
}

/// First-fit clique algorithm for demands of size at most `1/L`.
#[derive(Debug, Clone)]
pub struct SmallDemands<S> {
    failover: S,
    budget: usize,
    clique_size: usize,
    single: bool,
    tol: S,
    cliques: Vec<(Clique<S>, S)>,
    next_free: usize,
}

impl<S: Scalar> SmallDemands<S> {
    pub fn new(params: &ProblemParams<S>, l: usize) -> Result<Self> {
        let m = params.budget()?;
        if l < 1 {
            return Err(Error::Config("L must be positive".into()));
        }
        let root = (l as f64).sqrt();
        let single = (m as f64) < 3.0 * root;
        Ok(Self {
            failover: params.failover_capacity,
            budget: m,
            clique_size: if single { m } else { (root.floor() as usize).max(2) },
            single,
            tol: S::default_tol(),
            cliques: Vec::new(),
            next_free: 0,
        })
    }

    /// `alpha_{m'} = min{B/m', 1/(m'-1)}`.
    pub fn edge_cap(failover: S, size: usize) -> S {
        ratio(failover, size).min_of(ratio(S::one(), size - 1))
    }

    /// Sizes of the cliques opened so far.
    pub fn clique_sizes(&self) -> Vec<usize> {
        self.cliques.iter().map(|(c, _)| clique_order(c.edges.len())).collect()
    }

    fn open(&mut self) -> Option<usize> {
        let left = self.budget - self.next_free;
        let size = if self.single { left } else { self.clique_size.min(left) };
        if size < 2 || (self.single && !self.cliques.is_empty()) {
            return None;
        }
        let clique = Clique::new(Bucket::SmallTail, self.next_free, size);
        self.cliques.push((clique, Self::edge_cap(self.failover, size)));
        self.next_free += size;
        Some(self.cliques.len() - 1)
    }
}

fn clique_order(edges: usize) -> usize {
    let mut k = 1;
    while k * (k - 1) / 2 < edges {
        k += 1;
    }
    k
}

impl<S: Scalar> OnlinePolicy<S> for SmallDemands<S> {
    fn name(&self) -> String {
        "small".into()
    }

    fn place(&mut self, size: S) -> Option<Pair> {
        let tol = self.tol;
        for (clique, cap) in &mut self.cliques {
            if let Some(e) =
                (0..clique.edges.len()).find(|&e| S::le_tol(clique.load[e] + size, *cap, tol))
            {
                return Some(clique.put(e, size));
            }
        }
        let c = self.open()?;
        let (clique, cap) = &mut self.cliques[c];
        if !S::le_tol(size, *cap, tol) {
            return None;
        }
        Some(clique.put(0, size))
    }
}

pub fn run_small_demands<S: Scalar>(
    demands: &DemandSequence<S>,
    params: &ProblemParams<S>,
    l: usize,
) -> Result<(Assignment, usize)> {
    let limit = ratio(S::one(), l.max(1));
    if let Some(j) = demands.sizes().iter().position(|&s| !S::le_tol(s, limit, S::default_tol())) {
        return Err(Error::Input(format!(
            "demand {j} has size {} > 1/L = {limit}",
            demands.sizes()[j]
        )));
    }
    let mut alg = SmallDemands::new(params, l)?;
    run_online(&mut alg, demands, params)
}

/// First feasible pair in lexicographic order over all `m` machines.
#[derive(Debug, Clone)]
pub struct LexFirstFit<S> {
    budget: usize,
    loads: LoadState<S>,
}

impl<S: Scalar> LexFirstFit<S> {
    pub fn new(params: &ProblemParams<S>) -> Result<Self> {
        Ok(Self { budget: params.budget()?, loads: LoadState::new(params, S::default_tol()) })
    }
}

impl<S: Scalar> OnlinePolicy<S> for LexFirstFit<S> {
    fn name(&self) -> String {
        "lex-first-fit".into()
    }

    fn place(&mut self, size: S) -> Option<Pair> {
        for u in 0..self.budget {
            for v in u + 1..self.budget {
                let p = Pair::of(u, v);
                if self.loads.fits(p, size) {
                    self.loads.add(p, size);
                    return Some(p);
                }
            }
        }
        None
    }
}

/// Prefers a pair of untouched machines; falls back to the feasible pair
/// with the least resulting edge load.
#[derive(Debug, Clone)]
pub struct SpreadFirst<S> {
    budget: usize,
    next_free: usize,
    loads: LoadState<S>,
}

impl<S: Scalar> SpreadFirst<S> {
    pub fn new(params: &ProblemParams<S>) -> Result<Self> {
        Ok(Self {
            budget: params.budget()?,
            next_free: 0,
            loads: LoadState::new(params, S::default_tol()),
        })
    }
}

impl<S: Scalar> OnlinePolicy<S> for SpreadFirst<S> {
    fn name(&self) -> String {
        "spread-first".into()
    }

    fn place(&mut self, size: S) -> Option<Pair> {
        let pick = if self.next_free + 2 <= self.budget {
            let p = Pair::of(self.next_free, self.next_free + 1);
            self.next_free += 2;
            Some(p)
        } else {
            let mut best: Option<(S, Pair)> = None;
            for u in 0..self.budget {
                for v in u + 1..self.budget {
                    let p = Pair::of(u, v);
                    let e = self.loads.edge(p);
                    if self.loads.fits(p, size) && best.is_none_or(|(b, _)| e < b) {
                        best = Some((e, p));
                    }
                }
            }
            best.map(|(_, p)| p)
        }?;
        if !self.loads.fits(pick, size) {
            return None;
        }
        self.loads.add(pick, size);
        Some(pick)
    }
}

/// Feasible pair with the largest resulting edge load (ties lexicographic).
#[derive(Debug, Clone)]
pub struct BestFitPair<S> {
    budget: usize,
    loads: LoadState<S>,
}

impl<S: Scalar> BestFitPair<S> {
    pub fn new(params: &ProblemParams<S>) -> Result<Self> {
        Ok(Self { budget: params.budget()?, loads: LoadState::new(params, S::default_tol()) })
    }
}

impl<S: Scalar> OnlinePolicy<S> for BestFitPair<S> {
    fn name(&self) -> String {
        "best-fit-pair".into()
    }

    fn place(&mut self, size: S) -> Option<Pair> {
        let mut best: Option<(S, Pair)> = None;
        for u in 0..self.budget {
            for v in u + 1..self.budget {
                let p = Pair::of(u, v);
                if !self.loads.fits(p, size) {
                    continue;
                }
                let score = self.loads.edge(p) + self.loads.node(u) + self.loads.node(v);
                if best.is_none_or(|(b, _)| score > b) {
                    best = Some((score, p));
                }
            }
        }
        let (_, p) = best?;
        self.loads.add(p, size);
        Some(p)
    }
}

/// The deterministic policies shipped with the crate, for budget `m`.
pub fn shipped_policies(params: &ProblemParams<f64>) -> Result<Vec<Box<dyn OnlinePolicy<f64>>>> {
    Ok(vec![
        Box::new(FailoverWorstCase::new(params)?),
        Box::new(LexFirstFit::new(params)?),
        Box::new(SpreadFirst::new(params)?),
        Box::new(BestFitPair::new(params)?),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameOutcome {
    pub sizes: Vec<f64>,
    pub assignment: Assignment,
    pub alg_value: f64,
    pub opt_value: f64,
    pub ratio: f64,
}

/// Failover capacity standing in for `B = infinity` in the adversary game.
pub const UNBOUNDED_FAILOVER: f64 = 1e6;

/// Plays the four-machine adversary: two `epsilon` demands, then either two
/// demands of `1 - epsilon` (if both share an edge) or one demand of size 1.
pub fn adversarial_game(policy: &mut dyn OnlinePolicy<f64>, epsilon: f64) -> Result<GameOutcome> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let params = ProblemParams::new(UNBOUNDED_FAILOVER, Some(4))?;
    let mut loads = LoadState::new(&params, 1e-9);
    let mut assignment = Assignment::new();
    let mut sizes = vec![epsilon, epsilon];
    let mut stopped = false;
    let mut j = 0;
    while j < sizes.len() {
        let s = sizes[j];
        if !stopped {
            match policy.place(s) {
                Some(p) if p.hi() < 4 && loads.fits(p, s) => {
                    loads.add(p, s);
                    assignment.place(j, p);
                }
                _ => stopped = true,
            }
        }
        if j == 1 && !stopped {
            sizes.extend(crate::instances::adversary_step(&assignment, epsilon)?);
        }
        j += 1;
    }
    let alg_value: f64 = assignment.placements().map(|(j, _)| sizes[j]).sum();
    let (_, opt_value) = brute_max_prefix(&sizes, UNBOUNDED_FAILOVER, 4, &SearchLimits::default())?;
    Ok(GameOutcome { ratio: alg_value / opt_value, sizes, assignment, alg_value, opt_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_feasible, utilization};
    use crate::num::Rational;

    fn params(b: f64, m: usize) -> ProblemParams<f64> {
        ProblemParams::new(b, Some(m)).unwrap()
    }

    fn seq(sizes: Vec<f64>, p: &ProblemParams<f64>) -> DemandSequence<f64> {
        DemandSequence::new(sizes, p).unwrap()
    }

    #[test]
    fn buckets_for_unit_failover() {
        assert_eq!(bucket_of(0.4, 1.0, 10).unwrap(), Bucket::Interval { k: 2 });
        assert_eq!(bucket_of(0.3, 1.0, 10).unwrap(), Bucket::Interval { k: 3 });
        assert_eq!(bucket_of(0.05, 1.0, 10).unwrap(), Bucket::SmallTail);
        assert_eq!(bucket_of(0.1, 1.0, 10).unwrap(), Bucket::SmallTail);
        assert_eq!(bucket_of(0.5, 1.0, 10).unwrap(), Bucket::Interval { k: 2 });
        assert!(bucket_of(0.6, 1.0, 10).is_err());
        assert!(bucket_of(0.1, 1.0, 2).is_err());
    }

    #[test]
    fn buckets_tile_the_size_range() {
        for b in [1.0, 1.3, 2.0] {
            for l in [3, 5, 10] {
                for k in 2..l - 1 {
                    let (lo, _) = interval_bounds(b, k);
                    let (_, hi_next) = interval_bounds(b, k + 1);
                    assert_eq!(lo, hi_next);
                }
                let (lo_last, _) = interval_bounds(b, l - 1);
                assert_eq!(lo_last, small_tail_cap(b, l));
            }
        }
    }

    #[test]
    fn exact_rational_buckets() {
        let b = Rational::from_integer(1);
        assert_eq!(bucket_of(Rational::new(1, 3), b, 10).unwrap(), Bucket::Interval { k: 3 });
        assert_eq!(bucket_of(Rational::new(1, 2), b, 10).unwrap(), Bucket::Interval { k: 2 });
        assert_eq!(bucket_of(Rational::new(1, 10), b, 10).unwrap(), Bucket::SmallTail);
    }

    #[test]
    fn tail_index_floor() {
        assert_eq!(tail_index(4), 3);
        assert_eq!(tail_index(27), 3);
        assert_eq!(tail_index(28), 4);
        assert_eq!(tail_index(125), 5);
        assert_eq!(tail_index(1000), 10);
    }

    #[test]
    fn three_large_demands_on_four_machines() {
        let p = params(1.0, 4);
        let d = seq(vec![0.4, 0.4, 0.4], &p);
        let (a, stop) = run_failover_worstcase(&d, &p).unwrap();
        assert_eq!(stop, 2);
        assert!((utilization(&a, &d) - 0.8).abs() < 1e-12);
        assert_eq!(a.get(0), Some(Pair::of(0, 1)));
        assert_eq!(a.get(1), Some(Pair::of(2, 3)));
    }

    #[test]
    fn first_small_demand_on_first_edge() {
        let p = params(1.0, 1000);
        let d = seq(vec![0.05], &p);
        let (a, stop) = run_failover_worstcase(&d, &p).unwrap();
        assert_eq!(stop, 1);
        assert_eq!(a.get(0), Some(Pair::of(0, 1)));
    }

    #[test]
    fn quarters_with_floored_tail_index() {
        // m = 4 gives L = 3: 0.25 <= min(1/2, 1/3) is small; one 3-clique with
        // edge cap 1/3 takes three demands, a second clique does not fit.
        let p = params(1.0, 4);
        let d = seq(vec![0.25; 6], &p);
        let (a, stop) = run_failover_worstcase(&d, &p).unwrap();
        assert_eq!(stop, 3);
        assert_eq!(a.machines_opened(), 3);
        assert!(is_feasible(&a, &d, &p).unwrap());
    }

    #[test]
    fn never_opens_clique_while_empty_edge_exists() {
        let p = params(1.0, 1000);
        let d = seq(vec![0.3; 7], &p);
        let mut alg = FailoverWorstCase::new(&p).unwrap();
        run_online(&mut alg, &d, &p).unwrap();
        let cliques = alg.cliques();
        // 3-cliques have 3 edges: 7 demands need exactly 3 cliques.
        assert_eq!(cliques.len(), 3);
        for (_, edges) in &cliques {
            assert!(edges.iter().all(|(_, _, c)| *c <= 1));
        }
    }

    #[test]
    fn small_demand_cliques() {
        let p = params(1.0, 10);
        let mut alg = SmallDemands::new(&p, 16).unwrap();
        let d = seq(vec![0.01; 3], &p);
        run_online(&mut alg, &d, &p).unwrap();
        assert_eq!(alg.clique_sizes(), vec![10]);
        assert!((SmallDemands::edge_cap(1.0, 10) - (1.0f64 / 10.0).min(1.0 / 9.0)).abs() < 1e-15);

        let p = params(1.0, 14);
        let mut alg = SmallDemands::new(&p, 16).unwrap();
        // 4-clique cap min(1/4, 1/3) = 1/4: 24 demands of 1/16 fill one clique.
        let d = seq(vec![1.0 / 16.0; 100], &p);
        let (a, stop) = run_online(&mut alg, &d, &p).unwrap();
        assert_eq!(alg.clique_sizes(), vec![4, 4, 4, 2]);
        assert!(stop < 100);
        assert!(is_feasible(&a, &d, &p).unwrap());

        let empty = DemandSequence::empty();
        let (a, stop) = run_small_demands(&empty, &p, 16).unwrap();
        assert!(a.is_empty());
        assert_eq!(stop, 0);
        assert!(matches!(
            run_small_demands(&seq(vec![0.1], &p), &p, 16),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn budget_required() {
        let p = ProblemParams::new(1.0, None).unwrap();
        assert!(matches!(run_failover_worstcase(&DemandSequence::empty(), &p), Err(Error::Config(_))));
    }

    #[test]
    fn adversary_against_colocating_and_separating_policies() {
        let p = params(UNBOUNDED_FAILOVER, 4);
        let mut lex = LexFirstFit::new(&p).unwrap();
        let g = adversarial_game(&mut lex, 0.1).unwrap();
        assert!((g.opt_value - 2.0).abs() < 1e-9);
        assert!(g.alg_value <= 1.1 + 1e-9);
        let mut spread = SpreadFirst::new(&p).unwrap();
        let g = adversarial_game(&mut spread, 0.1).unwrap();
        assert!((g.opt_value - 1.2).abs() < 1e-9);
        assert!((g.alg_value - 0.2).abs() < 1e-9);
        assert!(adversarial_game(&mut spread, 0.6).is_err());
    }
}
