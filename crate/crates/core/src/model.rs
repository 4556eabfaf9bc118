//! Problem model: demand sizes, machine pairs, assignments and the two
//! per-machine capacity constraints.
//!
//! Every machine has nominal capacity 1. A demand placed on the pair `uv`
//! adds its size to both endpoints. When `v` fails, `u` additionally absorbs
//! the whole edge load `L_uv`, so the failover constraint reads
//! `L_u + max_v L_uv <= B`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Failover capacity `B` and the optional machine budget `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams<S> {
    pub failover_capacity: S,
    pub machine_budget: Option<usize>,
}

impl<S: Scalar> ProblemParams<S> {
    pub fn new(failover_capacity: S, machine_budget: Option<usize>) -> Result<Self> {
        if !(failover_capacity >= S::one()) {
            return Err(Error::Config(format!(
                "failover capacity must be >= 1, got {failover_capacity}"
            )));
        }
        if let Some(m) = machine_budget {
            if m < 2 {
                return Err(Error::Config(format!("machine budget must be >= 2, got {m}")));
            }
        }
        Ok(Self { failover_capacity, machine_budget })
    }

    /// Largest admissible demand size, `min(1, B/2)`.
    pub fn max_size(&self) -> S {
        let half = self.failover_capacity / S::of_count(2);
        S::one().min_of(half)
    }

    pub fn with_budget(self, m: usize) -> Result<Self> {
        Self::new(self.failover_capacity, Some(m))
    }

    pub fn budget(&self) -> Result<usize> {
        self.machine_budget
            .ok_or_else(|| Error::Config("a machine budget m is required".into()))
    }
}

/// Ordered demand sizes, each in `[0, min(1, B/2)]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandSequence<S> {
    sizes: Vec<S>,
}

impl<S: Scalar> DemandSequence<S> {
    /// Slack allowed above `min(1, B/2)` when validating sizes.
    pub const SIZE_SLACK: f64 = 1e-9;

    pub fn new(sizes: Vec<S>, params: &ProblemParams<S>) -> Result<Self> {
        let hi = params.max_size() + S::from_f64_lossy(Self::SIZE_SLACK);
        for (j, &s) in sizes.iter().enumerate() {
            if !(s >= S::zero() && s <= hi) {
                return Err(Error::Input(format!(
                    "demand {j} has size {s}, outside [0, {}]",
                    params.max_size()
                )));
            }
        }
        Ok(Self { sizes })
    }

    pub fn empty() -> Self {
        Self { sizes: Vec::new() }
    }

    pub fn sizes(&self) -> &[S] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn total(&self) -> S {
        self.sizes.iter().copied().sum()
    }

    pub fn into_inner(self) -> Vec<S> {
        self.sizes
    }

    /// Prefix of the first `n` demands.
    pub fn prefix(&self, n: usize) -> Self {
        Self { sizes: self.sizes[..n.min(self.sizes.len())].to_vec() }
    }
}

/// Unordered machine pair stored as `(min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair(usize, usize);

impl Pair {
    pub fn new(u: usize, v: usize) -> Result<Self> {
        if u == v {
            return Err(Error::MalformedAssignment(format!("pair ({u}, {v}) is a loop")));
        }
        Ok(Self(u.min(v), u.max(v)))
    }

    /// Panics on `u == v`; for call sites that construct pairs from distinct ids.
    pub fn of(u: usize, v: usize) -> Self {
        Self::new(u, v).expect("distinct machines")
    }

    pub fn lo(&self) -> usize {
        self.0
    }

    pub fn hi(&self) -> usize {
        self.1
    }

    pub fn other(&self, u: usize) -> usize {
        if u == self.0 {
            self.1
        } else {
            self.0
        }
    }

    pub fn contains(&self, u: usize) -> bool {
        self.0 == u || self.1 == u
    }
}

/// Demand index to machine pair, plus the set of opened machines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    placements: BTreeMap<usize, Pair>,
    opened: BTreeSet<usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, demand: usize, pair: Pair) {
        self.opened.insert(pair.lo());
        self.opened.insert(pair.hi());
        self.placements.insert(demand, pair);
    }

    pub fn open(&mut self, machine: usize) {
        self.opened.insert(machine);
    }

    pub fn remove(&mut self, demand: usize) -> Option<Pair> {
        self.placements.remove(&demand)
    }

    pub fn get(&self, demand: usize) -> Option<Pair> {
        self.placements.get(&demand).copied()
    }

    pub fn placements(&self) -> impl Iterator<Item = (usize, Pair)> + '_ {
        self.placements.iter().map(|(&j, &p)| (j, p))
    }

    pub fn opened(&self) -> &BTreeSet<usize> {
        &self.opened
    }

    pub fn machines_opened(&self) -> usize {
        self.opened.len()
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    /// True when the placed indices are exactly `0..len`.
    pub fn is_prefix(&self) -> bool {
        self.placements.keys().enumerate().all(|(i, &j)| i == j)
    }

    /// Re-indexes demands and machines by fixed offsets, for concatenation.
    pub fn shifted(&self, demand_offset: usize, machine_offset: usize) -> Self {
        let mut out = Self::new();
        for &m in &self.opened {
            out.open(m + machine_offset);
        }
        for (&j, p) in &self.placements {
            out.place(
                j + demand_offset,
                Pair::of(p.lo() + machine_offset, p.hi() + machine_offset),
            );
        }
        out
    }

    pub fn max_machine(&self) -> Option<usize> {
        self.opened.iter().next_back().copied()
    }
}

/// Edge loads `L_uv` and node loads `L_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile<S> {
    pub edge_load: BTreeMap<Pair, S>,
    pub node_load: BTreeMap<usize, S>,
}

impl<S: Scalar> LoadProfile<S> {
    pub fn empty() -> Self {
        Self { edge_load: BTreeMap::new(), node_load: BTreeMap::new() }
    }

    pub fn node(&self, u: usize) -> S {
        self.node_load.get(&u).copied().unwrap_or_else(S::zero)
    }

    pub fn edge(&self, u: usize, v: usize) -> S {
        match Pair::new(u, v) {
            Ok(p) => self.edge_load.get(&p).copied().unwrap_or_else(S::zero),
            Err(_) => S::zero(),
        }
    }

    /// `max_{v != u} L_uv`.
    pub fn max_incident(&self, u: usize) -> S {
        self.edge_load
            .iter()
            .filter(|(p, _)| p.contains(u))
            .map(|(_, &l)| l)
            .fold(S::zero(), S::max_of)
    }
}

pub fn compute_loads<S: Scalar>(
    assignment: &Assignment,
    demands: &DemandSequence<S>,
) -> Result<LoadProfile<S>> {
    let mut profile = LoadProfile::empty();
    for &u in assignment.opened() {
        profile.node_load.insert(u, S::zero());
    }
    for (j, pair) in assignment.placements() {
        let s = *demands.sizes().get(j).ok_or_else(|| {
            Error::MalformedAssignment(format!(
                "demand index {j} out of range for {} demands",
                demands.len()
            ))
        })?;
        *profile.edge_load.entry(pair).or_insert_with(S::zero) += s;
    }
    for (pair, &l) in &profile.edge_load {
        *profile.node_load.entry(pair.lo()).or_insert_with(S::zero) += l;
        *profile.node_load.entry(pair.hi()).or_insert_with(S::zero) += l;
    }
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    Nominal,
    Failover,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation<S> {
    pub machine: usize,
    pub constraint: Constraint,
    /// Left-hand side of the violated constraint.
    pub value: S,
    pub limit: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility<S> {
    pub violations: Vec<Violation<S>>,
}

impl<S> Feasibility<S> {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_feasible<S: Scalar>(
    profile: &LoadProfile<S>,
    params: &ProblemParams<S>,
    tol: S,
) -> Feasibility<S> {
    let mut max_edge: BTreeMap<usize, S> = BTreeMap::new();
    for (pair, &l) in &profile.edge_load {
        for u in [pair.lo(), pair.hi()] {
            let e = max_edge.entry(u).or_insert_with(S::zero);
            *e = e.max_of(l);
        }
    }
    let mut violations = Vec::new();
    for (&u, &load) in &profile.node_load {
        if !S::le_tol(load, S::one(), tol) {
            violations.push(Violation {
                machine: u,
                constraint: Constraint::Nominal,
                value: load,
                limit: S::one(),
            });
        }
        let failover = load + max_edge.get(&u).copied().unwrap_or_else(S::zero);
        if !S::le_tol(failover, params.failover_capacity, tol) {
            violations.push(Violation {
                machine: u,
                constraint: Constraint::Failover,
                value: failover,
                limit: params.failover_capacity,
            });
        }
    }
    Feasibility { violations }
}

/// Convenience: loads plus verdict at the default tolerance.
pub fn is_feasible<S: Scalar>(
    assignment: &Assignment,
    demands: &DemandSequence<S>,
    params: &ProblemParams<S>,
) -> Result<bool> {
    let profile = compute_loads(assignment, demands)?;
    Ok(check_feasible(&profile, params, S::default_tol()).is_ok())
}

/// Total size of placed demands.
pub fn utilization<S: Scalar>(assignment: &Assignment, demands: &DemandSequence<S>) -> S {
    assignment
        .placements()
        .filter_map(|(j, _)| demands.sizes().get(j).copied())
        .sum()
}

/// Incrementally maintained loads for online placement.
///
/// Loads only grow, so the cached per-machine maximum incident edge load is
/// always exact.
#[derive(Debug, Clone)]
pub struct LoadState<S> {
    capacity: S,
    tol: S,
    node: Vec<S>,
    max_edge: Vec<S>,
    edge: BTreeMap<Pair, S>,
}

impl<S: Scalar> LoadState<S> {
    pub fn new(params: &ProblemParams<S>, tol: S) -> Self {
        Self {
            capacity: params.failover_capacity,
            tol,
            node: Vec::new(),
            max_edge: Vec::new(),
            edge: BTreeMap::new(),
        }
    }

    fn grow(&mut self, u: usize) {
        if u >= self.node.len() {
            self.node.resize(u + 1, S::zero());
            self.max_edge.resize(u + 1, S::zero());
        }
    }

    pub fn node(&self, u: usize) -> S {
        self.node.get(u).copied().unwrap_or_else(S::zero)
    }

    pub fn edge(&self, pair: Pair) -> S {
        self.edge.get(&pair).copied().unwrap_or_else(S::zero)
    }

    pub fn max_incident(&self, u: usize) -> S {
        self.max_edge.get(u).copied().unwrap_or_else(S::zero)
    }

    fn endpoint_ok(&self, u: usize, new_edge: S, size: S) -> bool {
        let load = self.node(u) + size;
        let worst = self.max_incident(u).max_of(new_edge);
        S::le_tol(load, S::one(), self.tol) && S::le_tol(load + worst, self.capacity, self.tol)
    }

    /// Whether adding `size` on `pair` keeps both endpoints feasible.
    pub fn fits(&self, pair: Pair, size: S) -> bool {
        let new_edge = self.edge(pair) + size;
        self.endpoint_ok(pair.lo(), new_edge, size) && self.endpoint_ok(pair.hi(), new_edge, size)
    }

    pub fn add(&mut self, pair: Pair, size: S) {
        self.grow(pair.hi());
        let e = self.edge.entry(pair).or_insert_with(S::zero);
        *e += size;
        let e = *e;
        for u in [pair.lo(), pair.hi()] {
            self.node[u] += size;
            self.max_edge[u] = self.max_edge[u].max_of(e);
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Pair, S)> + '_ {
        self.edge.iter().map(|(&p, &l)| (p, l))
    }
}
