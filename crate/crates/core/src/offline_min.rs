//! Offline machine minimization: linear grouping, configuration LP, edge
//! realization of the rounded configurations and first-fit fallback.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::configlp::{round_up, solve_config_lp, Configuration, TypePartition};
use crate::error::{Error, Result};
use crate::model::{check_feasible, compute_loads, Assignment, DemandSequence, Pair, ProblemParams};

const TOL: f64 = 1e-9;

/// `min(0.9, n^(-1/6))`.
pub fn default_epsilon(n: usize) -> f64 {
    if n == 0 {
        return 0.9;
    }
    (n as f64).powf(-1.0 / 6.0).min(0.9)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("epsilon must lie in (0, 1), got {eps}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediumGroup {
    /// Size every member is rounded up to (the group maximum).
    pub rounded: f64,
    /// Demand indices, largest first.
    pub members: Vec<usize>,
}

/// Demand indices split into small, large and rounded medium groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grouping {
    pub epsilon: f64,
    pub small: Vec<usize>,
    pub large: Vec<usize>,
    pub groups: Vec<MediumGroup>,
    pub block_count: usize,
}

impl Grouping {
    pub fn medium_count(&self) -> usize {
        self.large.len() + self.groups.iter().map(|g| g.members.len()).sum::<usize>()
    }
}

pub fn partition_and_group(sizes: &[f64], eps: f64) -> Result<Grouping> {
    check_epsilon(eps)?;
    let cut = eps * eps;
    let (mut medium, small): (Vec<usize>, Vec<usize>) = (0..sizes.len()).partition(|&j| sizes[j] >= cut);
    medium.sort_by(|&a, &b| sizes[b].total_cmp(&sizes[a]).then(a.cmp(&b)));
    let small_total: f64 = small.iter().map(|&j| sizes[j]).sum();
    let block_count = (small_total / eps).ceil() as usize;
    let mut grouping = Grouping { epsilon: eps, small, large: Vec::new(), groups: Vec::new(), block_count };
    if medium.is_empty() {
        return Ok(grouping);
    }
    let g = ((eps.powi(3) * medium.len() as f64 - 1e-9).ceil() as usize).max(1);
    let mut chunks = medium.chunks(g);
    grouping.large = chunks.next().map(<[usize]>::to_vec).unwrap_or_default();
    grouping.groups = chunks
        .map(|c| MediumGroup { rounded: sizes[c[0]], members: c.to_vec() })
        .collect();
    Ok(grouping)
}

/// First-fit over disjoint edges with per-edge cap `min(1, B/2)`.
/// Returns the edge index of each item and the final edge loads.
pub fn firstfit_edges(sizes: &[f64], failover: f64) -> (Vec<usize>, Vec<f64>) {
    let cap = 1.0f64.min(failover / 2.0);
    let mut loads: Vec<f64> = Vec::new();
    let mut placed = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let e = match loads.iter().position(|&l| l + s <= cap + TOL) {
            Some(e) => e,
            None => {
                loads.push(0.0);
                loads.len() - 1
            }
        };
        loads[e] += s;
        placed.push(e);
    }
    (placed, loads)
}

/// First-fit on fresh machines `2e, 2e+1`; demand `j` is item `j`.
pub fn edges_firstfit(sizes: &[f64], failover: f64) -> Assignment {
    let (placed, _) = firstfit_edges(sizes, failover);
    let mut a = Assignment::new();
    for (j, e) in placed.into_iter().enumerate() {
        a.place(j, Pair::of(2 * e, 2 * e + 1));
    }
    a
}

/// Edges realizing the configurations, per type, plus unplaced counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigMatching {
    /// Edges between configuration indices, one demand each.
    pub edges: Vec<Vec<(usize, usize)>>,
    pub leftovers: Vec<usize>,
}

/// Removes surplus slots so type `t` has exactly `2 n_t` slots, taking from
/// the last configurations first.
pub fn trim_configs(configs: &mut [Configuration], partition: &TypePartition) -> Result<()> {
    for t in 0..partition.len() {
        let have: usize = configs.iter().map(|c| c.count(t) as usize).sum();
        let need = 2 * partition.count(t);
        if have < need {
            return Err(Error::Input(format!("type {t} has {have} slots, needs {need}")));
        }
        let mut extra = have - need;
        for c in configs.iter_mut().rev() {
            if extra == 0 {
                break;
            }
            let drop = extra.min(c.count(t) as usize);
            c.set(t, c.count(t) - drop as u32);
            extra -= drop;
        }
    }
    Ok(())
}

/// Realizes configurations as machines. Types are handled in `order`; each
/// one splits its configurations into two sides of near-equal degree and
/// places demands on unused edges across the split.
pub fn match_configs(
    configs: &[Configuration],
    partition: &TypePartition,
    order: &[usize],
) -> Result<ConfigMatching> {
    let t_count = partition.len();
    if configs.iter().any(|c| c.counts().len() != t_count) {
        return Err(Error::Input("configuration width differs from the partition".into()));
    }
    let mut configs = configs.to_vec();
    trim_configs(&mut configs, partition)?;
    let mut used: HashSet<(usize, usize)> = HashSet::new();
    let mut edges = vec![Vec::new(); t_count];
    let mut leftovers = vec![0; t_count];
    for &t in order {
        let (mut left, mut right) = (Vec::new(), Vec::new());
        let (mut dl, mut dr) = (0usize, 0usize);
        for (i, c) in configs.iter().enumerate() {
            let d = c.count(t) as usize;
            if d == 0 {
                continue;
            }
            if dl <= dr {
                left.push(i);
                dl += d;
            } else {
                right.push(i);
                dr += d;
            }
        }
        let mut rem: Vec<usize> = configs.iter().map(|c| c.count(t) as usize).collect();
        let mut todo = partition.count(t);
        'outer: for &a in &left {
            for &b in &right {
                if todo == 0 {
                    break 'outer;
                }
                if rem[a] == 0 {
                    break;
                }
                let key = (a.min(b), a.max(b));
                if rem[b] > 0 && !used.contains(&key) {
                    used.insert(key);
                    rem[a] -= 1;
                    rem[b] -= 1;
                    edges[t].push(key);
                    todo -= 1;
                }
            }
        }
        leftovers[t] = todo;
    }
    Ok(ConfigMatching { edges, leftovers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SlotOrigin {
    Large,
    Medium { group: usize },
    Small,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slot {
    pub edge: Pair,
    pub size: f64,
    pub origin: SlotOrigin,
}

/// Edge layout of a solved instance. Each placed demand leaves a slot whose
/// size is what its edge position can hold: the group maximum for medium
/// demands and the original size otherwise. Block capacity is listed
/// separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Template {
    pub machines: usize,
    pub slots: Vec<Slot>,
    pub block_slots: Vec<Slot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Breakdown {
    pub large: usize,
    pub template: usize,
    pub fallback: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OfflineReport {
    pub machines: usize,
    pub feasible: bool,
    pub lp_value: f64,
    pub epsilon: f64,
    pub breakdown: Breakdown,
    /// Demands left over by the configuration matching.
    pub matching_leftovers: usize,
    #[serde(skip)]
    pub assignment: Assignment,
    #[serde(skip)]
    pub template: Template,
}

/// Places every demand; see the module docs for the stages.
pub fn offline_min_failover(sizes: &[f64], failover: f64, eps: f64) -> Result<OfflineReport> {
    let params = ProblemParams::new(failover, None)?;
    let demands = DemandSequence::new(sizes.to_vec(), &params)?;
    let grouping = partition_and_group(sizes, eps)?;
    let mut placements: Vec<Option<(Pair, SlotOrigin, f64)>> = vec![None; sizes.len()];
    let mut next = 0usize;

    for &j in &grouping.large {
        placements[j] = Some((Pair::of(next, next + 1), SlotOrigin::Large, sizes[j]));
        next += 2;
    }
    let large_machines = next;

    // Types: medium groups in descending rounded size, then blocks.
    let mut types: Vec<(f64, usize)> =
        grouping.groups.iter().map(|g| (g.rounded, g.members.len())).collect();
    // A block larger than the largest valid demand fits on no machine.
    let block = eps.min(params.max_size());
    let block_count = if block < eps {
        (grouping.small.iter().map(|&j| sizes[j]).sum::<f64>() / block).ceil() as usize
    } else {
        grouping.block_count
    };
    let block_type = (block_count > 0).then(|| {
        types.push((block, block_count));
        types.len() - 1
    });
    let partition = TypePartition::new(types)?;
    let lp = solve_config_lp(&partition, failover, TOL)?;
    let configs = round_up(&lp, &partition);
    let order: Vec<usize> = (0..partition.len()).collect();
    let matching = match_configs(&configs, &partition, &order)?;
    let base = next;
    let mut template_used: BTreeMap<usize, ()> = BTreeMap::new();
    let mut fallback: Vec<usize> = Vec::new();

    for (g, group) in grouping.groups.iter().enumerate() {
        let edges = &matching.edges[g];
        for (k, &j) in group.members.iter().enumerate() {
            match edges.get(k) {
                Some(&(a, b)) => {
                    template_used.insert(a, ());
                    template_used.insert(b, ());
                    placements[j] = Some((
                        Pair::of(base + a, base + b),
                        SlotOrigin::Medium { group: g },
                        group.rounded,
                    ));
                }
                None => fallback.push(j),
            }
        }
    }

    let mut block_slots: Vec<Slot> = Vec::new();
    if let Some(bt) = block_type {
        let mut block_load = vec![0.0; matching.edges[bt].len()];
        for &(a, b) in &matching.edges[bt] {
            block_slots.push(Slot {
                edge: Pair::of(base + a, base + b),
                size: block,
                origin: SlotOrigin::Small,
            });
        }
        for &j in &grouping.small {
            let s = sizes[j];
            match block_load.iter().position(|&l| l + s <= block + TOL) {
                Some(e) => {
                    block_load[e] += s;
                    let (a, b) = matching.edges[bt][e];
                    template_used.insert(a, ());
                    template_used.insert(b, ());
                    placements[j] = Some((Pair::of(base + a, base + b), SlotOrigin::Small, s));
                }
                None => fallback.push(j),
            }
        }
    } else {
        fallback.extend(grouping.small.iter().copied());
    }

    // Compact configuration machines to those actually used.
    let remap: BTreeMap<usize, usize> =
        template_used.keys().enumerate().map(|(i, &c)| (base + c, base + i)).collect();
    let template_machines = remap.len();
    for p in placements.iter_mut().flatten() {
        if p.0.lo() >= base {
            p.0 = Pair::of(remap[&p.0.lo()], remap[&p.0.hi()]);
        }
    }
    let block_slots: Vec<Slot> = block_slots
        .into_iter()
        .filter_map(|s| match (remap.get(&s.edge.lo()), remap.get(&s.edge.hi())) {
            (Some(&a), Some(&b)) => Some(Slot { edge: Pair::of(a, b), ..s }),
            _ => None,
        })
        .collect();
    next = base + template_machines;

    let fallback_sizes: Vec<f64> = fallback.iter().map(|&j| sizes[j]).collect();
    let (ff, ff_loads) = firstfit_edges(&fallback_sizes, failover);
    for (&j, e) in fallback.iter().zip(ff) {
        placements[j] = Some((Pair::of(next + 2 * e, next + 2 * e + 1), SlotOrigin::Fallback, sizes[j]));
    }
    let fallback_machines = 2 * ff_loads.len();

    let mut assignment = Assignment::new();
    let mut slots = Vec::with_capacity(sizes.len());
    for (j, p) in placements.into_iter().enumerate() {
        let (edge, origin, slot) =
            p.ok_or_else(|| Error::Invariant(format!("demand {j} was never placed")))?;
        assignment.place(j, edge);
        slots.push(Slot { edge, size: slot, origin });
    }
    let machines = large_machines + template_machines + fallback_machines;
    let feasible = {
        let loads = compute_loads(&assignment, &demands)?;
        check_feasible(&loads, &params, TOL).is_ok()
    };
    Ok(OfflineReport {
        machines,
        feasible,
        lp_value: lp.objective,
        epsilon: eps,
        breakdown: Breakdown {
            large: large_machines,
            template: template_machines,
            fallback: fallback_machines,
        },
        matching_leftovers: matching.leftovers.iter().sum(),
        assignment,
        template: Template { machines, slots, block_slots },
    })
}
