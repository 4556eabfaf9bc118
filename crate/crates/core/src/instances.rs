//! Demand generation, quantile instances, instance algebra and instance files.
//!
//! Randomness comes from ChaCha8 (`rand_chacha` pinned to 0.3.1). Per-trial
//! streams are seeded with [`trial_seed`], a SplitMix64 mix of the master
//! seed and the trial index.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, DemandSequence, ProblemParams};

/// Size distribution over `[0, min(1, B/2)]`.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Uniform { lo: f64, hi: f64 },
    PointMass { value: f64 },
    Discrete { values: Vec<f64>, weights: Vec<f64> },
    Mixture { components: Vec<DistributionSpec>, weights: Vec<f64> },
}

const WEIGHT_TOL: f64 = 1e-12;
const SUPPORT_SLACK: f64 = 1e-9;

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n || n == 0 {
        return Err(Error::Config(format!("expected {n} > 0 weights, got {}", weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Config("weights must be non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Config(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

impl DistributionSpec {
    /// Smallest and largest point of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Uniform { lo, hi } => (*lo, *hi),
            Self::PointMass { value } => (*value, *value),
            Self::Discrete { values, .. } => (
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            Self::Mixture { components, .. } => components.iter().map(|c| c.support()).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(a, b), (lo, hi)| (a.min(lo), b.max(hi)),
            ),
        }
    }

    pub fn validate(&self, params: &ProblemParams<f64>) -> Result<()> {
        match self {
            Self::Uniform { lo, hi } => {
                if !(lo <= hi) {
                    return Err(Error::Config(format!("uniform needs lo <= hi, got {lo} > {hi}")));
                }
            }
            Self::PointMass { .. } => {}
            Self::Discrete { values, weights } => check_weights(weights, values.len())?,
            Self::Mixture { components, weights } => {
                check_weights(weights, components.len())?;
                for c in components {
                    c.validate(params)?;
                }
            }
        }
        let (lo, hi) = self.support();
        if !(lo >= 0.0) || !(hi <= params.max_size() + SUPPORT_SLACK) {
            return Err(Error::Config(format!(
                "support [{lo}, {hi}] not within [0, {}]",
                params.max_size()
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            Self::PointMass { value } => *value,
            Self::Discrete { values, weights } => values[pick(weights, rng)],
            Self::Mixture { components, weights } => components[pick(weights, rng)].draw(rng),
        }
    }

    /// `mu([0, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Uniform { lo, hi } => {
                if x < *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    (x - lo) / (hi - lo)
                }
            }
            Self::PointMass { value } => f64::from(u8::from(x >= *value)),
            Self::Discrete { values, weights } => values
                .iter()
                .zip(weights)
                .filter(|(v, _)| **v <= x)
                .map(|(_, w)| w)
                .sum(),
            Self::Mixture { components, weights } => {
                components.iter().zip(weights).map(|(c, w)| w * c.cdf(x)).sum()
            }
        }
    }

    /// `mu([0, x))`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Self::Uniform { .. } => self.cdf(x),
            Self::PointMass { value } => f64::from(u8::from(x > *value)),
            Self::Discrete { values, weights } => values
                .iter()
                .zip(weights)
                .filter(|(v, _)| **v < x)
                .map(|(_, w)| w)
                .sum(),
            Self::Mixture { components, weights } => {
                components.iter().zip(weights).map(|(c, w)| w * c.cdf_left(x)).sum()
            }
        }
    }

    /// Atoms of a purely atomic distribution, sorted by value, equal values merged.
    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        let mut out = match self {
            Self::Uniform { lo, hi } if lo == hi => vec![(*lo, 1.0)],
            Self::Uniform { .. } => return None,
            Self::PointMass { value } => vec![(*value, 1.0)],
            Self::Discrete { values, weights } => {
                values.iter().copied().zip(weights.iter().copied()).collect()
            }
            Self::Mixture { components, weights } => {
                let mut all = Vec::new();
                for (c, w) in components.iter().zip(weights) {
                    all.extend(c.atoms()?.into_iter().map(|(v, p)| (v, p * w)));
                }
                all
            }
        };
        out.retain(|&(_, w)| w > 0.0);
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        Some(out)
    }

    /// Quantile `inf { x : mu([0, x]) >= p }`, with `p = 0` mapped to the
    /// bottom of the support.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if let Self::Uniform { lo, hi } = self {
            return Ok(if p <= 0.0 { *lo } else { lo + p.min(1.0) * (hi - lo) });
        }
        let atoms = self.atoms().ok_or_else(|| {
            Error::Config("quantiles need a uniform or purely atomic distribution".into())
        })?;
        let mut acc = 0.0;
        for &(v, w) in &atoms {
            acc += w;
            if acc >= p - WEIGHT_TOL {
                return Ok(v);
            }
        }
        Ok(atoms.last().map(|a| a.0).unwrap_or(0.0))
    }
}

fn pick(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(xs: &[f64]) -> String {
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        match self {
            Self::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            Self::PointMass { value } => write!(f, "point:{value}"),
            Self::Discrete { values, weights } => {
                write!(f, "discrete:{}:{}", list(values), list(weights))
            }
            Self::Mixture { components, weights } => {
                let parts: Vec<String> =
                    components.iter().zip(weights).map(|(c, w)| format!("{w}@{c}")).collect();
                write!(f, "mixture:{}", parts.join(";"))
            }
        }
    }
}

fn num(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn nums(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(num).collect()
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// `uniform:LO:HI`, `point:V`, `discrete:V1,V2:W1,W2`,
    /// `mixture:W1@SPEC1;W2@SPEC2`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "uniform" => {
                let (lo, hi) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse("uniform:LO:HI".into()))?;
                Ok(Self::Uniform { lo: num(lo)?, hi: num(hi)? })
            }
            "point" | "pointmass" => Ok(Self::PointMass { value: num(rest)? }),
            "discrete" => {
                let (v, w) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse("discrete:V1,V2:W1,W2".into()))?;
                Ok(Self::Discrete { values: nums(v)?, weights: nums(w)? })
            }
            "mixture" => {
                let mut components = Vec::new();
                let mut weights = Vec::new();
                for part in rest.split(';') {
                    let (w, c) = part
                        .split_once('@')
                        .ok_or_else(|| Error::Parse("mixture:W@SPEC;...".into()))?;
                    weights.push(num(w)?);
                    components.push(c.parse()?);
                }
                Ok(Self::Mixture { components, weights })
            }
            other => Err(Error::Parse(format!("unknown distribution kind {other:?}"))),
        }
    }
}

/// SplitMix64 finalizer over `(master, trial)`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sample(
    spec: &DistributionSpec,
    n: usize,
    seed: u64,
    params: &ProblemParams<f64>,
) -> Result<DemandSequence<f64>> {
    spec.validate(params)?;
    let mut rng = rng_from_seed(seed);
    let hi = params.max_size();
    let sizes = (0..n).map(|_| spec.draw(&mut rng).clamp(0.0, hi)).collect();
    DemandSequence::new(sizes, params)
}

/// Endless stream drawn like [`sample`]; its first `n` values equal `sample(spec, n, seed, params)`.
pub fn sample_stream(
    spec: &DistributionSpec,
    seed: u64,
    params: &ProblemParams<f64>,
) -> Result<impl Iterator<Item = f64>> {
    spec.validate(params)?;
    let spec = spec.clone();
    let mut rng = rng_from_seed(seed);
    let hi = params.max_size();
    Ok(std::iter::from_fn(move || Some(spec.draw(&mut rng).clamp(0.0, hi))))
}

/// The deterministic instance `{ mu^-1(j / T) : j = 0..T-1 }`, nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileInstance {
    pub t: usize,
    pub sizes: Vec<f64>,
}

impl QuantileInstance {
    pub fn demands(&self, params: &ProblemParams<f64>) -> Result<DemandSequence<f64>> {
        DemandSequence::new(self.sizes.clone(), params)
    }
}

pub fn quantile_instance(spec: &DistributionSpec, t: usize) -> Result<QuantileInstance> {
    if t == 0 {
        return Err(Error::Input("quantile instance needs T >= 1".into()));
    }
    let sizes = (0..t)
        .map(|j| spec.quantile(j as f64 / t as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantileInstance { t, sizes })
}

/// `k` copies of every demand, copies of one demand adjacent.
pub fn duplicate(instance: &DemandSequence<f64>, k: usize) -> DemandSequence<f64> {
    let sizes: Vec<f64> =
        instance.sizes().iter().flat_map(|&s| std::iter::repeat_n(s, k)).collect();
    // Sizes were validated once already.
    let params = ProblemParams { failover_capacity: f64::INFINITY, machine_budget: None };
    DemandSequence::new(sizes, &params).expect("copies of valid sizes")
}

/// Sorted pointwise domination `sorted(a)[i] <= sorted(b)[i]`.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Input(format!("length mismatch {} vs {}", a.len(), b.len())));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).all(|(x, y)| x <= y))
}

/// Continuation of the four-machine adversary once the two `epsilon`
/// demands (indices 0 and 1) are placed.
pub fn adversary_step(placements: &Assignment, epsilon: f64) -> Result<Vec<f64>> {
    match (placements.get(0), placements.get(1)) {
        (Some(a), Some(b)) if placements.len() == 2 => {
            if a == b {
                Ok(vec![1.0 - epsilon, 1.0 - epsilon])
            } else {
                Ok(vec![1.0])
            }
        }
        _ => Err(Error::Protocol(
            "the adversary continues only after exactly the two opening demands are placed".into(),
        )),
    }
}

/// On-disk instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "B")]
    pub failover_capacity: f64,
    pub m: Option<usize>,
    pub sizes: Vec<f64>,
}

impl InstanceFile {
    pub fn params(&self) -> Result<ProblemParams<f64>> {
        ProblemParams::new(self.failover_capacity, self.m)
    }

    pub fn demands(&self) -> Result<DemandSequence<f64>> {
        DemandSequence::new(self.sizes.clone(), &self.params()?)
    }

    fn validated(self) -> Result<Self> {
        self.demands()?;
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = match self.m {
            Some(m) => format!("{} {}\n", self.failover_capacity, m),
            None => format!("{} -\n", self.failover_capacity),
        };
        for s in &self.sizes {
            out.push_str(&format!("{s}\n"));
        }
        out
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        f.validated()
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty instance file".into()))?;
        let mut parts = header.split_whitespace();
        let b = num(parts.next().ok_or_else(|| Error::Parse("missing B".into()))?)?;
        let m = match parts.next() {
            None | Some("-") => None,
            Some(m) => Some(m.parse().map_err(|_| Error::Parse(format!("bad m: {m:?}")))?),
        };
        let sizes = lines.map(num).collect::<Result<Vec<_>>>()?;
        Self { failover_capacity: b, m, sizes }.validated()
    }

    /// JSON when the content starts with `{`, plain text otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_text(text)
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
