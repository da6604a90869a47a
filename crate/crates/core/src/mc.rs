//! Parallel Monte Carlo over independent replicates.
//!
//! Replicate `r` always draws from `RngStream::new(master_seed, r)` and
//! every reduction runs in replicate order, so results are bit-identical
//! for any worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::urn::{advance, new_urn, validate_checkpoints, RngStream, UrnParams};

/// Half-width of the window around 1/2 used by `mass_near_half`.
pub const NEAR_HALF_RADIUS: f64 = 0.1;
pub const DEFAULT_BINS: usize = 100;

const FREQUENCY_CHUNK: u64 = 4096;

/// Streaming count, mean, sum of squared deviations, min and max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for MomentAccumulator {
    fn default() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// Pairwise combination of two partial summaries.
    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: (na * self.mean + nb * other.mean) / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    /// Sample variance `m2 / (count - 1)`.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> Option<f64> {
        self.variance().map(|v| (v / self.count as f64).sqrt())
    }
}

pub fn merge(a: &MomentAccumulator, b: &MomentAccumulator) -> MomentAccumulator {
    a.merge(b)
}

/// Balanced pairwise reduction in index order.
pub fn tree_moments(values: &[f64]) -> MomentAccumulator {
    match values.len() {
        0 => MomentAccumulator::new(),
        1 => {
            let mut acc = MomentAccumulator::new();
            acc.push(values[0]);
            acc
        }
        n => {
            let (l, r) = values.split_at(n / 2);
            tree_moments(l).merge(&tree_moments(r))
        }
    }
}

/// Uniform histogram on [0, 1].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::NoBins);
        }
        Ok(Self {
            counts: vec![0; bins],
            total: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// `floor(x * B)`, with `x = 1` in the last bin.
    pub fn bin_of(&self, x: f64) -> usize {
        let b = self.bins();
        ((x * b as f64).floor() as usize).min(b - 1)
    }

    pub fn add(&mut self, x: f64) {
        let i = self.bin_of(x);
        self.counts[i] += 1;
        self.total += 1;
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let b = self.bins() as f64;
        (i as f64 / b, (i + 1) as f64 / b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub n: u64,
    pub moments: MomentAccumulator,
    pub histogram: Histogram,
    /// Fraction of replicates with `|X_n - 1/2| <= NEAR_HALF_RADIUS`.
    pub mass_near_half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub params: UrnParams,
    pub n_steps: u64,
    pub replicates: u64,
    pub master_seed: u64,
    pub checkpoints: Vec<CheckpointSummary>,
}

/// `X_n` per checkpoint and replicate: `values[c][r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointSamples {
    pub checkpoints: Vec<u64>,
    pub values: Vec<Vec<f64>>,
}

/// Number of workers to use when none is requested.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    let workers = if workers == 0 { default_workers() } else { workers };
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Simulates `replicates` independent trajectories and keeps `X_n` at each
/// checkpoint.
pub fn sample_checkpoints(
    params: &UrnParams,
    n_steps: u64,
    replicates: u64,
    master_seed: u64,
    checkpoints: &[u64],
    workers: usize,
) -> Result<CheckpointSamples> {
    if replicates == 0 {
        return Err(Error::NoReplicates);
    }
    validate_checkpoints(checkpoints, n_steps)?;
    let per_replicate: Vec<Vec<f64>> = with_pool(workers, || {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngStream::new(master_seed, r);
                let mut state = new_urn(params);
                let mut xs = Vec::with_capacity(checkpoints.len());
                for &c in checkpoints {
                    state = advance(state, params, &mut rng, c - state.n);
                    xs.push(state.proportion());
                }
                // Later draws cannot affect recorded values; skip them.
                xs
            })
            .collect()
    });
    let values = (0..checkpoints.len())
        .map(|c| per_replicate.iter().map(|xs| xs[c]).collect())
        .collect();
    Ok(CheckpointSamples {
        checkpoints: checkpoints.to_vec(),
        values,
    })
}

pub fn summarize(
    params: &UrnParams,
    n_steps: u64,
    master_seed: u64,
    samples: &CheckpointSamples,
    bins: usize,
) -> Result<ReplicateSummary> {
    let replicates = samples.values.first().map_or(0, |v| v.len()) as u64;
    let checkpoints = samples
        .checkpoints
        .iter()
        .zip(&samples.values)
        .map(|(&n, xs)| {
            let mut histogram = Histogram::new(bins)?;
            let mut near = 0u64;
            for &x in xs {
                histogram.add(x);
                if (x - 0.5).abs() <= NEAR_HALF_RADIUS {
                    near += 1;
                }
            }
            Ok(CheckpointSummary {
                n,
                moments: tree_moments(xs),
                histogram,
                mass_near_half: near as f64 / xs.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateSummary {
        params: *params,
        n_steps,
        replicates,
        master_seed,
        checkpoints,
    })
}

/// Monte Carlo summary of `X_n` at each checkpoint.
pub fn run_replicates(
    params: &UrnParams,
    n_steps: u64,
    replicates: u64,
    master_seed: u64,
    checkpoints: &[u64],
    bins: usize,
    workers: usize,
) -> Result<ReplicateSummary> {
    if bins == 0 {
        return Err(Error::NoBins);
    }
    let samples = sample_checkpoints(params, n_steps, replicates, master_seed, checkpoints, workers)?;
    summarize(params, n_steps, master_seed, &samples, bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_err: f64,
    pub q90_abs_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub params: UrnParams,
    pub replicates: u64,
    pub points: Vec<CurvePoint>,
    pub warning: Option<String>,
}

/// `1, 2, 4, ...` up to `n_max`, with `n_max` appended when it is not a
/// power of two.
pub fn geometric_checkpoints(n_max: u64) -> Vec<u64> {
    if n_max == 0 {
        return vec![0];
    }
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |&n| n.checked_mul(2))
        .take_while(|&n| n <= n_max)
        .collect();
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// Nearest-rank quantile of an unsorted slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn convergence_curve(
    params: &UrnParams,
    n_max: u64,
    replicates: u64,
    master_seed: u64,
    workers: usize,
) -> Result<ConvergenceCurve> {
    let checkpoints = geometric_checkpoints(n_max);
    let samples = sample_checkpoints(params, n_max, replicates, master_seed, &checkpoints, workers)?;
    let points = checkpoints
        .iter()
        .zip(&samples.values)
        .map(|(&n, xs)| {
            let m = tree_moments(xs);
            let dev: Vec<f64> = xs.iter().map(|x| (x - 0.5).abs()).collect();
            CurvePoint {
                n,
                mean: m.mean,
                variance: m.variance().unwrap_or(0.0),
                std_err: m.std_err().unwrap_or(0.0),
                q90_abs_dev: quantile(&dev, 0.9),
            }
        })
        .collect();
    let warning = (!params.within_theorem()).then(|| {
        "parameters lie outside the convergence theorem; X_n need not approach 1/2".to_string()
    });
    Ok(ConvergenceCurve {
        params: *params,
        replicates,
        points,
        warning,
    })
}

/// Counts of each `(y, b)` at steps `0..=n_max` over `replicates` runs.
pub fn state_frequencies(
    params: &UrnParams,
    n_max: u64,
    replicates: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<BTreeMap<(u64, u64), u64>>> {
    if replicates == 0 {
        return Err(Error::NoReplicates);
    }
    let levels = n_max as usize + 1;
    let chunks = replicates.div_ceil(FREQUENCY_CHUNK);
    let partial: Vec<Vec<BTreeMap<(u64, u64), u64>>> = with_pool(workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut counts = vec![BTreeMap::new(); levels];
                let lo = chunk * FREQUENCY_CHUNK;
                let hi = (lo + FREQUENCY_CHUNK).min(replicates);
                for r in lo..hi {
                    let mut rng = RngStream::new(master_seed, r);
                    let mut state = new_urn(params);
                    *counts[0].entry((state.y, state.b)).or_insert(0) += 1;
                    for level in counts.iter_mut().skip(1) {
                        state = advance(state, params, &mut rng, 1);
                        *level.entry((state.y, state.b)).or_insert(0) += 1;
                    }
                }
                counts
            })
            .collect()
    });
    let mut total = vec![BTreeMap::new(); levels];
    for chunk in partial {
        for (acc, level) in total.iter_mut().zip(chunk) {
            for (k, c) in level {
                *acc.entry(k).or_insert(0) += c;
            }
        }
    }
    Ok(total)
}
