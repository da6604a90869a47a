//! Cross-checks between the simulator, the exact oracle and the limit laws.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::Result;
use crate::exact::{exact_levels, exact_levels_rational, DEFAULT_FRONTIER_LIMIT};
use crate::mc::{sample_checkpoints, state_frequencies};
use crate::stats::{beta_cdf, ks_statistic, BetaDist, Ecdf, Uniform};
use crate::theory::polya_limit_params;
use crate::urn::{MixingProb, UrnParams};

/// Allowed deviation of a Monte Carlo frequency, in standard errors.
pub const ORACLE_STDERRS: f64 = 4.0;
pub const FLOAT_RATIONAL_TOL: f64 = 1e-10;
pub const KS_UNIFORM_THRESHOLD: f64 = 0.02;
pub const REFLECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub params: UrnParams,
    pub max_n: u64,
    pub replicates: u64,
    pub seed: u64,
    pub workers: usize,
    pub ks_steps: u64,
    pub ks_replicates: u64,
    /// Negative control: simulate with a kernel that adds one extra ball of
    /// the drawn colour on every branch.
    pub corrupt_kernel: bool,
}

impl ValidateOptions {
    pub fn new(params: UrnParams) -> Self {
        Self {
            params,
            max_n: 8,
            replicates: 100_000,
            seed: 42,
            workers: 0,
            ks_steps: 10_000,
            ks_replicates: 100_000,
            corrupt_kernel: false,
        }
    }
}

/// Largest per-state deviation, in standard errors, between Monte Carlo
/// frequencies and exact probabilities over levels `1..=max_n`.
///
/// `sim_params` drives the simulation and `params` the oracle; they only
/// differ for negative controls. A state the oracle gives zero mass but the
/// simulation visits scores infinity.
pub fn oracle_deviation(
    params: &UrnParams,
    sim_params: &UrnParams,
    max_n: u64,
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<(f64, String)> {
    let exact = exact_levels(params, max_n, DEFAULT_FRONTIER_LIMIT)?;
    let freq = state_frequencies(sim_params, max_n, replicates, seed, workers)?;
    let n = replicates as f64;
    let mut worst = 0.0f64;
    let mut where_ = String::from("none");
    for (dist, counts) in exact.iter().zip(&freq).skip(1) {
        let keys: BTreeSet<(u64, u64)> =
            dist.support.keys().chain(counts.keys()).copied().collect();
        for key in keys {
            let q = dist.support.get(&key).copied().unwrap_or(0.0);
            let f = counts.get(&key).copied().unwrap_or(0) as f64 / n;
            let se = (q * (1.0 - q) / n).sqrt();
            let z = if se > 0.0 {
                (f - q).abs() / se
            } else if f == q {
                0.0
            } else {
                f64::INFINITY
            };
            if z > worst {
                worst = z;
                where_ = format!("n={} state=({}, {}) freq={f} exact={q}", dist.n, key.0, key.1);
            }
        }
    }
    Ok((worst, where_))
}

/// Largest absolute gap between float and rational exact probabilities.
pub fn float_rational_gap(params: &UrnParams, max_n: u64) -> Result<f64> {
    let float = exact_levels(params, max_n, DEFAULT_FRONTIER_LIMIT)?;
    let exact = exact_levels_rational(params, max_n, DEFAULT_FRONTIER_LIMIT)?;
    let mut gap = 0.0f64;
    for (f, e) in float.iter().zip(&exact) {
        if f.support.len() != e.support.len() {
            return Ok(f64::INFINITY);
        }
        for (key, q) in &e.support {
            let qf = f.support.get(key).copied().unwrap_or(f64::NAN);
            let d = (qf - q.to_f64().unwrap_or(f64::NAN)).abs();
            gap = if d.is_nan() { f64::INFINITY } else { gap.max(d) };
        }
    }
    Ok(gap)
}

/// KS distance of simulated `X_n` to a reference CDF.
pub fn ks_at(
    params: &UrnParams,
    n_steps: u64,
    replicates: u64,
    seed: u64,
    workers: usize,
    reference: &dyn crate::stats::Cdf,
) -> Result<f64> {
    let samples = sample_checkpoints(params, n_steps, replicates, seed, &[n_steps], workers)?;
    let ecdf = Ecdf::new(samples.values.into_iter().next().unwrap_or_default())?;
    Ok(ks_statistic(&ecdf, reference))
}

/// Largest `|I_x(a, b) - (1 - I_{1-x}(b, a))|` over a 100-point grid.
pub fn beta_reflection_gap(a: f64, b: f64) -> Result<f64> {
    let mut gap = 0.0f64;
    for i in 0..100 {
        let x = (i as f64 + 0.5) / 100.0;
        let lhs = beta_cdf(a, b, x)?;
        let rhs = 1.0 - beta_cdf(b, a, 1.0 - x)?;
        gap = gap.max((lhs - rhs).abs());
    }
    Ok(gap)
}

fn check(name: &str, statistic: f64, threshold: f64, strict: bool, detail: String) -> CheckResult {
    let passed = if strict {
        statistic < threshold
    } else {
        statistic <= threshold
    };
    CheckResult {
        name: name.to_string(),
        passed,
        statistic,
        threshold,
        detail,
    }
}

pub fn run_validation(opts: &ValidateOptions) -> Result<ValidationReport> {
    let params = &opts.params;
    let sim_params = if opts.corrupt_kernel {
        UrnParams::new(
            params.y0(),
            params.b0(),
            params.alpha() + 1,
            params.beta(),
            params.gamma() + 1,
            params.mixing(),
        )?
    } else {
        *params
    };
    let mut checks = Vec::new();

    let (z, at) = oracle_deviation(params, &sim_params, opts.max_n, opts.replicates, opts.seed, opts.workers)?;
    checks.push(check(
        "mc_vs_exact",
        z,
        ORACLE_STDERRS,
        false,
        format!("max |freq - prob| / stderr over n=1..{} ({} replicates); worst at {at}", opts.max_n, opts.replicates),
    ));

    let gap = float_rational_gap(params, opts.max_n)?;
    checks.push(check(
        "float_vs_rational",
        gap,
        FLOAT_RATIONAL_TOL,
        false,
        format!("max probability gap over n=0..{}", opts.max_n),
    ));

    let uniform_params = UrnParams::new(1, 1, params.alpha(), params.beta(), 1, MixingProb::new(0.0)?)?;
    let ks = ks_at(&uniform_params, opts.ks_steps, opts.ks_replicates, opts.seed, opts.workers, &Uniform)?;
    checks.push(check(
        "ks_polya_uniform",
        ks,
        KS_UNIFORM_THRESHOLD,
        true,
        format!("p=0, y0=b0=gamma=1, n={}, {} replicates vs Uniform[0,1]", opts.ks_steps, opts.ks_replicates),
    ));

    if let Some(limit) = polya_limit_params(params) {
        let dist = BetaDist::new(limit.a, limit.b)?;
        let ks = ks_at(params, opts.ks_steps, opts.ks_replicates, opts.seed, opts.workers, &dist)?;
        checks.push(check(
            "ks_polya_beta",
            ks,
            KS_UNIFORM_THRESHOLD,
            true,
            format!("n={} vs Beta({}, {})", opts.ks_steps, limit.a, limit.b),
        ));
    }

    let mut gap = 0.0f64;
    for (a, b) in [(0.5, 0.5), (1.0, 1.0), (2.0, 3.0), (7.5, 1.5), (40.0, 60.0), (100.0, 100.0)] {
        gap = gap.max(beta_reflection_gap(a, b)?);
    }
    checks.push(check(
        "beta_reflection",
        gap,
        REFLECTION_TOL,
        false,
        "max |I_x(a,b) - (1 - I_{1-x}(b,a))| over a 100-point grid".to_string(),
    ));

    Ok(ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
