//! The mixed Friedman/Pólya urn: parameters, state, the four-branch
//! transition kernel and reproducible sampling.
//!
//! At each step a scheme is chosen first (Friedman with probability `p`,
//! Pólya otherwise), then a colour is drawn with probability equal to the
//! current yellow proportion. Friedman adds `alpha` balls of the drawn
//! colour and `beta` of the other one; Pólya adds `gamma` balls of the
//! drawn colour only.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParamError, Result};

/// Friedman mixing probability. Keeps the exact fraction when one was
/// supplied so that `theta = 0` can be detected without rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingProb {
    value: f64,
    ratio: Option<(u64, u64)>,
}

impl MixingProb {
    pub fn new(value: f64) -> Result<Self, ParamError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(ParamError::P(value));
        }
        Ok(Self { value, ratio: None })
    }

    /// Exact fraction `num/den`, reduced to lowest terms.
    pub fn ratio(num: u64, den: u64) -> Result<Self, ParamError> {
        if den == 0 {
            return Err(ParamError::PSyntax(format!("{num}/{den}")));
        }
        if num > den {
            return Err(ParamError::P(num as f64 / den as f64));
        }
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        Ok(Self {
            value: num as f64 / den as f64,
            ratio: Some((num, den)),
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn as_ratio(&self) -> Option<(u64, u64)> {
        self.ratio
    }

    /// Exact rational value. Decimal inputs convert exactly from their
    /// binary representation.
    pub fn to_rational(&self) -> BigRational {
        match self.ratio {
            Some((n, d)) => BigRational::new(BigInt::from(n), BigInt::from(d)),
            None => BigRational::from_float(self.value).expect("p is finite"),
        }
    }
}

impl From<MixingProb> for f64 {
    fn from(p: MixingProb) -> f64 {
        p.value
    }
}

impl FromStr for MixingProb {
    type Err = ParamError;

    /// Accepts a decimal (`0.05`) or a fraction (`1/20`).
    fn from_str(s: &str) -> Result<Self, ParamError> {
        let s = s.trim();
        let syntax = || ParamError::PSyntax(s.to_string());
        match s.split_once('/') {
            Some((num, den)) => {
                let num: u64 = num.trim().parse().map_err(|_| syntax())?;
                let den: u64 = den.trim().parse().map_err(|_| syntax())?;
                MixingProb::ratio(num, den)
            }
            None => {
                let v: f64 = s.parse().map_err(|_| syntax())?;
                if v.is_nan() {
                    return Err(syntax());
                }
                MixingProb::new(v)
            }
        }
    }
}

impl fmt::Display for MixingProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ratio {
            Some((n, d)) => write!(f, "{n}/{d}"),
            None => write!(f, "{}", self.value),
        }
    }
}

/// The five model integers and the mixing probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct UrnParams {
    y0: u64,
    b0: u64,
    alpha: u64,
    beta: u64,
    gamma: u64,
    p: MixingProb,
}

impl UrnParams {
    pub fn new(
        y0: u64,
        b0: u64,
        alpha: u64,
        beta: u64,
        gamma: u64,
        p: MixingProb,
    ) -> Result<Self, ParamError> {
        if y0 < 1 {
            return Err(ParamError::Y0(y0));
        }
        if b0 < 1 {
            return Err(ParamError::B0(b0));
        }
        if alpha + beta + gamma == 0 {
            return Err(ParamError::NoAdditions);
        }
        Ok(Self {
            y0,
            b0,
            alpha,
            beta,
            gamma,
            p,
        })
    }

    /// Shorthand taking `p` as a float.
    pub fn with_p(
        y0: u64,
        b0: u64,
        alpha: u64,
        beta: u64,
        gamma: u64,
        p: f64,
    ) -> Result<Self, ParamError> {
        Self::new(y0, b0, alpha, beta, gamma, MixingProb::new(p)?)
    }

    pub fn y0(&self) -> u64 {
        self.y0
    }
    pub fn b0(&self) -> u64 {
        self.b0
    }
    pub fn alpha(&self) -> u64 {
        self.alpha
    }
    pub fn beta(&self) -> u64 {
        self.beta
    }
    pub fn gamma(&self) -> u64 {
        self.gamma
    }
    pub fn p(&self) -> f64 {
        self.p.value
    }
    pub fn mixing(&self) -> MixingProb {
        self.p
    }

    /// True iff alpha, beta, gamma >= 1 and p > 0, the regime where the
    /// proportion converges almost surely to one half.
    pub fn within_theorem(&self) -> bool {
        self.alpha >= 1 && self.beta >= 1 && self.gamma >= 1 && self.p.value > 0.0
    }

    /// Same parameters with the initial colours exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            y0: self.b0,
            b0: self.y0,
            ..*self
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    y0: u64,
    b0: u64,
    alpha: u64,
    beta: u64,
    gamma: u64,
    p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_ratio: Option<(u64, u64)>,
}

impl TryFrom<RawParams> for UrnParams {
    type Error = ParamError;

    fn try_from(r: RawParams) -> Result<Self, ParamError> {
        let p = match r.p_ratio {
            Some((n, d)) => MixingProb::ratio(n, d)?,
            None => MixingProb::new(r.p)?,
        };
        UrnParams::new(r.y0, r.b0, r.alpha, r.beta, r.gamma, p)
    }
}

impl From<UrnParams> for RawParams {
    fn from(u: UrnParams) -> Self {
        RawParams {
            y0: u.y0,
            b0: u.b0,
            alpha: u.alpha,
            beta: u.beta,
            gamma: u.gamma,
            p: u.p.value,
            p_ratio: u.p.ratio,
        }
    }
}

/// Ball counts after `n` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UrnState {
    pub y: u64,
    pub b: u64,
    pub n: u64,
}

impl UrnState {
    /// Yellow proportion `y / (y + b)`.
    #[inline]
    pub fn proportion(&self) -> f64 {
        self.y as f64 / (self.y + self.b) as f64
    }

    pub fn total(&self) -> u64 {
        self.y + self.b
    }
}

pub fn new_urn(params: &UrnParams) -> UrnState {
    UrnState {
        y: params.y0,
        b: params.b0,
        n: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    Friedman,
    Polya,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colour {
    Yellow,
    Blue,
}

/// One step's realised scheme and drawn colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DrawEvent {
    pub scheme: Scheme,
    pub colour: Colour,
}

/// Counts added to (yellow, blue) by an event.
#[inline]
pub fn additions(params: &UrnParams, event: DrawEvent) -> (u64, u64) {
    match (event.scheme, event.colour) {
        (Scheme::Friedman, Colour::Yellow) => (params.alpha, params.beta),
        (Scheme::Friedman, Colour::Blue) => (params.beta, params.alpha),
        (Scheme::Polya, Colour::Yellow) => (params.gamma, 0),
        (Scheme::Polya, Colour::Blue) => (0, params.gamma),
    }
}

#[inline]
pub fn apply(state: &UrnState, params: &UrnParams, event: DrawEvent) -> UrnState {
    let (dy, db) = additions(params, event);
    UrnState {
        y: state.y + dy,
        b: state.b + db,
        n: state.n + 1,
    }
}

const EVENTS: [DrawEvent; 4] = [
    DrawEvent {
        scheme: Scheme::Friedman,
        colour: Colour::Yellow,
    },
    DrawEvent {
        scheme: Scheme::Friedman,
        colour: Colour::Blue,
    },
    DrawEvent {
        scheme: Scheme::Polya,
        colour: Colour::Yellow,
    },
    DrawEvent {
        scheme: Scheme::Polya,
        colour: Colour::Blue,
    },
];

fn merge_branches<P, F>(state: &UrnState, params: &UrnParams, probs: [P; 4], is_zero: F) -> Vec<(UrnState, P)>
where
    P: std::ops::AddAssign,
    F: Fn(&P) -> bool,
{
    let mut out: Vec<(UrnState, P)> = Vec::with_capacity(4);
    for (event, prob) in EVENTS.into_iter().zip(probs) {
        if is_zero(&prob) {
            continue;
        }
        let next = apply(state, params, event);
        match out.iter_mut().find(|(s, _)| *s == next) {
            Some((_, acc)) => *acc += prob,
            None => out.push((next, prob)),
        }
    }
    out
}

/// Distribution of the next state. Branches landing on the same counts are
/// merged and zero-probability branches are dropped.
pub fn transition_kernel(state: &UrnState, params: &UrnParams) -> Vec<(UrnState, f64)> {
    let x = state.proportion();
    let p = params.p.value;
    let probs = [p * x, p * (1.0 - x), (1.0 - p) * x, (1.0 - p) * (1.0 - x)];
    merge_branches(state, params, probs, |q| *q == 0.0)
}

/// [`transition_kernel`] in exact rational arithmetic.
pub fn transition_kernel_exact(
    state: &UrnState,
    params: &UrnParams,
    p: &BigRational,
) -> Vec<(UrnState, BigRational)> {
    let x = BigRational::new(BigInt::from(state.y), BigInt::from(state.y + state.b));
    let one = BigRational::one();
    let not_x = &one - &x;
    let not_p = &one - p;
    let probs = [p * &x, p * &not_x, &not_p * &x, &not_p * &not_x];
    merge_branches(state, params, probs, |q| q.is_zero())
}

/// A source of uniform variates on [0, 1).
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

/// Reproducible random stream keyed by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8: the master seed fills the key and the stream index
/// selects one of 2^64 independent keystreams. Uniforms take the top 53
/// bits of one 64-bit output.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        Self { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

impl UniformSource for RngStream {
    #[inline]
    fn next_uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Maps two uniforms to an event: `u1 < p` selects Friedman, then
/// `u2 < x` selects Yellow.
#[inline]
pub fn event_from_uniforms(state: &UrnState, params: &UrnParams, u1: f64, u2: f64) -> DrawEvent {
    let scheme = if u1 < params.p.value {
        Scheme::Friedman
    } else {
        Scheme::Polya
    };
    let colour = if u2 < state.proportion() {
        Colour::Yellow
    } else {
        Colour::Blue
    };
    DrawEvent { scheme, colour }
}

/// Samples one step. Always consumes exactly two uniforms, scheme first.
#[inline]
pub fn step<S: UniformSource>(
    state: &UrnState,
    params: &UrnParams,
    rng: &mut S,
) -> (UrnState, DrawEvent) {
    let u1 = rng.next_uniform();
    let u2 = rng.next_uniform();
    let event = event_from_uniforms(state, params, u1, u2);
    (apply(state, params, event), event)
}

pub fn validate_checkpoints(checkpoints: &[u64], n_steps: u64) -> Result<()> {
    for w in checkpoints.windows(2) {
        if w[1] < w[0] {
            return Err(Error::UnsortedCheckpoints {
                prev: w[0],
                next: w[1],
            });
        }
    }
    if let Some(&c) = checkpoints.iter().find(|&&c| c > n_steps) {
        return Err(Error::CheckpointOutOfRange {
            checkpoint: c,
            n_steps,
        });
    }
    Ok(())
}

/// Equivalent to `steps` calls of [`step`], with a branch-free update.
#[inline]
pub(crate) fn advance<S: UniformSource>(
    state: UrnState,
    params: &UrnParams,
    rng: &mut S,
    steps: u64,
) -> UrnState {
    // Indexed by 2 * friedman + blue.
    let add_y = [params.gamma, 0, params.alpha, params.beta];
    let add_b = [0, params.gamma, params.beta, params.alpha];
    let p = params.p.value;
    let (mut y, mut b) = (state.y, state.b);
    for _ in 0..steps {
        let u1 = rng.next_uniform();
        let u2 = rng.next_uniform();
        let x = y as f64 / (y + b) as f64;
        let idx = 2 * usize::from(u1 < p) + usize::from(u2 >= x);
        y += add_y[idx];
        b += add_b[idx];
    }
    UrnState {
        y,
        b,
        n: state.n + steps,
    }
}

/// Runs `n_steps` steps and records the state at each checkpoint.
/// Draws exactly `2 * n_steps` uniforms from `rng`.
pub fn run_trajectory<S: UniformSource>(
    params: &UrnParams,
    n_steps: u64,
    rng: &mut S,
    checkpoints: &[u64],
) -> Result<Vec<(u64, UrnState)>> {
    validate_checkpoints(checkpoints, n_steps)?;
    let mut state = new_urn(params);
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        state = advance(state, params, rng, c - state.n);
        out.push((c, state));
    }
    advance(state, params, rng, n_steps - state.n);
    Ok(out)
}
