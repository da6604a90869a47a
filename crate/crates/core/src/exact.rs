//! Exact finite-step law of `(Y_n, B_n)` by pushing the initial point mass
//! through the transition kernel one level at a time.
//!
//! States are keyed by `(y, b)` alone; the kernel only depends on the
//! counts, so merging different histories into one key loses nothing.
//! Levels are stored in `BTreeMap`s, which fixes the summation order and
//! makes the result independent of hashing.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::urn::{new_urn, transition_kernel, transition_kernel_exact, UrnParams, UrnState};

pub const DEFAULT_FRONTIER_LIMIT: usize = 5000;

/// Deepest level the big-rational backend will compute.
pub const RATIONAL_MAX_N: u64 = 50;

/// Probability mass over reachable `(y, b)` at step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub n: u64,
    pub support: BTreeMap<(u64, u64), f64>,
}

/// Same as [`ExactDistribution`] with exact rational probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalDistribution {
    pub n: u64,
    pub support: BTreeMap<(u64, u64), BigRational>,
}

/// One atom of the law of `X_n`; `x = x_num / x_den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XPoint {
    pub x_num: u64,
    pub x_den: u64,
    pub x: f64,
    pub prob: f64,
}

fn push_levels<P, K>(
    params: &UrnParams,
    n: u64,
    limit: usize,
    kernel: K,
) -> Result<Vec<BTreeMap<(u64, u64), P>>>
where
    P: Clone + std::ops::AddAssign + for<'a> std::ops::Mul<&'a P, Output = P>,
    P: One,
    K: Fn(&UrnState) -> Vec<(UrnState, P)>,
{
    let start = new_urn(params);
    let mut levels = Vec::with_capacity(n as usize + 1);
    let mut current = BTreeMap::new();
    current.insert((start.y, start.b), P::one());
    for level in 1..=n {
        let mut next: BTreeMap<(u64, u64), P> = BTreeMap::new();
        for (&(y, b), mass) in &current {
            let state = UrnState { y, b, n: level - 1 };
            for (to, q) in kernel(&state) {
                let contrib = q * mass;
                match next.get_mut(&(to.y, to.b)) {
                    Some(acc) => *acc += contrib,
                    None => {
                        next.insert((to.y, to.b), contrib);
                    }
                }
            }
        }
        if next.len() > limit {
            return Err(Error::FrontierExceeded {
                level,
                states: next.len(),
                limit,
            });
        }
        levels.push(std::mem::replace(&mut current, next));
    }
    levels.push(current);
    Ok(levels)
}

/// Exact law at step `n` with the default frontier limit.
pub fn exact_distribution(params: &UrnParams, n: u64) -> Result<ExactDistribution> {
    exact_distribution_with_limit(params, n, DEFAULT_FRONTIER_LIMIT)
}

pub fn exact_distribution_with_limit(
    params: &UrnParams,
    n: u64,
    limit: usize,
) -> Result<ExactDistribution> {
    let mut levels = exact_levels(params, n, limit)?;
    Ok(levels.pop().expect("level n is always present"))
}

/// Laws at every step `0..=n_max`, computed in a single pass.
pub fn exact_levels(params: &UrnParams, n_max: u64, limit: usize) -> Result<Vec<ExactDistribution>> {
    let levels = push_levels(params, n_max, limit, |s| transition_kernel(s, params))?;
    let out: Vec<ExactDistribution> = levels
        .into_iter()
        .enumerate()
        .map(|(n, support)| ExactDistribution {
            n: n as u64,
            support,
        })
        .collect();
    debug_assert!(out.iter().all(|d| (d.total() - 1.0).abs() < 1e-9));
    Ok(out)
}

/// Exact law at step `n` in big-rational arithmetic. A decimal `p` is
/// taken at its exact binary value.
pub fn exact_distribution_rational(
    params: &UrnParams,
    n: u64,
    limit: usize,
) -> Result<RationalDistribution> {
    let mut levels = exact_levels_rational(params, n, limit)?;
    Ok(levels.pop().expect("level n is always present"))
}

pub fn exact_levels_rational(
    params: &UrnParams,
    n_max: u64,
    limit: usize,
) -> Result<Vec<RationalDistribution>> {
    if n_max > RATIONAL_MAX_N {
        return Err(Error::RationalTooDeep {
            n: n_max,
            max: RATIONAL_MAX_N,
        });
    }
    let p = params.mixing().to_rational();
    let levels = push_levels(params, n_max, limit, |s| transition_kernel_exact(s, params, &p))?;
    Ok(levels
        .into_iter()
        .enumerate()
        .map(|(n, support)| RationalDistribution {
            n: n as u64,
            support,
        })
        .collect())
}

fn reduced(y: u64, b: u64) -> (u64, u64) {
    let den = y + b;
    let g = y.gcd(&den);
    (y / g, den / g)
}

fn cmp_fraction(a: &(u64, u64), b: &(u64, u64)) -> Ordering {
    (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128))
}

impl ExactDistribution {
    pub fn total(&self) -> f64 {
        self.support.values().sum()
    }

    pub fn prob(&self, y: u64, b: u64) -> f64 {
        self.support.get(&(y, b)).copied().unwrap_or(0.0)
    }

    /// Law of `X_n = y / (y + b)`: equal proportions merged, sorted by `x`.
    pub fn x_law(&self) -> Vec<XPoint> {
        let mut by_x: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for (&(y, b), &q) in &self.support {
            *by_x.entry(reduced(y, b)).or_insert(0.0) += q;
        }
        let mut out: Vec<((u64, u64), f64)> = by_x.into_iter().collect();
        out.sort_by(|a, b| cmp_fraction(&a.0, &b.0));
        out.into_iter()
            .map(|((num, den), prob)| XPoint {
                x_num: num,
                x_den: den,
                x: num as f64 / den as f64,
                prob,
            })
            .collect()
    }

    /// `E[X_n^k]`.
    pub fn moment(&self, k: u32) -> f64 {
        self.x_law().iter().map(|pt| pt.prob * pt.x.powi(k as i32)).sum()
    }
}

impl RationalDistribution {
    pub fn total(&self) -> BigRational {
        self.support.values().cloned().sum()
    }

    pub fn to_float(&self) -> ExactDistribution {
        ExactDistribution {
            n: self.n,
            support: self
                .support
                .iter()
                .map(|(k, q)| (*k, q.to_f64().expect("probability fits in f64")))
                .collect(),
        }
    }

    /// Exact law of `X_n` as `(x_num, x_den, prob)`, sorted by `x`.
    pub fn x_law(&self) -> Vec<(u64, u64, BigRational)> {
        let mut by_x: BTreeMap<(u64, u64), BigRational> = BTreeMap::new();
        for (&(y, b), q) in &self.support {
            *by_x.entry(reduced(y, b)).or_insert_with(BigRational::zero) += q;
        }
        let mut out: Vec<_> = by_x.into_iter().map(|((n, d), q)| (n, d, q)).collect();
        out.sort_by(|a, b| cmp_fraction(&(a.0, a.1), &(b.0, b.1)));
        out
    }

    pub fn moment(&self, k: u32) -> BigRational {
        self.x_law()
            .into_iter()
            .map(|(num, den, q)| {
                let x = BigRational::new(BigInt::from(num), BigInt::from(den));
                q * num_traits::pow(x, k as usize)
            })
            .sum()
    }
}

pub fn x_law(dist: &ExactDistribution) -> Vec<XPoint> {
    dist.x_law()
}

pub fn moment(dist: &ExactDistribution, k: u32) -> f64 {
    dist.moment(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::urn::MixingProb;

    fn params(y0: u64, b0: u64, a: u64, b: u64, g: u64, p: f64) -> UrnParams {
        UrnParams::with_p(y0, b0, a, b, g, p).unwrap()
    }

    #[test]
    fn level_zero_is_point_mass() {
        let p = params(3, 7, 1, 2, 3, 0.4);
        let d = exact_distribution(&p, 0).unwrap();
        assert_eq!(d.support.len(), 1);
        assert_eq!(d.prob(3, 7), 1.0);
    }

    #[test]
    fn level_one_matches_hand_enumeration() {
        let p = params(1, 1, 1, 1, 1, 0.5);
        let d = exact_distribution(&p, 1).unwrap();
        assert_eq!(d.support.len(), 3);
        assert_eq!(d.prob(2, 2), 0.5);
        assert_eq!(d.prob(2, 1), 0.25);
        assert_eq!(d.prob(1, 2), 0.25);

        let law = d.x_law();
        let pts: Vec<_> = law.iter().map(|pt| (pt.x_num, pt.x_den, pt.prob)).collect();
        assert_eq!(pts, vec![(1, 3, 0.25), (1, 2, 0.5), (2, 3, 0.25)]);
    }

    #[test]
    fn level_two_normalised_and_symmetric() {
        let p = params(1, 1, 1, 1, 1, 0.5);
        let d = exact_distribution(&p, 2).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
        let law = d.x_law();
        for (lo, hi) in law.iter().zip(law.iter().rev()) {
            assert_eq!(lo.x_num * hi.x_den + hi.x_num * lo.x_den, lo.x_den * hi.x_den);
            assert!((lo.prob - hi.prob).abs() < 1e-15);
        }
    }

    #[test]
    fn point_mass_moment() {
        let p = params(1, 1, 1, 1, 1, 0.5);
        let d = exact_distribution(&p, 0).unwrap();
        assert_eq!(d.x_law().len(), 1);
        assert_eq!(d.moment(1), 0.5);
        assert_eq!(d.moment(2), 0.25);
    }

    // Pólya with y0 = b0 = gamma = 1: X_n is uniform on {(k+1)/(n+2)}.
    #[test]
    fn pure_polya_is_uniform_on_grid() {
        let p = params(1, 1, 4, 2, 1, 0.0);
        let levels = exact_levels_rational(&p, 20, DEFAULT_FRONTIER_LIMIT).unwrap();
        for d in &levels {
            let n = d.n;
            let law = d.x_law();
            assert_eq!(law.len() as u64, n + 1);
            let unif = BigRational::new(BigInt::from(1), BigInt::from(n + 1));
            for (k, (num, den, q)) in law.into_iter().enumerate() {
                let x = BigRational::new(BigInt::from(num), BigInt::from(den));
                let grid = BigRational::new(BigInt::from(k as u64 + 1), BigInt::from(n + 2));
                assert_eq!(x, grid);
                assert_eq!(q, unif);
            }
        }
    }

    #[test]
    fn polya_martingale_mean() {
        let p = params(2, 5, 3, 3, 2, 0.0);
        let start = BigRational::new(BigInt::from(2), BigInt::from(7));
        for d in exact_levels_rational(&p, 20, DEFAULT_FRONTIER_LIMIT).unwrap() {
            assert_eq!(d.moment(1), start);
        }
        for d in exact_levels(&p, 20, DEFAULT_FRONTIER_LIMIT).unwrap() {
            assert!((d.moment(1) - 2.0 / 7.0).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_start_has_mean_half() {
        for (a, b, g, pp) in [(1, 1, 1, 0.3), (3, 1, 2, 0.7), (1, 4, 5, 0.05)] {
            let p = params(2, 2, a, b, g, pp);
            let p_exact = UrnParams::new(2, 2, a, b, g, MixingProb::ratio(3, 10).unwrap()).unwrap();
            let half = BigRational::new(BigInt::from(1), BigInt::from(2));
            for d in exact_levels(&p, 15, DEFAULT_FRONTIER_LIMIT).unwrap() {
                assert!((d.moment(1) - 0.5).abs() < 1e-12);
            }
            for d in exact_levels_rational(&p_exact, 12, DEFAULT_FRONTIER_LIMIT).unwrap() {
                assert_eq!(d.moment(1), half);
            }
        }
    }

    #[test]
    fn frontier_limit_reports_level() {
        let p = params(1, 1, 1, 1, 1, 0.3);
        let err = exact_distribution_with_limit(&p, 40, 50).unwrap_err();
        match err {
            Error::FrontierExceeded { level, states, limit } => {
                assert_eq!(limit, 50);
                assert!(states > 50);
                let ok = exact_distribution_with_limit(&p, level - 1, 50);
                assert!(ok.is_ok());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rational_depth_guard() {
        let p = params(1, 1, 1, 1, 1, 0.3);
        assert_eq!(
            exact_distribution_rational(&p, 51, DEFAULT_FRONTIER_LIMIT).unwrap_err(),
            Error::RationalTooDeep { n: 51, max: 50 }
        );
    }

    #[test]
    fn rational_total_is_exactly_one() {
        let p = UrnParams::new(1, 2, 2, 1, 3, MixingProb::ratio(2, 7).unwrap()).unwrap();
        for d in exact_levels_rational(&p, 10, DEFAULT_FRONTIER_LIMIT).unwrap() {
            assert!(d.total().is_one());
        }
    }
}
