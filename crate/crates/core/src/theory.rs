//! Deterministic side of the model: the slope numerator `theta`, the
//! growth rate `denom`, the affine map `ell(x) = (theta x + beta p) / denom`
//! and its iterates starting from 1.
//!
//! `ell(x) - 1/2 = slope * (x - 1/2)` with `slope = theta / denom`, so the
//! n-fold iterate from 1 is `(1 + slope^n) / 2`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::urn::UrnParams;

/// Threshold below which a float `theta` counts as zero.
pub const THETA_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "Case1_ThetaPositive")]
    ThetaPositive,
    #[serde(rename = "Case2_ThetaNegative")]
    ThetaNegative,
    #[serde(rename = "Case3_ThetaZero")]
    ThetaZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub theta: f64,
    pub denom: f64,
    /// `None` when `denom` is zero.
    pub slope: Option<f64>,
    pub case: Case,
    /// The unique fixed point of `ell`; `None` when `ell` is undefined or
    /// the identity (`beta * p = 0`).
    pub fixed_point: Option<f64>,
    pub polya_limit: Option<BetaParams>,
    pub within_theorem: bool,
}

pub fn theta(params: &UrnParams) -> f64 {
    let p = params.p();
    (params.alpha() as f64 - params.beta() as f64) * p + params.gamma() as f64 * (1.0 - p)
}

/// Expected number of balls added per step, `(alpha+beta)p + gamma(1-p)`.
pub fn denom(params: &UrnParams) -> f64 {
    let p = params.p();
    (params.alpha() + params.beta()) as f64 * p + params.gamma() as f64 * (1.0 - p)
}

pub fn analyze(params: &UrnParams) -> TheoryReport {
    let theta = theta(params);
    let denom = denom(params);
    let slope = (denom > 0.0).then(|| theta / denom);
    let fixed_point = (denom > 0.0 && params.beta() > 0 && params.p() > 0.0).then_some(0.5);
    if params.within_theorem() {
        let s = slope.expect("denominator is positive inside the theorem");
        assert!(s.abs() < 1.0, "slope {s} is not a contraction");
        assert_eq!(
            ell_exact(params, &BigRational::new(BigInt::from(1), BigInt::from(2))).ok(),
            Some(BigRational::new(BigInt::from(1), BigInt::from(2)))
        );
    }
    TheoryReport {
        theta,
        denom,
        slope,
        case: classify_case(params),
        fixed_point,
        polya_limit: polya_limit_params(params),
        within_theorem: params.within_theorem(),
    }
}

pub fn ell(params: &UrnParams, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("ell is defined on [0, 1], got {x}")));
    }
    let d = denom(params);
    if d == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((theta(params) * x + params.beta() as f64 * params.p()) / d)
}

/// `ell` in exact rational arithmetic.
pub fn ell_exact(params: &UrnParams, x: &BigRational) -> Result<BigRational> {
    let p = params.mixing().to_rational();
    let q = BigRational::from_integer(1.into()) - &p;
    let int = |v: u64| BigRational::from_integer(BigInt::from(v));
    let theta = (int(params.alpha()) - int(params.beta())) * &p + int(params.gamma()) * &q;
    let denom = int(params.alpha() + params.beta()) * &p + int(params.gamma()) * &q;
    if denom.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok((theta * x + int(params.beta()) * &p) / denom)
}

/// `ell^(n)(1)`, the upper envelope for the limsup of `X_n`.
pub fn envelope(params: &UrnParams, n: u64) -> Result<f64> {
    if !params.within_theorem() {
        return Err(Error::OutsideTheorem);
    }
    let slope = theta(params) / denom(params);
    let pow = if n > i32::MAX as u64 {
        slope.powf(n as f64)
    } else {
        slope.powi(n as i32)
    };
    Ok(0.5 * (1.0 + pow))
}

/// Sign of `theta`. Exact when `p` was given as a fraction, otherwise
/// `|theta| < THETA_ZERO_TOL` counts as zero.
pub fn classify_case(params: &UrnParams) -> Case {
    if let Some((num, den)) = params.mixing().as_ratio() {
        let (a, b, g) = (params.alpha() as i128, params.beta() as i128, params.gamma() as i128);
        let (num, den) = (num as i128, den as i128);
        let scaled = (a - b) * num + g * (den - num);
        return match scaled.signum() {
            1 => Case::ThetaPositive,
            -1 => Case::ThetaNegative,
            _ => Case::ThetaZero,
        };
    }
    let t = theta(params);
    if t.abs() < THETA_ZERO_TOL {
        Case::ThetaZero
    } else if t > 0.0 {
        Case::ThetaPositive
    } else {
        Case::ThetaNegative
    }
}

/// The mixing probability `gamma / (beta + gamma - alpha)` at which
/// `theta` vanishes, as a reduced fraction, when it lies in (0, 1].
pub fn case3_ratio(alpha: u64, beta: u64, gamma: u64) -> Option<(u64, u64)> {
    let den = (beta + gamma).checked_sub(alpha)?;
    if den == 0 || gamma == 0 || gamma > den {
        return None;
    }
    let g = num_integer::gcd(gamma, den);
    Some((gamma / g, den / g))
}

pub fn case3_p(alpha: u64, beta: u64, gamma: u64) -> Option<f64> {
    case3_ratio(alpha, beta, gamma).map(|(n, d)| n as f64 / d as f64)
}

/// Beta parameters `(y0/gamma, b0/gamma)` of the pure-Pólya limit.
pub fn polya_limit_params(params: &UrnParams) -> Option<BetaParams> {
    (params.p() == 0.0 && params.gamma() >= 1).then(|| BetaParams {
        a: params.y0() as f64 / params.gamma() as f64,
        b: params.b0() as f64 / params.gamma() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::urn::MixingProb;

    fn params(a: u64, b: u64, g: u64, p: f64) -> UrnParams {
        UrnParams::with_p(1, 1, a, b, g, p).unwrap()
    }

    #[test]
    fn figure_parameters() {
        let r = analyze(&params(1, 1, 1, 0.05));
        assert!((r.theta - 0.95).abs() < 1e-15);
        assert!((r.denom - 1.05).abs() < 1e-15);
        assert!((r.slope.unwrap() - 19.0 / 21.0).abs() < 1e-15);
        assert_eq!(r.case, Case::ThetaPositive);
        assert_eq!(r.fixed_point, Some(0.5));
        assert!(r.within_theorem);
        assert_eq!(r.polya_limit, None);
    }

    #[test]
    fn case3_examples() {
        assert_eq!(case3_p(1, 2, 1), Some(0.5));
        assert_eq!(case3_p(1, 1, 1), Some(1.0));
        assert_eq!(case3_p(5, 1, 1), None);
        assert_eq!(case3_p(2, 1, 1), None);
        assert_eq!(case3_p(1, 0, 0), None);
        // gamma / (beta + gamma - alpha) > 1
        assert_eq!(case3_p(3, 1, 4), None);

        let r = analyze(&params(1, 2, 1, 0.5));
        assert_eq!(r.theta, 0.0);
        assert_eq!(r.case, Case::ThetaZero);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_case(&params(1, 1, 1, 0.05)), Case::ThetaPositive);
        let p = params(1, 5, 1, 0.9);
        assert!((theta(&p) + 3.5).abs() < 1e-12);
        assert_eq!(classify_case(&p), Case::ThetaNegative);
        assert_eq!(classify_case(&params(1, 2, 1, 0.5)), Case::ThetaZero);
    }

    #[test]
    fn exact_case3_from_fraction() {
        // p = 1/3 for (alpha, beta, gamma) = (2, 4, 1)
        let exact = UrnParams::new(1, 1, 2, 4, 1, MixingProb::ratio(1, 3).unwrap()).unwrap();
        assert_eq!(classify_case(&exact), Case::ThetaZero);
        let near = UrnParams::new(1, 1, 2, 4, 1, MixingProb::ratio(333, 1000).unwrap()).unwrap();
        assert_eq!(classify_case(&near), Case::ThetaPositive);
    }

    #[test]
    fn symmetric_friedman_is_flat() {
        let p = params(3, 3, 2, 1.0);
        let r = analyze(&p);
        assert_eq!(r.theta, 0.0);
        assert_eq!(r.slope, Some(0.0));
        assert_eq!(r.fixed_point, Some(0.5));
        for x in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert_eq!(ell(&params(1, 1, 1, 1.0), x).unwrap(), 0.5);
        }
    }

    #[test]
    fn ell_examples() {
        let p = params(1, 1, 1, 0.05);
        assert!((ell(&p, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((ell(&p, 1.0).unwrap() - 20.0 / 21.0).abs() < 1e-15);
        assert!(matches!(ell(&p, 1.5), Err(Error::Domain(_))));
        let degenerate = UrnParams::with_p(1, 1, 0, 0, 1, 1.0).unwrap();
        assert_eq!(ell(&degenerate, 0.3), Err(Error::ZeroDenominator));
        let r = analyze(&degenerate);
        assert_eq!(r.slope, None);
        assert_eq!(r.fixed_point, None);
    }

    #[test]
    fn envelope_examples() {
        let p = params(1, 1, 1, 0.05);
        assert_eq!(envelope(&p, 0).unwrap(), 1.0);
        assert!((envelope(&p, 1).unwrap() - 20.0 / 21.0).abs() < 1e-15);
        assert!((envelope(&p, 500).unwrap() - 0.5).abs() < 1e-10);
        assert_eq!(envelope(&params(1, 1, 1, 0.0), 3), Err(Error::OutsideTheorem));
        assert_eq!(envelope(&params(1, 0, 1, 0.5), 3), Err(Error::OutsideTheorem));
    }

    #[test]
    fn polya_limit_examples() {
        let p = params(1, 1, 1, 0.0);
        assert_eq!(polya_limit_params(&p), Some(BetaParams { a: 1.0, b: 1.0 }));
        let p = UrnParams::with_p(2, 6, 1, 1, 2, 0.0).unwrap();
        assert_eq!(polya_limit_params(&p), Some(BetaParams { a: 1.0, b: 3.0 }));
        assert_eq!(polya_limit_params(&params(1, 1, 1, 0.05)), None);
        assert_eq!(polya_limit_params(&UrnParams::with_p(1, 1, 1, 1, 0, 0.0).unwrap()), None);
    }

    #[test]
    fn report_json_keys() {
        let v = serde_json::to_value(analyze(&params(1, 1, 1, 0.0))).unwrap();
        let obj = v.as_object().unwrap();
        for key in ["theta", "denom", "slope", "case", "fixed_point", "polya_limit", "within_theorem"] {
            assert!(obj.contains_key(key), "missing {key}");
        }
        assert_eq!(obj["case"], "Case1_ThetaPositive");
        assert_eq!(obj["polya_limit"]["a"], 1.0);
        // beta p = 0 makes ell the identity
        assert!(obj["fixed_point"].is_null());
    }
}
