//! Empirical CDF, Kolmogorov-Smirnov distance and the regularized
//! incomplete beta function.

use crate::error::{Error, Result};

/// A distribution function. `left_limit` is `F(x-)` and only differs from
/// `cdf` for distributions with atoms.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;

    fn left_limit(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}

/// CDF of the uniform law on [0, 1].
#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl Cdf for Uniform {
    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
}

/// CDF of Beta(a, b).
#[derive(Debug, Clone, Copy)]
pub struct BetaDist {
    a: f64,
    b: f64,
}

impl BetaDist {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        check_shape(a, b)?;
        Ok(Self { a, b })
    }
}

impl Cdf for BetaDist {
    fn cdf(&self, x: f64) -> f64 {
        beta_cdf(self.a, self.b, x.clamp(0.0, 1.0)).expect("shape validated at construction")
    }
}

/// Sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    samples: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("an empirical CDF needs at least one sample".into()));
        }
        if let Some(bad) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("sample {bad} lies outside [0, 1]")));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

impl Cdf for Ecdf {
    fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    fn left_limit(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s < x) as f64 / self.len() as f64
    }
}

/// `sup_x |F_n(x) - F(x)|`.
///
/// Evaluated at each distinct sample value `x` as the larger of
/// `|F_n(x) - F(x)|` and `|F_n(x-) - F(x-)|`. For continuous `F` this is
/// `max_i max(i/n - F(x_i), F(x_i) - (i-1)/n)` over the sorted sample.
pub fn ks_statistic<C: Cdf + ?Sized>(samples: &Ecdf, cdf: &C) -> f64 {
    let xs = samples.samples();
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let through = j as f64 / n;
        d = d
            .max((through - cdf.cdf(x)).abs())
            .max((below - cdf.left_limit(x)).abs());
        i = j;
    }
    d
}

fn check_shape(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("beta shape parameters must be positive, got ({a}, {b})")));
    }
    Ok(())
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for `I_x(a, b)` (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 10_000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
///
/// The continued fraction converges fast for `x < (a + 1) / (a + b + 2)`;
/// above that the reflection `I_x(a, b) = 1 - I_{1-x}(b, a)` is used.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> Result<f64> {
    check_shape(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("beta_cdf needs x in [0, 1], got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    if a == 1.0 && b == 1.0 {
        return Ok(x);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_special_case_is_identity() {
        for x in [0.0, 0.25, 1.0, 0.123456789] {
            assert_eq!(beta_cdf(1.0, 1.0, x).unwrap(), x);
        }
    }

    #[test]
    fn symmetric_shapes_give_half_at_midpoint() {
        for a in [0.3, 1.0, 2.5, 7.0, 40.0, 100.0] {
            assert!((beta_cdf(a, a, 0.5).unwrap() - 0.5).abs() < 1e-12, "a = {a}");
        }
    }

    #[test]
    fn closed_forms() {
        // I_x(a, 1) = x^a and I_x(1, b) = 1 - (1 - x)^b
        for &x in &[0.05, 0.3, 0.77, 0.99] {
            for &s in &[0.5, 2.0, 3.7, 20.0] {
                let lhs = beta_cdf(s, 1.0, x).unwrap();
                assert!((lhs - x.powf(s)).abs() < 1e-12);
                let rhs = beta_cdf(1.0, s, x).unwrap();
                assert!((rhs - (1.0 - (1.0 - x).powf(s))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ln_gamma_at_integers() {
        let mut fact = 1.0f64;
        for n in 1..30 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0), "n = {n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn beta_cdf_domain_errors() {
        assert!(beta_cdf(0.0, 1.0, 0.5).is_err());
        assert!(beta_cdf(1.0, -1.0, 0.5).is_err());
        assert!(beta_cdf(1.0, 1.0, 1.5).is_err());
        assert!(beta_cdf(f64::NAN, 1.0, 0.5).is_err());
        assert!(BetaDist::new(1.0, 0.0).is_err());
    }

    #[test]
    fn beta_cdf_endpoints_exact() {
        for (a, b) in [(0.5, 0.5), (2.0, 9.0), (100.0, 3.0)] {
            assert_eq!(beta_cdf(a, b, 0.0).unwrap(), 0.0);
            assert_eq!(beta_cdf(a, b, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn ks_three_point_example() {
        let e = Ecdf::new(vec![0.75, 0.25, 0.5]).unwrap();
        assert_eq!(ks_statistic(&e, &Uniform), 0.25);
    }

    #[test]
    fn ks_single_sample() {
        let e = Ecdf::new(vec![0.5]).unwrap();
        assert_eq!(ks_statistic(&e, &Uniform), 0.5);
    }

    #[test]
    fn ks_against_own_staircase_is_zero() {
        let e = Ecdf::new(vec![0.1, 0.4, 0.4, 0.9, 0.9, 0.9, 0.2]).unwrap();
        let own = e.clone();
        assert_eq!(ks_statistic(&e, &own), 0.0);
    }

    #[test]
    fn ks_with_ties_against_uniform() {
        // F_n jumps from 0 to 1 at 0.5
        let e = Ecdf::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(ks_statistic(&e, &Uniform), 0.5);
    }

    #[test]
    fn ecdf_rejects_bad_input() {
        assert!(Ecdf::new(vec![]).is_err());
        assert!(Ecdf::new(vec![0.2, 1.2]).is_err());
        assert!(Ecdf::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn closures_act_as_cdfs() {
        let e = Ecdf::new(vec![0.5]).unwrap();
        assert_eq!(ks_statistic(&e, &|x: f64| x), 0.5);
    }
}
