//! The Poisson-Copoun distribution: a Poisson count whose rate follows the
//! Copoun law. Over-dispersed for every parameter value; collapses to the
//! geometric distribution with `p = η/(1+η)` when `φ = 0`.
//!
//! The log-pmf is the primitive. The cdf is the running sum of the pmf.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::copoun::{cd_draw, PcdParams};
use crate::error::{Error, Result};

const LN_6: f64 = 1.791_759_469_228_055;

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn log_pmf(params: &PcdParams, x: u64) -> f64 {
    let (eta, phi) = (params.eta(), params.phi());
    let ln1p_eta = eta.ln_1p();
    let xf = x as f64;
    let base = 3.0 * ln1p_eta;
    let bracket = if phi == 0.0 {
        base
    } else {
        let cubic = (xf + 1.0).ln() + (xf + 2.0).ln() + (xf + 3.0).ln();
        log_sum_exp(base, phi.ln() + 2.0 * eta.ln() - LN_6 + cubic)
    };
    2.0 * eta.ln() - (phi + eta).ln() - (xf + 4.0) * ln1p_eta + bracket
}

pub fn pmf(params: &PcdParams, x: u64) -> f64 {
    log_pmf(params, x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfEvaluation {
    pub value: u64,
    pub probability: f64,
    pub log_probability: f64,
}

pub fn evaluate(params: &PcdParams, x: u64) -> PmfEvaluation {
    let log_probability = log_pmf(params, x);
    PmfEvaluation { value: x, probability: log_probability.exp(), log_probability }
}

/// `P(X <= x)`; zero for negative `x`.
pub fn cdf(params: &PcdParams, x: i64) -> f64 {
    if x < 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for k in 0..=x as u64 {
        total += pmf(params, k);
    }
    total.min(1.0)
}

/// Upper bound on `P(X > x)`, from the geometric domination
/// `pmf(k+1)/pmf(k) <= (k+4) / ((k+1)(1+η))`. `None` while the ratio bound is
/// not yet below one.
pub fn tail_bound(params: &PcdParams, x: u64) -> Option<f64> {
    let xf = x as f64;
    let rho = (xf + 4.0) / ((xf + 1.0) * (1.0 + params.eta()));
    if rho >= 1.0 {
        return None;
    }
    Some(pmf(params, x) * rho / (1.0 - rho))
}

/// Smallest `x` whose dominating tail mass beyond `x` is below `eps`.
pub fn support_bound(params: &PcdParams, eps: f64) -> u64 {
    let mut x = 0;
    loop {
        if let Some(b) = tail_bound(params, x) {
            if b < eps {
                return x;
            }
        }
        x += 1;
    }
}

/// Smallest `x` with `cdf(x) >= p`.
pub fn quantile(params: &PcdParams, p: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("quantile requires 0 <= p < 1, got {p}")));
    }
    if p == 0.0 {
        return Ok(0);
    }
    let reaches = |x: u64| cdf(params, x as i64) >= p || tail_bound(params, x).is_some_and(|b| b <= 1.0 - p);
    if reaches(0) {
        return Ok(0);
    }
    let mut lo = 0u64;
    let mut hi = 1u64;
    while !reaches(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub(crate) fn poisson_draw<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    match Poisson::new(lambda) {
        Ok(dist) => dist.sample(rng) as u64,
        Err(_) => 0,
    }
}

pub fn draw<R: Rng + ?Sized>(params: &PcdParams, rng: &mut R) -> u64 {
    let lambda = cd_draw(params, rng);
    poisson_draw(rng, lambda)
}

/// Draws `n` counts through the Poisson mixture: `λ ~ CD(η, φ)`, then
/// `X | λ ~ Poisson(λ)`.
pub fn sample<R: Rng + ?Sized>(params: &PcdParams, rng: &mut R, n: usize) -> Vec<u64> {
    (0..n).map(|_| draw(params, rng)).collect()
}

/// `E[X(X-1)...(X-r+1)]`.
pub fn factorial_moment(params: &PcdParams, r: u32) -> f64 {
    let (eta, phi) = (params.eta(), params.phi());
    let rf = r as f64;
    let r_factorial: f64 = (1..=r).map(f64::from).product();
    r_factorial / (eta.powi(r as i32) * (phi + eta)) * (eta + phi / 6.0 * (rf + 1.0) * (rf + 2.0) * (rf + 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub raw2: f64,
    pub raw3: f64,
    pub raw4: f64,
    pub variance: f64,
    pub dispersion_index: f64,
}

pub fn mean(params: &PcdParams) -> f64 {
    let (eta, phi) = (params.eta(), params.phi());
    (eta + 4.0 * phi) / (eta * (phi + eta))
}

pub fn variance(params: &PcdParams) -> f64 {
    let (e, p) = (params.eta(), params.phi());
    (e.powi(3) + (5.0 * p + 1.0) * e * e + 2.0 * p * (2.0 * p + 7.0) * e + 4.0 * p * p) / (e * e * (p + e).powi(2))
}

pub fn moments(params: &PcdParams) -> Moments {
    let (e, p) = (params.eta(), params.phi());
    let scale = p + e;
    let raw2 = (e * e + 2.0 * (2.0 * p + 1.0) * e + 20.0 * p) / (e * e * scale);
    let raw3 =
        (e.powi(3) + 2.0 * (2.0 * p + 3.0) * e * e + 6.0 * (10.0 * p + 1.0) * e + 120.0 * p) / (e.powi(3) * scale);
    let raw4 = (e.powi(4)
        + 2.0 * (2.0 * p + 7.0) * e.powi(3)
        + 4.0 * (35.0 * p + 9.0) * e * e
        + 24.0 * (30.0 * p + 1.0) * e
        + 840.0 * p)
        / (e.powi(4) * scale);
    let dispersion_index = 1.0 + (e * e + 14.0 * p * e + 4.0 * p * p) / (e * scale * (e + 4.0 * p));
    Moments { mean: mean(params), raw2, raw3, raw4, variance: variance(params), dispersion_index }
}

/// Probability generating function, defined for `|s| < 1 + η`.
pub fn pgf(params: &PcdParams, s: f64) -> Result<f64> {
    let eta = params.eta();
    if !(s.abs() < 1.0 + eta) {
        return Err(Error::Domain(format!("pgf argument {s} outside radius of convergence {}", 1.0 + eta)));
    }
    let (e, p) = (eta, params.phi());
    let d = e - s + 1.0;
    Ok(e * e / (p + e) * (d.powi(3) + p * e * e) / d.powi(4))
}

/// Moment generating function, defined for `e^t < 1 + η`.
pub fn mgf(params: &PcdParams, t: f64) -> Result<f64> {
    if !(t < params.eta().ln_1p()) {
        return Err(Error::Domain(format!("mgf requires t < ln(1 + eta), got {t}")));
    }
    pgf(params, t.exp())
}

pub fn characteristic_function(params: &PcdParams, t: f64) -> Complex64 {
    let (e, p) = (params.eta(), params.phi());
    let s = Complex64::from_polar(1.0, t);
    let d = Complex64::new(e + 1.0, 0.0) - s;
    (d.powi(3) + p * e * e) / d.powi(4) * (e * e / (p + e))
}

/// Mean-parametrized pair `(μ, φ)` used by the regression model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanParams {
    mu: f64,
    phi: f64,
}

impl MeanParams {
    pub fn new(mu: f64, phi: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Parameter(format!("mu must be positive and finite, got {mu}")));
        }
        if !(phi >= 0.0) || !phi.is_finite() {
            return Err(Error::Parameter(format!("phi must be nonnegative and finite, got {phi}")));
        }
        Ok(Self { mu, phi })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn to_natural(&self) -> Result<PcdParams> {
        PcdParams::new(eta_from_mean(self)?, self.phi)
    }
}

/// Positive root of `μη² + (μφ - 1)η - 4φ = 0`, the `η` giving mean `μ`.
pub fn eta_from_mean(mp: &MeanParams) -> Result<f64> {
    let (mu, phi) = (mp.mu, mp.phi);
    let b = mu * phi - 1.0;
    let disc = (b * b + 16.0 * mu * phi).sqrt();
    // Pick the cancellation-free form of the root.
    let eta = if b <= 0.0 { (disc - b) / (2.0 * mu) } else { 8.0 * phi / (b + disc) };
    if eta > 0.0 && eta.is_finite() {
        Ok(eta)
    } else {
        Err(Error::Parameter(format!("no valid eta for mu = {mu}, phi = {phi}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p11() -> PcdParams {
        PcdParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn pmf_hand_values() {
        let p = p11();
        assert!((log_pmf(&p, 0) - (9.0f64 / 32.0).ln()).abs() < 1e-14);
        assert!((log_pmf(&p, 3) - (28.0f64 / 256.0).ln()).abs() < 1e-14);
        let ev = evaluate(&p, 3);
        assert!((ev.probability - 0.109_375).abs() < 1e-15);
        assert!(((ev.probability - ev.log_probability.exp()) / ev.probability).abs() < 1e-12);
    }

    #[test]
    fn geometric_reduction() {
        let p = PcdParams::new(1.0, 0.0).unwrap();
        for x in 0..60u64 {
            let expected = -((x + 1) as f64) * std::f64::consts::LN_2;
            assert!((log_pmf(&p, x) - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn large_counts_do_not_underflow_in_log_space() {
        let lp = log_pmf(&p11(), 5000);
        assert!(lp.is_finite() && lp < -3000.0);
    }

    #[test]
    fn cdf_values() {
        let p = p11();
        assert_eq!(cdf(&p, -1), 0.0);
        assert!((cdf(&p, 0) - 0.281_25).abs() < 1e-15);
        assert!((cdf(&p, 200) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_straddles_first_jump() {
        let p = p11();
        assert_eq!(quantile(&p, 0.0).unwrap(), 0);
        assert_eq!(quantile(&p, 0.28).unwrap(), 0);
        assert_eq!(quantile(&p, 0.282).unwrap(), 1);
        assert!(quantile(&p, 1.0).is_err());
        assert!(quantile(&p, -0.1).is_err());
        let q = quantile(&p, 1.0 - 1e-15).unwrap();
        assert!(q > 20);
    }

    #[test]
    fn factorial_moments() {
        let p = p11();
        assert!((factorial_moment(&p, 1) - 2.5).abs() < 1e-14);
        assert!((factorial_moment(&p, 2) - 11.0).abs() < 1e-13);
    }

    #[test]
    fn moment_values() {
        let m = moments(&p11());
        assert!((m.mean - 2.5).abs() < 1e-14);
        assert!((m.raw2 - 13.5).abs() < 1e-13);
        assert!((m.variance - 7.25).abs() < 1e-13);
        assert!((m.dispersion_index - 2.9).abs() < 1e-13);
        let g = moments(&PcdParams::new(1.0, 0.0).unwrap());
        assert!((g.mean - 1.0).abs() < 1e-15);
        assert!((g.variance - 2.0).abs() < 1e-14);
        assert!((g.dispersion_index - 2.0).abs() < 1e-14);
    }

    #[test]
    fn pgf_values_and_domain() {
        let p = p11();
        assert!((pgf(&p, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((pgf(&p, 0.5).unwrap() - 2.1875 / 5.0625).abs() < 1e-15);
        assert!(pgf(&p, 2.0).is_err());
        assert!(pgf(&p, -2.5).is_err());
        assert!(mgf(&p, 0.7).is_err());
        assert!((mgf(&p, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pgf_derivative_at_one_is_the_mean() {
        let p = p11();
        let h = 1e-6;
        let d = (pgf(&p, 1.0).unwrap() - pgf(&p, 1.0 - h).unwrap()) / h;
        assert!((d - 2.5).abs() < 1e-4);
    }

    #[test]
    fn characteristic_function_matches_pgf_on_real_axis() {
        let p = PcdParams::new(0.8, 2.0).unwrap();
        let cf0 = characteristic_function(&p, 0.0);
        assert!((cf0.re - 1.0).abs() < 1e-14 && cf0.im.abs() < 1e-14);
        let t = 0.9;
        let series: Complex64 = (0..2000u64).map(|x| Complex64::from_polar(pmf(&p, x), t * x as f64)).sum();
        assert!((characteristic_function(&p, t) - series).norm() < 1e-10);
    }

    #[test]
    fn eta_from_mean_values() {
        let eta = eta_from_mean(&MeanParams::new(2.5, 1.0).unwrap()).unwrap();
        assert!((eta - 1.0).abs() < 1e-14);
        let eta = eta_from_mean(&MeanParams::new(1.0, 0.0).unwrap()).unwrap();
        assert!((eta - 1.0).abs() < 1e-14);
        assert!(MeanParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn tail_bound_dominates() {
        let p = PcdParams::new(0.25, 10.0).unwrap();
        let x = support_bound(&p, 1e-14);
        let head: f64 = (0..=x).map(|k| pmf(&p, k)).sum();
        assert!((1.0 - head).abs() < 1e-12);
        for k in [x / 2, x, x + 10] {
            if let Some(b) = tail_bound(&p, k) {
                let tail: f64 = (k + 1..k + 4000).map(|j| pmf(&p, j)).sum();
                assert!(tail <= b * (1.0 + 1e-9) + 1e-300);
            }
        }
    }

    #[test]
    fn sampler_is_reproducible() {
        let p = p11();
        let a = sample(&p, &mut ChaCha8Rng::seed_from_u64(5), 100);
        let b = sample(&p, &mut ChaCha8Rng::seed_from_u64(5), 100);
        assert_eq!(a, b);
    }
}
