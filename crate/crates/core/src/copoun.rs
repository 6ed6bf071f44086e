//! The continuous Copoun distribution, a mixture of Exponential(η) and
//! Gamma(4, η) with weight η/(φ+η) on the exponential component. It is the
//! rate law behind the Poisson-Copoun count model.

use rand::Rng;
use rand_distr::{Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural parameters `(η, φ)` shared by the Copoun and Poisson-Copoun laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcdParams {
    eta: f64,
    phi: f64,
}

impl PcdParams {
    /// `eta > 0`, `phi >= 0`. `phi = 0` is the exponential (geometric) boundary.
    pub fn new(eta: f64, phi: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Parameter(format!("eta must be positive and finite, got {eta}")));
        }
        if !(phi >= 0.0) || !phi.is_finite() {
            return Err(Error::Parameter(format!("phi must be nonnegative and finite, got {phi}")));
        }
        Ok(Self { eta, phi })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Weight `η/(φ+η)` of the exponential component.
    pub fn mixing_weight(&self) -> f64 {
        self.eta / (self.phi + self.eta)
    }
}

pub fn cd_pdf(params: &PcdParams, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let (eta, phi) = (params.eta, params.phi);
    eta * eta / (phi + eta) * (1.0 + phi * eta * eta * x.powi(3) / 6.0) * (-eta * x).exp()
}

pub fn cd_cdf(params: &PcdParams, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let (eta, phi) = (params.eta, params.phi);
    let ex = eta * x;
    let poly = phi * (ex.powi(3) + 3.0 * ex * ex + 6.0 * ex) / (6.0 * (phi + eta));
    let survival = (1.0 + poly) * (-ex).exp();
    (1.0 - survival).clamp(0.0, 1.0)
}

pub fn cd_mean(params: &PcdParams) -> f64 {
    let w = params.mixing_weight();
    (w + (1.0 - w) * 4.0) / params.eta
}

pub(crate) fn exponential_draw<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    rng.sample(Exp::new(rate).expect("rate checked positive"))
}

/// Gamma(shape, rate) draw.
pub(crate) fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    rng.sample(Gamma::new(shape, 1.0 / rate).expect("shape and rate checked positive"))
}

/// One Copoun draw.
pub fn cd_draw<R: Rng + ?Sized>(params: &PcdParams, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if u < params.mixing_weight() {
        exponential_draw(rng, params.eta)
    } else {
        gamma_draw(rng, 4.0, params.eta)
    }
}

pub fn cd_sample<R: Rng + ?Sized>(params: &PcdParams, rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| cd_draw(params, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_validation() {
        assert!(PcdParams::new(0.0, 1.0).is_err());
        assert!(PcdParams::new(1.0, -0.1).is_err());
        assert!(PcdParams::new(f64::NAN, 1.0).is_err());
        assert!(PcdParams::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn pdf_point_values() {
        let exp1 = PcdParams::new(1.0, 0.0).unwrap();
        assert_eq!(cd_pdf(&exp1, 0.0), 1.0);
        let p = PcdParams::new(1.0, 1.0).unwrap();
        let expected = 0.5 * (1.0 + 1.0 / 6.0) * (-1f64).exp();
        assert!((cd_pdf(&p, 1.0) - expected).abs() < 1e-15);
        assert!((cd_pdf(&p, 1.0) - 0.214_596).abs() < 1e-6);
        assert_eq!(cd_pdf(&p, -1.0), 0.0);
    }

    #[test]
    fn cdf_limits() {
        let p = PcdParams::new(0.7, 2.0).unwrap();
        assert_eq!(cd_cdf(&p, 0.0), 0.0);
        assert!((cd_cdf(&p, 500.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_mean() {
        let p = PcdParams::new(1.0, 1.0).unwrap();
        assert!((cd_mean(&p) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn sample_means_at_the_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let exp_only = PcdParams::new(2.0, 0.0).unwrap();
        let m: f64 = cd_sample(&exp_only, &mut rng, n).iter().sum::<f64>() / n as f64;
        assert!((m - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt());

        let gamma_only = PcdParams::new(1.0, 1e12).unwrap();
        let m: f64 = cd_sample(&gamma_only, &mut rng, n).iter().sum::<f64>() / n as f64;
        assert!((m - 4.0).abs() < 4.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn sampler_is_reproducible() {
        let p = PcdParams::new(1.3, 0.4).unwrap();
        let a = cd_sample(&p, &mut ChaCha8Rng::seed_from_u64(99), 50);
        let b = cd_sample(&p, &mut ChaCha8Rng::seed_from_u64(99), 50);
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| x > 0.0));
    }
}
