//! Shapiro-Wilk normality test with Royston's approximations for the
//! weights and for the null distribution of W.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{normal_quantile, normal_sf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p: f64,
}

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Half-vector of order-statistic weights, largest first.
fn weights(n: usize) -> Result<Vec<f64>> {
    let half = n / 2;
    if n == 3 {
        return Ok(vec![std::f64::consts::FRAC_1_SQRT_2]);
    }
    let nf = n as f64;
    let m = (1..=half).map(|i| normal_quantile((i as f64 - 0.375) / (nf + 0.25))).collect::<Result<Vec<f64>>>()?;
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / nf.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![0.0; half];
    a[0] = a1;
    if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        a[1] = a2;
        for i in 2..half {
            a[i] = -m[i] / fac;
        }
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        for i in 1..half {
            a[i] = -m[i] / fac;
        }
    }
    Ok(a)
}

pub fn shapiro_wilk(x: &[f64]) -> Result<ShapiroWilk> {
    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::Precondition(format!("Shapiro-Wilk requires 3 <= n <= 5000, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("Shapiro-Wilk input contains non-finite values".into()));
    }
    let mut xs = x.to_vec();
    xs.sort_by(f64::total_cmp);
    let range = xs[n - 1] - xs[0];
    if !(range > 1e-300) || range < 1e-12 * xs[n - 1].abs().max(xs[0].abs()) {
        return Err(Error::Data("Shapiro-Wilk input is constant".into()));
    }
    let a = weights(n)?;
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ssq: f64 = xs.iter().map(|v| (v - mean).powi(2)).sum();
    let num: f64 = a.iter().enumerate().map(|(i, ai)| ai * (xs[n - 1 - i] - xs[i])).sum();
    let w = (num * num / ssq).min(1.0);

    let nf = n as f64;
    let p = if n == 3 {
        let six_over_pi = 6.0 / std::f64::consts::PI;
        (six_over_pi * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3)).clamp(0.0, 1.0)
    } else {
        let w1 = (1.0 - w).ln();
        if n <= 11 {
            let gamma = poly(&G, nf);
            if w1 >= gamma {
                1e-99
            } else {
                let y = -(gamma - w1).ln();
                let m = poly(&C3, nf);
                let s = poly(&C4, nf).exp();
                normal_sf((y - m) / s)
            }
        } else {
            let ln_n = nf.ln();
            let m = poly(&C5, ln_n);
            let s = poly(&C6, ln_n).exp();
            normal_sf((w1 - m) / s)
        }
    };
    Ok(ShapiroWilk { w, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points() {
        let r = shapiro_wilk(&[1.0, 2.0, 4.0]).unwrap();
        assert!((r.w - 0.964_285_714_285_714_2).abs() < 1e-12);
        assert!((r.p - 0.636_886_845_028_968_9).abs() < 1e-6);
    }

    #[test]
    fn small_sample() {
        let r = shapiro_wilk(&[2.1, 3.4, 1.9, 5.6, 4.4]).unwrap();
        assert!((r.w - 0.932_084_939_195_386_3).abs() < 1e-4);
        assert!((r.p - 0.610_655_902_260_502_2).abs() < 1e-4);
    }

    #[test]
    fn input_checks() {
        assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
        assert!(shapiro_wilk(&[3.0; 10]).is_err());
        assert!(shapiro_wilk(&[1.0, f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn order_invariant() {
        let a = shapiro_wilk(&[0.3, -1.2, 2.2, 0.1, 0.7, -0.4, 1.1]).unwrap();
        let b = shapiro_wilk(&[1.1, -0.4, 0.7, 0.1, 2.2, -1.2, 0.3]).unwrap();
        assert_eq!(a, b);
    }
}
