//! Central finite differences with relative step sizes.

use crate::error::{Error, Result};
use crate::numkernel::linalg::Matrix;

fn default_gradient_step() -> f64 {
    f64::EPSILON.cbrt()
}

fn default_hessian_step() -> f64 {
    f64::EPSILON.powf(0.25)
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { point: x.to_vec() })
    }
}

/// Central-difference gradient.
///
/// Component `i` uses the step `h * (1 + |x_i|)`; `h` defaults to the cube
/// root of machine epsilon.
pub fn numeric_gradient<F>(f: F, x: &[f64], h: Option<f64>) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let h = h.unwrap_or_else(default_gradient_step);
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        probe[i] = x[i] + step;
        let up = eval(&f, &probe)?;
        probe[i] = x[i] - step;
        let down = eval(&f, &probe)?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * step));
    }
    Ok(grad)
}

/// Symmetric matrix of second central differences.
pub fn numeric_hessian<F>(f: F, x: &[f64]) -> Result<Matrix>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let h = default_hessian_step();
    let steps: Vec<f64> = x.iter().map(|v| h * (1.0 + v.abs())).collect();
    let f0 = eval(&f, x)?;
    let mut probe = x.to_vec();
    let mut hess = Matrix::zeros(n, n);

    for i in 0..n {
        let hi = steps[i];
        probe[i] = x[i] + hi;
        let up = eval(&f, &probe)?;
        probe[i] = x[i] - hi;
        let down = eval(&f, &probe)?;
        probe[i] = x[i];
        hess[(i, i)] = (up - 2.0 * f0 + down) / (hi * hi);
    }

    for i in 0..n {
        for j in (i + 1)..n {
            let (hi, hj) = (steps[i], steps[j]);
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                probe[i] = x[i] + si * hi;
                probe[j] = x[j] + sj * hj;
                let v = eval(&f, &probe);
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let pp = corner(1.0, 1.0)?;
            let pm = corner(1.0, -1.0)?;
            let mp = corner(-1.0, 1.0)?;
            let mm = corner(-1.0, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess.symmetrize();
    Ok(hess)
}
