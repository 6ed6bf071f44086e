//! Derivative-free minimization with the Nelder-Mead simplex method.
//!
//! The simplex uses the dimension-adaptive coefficients of Gao and Han, which
//! reduce to the classic (1, 2, 1/2, 1/2) in two dimensions. After the simplex
//! collapses the search is restarted around the best vertex; it stops once a
//! restart fails to improve the objective.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub function_tolerance: f64,
    pub parameter_tolerance: f64,
    pub simplex_scale: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iterations: 20_000, function_tolerance: 1e-10, parameter_tolerance: 1e-8, simplex_scale: 0.1 }
    }
}

impl OptimizerConfig {
    pub fn new(
        max_iterations: usize,
        function_tolerance: f64,
        parameter_tolerance: f64,
        simplex_scale: f64,
    ) -> Result<Self> {
        let cfg = Self { max_iterations, function_tolerance, parameter_tolerance, simplex_scale };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.max_iterations == 0
            || !positive(self.function_tolerance)
            || !positive(self.parameter_tolerance)
            || !positive(self.simplex_scale)
        {
            return Err(Error::Parameter(format!("optimizer settings must be strictly positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub argmin: Vec<f64>,
    pub min_value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn vertex_order(a: &Vertex, b: &Vertex) -> Ordering {
    a.f.total_cmp(&b.f).then_with(|| {
        a.x.iter().zip(&b.x).map(|(u, v)| u.total_cmp(v)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    })
}

struct Objective<F> {
    f: F,
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Objective<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn initial_simplex(x0: &[f64], scale: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += scale * (1.0 + x0[i].abs());
        simplex.push(v);
    }
    simplex
}

/// Minimizes `f` starting from `x0`.
pub fn minimize<F>(f: F, x0: &[f64], config: &OptimizerConfig) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::Parameter("cannot optimize over zero parameters".into()));
    }
    if !f(x0).is_finite() {
        return Err(Error::OptimizerStart(x0.to_vec()));
    }
    minimize_from_simplex(f, initial_simplex(x0, config.simplex_scale), config)
}

/// Minimizes `f` from an explicit starting simplex of `n + 1` vertices.
///
/// The result does not depend on the order in which the vertices are given.
pub fn minimize_from_simplex<F>(f: F, simplex: Vec<Vec<f64>>, config: &OptimizerConfig) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    let dim = simplex.first().map_or(0, Vec::len);
    if dim == 0 || simplex.len() != dim + 1 || simplex.iter().any(|v| v.len() != dim) {
        return Err(Error::Parameter(format!("simplex must have {} vertices of dimension {dim}", dim + 1)));
    }
    let mut obj = Objective { f, evaluations: 0 };
    let mut vertices: Vec<Vertex> = simplex
        .into_iter()
        .map(|x| {
            let f = obj.call(&x);
            Vertex { x, f }
        })
        .collect();
    vertices.sort_by(vertex_order);
    if !vertices[0].f.is_finite() {
        return Err(Error::OptimizerStart(vertices[0].x.clone()));
    }

    let mut iterations = 0;
    let mut previous_best = f64::INFINITY;
    let mut converged = false;
    const MAX_RESTARTS: usize = 20;

    for restart in 0..=MAX_RESTARTS {
        if restart > 0 {
            let best = vertices[0].x.clone();
            vertices = initial_simplex(&best, config.simplex_scale)
                .into_iter()
                .map(|x| {
                    let f = obj.call(&x);
                    Vertex { x, f }
                })
                .collect();
            vertices.sort_by(vertex_order);
        }
        let collapsed = run_simplex(&mut obj, &mut vertices, config, &mut iterations);
        if !collapsed {
            break;
        }
        let best = vertices[0].f;
        let tol = config.function_tolerance * best.abs().max(1.0);
        if previous_best - best <= tol {
            converged = true;
            break;
        }
        previous_best = best;
    }

    Ok(OptimResult {
        argmin: vertices[0].x.clone(),
        min_value: vertices[0].f,
        converged,
        iterations,
        evaluations: obj.evaluations,
    })
}

// Runs simplex iterations until the simplex collapses (true) or the iteration
// budget is exhausted (false).
fn run_simplex<F: Fn(&[f64]) -> f64>(
    obj: &mut Objective<F>,
    vertices: &mut [Vertex],
    config: &OptimizerConfig,
    iterations: &mut usize,
) -> bool {
    let n = vertices.len() - 1;
    let nf = n as f64;
    let reflect = 1.0;
    let expand = 1.0 + 2.0 / nf;
    let contract = 0.75 - 1.0 / (2.0 * nf);
    let shrink = 1.0 - 1.0 / nf;
    let shrink = if n == 1 { 0.5 } else { shrink };

    loop {
        vertices.sort_by(vertex_order);
        if has_collapsed(vertices, config) {
            return true;
        }
        if *iterations >= config.max_iterations {
            return false;
        }
        *iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &vertices[..n] {
            for (c, x) in centroid.iter_mut().zip(&v.x) {
                *c += x / nf;
            }
        }
        let worst = vertices[n].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.x).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(reflect);
        let fr = obj.call(&xr);
        if fr < vertices[0].f {
            let xe = along(reflect * expand);
            let fe = obj.call(&xe);
            vertices[n] = if fe < fr { Vertex { x: xe, f: fe } } else { Vertex { x: xr, f: fr } };
            continue;
        }
        if fr < vertices[n - 1].f {
            vertices[n] = Vertex { x: xr, f: fr };
            continue;
        }
        let (xc, fc, accept) = if fr < worst.f {
            let xc = along(reflect * contract);
            let fc = obj.call(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(-contract);
            let fc = obj.call(&xc);
            (xc, fc, fc < worst.f)
        };
        if accept {
            vertices[n] = Vertex { x: xc, f: fc };
            continue;
        }
        let best = vertices[0].x.clone();
        for v in vertices.iter_mut().skip(1) {
            for (xi, bi) in v.x.iter_mut().zip(&best) {
                *xi = bi + shrink * (*xi - bi);
            }
            v.f = obj.call(&v.x);
        }
    }
}

fn has_collapsed(vertices: &[Vertex], config: &OptimizerConfig) -> bool {
    let best = &vertices[0];
    let worst_f = vertices[vertices.len() - 1].f;
    let f_spread = worst_f - best.f;
    if !(f_spread <= config.function_tolerance * best.f.abs().max(1.0)) {
        return false;
    }
    vertices[1..]
        .iter()
        .all(|v| v.x.iter().zip(&best.x).all(|(a, b)| (a - b).abs() <= config.parameter_tolerance * b.abs().max(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &OptimizerConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.argmin[0] - 1.0).abs() < 1e-5, "{:?}", r.argmin);
        assert!((r.argmin[1] - 1.0).abs() < 1e-5, "{:?}", r.argmin);
    }

    #[test]
    fn convex_quadratic() {
        let target = [3.0, -2.0, 0.5, 10.0];
        let f =
            |x: &[f64]| x.iter().zip(&target).enumerate().map(|(i, (a, b))| (i as f64 + 1.0) * (a - b).powi(2)).sum();
        let r = minimize(f, &[0.0; 4], &OptimizerConfig::default()).unwrap();
        assert!(r.converged);
        for (a, b) in r.argmin.iter().zip(&target) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = minimize(|x| x[0].ln(), &[-1.0], &OptimizerConfig::default());
        assert!(matches!(r, Err(Error::OptimizerStart(_))));
    }

    #[test]
    fn iteration_cap_reports_best_so_far() {
        let cfg = OptimizerConfig { max_iterations: 5, ..Default::default() };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!(!r.converged);
        assert!(r.iterations <= 5);
        assert!(r.min_value <= rosenbrock(&[-1.2, 1.0]));
    }

    #[test]
    fn deterministic_and_order_invariant() {
        let cfg = OptimizerConfig::default();
        let simplex = vec![vec![-1.2, 1.0], vec![-1.0, 1.0], vec![-1.2, 1.3]];
        let a = minimize_from_simplex(rosenbrock, simplex.clone(), &cfg).unwrap();
        let mut rev = simplex.clone();
        rev.reverse();
        let b = minimize_from_simplex(rosenbrock, rev, &cfg).unwrap();
        let c =
            minimize_from_simplex(rosenbrock, vec![simplex[1].clone(), simplex[2].clone(), simplex[0].clone()], &cfg)
                .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn nan_regions_are_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) };
        let r = minimize(f, &[0.5], &OptimizerConfig::default()).unwrap();
        assert!((r.argmin[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn config_must_be_positive() {
        assert!(OptimizerConfig::new(0, 1e-8, 1e-8, 0.1).is_err());
        assert!(OptimizerConfig::new(10, -1.0, 1e-8, 0.1).is_err());
        assert!(OptimizerConfig::new(10, 1e-8, 1e-8, 0.1).is_ok());
    }
}
