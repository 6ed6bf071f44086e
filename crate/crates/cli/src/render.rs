//! Plain-text table rendering.

use std::fmt::Write as _;

use pcd_core::diagnostics::ComparisonTable;
use pcd_core::regression::{Coefficient, RegressionFit};
use pcd_core::FitReport;

fn num(v: f64) -> String {
    if v == 0.0 || (1e-4..1e7).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.4e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), num)
}

/// Left-aligns the first column and right-aligns the rest.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "  {cell:>w$}");
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

pub fn fit_report(r: &FitReport) -> String {
    let mut out = format!("model: {}  method: {}  n: {}\n\n", r.model_name, r.method, r.n);
    let level = format!("{:.0}%", r.ci_level * 100.0);
    let lo = format!("{level} lower");
    let hi = format!("{level} upper");
    let rows: Vec<Vec<String>> = r
        .parameters
        .iter()
        .map(|p| {
            let mut name = p.name.clone();
            if p.at_boundary {
                name.push_str(" (boundary)");
            }
            vec![name, num(p.estimate), opt(p.std_error), opt(p.ci_lower), opt(p.ci_upper)]
        })
        .collect();
    out += &table(&["parameter", "estimate", "std.error", &lo, &hi], &rows);
    for d in &r.derived {
        let _ = writeln!(out, "{} = {}", d.name, num(d.value));
    }
    let _ = writeln!(
        out,
        "\nlog-likelihood: {}  AIC: {}  BIC: {}  k: {}",
        num(r.log_likelihood),
        num(r.aic),
        num(r.bic),
        r.k
    );
    let _ = writeln!(out, "converged: {}  iterations: {}", r.converged, r.iterations);
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn comparison(t: &ComparisonTable) -> String {
    let rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            vec![
                if r.best { format!("{} *", r.model_name) } else { r.model_name.clone() },
                num(r.neg_log_likelihood),
                num(r.aic),
                num(r.bic),
                opt(r.chi_sq),
                r.df.map_or_else(|| "-".to_string(), |d| d.to_string()),
                opt(r.p_value),
            ]
        })
        .collect();
    let mut out = table(&["model", "-loglik", "AIC", "BIC", "chi-sq", "df", "p-value"], &rows);
    let _ = writeln!(out, "\nbest model by AIC: {}", t.best_model);
    out
}

fn coefficient_row(c: &Coefficient) -> Vec<String> {
    vec![c.name.clone(), num(c.estimate), opt(c.std_error), opt(c.z_value), opt(c.p_value)]
}

pub fn regression(f: &RegressionFit) -> String {
    let mut out = format!("family: {}  n: {}\n\n", f.family.name(), f.n);
    let mut rows: Vec<Vec<String>> = f.coefficients.iter().map(coefficient_row).collect();
    if let Some(d) = &f.dispersion {
        rows.push(coefficient_row(d));
    }
    out += &table(&["term", "estimate", "std.error", "z-value", "p-value"], &rows);
    let _ = writeln!(
        out,
        "\nlog-likelihood: {}  AIC: {}  BIC: {}  k: {}",
        num(f.log_likelihood),
        num(f.aic),
        num(f.bic),
        f.k
    );
    let _ = writeln!(out, "converged: {}  iterations: {}", f.converged, f.iterations);
    for w in &f.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
