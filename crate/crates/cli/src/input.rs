//! Readers for raw count files, frequency tables and regression CSVs.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use pcd_core::regression::RegressionData;
use pcd_core::FrequencyTable;

pub const FREQ_HEADER: &str = "value,count";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountFormat {
    /// One nonnegative integer per line.
    Raw,
    /// Two-column CSV with a `value,count` header.
    Freq,
}

/// Picks `freq` when the first non-blank line is the frequency header.
pub fn detect_format(text: &str) -> CountFormat {
    match text.lines().map(str::trim).find(|l| !l.is_empty()) {
        Some(first) if first.replace(' ', "") == FREQ_HEADER => CountFormat::Freq,
        _ => CountFormat::Raw,
    }
}

fn parse_count(field: &str, line: usize, what: &str) -> Result<u64> {
    let field = field.trim();
    field.parse::<u64>().map_err(|_| anyhow!("line {line}: {what} must be a nonnegative integer, got '{field}'"))
}

pub fn parse_raw(text: &str) -> Result<FrequencyTable> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        *counts.entry(parse_count(line, i + 1, "count")?).or_default() += 1;
    }
    if counts.is_empty() {
        bail!("input contains no observations");
    }
    Ok(FrequencyTable::from_pairs(counts.into_iter().collect())?)
}

pub fn parse_freq(text: &str) -> Result<FrequencyTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.replace(' ', "") == FREQ_HEADER => {}
        Some((i, header)) => bail!("line {}: expected header '{FREQ_HEADER}', got '{}'", i + 1, header.trim()),
        None => bail!("input contains no observations"),
    }
    let mut entries: Vec<(u64, u64)> = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let mut fields = line.split(',');
        let (Some(v), Some(c), None) = (fields.next(), fields.next(), fields.next()) else {
            bail!("line {line_no}: expected two comma-separated fields, got '{}'", line.trim());
        };
        let value = parse_count(v, line_no, "value")?;
        let count = parse_count(c, line_no, "count")?;
        if let Some(&(prev, _)) = entries.last() {
            if value <= prev {
                bail!("line {line_no}: values must be strictly increasing ({value} follows {prev})");
            }
        }
        entries.push((value, count));
    }
    if entries.iter().all(|&(_, c)| c == 0) {
        bail!("input contains no observations");
    }
    Ok(FrequencyTable::from_pairs(entries)?)
}

pub fn parse_counts(text: &str, format: Option<CountFormat>) -> Result<FrequencyTable> {
    match format.unwrap_or_else(|| detect_format(text)) {
        CountFormat::Raw => parse_raw(text),
        CountFormat::Freq => parse_freq(text),
    }
}

/// Reads a count file; the format is detected from the header when not given.
pub fn load_counts(bytes: &[u8], format: Option<CountFormat>) -> Result<FrequencyTable> {
    let text = std::str::from_utf8(bytes).context("input is not valid UTF-8")?;
    parse_counts(text, format)
}

/// Builds a regression design (with intercept) from a CSV with a header row.
pub fn load_regression(bytes: &[u8], response: &str, covariates: &[String]) -> Result<RegressionData> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader.headers().context("failed to read CSV header")?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| anyhow!("column '{name}' not found in input"))
    };
    let y_col = column(response)?;
    let x_cols = covariates.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;
    let mut y = Vec::new();
    let mut xs: Vec<Vec<f64>> = vec![Vec::new(); covariates.len()];
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.with_context(|| format!("line {line}: malformed CSV record"))?;
        let field = |c: usize| record.get(c).unwrap_or("");
        y.push(parse_count(field(y_col), line, response)?);
        for (j, &c) in x_cols.iter().enumerate() {
            let raw = field(c);
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| anyhow!("line {line}: column '{}' must be numeric, got '{raw}'", covariates[j]))?;
            xs[j].push(v);
        }
    }
    if y.is_empty() {
        bail!("input contains no observations");
    }
    let named: Vec<(String, Vec<f64>)> = covariates.iter().cloned().zip(xs).collect();
    Ok(RegressionData::with_intercept(y, &named)?)
}
