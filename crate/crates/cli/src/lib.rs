//! Command-line front end: argument definitions and command implementations.

pub mod input;
pub mod manifest;
pub mod render;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pcd_core::baselines::{baseline_mle, BaselineSpec, Family};
use pcd_core::diagnostics::{compare_models, randomized_quantile_residuals, CompareOptions, DEFAULT_MIN_EXPECTED};
use pcd_core::estimation::{mle_fit_table, mom_report};
use pcd_core::inflated::{thipcd_mle, thipd_mle};
use pcd_core::numkernel::{normal_quantile, OptimizerConfig};
use pcd_core::regression::{profile_log_likelihood, regression_fit, RegressionFamily, RegressionFit};
use pcd_core::{CountModel, FitReport, FrequencyTable, InflatedParams, PcdParams, ThipdParams};

use input::CountFormat;
use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "pcd", version, about = "Fit, compare and simulate Poisson-Copoun count models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model to a count file.
    Fit(FitArgs),
    /// Fit several models to the same data and tabulate them.
    Compare(CompareArgs),
    /// Log-link count regression on a CSV file.
    Regress(RegressArgs),
    /// Draw a sample from a model with given parameters.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Pcd,
    Thipcd,
    Thipd,
    Poisson,
    Geometric,
    Nb,
    Zip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mle,
    Mom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegressionModel {
    Pcd,
    Poisson,
    Nb,
}

#[derive(Debug, Args)]
pub struct Destination {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json`, or standard error
    /// when writing to standard output.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(value_enum)]
    pub model: ModelKind,
    pub input: PathBuf,
    /// Input format; detected from the header when absent.
    #[arg(long, value_enum)]
    pub format: Option<CountFormat>,
    #[arg(long, value_enum, default_value_t = Method::Mle)]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    #[command(flatten)]
    pub dest: Destination,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated model list, e.g. `thipcd,thipd`.
    #[arg(value_enum, value_delimiter = ',', required = true, num_args = 1)]
    pub models: Vec<ModelKind>,
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<CountFormat>,
    /// Degrees of freedom for every chi-square test, replacing cells - 1 - k.
    #[arg(long)]
    pub df_override: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_MIN_EXPECTED)]
    pub min_expected: f64,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub output: OutputFormat,
    #[command(flatten)]
    pub dest: Destination,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    /// Comma-separated covariate columns; an intercept is always added.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    #[arg(long, value_enum, default_value_t = RegressionModel::Pcd)]
    pub model: RegressionModel,
    /// Write residual, Q-Q and profile-likelihood CSVs.
    #[arg(long)]
    pub diagnostics: bool,
    /// Directory for the diagnostic CSVs; defaults to the output file's
    /// directory or the working directory.
    #[arg(long)]
    pub diagnostics_dir: Option<PathBuf>,
    /// Grid size of each profile-likelihood trace.
    #[arg(long, default_value_t = 21)]
    pub profile_points: usize,
    /// Seed of the randomized quantile residuals.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    #[command(flatten)]
    pub dest: Destination,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub model: ModelKind,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub mean: Option<f64>,
    #[arg(long)]
    pub size: Option<f64>,
    #[arg(short = 'n', long = "count")]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub dest: Destination,
}

/// What a successful command reports back for the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub converged: bool,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        if self.converged {
            0
        } else {
            2
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("failed to read {}", path.display()))
}

fn write_output(dest: &Destination, bytes: &[u8]) -> Result<()> {
    match &dest.out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("failed to write {}", p.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).context("failed to write to standard output")
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn check_ci_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        bail!("--ci-level must lie in (0, 1), got {level}");
    }
    Ok(())
}

pub fn fit_model(model: ModelKind, method: Method, table: &FrequencyTable, ci_level: f64) -> Result<FitReport> {
    let config = OptimizerConfig::default();
    if method == Method::Mom && model != ModelKind::Pcd {
        bail!("--method mom is only available for the pcd model");
    }
    let report = match model {
        ModelKind::Pcd => match method {
            Method::Mle => mle_fit_table(table, &config, ci_level)?,
            Method::Mom => mom_report(table, ci_level)?,
        },
        ModelKind::Thipcd => thipcd_mle(table, &config, ci_level)?,
        ModelKind::Thipd => thipd_mle(table, &config, ci_level)?,
        ModelKind::Poisson => baseline_mle(Family::Poisson, table, &config, ci_level)?,
        ModelKind::Geometric => baseline_mle(Family::Geometric, table, &config, ci_level)?,
        ModelKind::Nb => baseline_mle(Family::NegativeBinomial, table, &config, ci_level)?,
        ModelKind::Zip => baseline_mle(Family::Zip, table, &config, ci_level)?,
    };
    Ok(report)
}

pub fn cmd_fit(args: &FitArgs, command_line: &str) -> Result<Outcome> {
    check_ci_level(args.ci_level)?;
    let bytes = read_input(&args.input)?;
    let table = input::load_counts(&bytes, args.format)?;
    let report = fit_model(args.model, args.method, &table, args.ci_level)?;
    let text = match args.output {
        OutputFormat::Json => json(&report),
        OutputFormat::Table => render::fit_report(&report),
    };
    write_output(&args.dest, text.as_bytes())?;
    let m = RunManifest::new(command_line.to_string(), Some(&bytes), args.seed, text.as_bytes());
    manifest::emit(&m, args.dest.manifest.as_deref(), args.dest.out.as_deref())?;
    Ok(Outcome { converged: report.converged })
}

pub fn cmd_compare(args: &CompareArgs, command_line: &str) -> Result<Outcome> {
    if args.models.len() < 2 {
        bail!("compare needs at least two models, got {}", args.models.len());
    }
    check_ci_level(args.ci_level)?;
    let bytes = read_input(&args.input)?;
    let table = input::load_counts(&bytes, args.format)?;
    let reports =
        args.models.iter().map(|&m| fit_model(m, Method::Mle, &table, args.ci_level)).collect::<Result<Vec<_>>>()?;
    let options = CompareOptions { min_expected: args.min_expected, df_override: args.df_override };
    let comparison = compare_models(&reports, &table, &options)?;
    let text = match args.output {
        OutputFormat::Json => json(&comparison),
        OutputFormat::Table => render::comparison(&comparison),
    };
    write_output(&args.dest, text.as_bytes())?;
    let m = RunManifest::new(command_line.to_string(), Some(&bytes), args.seed, text.as_bytes());
    manifest::emit(&m, args.dest.manifest.as_deref(), args.dest.out.as_deref())?;
    Ok(Outcome { converged: reports.iter().all(|r| r.converged) })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionDiagnostics {
    pub seed: u64,
    pub shapiro_w: Option<f64>,
    pub shapiro_p: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressOutput {
    pub fit: RegressionFit,
    pub diagnostics: Option<RegressionDiagnostics>,
}

/// Q-Q pairs (theoretical normal quantile, ordered residual) with Blom
/// plotting positions.
pub fn qq_pairs(residuals: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().map(|(i, &r)| Ok((normal_quantile((i as f64 + 1.0 - 0.375) / (n + 0.25))?, r))).collect()
}

fn write_diagnostics(
    dir: &Path,
    fit: &RegressionFit,
    data: &pcd_core::regression::RegressionData,
    seed: u64,
    profile_points: usize,
) -> Result<RegressionDiagnostics> {
    std::fs::create_dir_all(dir).with_context(|| format!("failed to create {}", dir.display()))?;
    let models = (0..fit.n).map(|i| fit.row_model(i)).collect::<pcd_core::Result<Vec<CountModel>>>()?;
    let cdf = |i: usize, y: i64| models[i].cdf(y);
    let rqr = randomized_quantile_residuals(&cdf, data.response(), seed)?;

    let mut text = String::from("observation,response,fitted_mean,residual\n");
    for (i, r) in rqr.residuals.iter().enumerate() {
        let _ = writeln!(text, "{},{},{},{}", i + 1, data.response()[i], fit.fitted_means[i], r);
    }
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        std::fs::write(&p, body).with_context(|| format!("failed to write {}", p.display()))
    };
    write("rqr.csv", &text)?;

    let mut text = String::from("theoretical,sample\n");
    for (t, s) in qq_pairs(&rqr.residuals)? {
        let _ = writeln!(text, "{t},{s}");
    }
    write("qq.csv", &text)?;

    let traces = profile_log_likelihood(data, fit, &OptimizerConfig::default(), profile_points)?;
    let mut text = String::from("parameter,value,log_likelihood\n");
    for trace in &traces {
        for p in &trace.points {
            let _ = writeln!(text, "{},{},{}", trace.parameter, p.value, p.log_likelihood);
        }
    }
    write("profile.csv", &text)?;

    Ok(RegressionDiagnostics { seed, shapiro_w: rqr.shapiro_w, shapiro_p: rqr.shapiro_p })
}

pub fn cmd_regress(args: &RegressArgs, command_line: &str) -> Result<Outcome> {
    let bytes = read_input(&args.input)?;
    let data = input::load_regression(&bytes, &args.response, &args.covariates)?;
    let family = match args.model {
        RegressionModel::Pcd => RegressionFamily::Pcd,
        RegressionModel::Poisson => RegressionFamily::Poisson,
        RegressionModel::Nb => RegressionFamily::NegativeBinomial,
    };
    let fit = regression_fit(family, &data, &OptimizerConfig::default())?;
    let diagnostics = if args.diagnostics {
        let dir = match (&args.diagnostics_dir, &args.dest.out) {
            (Some(d), _) => d.clone(),
            (None, Some(out)) => out.parent().map(Path::to_path_buf).unwrap_or_default(),
            (None, None) => PathBuf::new(),
        };
        let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
        Some(write_diagnostics(&dir, &fit, &data, args.seed, args.profile_points)?)
    } else {
        None
    };
    let converged = fit.converged;
    let text = match args.output {
        OutputFormat::Json => json(&RegressOutput { fit, diagnostics }),
        OutputFormat::Table => {
            let mut t = render::regression(&fit);
            if let Some(d) = &diagnostics {
                let _ = writeln!(
                    t,
                    "residual Shapiro-Wilk: W = {}  p = {}  (seed {})",
                    d.shapiro_w.map_or("-".into(), |w| format!("{w:.4}")),
                    d.shapiro_p.map_or("-".into(), |p| format!("{p:.4}")),
                    d.seed
                );
            }
            t
        }
    };
    write_output(&args.dest, text.as_bytes())?;
    let m = RunManifest::new(command_line.to_string(), Some(&bytes), args.seed, text.as_bytes());
    manifest::emit(&m, args.dest.manifest.as_deref(), args.dest.out.as_deref())?;
    Ok(Outcome { converged })
}

fn required(value: Option<f64>, flag: &str, model: ModelKind) -> Result<f64> {
    value.with_context(|| format!("--{flag} is required for {model:?}").to_lowercase())
}

pub fn simulation_model(args: &SimulateArgs) -> Result<CountModel> {
    let m = args.model;
    let model = match m {
        ModelKind::Pcd => {
            CountModel::Pcd(PcdParams::new(required(args.eta, "eta", m)?, required(args.phi, "phi", m)?)?)
        }
        ModelKind::Thipcd => CountModel::Thipcd(InflatedParams::new(
            required(args.eta, "eta", m)?,
            required(args.phi, "phi", m)?,
            required(args.alpha, "alpha", m)?,
        )?),
        ModelKind::Thipd => {
            CountModel::Thipd(ThipdParams::new(required(args.lambda, "lambda", m)?, required(args.alpha, "alpha", m)?)?)
        }
        ModelKind::Poisson => {
            CountModel::Baseline(BaselineSpec::Poisson { lambda: required(args.lambda, "lambda", m)? })
        }
        ModelKind::Geometric => CountModel::Baseline(BaselineSpec::Geometric { p: required(args.p, "p", m)? }),
        ModelKind::Nb => CountModel::Baseline(BaselineSpec::NegativeBinomial {
            mean: required(args.mean, "mean", m)?,
            size: required(args.size, "size", m)?,
        }),
        ModelKind::Zip => CountModel::Baseline(BaselineSpec::Zip {
            lambda: required(args.lambda, "lambda", m)?,
            alpha: required(args.alpha, "alpha", m)?,
        }),
    };
    if let CountModel::Baseline(spec) = &model {
        spec.validate()?;
    }
    Ok(model)
}

/// Raw-format counts, one per line.
pub fn simulate_text(model: &CountModel, n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::with_capacity(n * 3);
    for y in model.sample(&mut rng, n) {
        let _ = writeln!(text, "{y}");
    }
    text
}

pub fn cmd_simulate(args: &SimulateArgs, command_line: &str) -> Result<Outcome> {
    if args.n == 0 {
        bail!("-n must be positive");
    }
    let model = simulation_model(args)?;
    let text = simulate_text(&model, args.n, args.seed);
    write_output(&args.dest, text.as_bytes())?;
    let m = RunManifest::new(command_line.to_string(), None, args.seed, text.as_bytes());
    manifest::emit(&m, args.dest.manifest.as_deref(), args.dest.out.as_deref())?;
    Ok(Outcome { converged: true })
}

pub fn run(cli: &Cli, command_line: &str) -> Result<Outcome> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, command_line),
        Command::Compare(a) => cmd_compare(a, command_line),
        Command::Regress(a) => cmd_regress(a, command_line),
        Command::Simulate(a) => cmd_simulate(a, command_line),
    }
}
