//! `memchan` command-line front end.
//!
//! Every subcommand produces a [`Report`]: a flat table (written as CSV or
//! as JSON records) plus the [`RunConfig`] that produced it and a free-form
//! diagnostics object (JSON only).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::channel::{apply_additive_noise, monte_carlo_channel, stationary_noise_cov, GaussianState};
use crate::error::Error;
use crate::noise_process::{
    distance_trace, forgetfulness_horizon, GaussianNoiseDist, Horizon, MarkovParams, DEFAULT_MAX_STEPS,
};
use crate::spectral::{build_m, eigenvalues, szego_deviation, SpectralSymbol};
use crate::waterfill::{capacity_bounds, solve_memory, sweep, ChannelParams, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_ARGS: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const DEFAULT_N_PHOTONS: f64 = 8.0;
const THREADS_ENV: &str = "MEMCHAN_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `min:max:count`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = self.count - 1;
        (0..self.count)
            .map(|i| {
                if i == last {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / last as f64
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, count] = parts[..] else {
            return Err(format!("expected min:max:count, got '{s}'"));
        };
        let min: f64 = min.trim().parse().map_err(|e| format!("bad grid min: {e}"))?;
        let max: f64 = max.trim().parse().map_err(|e| format!("bad grid max: {e}"))?;
        let count: usize = count.trim().parse().map_err(|e| format!("bad grid count: {e}"))?;
        if count < 1 {
            return Err("grid count must be >= 1".into());
        }
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(format!("grid needs finite min <= max, got {min}:{max}"));
        }
        Ok(Self { min, max, count })
    }
}

/// Gaussian noise law given as `mean_re,mean_im,variance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistSpec {
    pub mean_re: f64,
    pub mean_im: f64,
    pub variance: f64,
}

impl FromStr for DistSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let vals: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad number '{p}': {e}")))
            .collect::<Result<_, _>>()?;
        let [mean_re, mean_im, variance] = vals[..] else {
            return Err(format!("expected mean_re,mean_im,var, got '{s}'"));
        };
        Ok(Self {
            mean_re,
            mean_im,
            variance,
        })
    }
}

impl DistSpec {
    fn to_dist(self) -> Result<GaussianNoiseDist, Error> {
        GaussianNoiseDist::new(Complex64::new(self.mean_re, self.mean_im), self.variance)
    }
}

#[derive(Debug, Parser)]
#[command(name = "memchan", version, about = "Capacity of bosonic channels with Gauss-Markov noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical capacity at a single parameter point.
    Capacity(CapacityArgs),
    /// Capacity over a mu x sigma grid.
    Sweep(SweepArgs),
    /// Eigenvalues of M and the collective noise variances.
    Spectrum(SpectrumArgs),
    /// Mean deviation of the collective variances from the symbol.
    Szego(SzegoArgs),
    /// Weak-forgetfulness horizon for two initial noise laws.
    Forget(ForgetArgs),
    /// Block sandwich bounds on the capacity.
    Bounds(BoundsArgs),
    /// Monte Carlo simulation of the channel acting on the vacuum.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long = "N", default_value_t = DEFAULT_N_PHOTONS)]
    pub n_photons: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "grid-mu", default_value = "0:1:21")]
    pub grid_mu: GridSpec,
    #[arg(long = "grid-sigma", default_value = "0:8:33")]
    pub grid_sigma: GridSpec,
    #[arg(long = "N", default_value_t = DEFAULT_N_PHOTONS)]
    pub n_photons: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub sigma: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SzegoArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub sigma: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ForgetArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub d1: DistSpec,
    #[arg(long, allow_hyphen_values = true)]
    pub d2: DistSpec,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long = "max-steps", default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "J")]
    pub blocks: usize,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long = "N", default_value_t = DEFAULT_N_PHOTONS)]
    pub n_photons: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Everything that determines a run's output, echoed into JSON reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_photons: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_mu: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_sigma: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    fn new(subcommand: &str, output: &OutputArgs) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            mu: None,
            sigma: None,
            n_photons: None,
            grid_mu: None,
            grid_sigma: None,
            n: Vec::new(),
            blocks: None,
            shots: None,
            seed: None,
            epsilon: None,
            max_steps: None,
            d1: None,
            d2: None,
            tol: None,
            out: output.out.clone(),
            format: output.format,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Num(x) => format_sig10(*x),
            Field::Int(i) => i.to_string(),
            Field::Text(s) => s.clone(),
            Field::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Field::Int(i) => json!(i),
            Field::Text(s) => json!(s),
            Field::Missing => Value::Null,
        }
    }
}

/// Rounds to 10 significant digits and prints the shortest decimal that
/// reads back as the rounded value.
pub fn format_sig10(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.9e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    let s = format!("{rounded}");
    if s.len() > 24 {
        // Very large or very small magnitudes read better in exponent form.
        format!("{rounded:e}")
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: RunConfig,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Field>>,
    pub diagnostics: Value,
    /// Non-fatal per-record failures (reported on stderr, exit code 3).
    pub warnings: Vec<String>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Field::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(k, v)| (k.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({
            "config": self.config,
            "records": records,
            "diagnostics": self.diagnostics,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render(&self) -> String {
        match self.config.format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::Domain(_)
            | Error::ZeroVariance
            | Error::SingularRegion { .. }
            | Error::BlockMismatch { .. }
            | Error::DimensionMismatch { .. } => EXIT_BAD_ARGS,
            Error::NotOrthogonal { .. }
            | Error::InvalidCovariance(_)
            | Error::Quadrature { .. }
            | Error::NonMonotone { .. }
            | Error::NoConvergence { .. } => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn bad_arg(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_BAD_ARGS,
        message: message.into(),
    }
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(bad_arg(format!("--tol must be > 0 (got {tol})")))
    }
}

fn num_or_missing(v: Option<f64>) -> Field {
    v.map_or(Field::Missing, Field::Num)
}

fn region_name(p: &ChannelParams) -> String {
    serde_json::to_value(p.region())
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn cmd_capacity(args: &CapacityArgs) -> Result<Report, CliError> {
    check_tol(args.tol)?;
    let params = ChannelParams::new(args.mu, args.sigma, args.n_photons)?;
    let sol = solve_memory(&params, args.tol)?;
    let mut config = RunConfig::new("capacity", &args.output);
    config.mu = Some(args.mu);
    config.sigma = Some(args.sigma);
    config.n_photons = Some(args.n_photons);
    config.tol = Some(args.tol);
    Ok(Report {
        config,
        header: vec!["mu", "sigma", "N", "capacity", "water_level", "lagrange_L", "region"],
        rows: vec![vec![
            Field::Num(args.mu),
            Field::Num(args.sigma),
            Field::Num(args.n_photons),
            Field::Num(sol.capacity),
            Field::Num(sol.water_level),
            Field::Num(sol.lagrange),
            Field::Text(region_name(&params)),
        ]],
        diagnostics: json!({}),
        warnings: Vec::new(),
    })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Report, CliError> {
    check_tol(args.tol)?;
    if !(args.grid_mu.min >= 0.0 && args.grid_mu.max <= 1.0) {
        return Err(bad_arg("--grid-mu must lie within [0, 1]"));
    }
    if args.grid_sigma.min < 0.0 {
        return Err(bad_arg("--grid-sigma must lie within [0, inf)"));
    }
    if !(args.n_photons > 0.0) {
        return Err(bad_arg(format!("--N must be > 0 (got {})", args.n_photons)));
    }
    let mus = args.grid_mu.points();
    let sigmas = args.grid_sigma.points();
    let result = sweep(&mus, &sigmas, args.n_photons, args.tol);
    let mut config = RunConfig::new("sweep", &args.output);
    config.grid_mu = Some(args.grid_mu);
    config.grid_sigma = Some(args.grid_sigma);
    config.n_photons = Some(args.n_photons);
    config.tol = Some(args.tol);
    Ok(sweep_report(config, &result))
}

/// Rows are sigma-major, then mu.
pub fn sweep_report(config: RunConfig, result: &crate::waterfill::Sweep) -> Report {
    let mut rows = Vec::with_capacity(result.mus.len() * result.sigmas.len());
    let mut warnings = Vec::new();
    for (j, &sigma) in result.sigmas.iter().enumerate() {
        for (i, &mu) in result.mus.iter().enumerate() {
            let cap = match &result.cells[i][j] {
                Ok(c) => Field::Num(*c),
                Err(e) => {
                    warnings.push(format!("cell mu = {mu}, sigma = {sigma} failed: {e}"));
                    Field::Missing
                }
            };
            rows.push(vec![Field::Num(mu), Field::Num(sigma), Field::Num(result.n_photons), cap]);
        }
    }
    Report {
        config,
        header: vec!["mu", "sigma", "N", "capacity"],
        rows,
        diagnostics: json!({ "cells": result.mus.len() * result.sigmas.len(), "failures": result.failures() }),
        warnings,
    }
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<Report, CliError> {
    if args.n == 0 {
        return Err(bad_arg("--n must be >= 1"));
    }
    let symbol = SpectralSymbol::new(args.mu, args.sigma)?;
    let m = build_m(args.n, args.mu)?;
    let eig = eigenvalues(&m);
    let scale = (1.0 - args.mu * args.mu) * args.sigma;
    let nf = args.n as f64;
    let rows: Vec<Vec<Field>> = eig
        .iter()
        .enumerate()
        .map(|(j, &mj)| {
            let lambda = std::f64::consts::PI * (j + 1) as f64 / nf;
            vec![
                Field::Int(j as u64 + 1),
                Field::Num(mj),
                Field::Num(scale / mj),
                Field::Num(symbol.at(lambda)),
            ]
        })
        .collect();
    let trace: f64 = eig.iter().sum();
    let mean_variance = eig.iter().map(|m| scale / m).sum::<f64>() / nf;
    let mut config = RunConfig::new("spectrum", &args.output);
    config.n = vec![args.n];
    config.mu = Some(args.mu);
    config.sigma = Some(args.sigma);
    Ok(Report {
        config,
        header: vec!["j", "eigenvalue", "variance", "symbol"],
        rows,
        diagnostics: json!({
            "eigenvalue_sum": trace,
            "trace": m.trace(),
            "mean_variance": mean_variance,
        }),
        warnings: Vec::new(),
    })
}

pub fn cmd_szego(args: &SzegoArgs) -> Result<Report, CliError> {
    if args.n.contains(&0) {
        return Err(bad_arg("--n entries must be >= 1"));
    }
    let rows = args
        .n
        .iter()
        .map(|&n| Ok(vec![Field::Int(n as u64), Field::Num(szego_deviation(n, args.mu, args.sigma)?)]))
        .collect::<Result<Vec<_>, Error>>()?;
    let mut config = RunConfig::new("szego", &args.output);
    config.n = args.n.clone();
    config.mu = Some(args.mu);
    config.sigma = Some(args.sigma);
    Ok(Report {
        config,
        header: vec!["n", "deviation"],
        rows,
        diagnostics: json!({}),
        warnings: Vec::new(),
    })
}

pub fn cmd_forget(args: &ForgetArgs) -> Result<Report, CliError> {
    let params = MarkovParams::new(args.mu, args.sigma)?;
    let d1 = args.d1.to_dist()?;
    let d2 = args.d2.to_dist()?;
    let horizon = forgetfulness_horizon(&params, &d1, &d2, args.epsilon, args.max_steps)?;
    let shown = match horizon {
        Horizon::Forgotten(n) => n,
        Horizon::NotForgetful => 1,
    }
    .min(64);
    let distances = distance_trace(&params, &d1, &d2, shown)?;
    let (nu, status) = match horizon {
        Horizon::Forgotten(n) => (Field::Int(n), "forgotten"),
        Horizon::NotForgetful => (Field::Missing, "not_forgetful"),
    };
    let mut config = RunConfig::new("forget", &args.output);
    config.mu = Some(args.mu);
    config.sigma = Some(args.sigma);
    config.d1 = Some(args.d1);
    config.d2 = Some(args.d2);
    config.epsilon = Some(args.epsilon);
    config.max_steps = Some(args.max_steps);
    Ok(Report {
        config,
        header: vec!["mu", "sigma", "epsilon", "nu", "status", "initial_distance"],
        rows: vec![vec![
            Field::Num(args.mu),
            Field::Num(args.sigma),
            Field::Num(args.epsilon),
            nu,
            Field::Text(status.into()),
            num_or_missing(distances.first().copied()),
        ]],
        diagnostics: json!({ "distances": distances }),
        warnings: Vec::new(),
    })
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<Report, CliError> {
    check_tol(args.tol)?;
    let params = ChannelParams::new(args.mu, args.sigma, args.n_photons)?;
    let bounds = capacity_bounds(&params, args.n, args.blocks)?;
    let capacity = solve_memory(&params, args.tol)?.capacity;
    let slack = 1e-9;
    let sandwiched = bounds.lower <= capacity + slack && capacity <= bounds.upper + slack;
    let mut config = RunConfig::new("bounds", &args.output);
    config.n = vec![args.n];
    config.blocks = Some(args.blocks);
    config.mu = Some(args.mu);
    config.sigma = Some(args.sigma);
    config.n_photons = Some(args.n_photons);
    config.tol = Some(args.tol);
    Ok(Report {
        config,
        header: vec!["n", "J", "mu", "sigma", "N", "lower", "capacity", "upper", "sandwiched"],
        rows: vec![vec![
            Field::Int(args.n as u64),
            Field::Int(args.blocks as u64),
            Field::Num(args.mu),
            Field::Num(args.sigma),
            Field::Num(args.n_photons),
            Field::Num(bounds.lower),
            Field::Num(capacity),
            Field::Num(bounds.upper),
            Field::Text(sandwiched.to_string()),
        ]],
        diagnostics: json!({ "gap": bounds.gap() }),
        warnings: Vec::new(),
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Report, CliError> {
    if args.n == 0 {
        return Err(bad_arg("--n must be >= 1"));
    }
    let params = MarkovParams::new(args.mu, args.sigma)?;
    let input = GaussianState::vacuum(args.n);
    let analytic = apply_additive_noise(&input, &stationary_noise_cov(args.n, args.mu, args.sigma)?)?;
    let stats = monte_carlo_channel(&params, &input, args.n, args.shots, args.seed)?;
    let dim = 2 * args.n;
    let mut rows = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in i..dim {
            let se = stats.cov_se[(i, j)];
            let diff = stats.cov[(i, j)] - analytic.cov()[(i, j)];
            rows.push(vec![
                Field::Int(i as u64),
                Field::Int(j as u64),
                Field::Num(stats.cov[(i, j)]),
                Field::Num(analytic.cov()[(i, j)]),
                Field::Num(se),
                Field::Num(if se > 0.0 { diff / se } else { 0.0 }),
            ]);
        }
    }
    let max_z = stats.max_cov_z(analytic.cov());
    let mut config = RunConfig::new("simulate", &args.output);
    config.mu = Some(args.mu);
    config.sigma = Some(args.sigma);
    config.n = vec![args.n];
    config.shots = Some(args.shots);
    config.seed = Some(args.seed);
    Ok(Report {
        config,
        header: vec!["row", "col", "empirical", "analytic", "std_error", "z_score"],
        rows,
        diagnostics: json!({
            "max_abs_z": max_z,
            "max_mean_abs_z": stats.max_mean_z(analytic.mean()),
            "within_5_se": max_z <= 5.0,
        }),
        warnings: Vec::new(),
    })
}

pub fn execute(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Capacity(a) => cmd_capacity(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Szego(a) => cmd_szego(a),
        Command::Forget(a) => cmd_forget(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|t| *t >= 1)
            .ok_or_else(|| bad_arg(format!("{THREADS_ENV} must be a positive integer (got '{raw}')")))?;
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| CliError {
        code: EXIT_NUMERICAL,
        message: format!("could not start thread pool: {e}"),
    })
}

fn write_output(report: &Report) -> std::io::Result<()> {
    let text = report.render();
    match &report.config.out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_ARGS } else { EXIT_OK };
        }
    };
    let outcome = thread_pool().and_then(|pool| pool.install(|| execute(&cli.command)));
    match outcome {
        Ok(report) => {
            if let Err(e) = write_output(&report) {
                eprintln!("error: writing output failed: {e}");
                return EXIT_NUMERICAL;
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.warnings.is_empty() {
                EXIT_OK
            } else {
                EXIT_NUMERICAL
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
