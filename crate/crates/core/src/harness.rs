//! Simulation harness: repeated sampling from a reference density, derivative
//! estimation under several bandwidth rules, integrated squared errors, the
//! convergence-rate fit and the Monte Carlo check of the bias and variance
//! formulas.
//!
//! Replications are independent and run on the ambient rayon pool. Each one
//! draws from its own ChaCha stream keyed by the replication index and results
//! are collected in index order, so reports do not depend on the thread count.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    bias_interior, refined_from_integrals, variance_leading, BandwidthReport, ChenIntegrals,
    TheoryIntegrals,
};
use crate::error::{Error, Result};
use crate::estimator::{derivative_at, derivative_on_grid, evaluate_on_grid, GridEvaluation};
use crate::format::{round_sig, sig};
use crate::kernel::{shape_params, KernelPoint};
use crate::numerics::{integrate_semi_infinite_with_points, trapezoid};
use crate::refdens::{Distribution, ReferenceDensity};

/// How the bandwidth of one estimate is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMode {
    /// Closed-form minimizer of the two leading MISE terms.
    Plugin,
    /// Lowest-MISE root of the full stationarity equation.
    Refined,
    /// The density-optimal bandwidth, used for the derivative as a baseline.
    Chen,
    Fixed(f64),
}

impl BandwidthMode {
    pub fn label(&self) -> String {
        match self {
            BandwidthMode::Plugin => "plugin".into(),
            BandwidthMode::Refined => "refined".into(),
            BandwidthMode::Chen => "chen".into(),
            BandwidthMode::Fixed(b) => format!("fixed_{}", sig(*b)),
        }
    }
}

/// Evenly spaced evaluation grid, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: 0.02,
            max: 4.0,
            points: 400,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.min > 0.0) {
            return Err(Error::Config(format!(
                "grid.min must be > 0, got {}",
                self.min
            )));
        }
        if !(self.max.is_finite() && self.max > self.min) {
            return Err(Error::Config(format!(
                "grid.max must exceed grid.min, got {}",
                self.max
            )));
        }
        if self.points < 2 {
            return Err(Error::Config(format!(
                "grid.points must be >= 2, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.max
                } else {
                    self.min + step * i as f64
                }
            })
            .collect()
    }
}

fn default_modes() -> Vec<BandwidthMode> {
    vec![
        BandwidthMode::Plugin,
        BandwidthMode::Refined,
        BandwidthMode::Chen,
    ]
}

fn default_distribution() -> Distribution {
    Distribution::Maxwell { sigma: 1.0 }
}

/// Settings for the convergence-rate study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub n_list: Vec<usize>,
    pub replications: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            n_list: vec![500, 1000, 2000, 4000, 8000],
            replications: 200,
        }
    }
}

/// Settings for the Monte Carlo check of the bias and variance formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaConfig {
    pub x_list: Vec<f64>,
    pub b: f64,
    pub n: usize,
    pub replications: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            x_list: vec![1.0],
            b: 0.05,
            n: 100_000,
            replications: 200,
        }
    }
}

/// Everything an experiment run needs. Deserialized from the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_distribution")]
    pub distribution: Distribution,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_modes")]
    pub bandwidth_modes: Vec<BandwidthMode>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default)]
    pub lemmas: Option<LemmaConfig>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// Maxwell(σ = 1) at sample size `n` with the three data-free bandwidths.
    pub fn maxwell(n: usize, seed: u64, replications: usize) -> Self {
        Self {
            distribution: default_distribution(),
            n,
            seed,
            replications,
            grid: GridSpec::default(),
            bandwidth_modes: default_modes(),
            output_dir: None,
            convergence: None,
            lemmas: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        self.grid.validate()?;
        if self.bandwidth_modes.is_empty() {
            return Err(Error::Config("bandwidth_modes is empty".into()));
        }
        for m in &self.bandwidth_modes {
            if let BandwidthMode::Fixed(b) = m {
                if !(b.is_finite() && *b > 0.0) {
                    return Err(Error::Config(format!(
                        "fixed bandwidth must be > 0, got {b}"
                    )));
                }
            }
        }
        if let Some(c) = &self.convergence {
            if c.replications == 0 {
                return Err(Error::Config(
                    "convergence.replications must be >= 1".into(),
                ));
            }
        }
        if let Some(l) = &self.lemmas {
            if l.replications == 0 || l.n == 0 || !(l.b > 0.0) || l.x_list.is_empty() {
                return Err(Error::Config(
                    "lemmas needs x_list, b > 0, n >= 1, replications >= 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Run `f` on a dedicated pool of `jobs` threads, or on the global pool when
/// `jobs` is `None`. Results do not depend on the choice.
pub fn with_jobs<T, F>(jobs: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> Result<T> + Send,
{
    match jobs {
        None => f(),
        Some(0) => Err(Error::Config("--jobs must be >= 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {j} worker threads: {e}")))?
            .install(f),
    }
}

/// Integrated squared error of one replication under one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IseEntry {
    pub replication: usize,
    pub mode: BandwidthMode,
    pub ise: f64,
}

/// Distribution of the ISE for one mode across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IseSummary {
    pub mode: BandwidthMode,
    pub bandwidth: f64,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; absent with a single replication.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBandwidth {
    pub mode: BandwidthMode,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFailure {
    pub mode: BandwidthMode,
    pub error: String,
}

/// The first replication's estimate for one mode, next to the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCurve {
    pub mode: BandwidthMode,
    pub evaluation: GridEvaluation,
    pub true_derivative: Vec<f64>,
}

impl ModeCurve {
    /// CSV with header `x,true_derivative,estimate`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,true_derivative,estimate")?;
        for ((x, t), e) in self
            .evaluation
            .grid
            .iter()
            .zip(&self.true_derivative)
            .zip(&self.evaluation.derivative)
        {
            writeln!(w, "{},{},{}", sig(*x), sig(*t), sig(*e))?;
        }
        Ok(())
    }
}

/// Bandwidths printed alongside the original Maxwell experiment, reported
/// next to the computed ones for comparison only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedValues {
    pub source: String,
    pub b_plugin: f64,
    pub b_refined: f64,
    pub b_chen: f64,
    pub deviation: Option<[f64; 3]>,
    pub note: String,
}

/// Published reference values for Maxwell(σ = 1) at `n`, if any.
pub fn published_values(dist: &Distribution, n: usize) -> Vec<PublishedValues> {
    if *dist != (Distribution::Maxwell { sigma: 1.0 }) {
        return Vec::new();
    }
    let table = PublishedValues {
        source: "published table (sample size not stated)".into(),
        b_plugin: 0.203,
        b_refined: 0.146,
        b_chen: 0.017,
        deviation: Some([0.0426, 0.0382, 0.0450]),
        note: "single run with unreported seed; its bandwidth row disagrees with both \
               published figure captions"
            .into(),
    };
    match n {
        200 => vec![
            PublishedValues {
                source: "published figure caption, n = 200".into(),
                b_plugin: 0.194,
                b_refined: 0.197,
                b_chen: 0.0175,
                deviation: None,
                note: "caption keeps the n = 2000 value for the density-optimal bandwidth".into(),
            },
            table,
        ],
        2000 => vec![
            PublishedValues {
                source: "published figure caption, n = 2000".into(),
                b_plugin: 0.1004,
                b_refined: 0.1013,
                b_chen: 0.0175,
                deviation: None,
                note: String::new(),
            },
            table,
        ],
        _ => Vec::new(),
    }
}

pub const ISE_DEFINITION: &str = "ISE = integral over the configured grid of \
(estimated derivative - true derivative)^2, trapezoid rule; not square-rooted";

/// Output of [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub distribution: String,
    pub n: usize,
    pub seed: u64,
    pub replications: usize,
    pub grid: GridSpec,
    pub ise_definition: String,
    /// Present when all three data-free selectors succeeded.
    pub bandwidths: Option<BandwidthReport>,
    pub selected: Vec<ModeBandwidth>,
    pub failures: Vec<ModeFailure>,
    pub summary: Vec<IseSummary>,
    pub per_replication_ise: Vec<IseEntry>,
    pub published: Vec<PublishedValues>,
    #[serde(skip)]
    pub curves: Vec<ModeCurve>,
}

impl ExperimentReport {
    pub fn summary_for(&self, mode: BandwidthMode) -> Option<&IseSummary> {
        self.summary.iter().find(|s| s.mode == mode)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Write `report.json`, `bandwidths.json` (when available), and for each
    /// mode `curve_<mode>.csv` and `estimate_<mode>.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json() + "\n")?;
        if let Some(b) = &self.bandwidths {
            fs::write(dir.join("bandwidths.json"), b.to_json() + "\n")?;
        }
        for c in &self.curves {
            let label = c.mode.label();
            let mut buf = Vec::new();
            c.write_csv(&mut buf)?;
            fs::write(dir.join(format!("curve_{label}.csv")), buf)?;
            let mut buf = Vec::new();
            c.evaluation.write_csv(&mut buf)?;
            fs::write(dir.join(format!("estimate_{label}.csv")), buf)?;
        }
        Ok(())
    }
}

/// Resolve every requested mode to a bandwidth, collecting failures per mode.
pub fn select_bandwidths(
    dist: &dyn ReferenceDensity,
    n: usize,
    modes: &[BandwidthMode],
) -> (
    Option<BandwidthReport>,
    Vec<ModeBandwidth>,
    Vec<ModeFailure>,
) {
    let n64 = n as u64;
    let theory = TheoryIntegrals::compute(dist);
    let chen = ChenIntegrals::compute(dist);
    let mut selected = Vec::new();
    let mut failures = Vec::new();
    for &mode in modes {
        let b = match mode {
            BandwidthMode::Plugin => theory.clone().and_then(|t| t.plugin_bandwidth(n64)),
            BandwidthMode::Refined => theory
                .clone()
                .and_then(|t| refined_from_integrals(&t, n64).map(|r| r.b_refined)),
            BandwidthMode::Chen => chen.clone().and_then(|c| c.bandwidth(n64)),
            BandwidthMode::Fixed(b) => Ok(b),
        };
        match b {
            Ok(bandwidth) => selected.push(ModeBandwidth { mode, bandwidth }),
            Err(e) => failures.push(ModeFailure {
                mode,
                error: e.to_string(),
            }),
        }
    }
    let report = BandwidthReport::compute(dist, n64).ok();
    (report, selected, failures)
}

/// Estimates and ISEs of one replication for every selected bandwidth.
pub fn evaluate_replication(
    sample: &crate::estimator::Sample,
    selected: &[ModeBandwidth],
    grid: &[f64],
    truth: &[f64],
    keep_curves: bool,
) -> Result<(Vec<f64>, Vec<ModeCurve>)> {
    let mut ises = Vec::with_capacity(selected.len());
    let mut curves = Vec::new();
    for sel in selected {
        let derivative = if keep_curves {
            let ev = evaluate_on_grid(sample, sel.bandwidth, grid)?;
            let d = ev.derivative.clone();
            curves.push(ModeCurve {
                mode: sel.mode,
                evaluation: ev,
                true_derivative: truth.to_vec(),
            });
            d
        } else {
            derivative_on_grid(sample, sel.bandwidth, grid)?
        };
        let sq: Vec<f64> = derivative
            .iter()
            .zip(truth)
            .map(|(e, t)| (e - t) * (e - t))
            .collect();
        ises.push(trapezoid(grid, &sq));
    }
    Ok((ises, curves))
}

fn summarize(values: &[f64]) -> (f64, f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let median = if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    };
    let std = (k > 1)
        .then(|| (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, median, std)
}

/// Run the configured experiment. Bandwidth selection failures are recorded
/// per mode in the report; the remaining modes still run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let dist = cfg.distribution;
    let (bandwidths, selected, failures) = select_bandwidths(&dist, cfg.n, &cfg.bandwidth_modes);
    let grid = cfg.grid.nodes();
    let truth: Vec<f64> = grid.iter().map(|&x| dist.d1(x)).collect();

    let runs = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let sample = dist.sample_stream(cfg.n, cfg.seed, rep as u64)?;
            evaluate_replication(&sample, &selected, &grid, &truth, rep == 0)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_replication_ise = Vec::new();
    let mut curves = Vec::new();
    for (rep, (ises, c)) in runs.into_iter().enumerate() {
        for (sel, ise) in selected.iter().zip(ises) {
            per_replication_ise.push(IseEntry {
                replication: rep,
                mode: sel.mode,
                ise: round_sig(ise),
            });
        }
        curves.extend(c);
    }
    let summary = selected
        .iter()
        .map(|sel| {
            let v: Vec<f64> = per_replication_ise
                .iter()
                .filter(|e| e.mode == sel.mode)
                .map(|e| e.ise)
                .collect();
            let (mean, median, std) = summarize(&v);
            IseSummary {
                mode: sel.mode,
                bandwidth: round_sig(sel.bandwidth),
                mean: round_sig(mean),
                median: round_sig(median),
                std: std.map(round_sig),
            }
        })
        .collect();

    Ok(ExperimentReport {
        distribution: dist.label(),
        n: cfg.n,
        seed: cfg.seed,
        replications: cfg.replications,
        grid: cfg.grid,
        ise_definition: ISE_DEFINITION.into(),
        bandwidths: bandwidths.map(|b| b.rounded()),
        selected: selected
            .into_iter()
            .map(|s| ModeBandwidth {
                mode: s.mode,
                bandwidth: round_sig(s.bandwidth),
            })
            .collect(),
        failures,
        summary,
        per_replication_ise,
        published: published_values(&dist, cfg.n),
        curves,
    })
}

/// One sample size in the convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub bandwidth: f64,
    /// Mean ISE over replications, the Monte Carlo MISE.
    pub mise: f64,
    pub ise_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub distribution: String,
    pub replications: usize,
    pub seed: u64,
    /// Least-squares slope of ln MISE against ln n.
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<ConvergencePoint>,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Stream id for the `rep`-th sample of size `n`, distinct across sizes.
fn stream_id(n: usize, rep: usize) -> u64 {
    ((n as u64) << 32) | rep as u64
}

/// Least-squares line through `(x, y)`: `(slope, intercept)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate(
            "regression abscissae have no spread".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Monte Carlo MISE of the plug-in estimate at each `n`, and the slope of
/// `ln MISE` against `ln n`.
pub fn convergence_study(
    dist: &Distribution,
    n_list: &[usize],
    replications: usize,
    seed: u64,
    grid: &GridSpec,
) -> Result<ConvergenceReport> {
    if n_list.len() < 4 {
        return Err(Error::Config(format!(
            "convergence study needs at least 4 sample sizes, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::Degenerate(
            "sample sizes must be positive and strictly increasing".into(),
        ));
    }
    if replications == 0 {
        return Err(Error::Config("replications must be >= 1".into()));
    }
    grid.validate()?;
    let theory = TheoryIntegrals::compute(dist)?;
    let nodes = grid.nodes();
    let truth: Vec<f64> = nodes.iter().map(|&x| dist.d1(x)).collect();

    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let b = theory.plugin_bandwidth(n as u64)?;
        let sel = [ModeBandwidth {
            mode: BandwidthMode::Plugin,
            bandwidth: b,
        }];
        let ises = (0..replications)
            .into_par_iter()
            .map(|rep| {
                let sample = dist.sample_stream(n, seed, stream_id(n, rep))?;
                evaluate_replication(&sample, &sel, &nodes, &truth, false).map(|r| r.0[0])
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, _, std) = summarize(&ises);
        points.push(ConvergencePoint {
            n,
            bandwidth: b,
            mise: mean,
            ise_std: std,
        });
    }
    let lx: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.mise.ln()).collect();
    let (slope, intercept) = fit_line(&lx, &ly)?;
    Ok(ConvergenceReport {
        distribution: dist.label(),
        replications,
        seed,
        slope: round_sig(slope),
        intercept: round_sig(intercept),
        points: points
            .into_iter()
            .map(|p| ConvergencePoint {
                n: p.n,
                bandwidth: round_sig(p.bandwidth),
                mise: round_sig(p.mise),
                ise_std: p.ise_std.map(round_sig),
            })
            .collect(),
    })
}

/// Monte Carlo moments of `f̂'(x)` against the leading-order formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub x: f64,
    pub true_derivative: f64,
    pub mc_mean: f64,
    pub mc_bias: f64,
    /// Standard error of `mc_bias`; absent with one replication.
    pub mc_bias_se: Option<f64>,
    pub theory_bias: f64,
    /// `(mc_bias - theory_bias) / mc_bias_se`
    pub z_bias: Option<f64>,
    pub mc_variance: Option<f64>,
    pub theory_variance: f64,
    /// `mc_variance / theory_variance`
    pub variance_ratio: Option<f64>,
    /// Finite-b bias `∫ K' f dt - f'(x)` by quadrature, no expansion involved.
    pub quadrature_bias: f64,
    /// Finite-b variance `(∫ K'² f dt - (∫ K' f dt)²) / n` by quadrature.
    pub quadrature_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub distribution: String,
    pub b: f64,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    /// False when a single replication leaves the variance undefined.
    pub variance_defined: bool,
    pub rows: Vec<LemmaRow>,
}

impl LemmaReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Plain-text table, one row per evaluation point.
    pub fn table(&self) -> String {
        let opt = |v: Option<f64>| v.map(sig).unwrap_or_else(|| "undefined".into());
        let mut out = String::from(
            "x,mc_bias,mc_bias_se,theory_bias,z_bias,quadrature_bias,mc_variance,theory_variance,variance_ratio,quadrature_variance\n",
        );
        for r in &self.rows {
            out += &format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                sig(r.x),
                sig(r.mc_bias),
                opt(r.mc_bias_se),
                sig(r.theory_bias),
                opt(r.z_bias),
                sig(r.quadrature_bias),
                opt(r.mc_variance),
                sig(r.theory_variance),
                opt(r.variance_ratio),
                sig(r.quadrature_variance),
            );
        }
        out
    }
}

/// Exact first and second moments of `K'(X)` for `X ~ f`, by quadrature.
fn kernel_derivative_moments(dist: &dyn ReferenceDensity, x: f64, b: f64) -> Result<(f64, f64)> {
    let shape = shape_params(x, b)?;
    let kp = KernelPoint::new(&shape);
    let sd = shape.rho.sqrt() * b;
    let pts = [x - 8.0 * sd, x - 2.0 * sd, x, x + 2.0 * sd, x + 8.0 * sd];
    let m1 = integrate_semi_infinite_with_points(
        |t| kp.x_derivative(t, t.ln()) * dist.pdf(t),
        &pts,
        1e-10,
    )?
    .value;
    let m2 = integrate_semi_infinite_with_points(
        |t| kp.x_derivative(t, t.ln()).powi(2) * dist.pdf(t),
        &pts,
        1e-10,
    )?
    .value;
    Ok((m1, m2))
}

/// Replicate `f̂'(x)` at each `x` and compare its empirical mean and variance
/// with the interior bias and variance formulas.
pub fn lemma_verification(
    dist: &Distribution,
    x_list: &[f64],
    b: f64,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<LemmaReport> {
    if x_list.is_empty() || replications == 0 || n == 0 {
        return Err(Error::Config(
            "need points, n >= 1 and replications >= 1".into(),
        ));
    }
    let n64 = n as u64;
    let mut theory = Vec::with_capacity(x_list.len());
    for &x in x_list {
        // rejects the boundary region
        theory.push((
            bias_interior(dist, x, b)?,
            variance_leading(dist, x, b, n64)?,
        ));
    }
    let estimates: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let sample = dist.sample_stream(n, seed, rep as u64)?;
            x_list
                .iter()
                .map(|&x| derivative_at(&sample, b, x))
                .collect()
        })
        .collect::<Result<_>>()?;

    let r = replications as f64;
    let mut rows = Vec::with_capacity(x_list.len());
    for (j, &x) in x_list.iter().enumerate() {
        let vals: Vec<f64> = estimates.iter().map(|e| e[j]).collect();
        let mean = vals.iter().sum::<f64>() / r;
        let var = (replications > 1)
            .then(|| vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0));
        let se = var.map(|v| (v / r).sqrt());
        let truth = dist.d1(x);
        let (tb, tv) = theory[j];
        let (m1, m2) = kernel_derivative_moments(dist, x, b)?;
        rows.push(LemmaRow {
            x,
            true_derivative: round_sig(truth),
            mc_mean: round_sig(mean),
            mc_bias: round_sig(mean - truth),
            mc_bias_se: se.map(round_sig),
            theory_bias: round_sig(tb),
            z_bias: se.map(|s| round_sig((mean - truth - tb) / s)),
            mc_variance: var.map(round_sig),
            theory_variance: round_sig(tv),
            variance_ratio: var.map(|v| round_sig(v / tv)),
            quadrature_bias: round_sig(m1 - truth),
            quadrature_variance: round_sig((m2 - m1 * m1) / n as f64),
        });
    }
    Ok(LemmaReport {
        distribution: dist.label(),
        b,
        n,
        replications,
        seed,
        variance_defined: replications > 1,
        rows,
    })
}
