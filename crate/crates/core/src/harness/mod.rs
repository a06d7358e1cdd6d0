//! Config-driven experiment runner, figure registry, verification driver and
//! plot-data emitter.

mod plot;
mod verify;

pub use plot::{plot, render_svg, PlotSeries};
pub use verify::{
    acceptance, criterion, verify, verify_with, CheckResult, Suite, VerifyOptions, VerifyReport, CRITERIA,
};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithms::{
    calibrated_step_scale, dual_extrapolation_run, fixed_lr_accelerated_run, mirror_prox_run, undergrad_run,
    unixgrad_run, MirrorProxStep, RunOptions, StepWeights, Trajectory, UnderGradParams,
};
use crate::analysis::{default_window, fit_power_law, ProblemConstants, RateFit};
use crate::error::{Error, Result};
use crate::oracle::{derive_stream, NoiseModel, Oracle};
use crate::par::{map_runs, Execution};
use crate::problems::Problem;

/// Environment variable overriding the base seed of every experiment.
pub const SEED_ENV: &str = "UNDERGRAD_SEED";

/// Curvature scale of the registry's unbounded quadratic (spectrum in [0.1, 1]).
pub const UNBOUNDED_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    Undergrad,
    Unixgrad,
    /// UnderGrad with a frozen learning rate.
    Aeg,
    MirrorProx,
    DualExtrapolation,
}

impl AlgorithmName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmName::Undergrad => "undergrad",
            AlgorithmName::Unixgrad => "unixgrad",
            AlgorithmName::Aeg => "aeg",
            AlgorithmName::MirrorProx => "mirror_prox",
            AlgorithmName::DualExtrapolation => "dual_extrapolation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: AlgorithmName,
    /// Name used in file names and plots; defaults to the algorithm name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Required for mirror-prox.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_mode: Option<MirrorProxStep>,
}

impl AlgorithmSpec {
    pub fn new(name: AlgorithmName) -> Self {
        AlgorithmSpec {
            name,
            label: None,
            step_mode: None,
        }
    }

    pub fn labelled(name: AlgorithmName, label: &str) -> Self {
        AlgorithmSpec {
            label: Some(label.to_string()),
            ..Self::new(name)
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.name.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    LinearSimplex,
    QuadraticSimplex,
    Capacity,
    QuadraticUnbounded,
    LinearSimplexEuclidean,
    QuadraticSimplexEuclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: ProblemName,
    pub dimension: usize,
    /// Base seed: generates the instance and keys every run's noise stream.
    pub seed: u64,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        let (d, s) = (self.dimension, self.seed);
        match self.name {
            ProblemName::LinearSimplex => Problem::linear_simplex_random(d, s),
            ProblemName::QuadraticSimplex => Problem::quadratic_simplex_random(d, s),
            ProblemName::Capacity => Problem::capacity(d, s),
            ProblemName::QuadraticUnbounded => Problem::quadratic_unbounded(d, s, UNBOUNDED_SCALE),
            ProblemName::LinearSimplexEuclidean => Problem::linear_simplex_random(d, s)?.on_euclidean_simplex(),
            ProblemName::QuadraticSimplexEuclidean => {
                Problem::quadratic_simplex_random(d, s)?.on_euclidean_simplex()
            }
        }
        .map_err(|e| match e {
            Error::InvalidInput(m) => Error::config(format!("problem: {m}")),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// UnixGrad step scale, or the mirror-prox step multiplier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_scale: Option<f64>,
    /// Frozen learning rate (AEG) or constant step (dual extrapolation).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmSpec,
    pub problem: ProblemSpec,
    #[serde(rename = "T")]
    pub iterations: usize,
    pub sigma: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub weights: StepWeights,
    #[serde(default)]
    pub overrides: Overrides,
    pub output_dir: PathBuf,
    /// Noise distribution; defaults to the hard-bounded model of the geometry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("cannot parse config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("T must be at least 1"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::config(format!("sigma must be finite and nonnegative, got {}", self.sigma)));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds must not be empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        if let Some(noise) = self.noise {
            if (noise == NoiseModel::None) != (self.sigma == 0.0) {
                return Err(Error::config("noise `none` must go with sigma = 0 and vice versa"));
            }
        }
        if self.algorithm.name == AlgorithmName::MirrorProx && self.algorithm.step_mode.is_none() {
            return Err(Error::config("mirror_prox needs algorithm.step_mode"));
        }
        if self.algorithm.name == AlgorithmName::DualExtrapolation && self.overrides.eta.is_none() {
            return Err(Error::config("dual_extrapolation needs overrides.eta as its step"));
        }
        let label = self.algorithm.label();
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(Error::config(format!("label {label:?} must be a non-empty file-name-safe string")));
        }
        Ok(())
    }

    /// Sets the base seed from `UNDERGRAD_SEED` when present.
    pub fn apply_seed_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.problem.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical (compact) JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn noise_model(&self, problem: &Problem) -> NoiseModel {
        match self.noise {
            Some(n) => n,
            None if self.sigma == 0.0 => NoiseModel::None,
            None => NoiseModel::default_for(problem.regularizer().norms()),
        }
    }
}

/// One registered figure: several configs sharing an output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    pub configs: Vec<ExperimentConfig>,
}

pub const REGISTRY: [&str; 3] = ["fig1", "fig3", "fig4"];

/// Problem seed of the figure setup.
pub const FIGURE_PROBLEM_SEED: u64 = 7;
/// UnixGrad step scales of the figure sweep, as multiples of UnderGrad's η_1.
pub const UNIXGRAD_FACTORS: [(f64, &str); 3] = [(1e-3, "unixgrad_1e-3"), (1.0, "unixgrad_1"), (10.0, "unixgrad_10")];

fn figure_problem() -> ProblemSpec {
    ProblemSpec {
        name: ProblemName::LinearSimplex,
        dimension: 100,
        seed: FIGURE_PROBLEM_SEED,
    }
}

fn base_config(algorithm: AlgorithmSpec, sigma: f64, seeds: Vec<u64>, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        algorithm,
        problem: figure_problem(),
        iterations: 10_000,
        sigma,
        seeds,
        weights: StepWeights::Linear,
        overrides: Overrides::default(),
        output_dir: out.to_path_buf(),
        noise: None,
    }
}

fn unixgrad_sweep(sigma: f64, seeds: &[u64], out: &Path) -> Result<Vec<ExperimentConfig>> {
    let h = calibrated_step_scale(figure_problem().build()?.regularizer());
    Ok(UNIXGRAD_FACTORS
        .iter()
        .map(|(factor, label)| {
            let mut cfg = base_config(AlgorithmSpec::labelled(AlgorithmName::Unixgrad, label), sigma, seeds.to_vec(), out);
            cfg.overrides.step_scale = Some(factor * h);
            cfg
        })
        .collect())
}

/// Looks up a registry entry, writing under `out`.
pub fn registry_entry(name: &str, out: &Path) -> Result<Experiment> {
    let noisy_seeds: Vec<u64> = (0..20).collect();
    match name {
        "fig1" => {
            let mut configs = vec![base_config(AlgorithmSpec::new(AlgorithmName::Undergrad), 0.0, vec![0], out)];
            configs.extend(unixgrad_sweep(0.0, &[0], out)?);
            configs.push(base_config(AlgorithmSpec::new(AlgorithmName::Aeg), 0.0, vec![0], out));
            Ok(Experiment {
                name: "fig1",
                description: "linear simplex d=100, perfect oracle: UnderGrad, UnixGrad x{1e-3,1,10}, AEG",
                configs,
            })
        }
        "fig3" => {
            let mut configs = vec![base_config(
                AlgorithmSpec::new(AlgorithmName::Undergrad),
                0.1,
                noisy_seeds.clone(),
                out,
            )];
            configs.extend(unixgrad_sweep(0.1, &noisy_seeds, out)?);
            Ok(Experiment {
                name: "fig3",
                description: "linear simplex d=100, sigma=0.1, 20 seeds: UnderGrad, UnixGrad x{1e-3,1,10}",
                configs,
            })
        }
        "fig4" => {
            let configs = [0.0, 0.01, 0.1, 1.0]
                .iter()
                .map(|&sigma| {
                    let label = format!("undergrad_sigma{sigma}");
                    let seeds = if sigma == 0.0 { vec![0] } else { noisy_seeds.clone() };
                    let mut cfg = base_config(AlgorithmSpec::new(AlgorithmName::Undergrad), sigma, seeds, out);
                    cfg.algorithm.label = Some(label);
                    cfg
                })
                .collect();
            Ok(Experiment {
                name: "fig4",
                description: "UnderGrad on linear simplex d=100 across sigma in {0, 0.01, 0.1, 1}",
                configs,
            })
        }
        other => Err(Error::config(format!(
            "unknown experiment {other:?}; registered: {}",
            REGISTRY.join(", ")
        ))),
    }
}

/// Seed-level outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub final_gap: f64,
    pub wall_ns: u64,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub algorithm: String,
    pub problem: String,
    pub config_hash: String,
    pub sigma: f64,
    pub iterations: usize,
    pub seeds: Vec<SeedResult>,
    pub checkpoints: Vec<usize>,
    pub mean_gap: Vec<f64>,
    pub std_gap: Vec<f64>,
    /// Fit of the mean gap over `[T/100, T]`, when enough positive points exist.
    pub fit: Option<RateFit>,
    /// UnderGrad's tighter applicable bound at each checkpoint.
    pub bounds: Vec<Option<f64>>,
    pub total_wall_ns: u64,
    pub aggregate_csv: PathBuf,
}

/// Runtime knobs that do not change results.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunContext {
    pub execution: Execution,
    /// Record wall-clock time in the CSVs (breaks byte-for-byte reproducibility).
    pub wall_clock: bool,
}

/// Runs one algorithm on one problem instance with a given oracle.
pub fn execute(cfg: &ExperimentConfig, problem: &Problem, oracle: &mut Oracle, opts: &RunOptions) -> Result<Trajectory> {
    let reg = problem.regularizer();
    let ov = cfg.overrides;
    match cfg.algorithm.name {
        AlgorithmName::Undergrad => {
            let mut params = if reg.h_constant().is_finite() {
                UnderGradParams::new(cfg.weights)
            } else {
                UnderGradParams::unbounded(cfg.weights, reg)
            };
            params.theta = ov.theta.or(params.theta);
            params.delta = ov.delta.or(params.delta);
            undergrad_run(problem, oracle, opts, &params)
        }
        AlgorithmName::Unixgrad => {
            let scale = ov.step_scale.unwrap_or_else(|| calibrated_step_scale(reg));
            unixgrad_run(problem, oracle, opts, cfg.weights, scale)
        }
        AlgorithmName::Aeg => {
            let eta = ov.eta.unwrap_or_else(|| reg.h_constant());
            if !eta.is_finite() {
                return Err(Error::config("aeg on an unbounded domain needs overrides.eta"));
            }
            fixed_lr_accelerated_run(problem, oracle, opts, cfg.weights, eta)
        }
        AlgorithmName::MirrorProx => {
            let mode = cfg
                .algorithm
                .step_mode
                .ok_or_else(|| Error::config("mirror_prox needs algorithm.step_mode"))?;
            mirror_prox_run(problem, oracle, opts, mode, ov.step_scale.unwrap_or(1.0))
        }
        AlgorithmName::DualExtrapolation => {
            let alpha = ov
                .eta
                .ok_or_else(|| Error::config("dual_extrapolation needs overrides.eta"))?;
            dual_extrapolation_run(problem, oracle, opts, alpha)
        }
    }
}

/// Runs every seed of `cfg` and returns the trajectories in seed order,
/// without touching the file system.
pub fn run_trajectories(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Vec<(Trajectory, u64)>> {
    cfg.validate()?;
    let problem = cfg.problem.build()?;
    let noise = cfg.noise_model(&problem);
    map_runs(ctx.execution, &cfg.seeds, |&seed| {
        let start = Instant::now();
        let stream = derive_stream(cfg.problem.seed, seed);
        let mut oracle = Oracle::new(&problem, noise, cfg.sigma, stream).map_err(|e| Error::config(e.to_string()))?;
        let opts = RunOptions {
            wall_clock: ctx.wall_clock,
            ..RunOptions::new(cfg.iterations).with_seed(seed)
        };
        let traj = execute(cfg, &problem, &mut oracle, &opts).map_err(|e| match e {
            Error::NumericalFailure { message, iteration } => Error::NumericalFailure {
                message: format!("{} seed {seed}: {message}", cfg.algorithm.label()),
                iteration,
            },
            other => other,
        })?;
        Ok((traj, start.elapsed().as_nanos() as u64))
    })
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CSV_HEADER: &str = "run_id,t,f_value,gap,eta,S,queries,wall_ns";
pub const AGGREGATE_HEADER: &str = "t,mean_gap,std_gap,mean_f_value,bound";

/// The per-seed CSV contents.
pub fn trajectory_csv(run_id: &str, traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.records.len() * 120);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &traj.records {
        let _ = writeln!(
            out,
            "{run_id},{},{},{},{},{},{},{}",
            r.t,
            fmt_float(r.f_value),
            fmt_float(r.gap),
            fmt_float(r.eta),
            fmt_float(r.s),
            r.queries,
            r.wall_ns
        );
    }
    out
}

/// Runs an experiment config, writes one CSV per seed, an aggregate CSV and a
/// JSON summary into `output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunSummary> {
    let runs = run_trajectories(cfg, ctx)?;
    let problem = cfg.problem.build()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let label = cfg.algorithm.label().to_string();

    let mut seeds = Vec::with_capacity(runs.len());
    for ((traj, wall), seed) in runs.iter().zip(&cfg.seeds) {
        let path = cfg.output_dir.join(format!("{label}_seed{seed}.csv"));
        fs::write(&path, trajectory_csv(&format!("{label}-{seed}"), traj))?;
        seeds.push(SeedResult {
            seed: *seed,
            final_gap: traj.final_gap(),
            wall_ns: *wall,
            csv: path,
        });
    }

    let checkpoints: Vec<usize> = runs[0].0.records.iter().map(|r| r.t).collect();
    for (traj, _) in &runs {
        if traj.records.len() != checkpoints.len() || traj.records.iter().zip(&checkpoints).any(|(r, t)| r.t != *t) {
            return Err(Error::numerical("checkpoint grids differ across seeds"));
        }
    }
    let n = runs.len() as f64;
    let column = |i: usize, f: &dyn Fn(&crate::algorithms::Record) -> f64| -> Vec<f64> {
        runs.iter().map(|(tr, _)| f(&tr.records[i])).collect()
    };
    let mut mean_gap = Vec::with_capacity(checkpoints.len());
    let mut std_gap = Vec::with_capacity(checkpoints.len());
    let mut mean_f = Vec::with_capacity(checkpoints.len());
    for i in 0..checkpoints.len() {
        let gaps = column(i, &|r| r.gap);
        let m = gaps.iter().sum::<f64>() / n;
        let var = if runs.len() > 1 {
            gaps.iter().map(|g| (g - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean_gap.push(m);
        std_gap.push(var.sqrt());
        mean_f.push(column(i, &|r| r.f_value).iter().sum::<f64>() / n);
    }
    let constants = ProblemConstants::of(&problem, cfg.sigma);
    let bounds: Vec<Option<f64>> = checkpoints.iter().map(|&t| constants.best_bound(t)).collect();

    let mut agg = String::new();
    agg.push_str(AGGREGATE_HEADER);
    agg.push('\n');
    for i in 0..checkpoints.len() {
        let _ = writeln!(
            agg,
            "{},{},{},{},{}",
            checkpoints[i],
            fmt_float(mean_gap[i]),
            fmt_float(std_gap[i]),
            fmt_float(mean_f[i]),
            bounds[i].map(fmt_float).unwrap_or_default()
        );
    }
    let aggregate_csv = cfg.output_dir.join(format!("{label}_aggregate.csv"));
    fs::write(&aggregate_csv, agg)?;

    let points: Vec<(f64, f64)> = checkpoints.iter().map(|&t| t as f64).zip(mean_gap.iter().cloned()).collect();
    let summary = RunSummary {
        label: label.clone(),
        algorithm: runs[0].0.meta.algorithm.clone(),
        problem: problem.name().to_string(),
        config_hash: cfg.hash(),
        sigma: cfg.sigma,
        iterations: cfg.iterations,
        total_wall_ns: seeds.iter().map(|s| s.wall_ns).sum(),
        seeds,
        fit: fit_power_law(&points, default_window(cfg.iterations)).ok(),
        checkpoints,
        mean_gap,
        std_gap,
        bounds,
        aggregate_csv,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(cfg.output_dir.join(format!("{label}_summary.json")), json)?;
    Ok(summary)
}

/// Runs every config of a registry entry.
pub fn run_registry(name: &str, out: &Path, ctx: &RunContext) -> Result<Vec<RunSummary>> {
    let exp = registry_entry(name, out)?;
    exp.configs.iter().map(|cfg| run_experiment(cfg, ctx)).collect()
}

/// Reads a summary written by [`run_experiment`].
pub fn load_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{} is not a run summary: {e}", path.display())))
}
