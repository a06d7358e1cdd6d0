//! UnderGrad and its baselines.
//!
//! All methods share the same recording machinery: a [`Trajectory`] holds the
//! gap at each checkpoint and, when requested, every iterate and gradient the
//! updates used, so the analysis module can re-check inequalities after the
//! fact.

mod baselines;
mod undergrad;
mod unixgrad;

pub use baselines::{dual_extrapolation_run, fixed_lr_accelerated_run, mirror_prox_run, MirrorProxStep};
pub use undergrad::{undergrad_run, UnderGradParams};
pub use unixgrad::{calibrated_step_scale, unixgrad_run};

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axpy, DualVector, PrimalPoint, Regularizer};
use crate::problems::Problem;

/// Gradient weights γ_t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepWeights {
    /// γ_t = t
    #[default]
    Linear,
    /// γ_t = 1
    Constant,
}

impl StepWeights {
    pub fn gamma(&self, t: usize) -> f64 {
        match self {
            StepWeights::Linear => t as f64,
            StepWeights::Constant => 1.0,
        }
    }

    /// Σ_{s ≤ t} γ_s, in closed form.
    pub fn cumulative(&self, t: usize) -> f64 {
        match self {
            StepWeights::Linear => (t as f64) * (t as f64 + 1.0) / 2.0,
            StepWeights::Constant => t as f64,
        }
    }
}

/// How much of each iteration to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recording {
    /// Gap and step statistics at checkpoints only.
    #[default]
    Checkpoints,
    /// Additionally every iterate, query point and gradient.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub iterations: usize,
    pub recording: Recording,
    /// Store elapsed wall-clock time per checkpoint (otherwise recorded as 0,
    /// keeping outputs reproducible byte for byte).
    pub wall_clock: bool,
    /// Run seed, carried into the trajectory metadata.
    pub seed: u64,
}

impl RunOptions {
    pub fn new(iterations: usize) -> Self {
        RunOptions {
            iterations,
            recording: Recording::Checkpoints,
            wall_clock: false,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn full(iterations: usize) -> Self {
        RunOptions {
            recording: Recording::Full,
            ..Self::new(iterations)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iteration count must be at least 1"));
        }
        Ok(())
    }
}

/// Iterations at which the gap is evaluated: every iteration up to 10⁴,
/// then geometric spacing with ratio 1.05, always ending at `iterations`.
pub fn checkpoint_schedule(iterations: usize) -> Vec<usize> {
    const DENSE: usize = 10_000;
    let mut out: Vec<usize> = (1..=iterations.min(DENSE)).collect();
    let mut next = DENSE as f64;
    while out.last().is_some_and(|&last| last < iterations) {
        next *= 1.05;
        let t = (next.floor() as usize).min(iterations);
        if t > *out.last().unwrap() {
            out.push(t);
        }
    }
    out
}

/// One checkpoint row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: usize,
    /// f at the output point after iteration t.
    pub f_value: f64,
    pub gap: f64,
    /// Learning rate (UnderGrad) or step size (prox methods) used at iteration t.
    pub eta: f64,
    /// Preconditioner / step-size denominator accumulated before iteration t.
    pub s: f64,
    pub queries: u64,
    pub wall_ns: u64,
}

/// Everything one iteration of a dual-averaging style method touched.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub t: usize,
    pub gamma: f64,
    pub eta: f64,
    pub s: f64,
    /// Aggregate dual state at the start of the iteration (zero for prox methods).
    pub y: DualVector,
    pub x: PrimalPoint,
    pub x_lead: PrimalPoint,
    pub xbar: PrimalPoint,
    pub xbar_lead: PrimalPoint,
    pub g: DualVector,
    pub g_lead: DualVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub sigma: f64,
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub meta: RunMeta,
    pub records: Vec<Record>,
    pub iterates: Vec<IterateRecord>,
    /// Output point after the last iteration.
    pub output: PrimalPoint,
    /// State after the last iteration: η_{T+1} and S_{T+1}.
    pub final_eta: f64,
    pub final_s: f64,
}

impl Trajectory {
    pub fn final_gap(&self) -> f64 {
        self.records.last().map(|r| r.gap).unwrap_or(f64::NAN)
    }

    /// `(t, gap)` pairs.
    pub fn gap_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t as f64, r.gap)).collect()
    }

    pub fn is_perfect_oracle(&self) -> bool {
        self.meta.sigma == 0.0
    }
}

/// Collects checkpoint rows while a run progresses.
pub(crate) struct Recorder<'a> {
    problem: &'a Problem,
    schedule: Vec<usize>,
    cursor: usize,
    full: bool,
    start: Option<Instant>,
    records: Vec<Record>,
    iterates: Vec<IterateRecord>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(problem: &'a Problem, opts: &RunOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Recorder {
            problem,
            schedule: checkpoint_schedule(opts.iterations),
            cursor: 0,
            full: opts.recording == Recording::Full,
            start: opts.wall_clock.then(Instant::now),
            records: Vec::new(),
            iterates: Vec::new(),
        })
    }

    pub(crate) fn wants_iterates(&self) -> bool {
        self.full
    }

    pub(crate) fn push_iterate(&mut self, rec: IterateRecord) {
        if self.full {
            self.iterates.push(rec);
        }
    }

    /// Records a checkpoint row if `t` is scheduled.
    pub(crate) fn checkpoint(
        &mut self,
        t: usize,
        output: &PrimalPoint,
        eta: f64,
        s: f64,
        queries: u64,
    ) -> Result<()> {
        if self.schedule.get(self.cursor) != Some(&t) {
            return Ok(());
        }
        self.cursor += 1;
        let f_value = self.problem.objective(output)?;
        if !f_value.is_finite() {
            return Err(Error::numerical_at("objective is not finite", t));
        }
        self.records.push(Record {
            t,
            f_value,
            gap: f_value - self.problem.f_min(),
            eta,
            s,
            queries,
            wall_ns: self.start.map(|s| s.elapsed().as_nanos() as u64).unwrap_or(0),
        });
        Ok(())
    }

    pub(crate) fn finish(
        self,
        meta: RunMeta,
        output: PrimalPoint,
        final_eta: f64,
        final_s: f64,
    ) -> Trajectory {
        Trajectory {
            meta,
            records: self.records,
            iterates: self.iterates,
            output,
            final_eta,
            final_s,
        }
    }
}

/// `(γ x + w) / Σγ`
pub(crate) fn mix(reg: &Regularizer, gamma: f64, x: &PrimalPoint, anchor: &[f64], total: f64) -> PrimalPoint {
    let data = x
        .as_slice()
        .iter()
        .zip(anchor)
        .map(|(xi, wi)| (gamma * xi + wi) / total)
        .collect();
    PrimalPoint::new(reg.shape(), data).expect("shapes agree")
}

/// Base state of a prox-method.
///
/// For Legendre regularizers `Q(∇h(x)) = x`, so `P_x(v) = Q(∇h(x) + v)` can
/// be carried as a dual representative `z` with `x = Q(z)`. This keeps the base
/// point exact even after its smallest entries underflow, where `∇h(x)` itself
/// would no longer exist. The Euclidean simplex keeps its base in the primal.
#[derive(Debug, Clone)]
pub(crate) enum ProxBase {
    Dual(Vec<f64>),
    Primal(PrimalPoint),
}

impl ProxBase {
    /// Starts at the prox-center.
    pub(crate) fn start(reg: &Regularizer) -> Self {
        if reg.geometry().is_legendre() {
            ProxBase::Dual(vec![0.0; reg.shape().len()])
        } else {
            ProxBase::Primal(reg.prox_center().clone())
        }
    }

    pub(crate) fn point(&self, reg: &Regularizer) -> Result<PrimalPoint> {
        match self {
            ProxBase::Dual(z) => reg.mirror_map(&DualVector::new(reg.shape(), z.clone())?),
            ProxBase::Primal(x) => Ok(x.clone()),
        }
    }

    /// Dual representative, zero for primal bases.
    pub(crate) fn dual(&self, reg: &Regularizer) -> DualVector {
        match self {
            ProxBase::Dual(z) => DualVector::new(reg.shape(), z.clone()).expect("shapes agree"),
            ProxBase::Primal(_) => DualVector::zeros(reg.shape()),
        }
    }

    /// `P_x(v)` from the current base.
    pub(crate) fn step(&self, reg: &Regularizer, v: &[f64]) -> Result<PrimalPoint> {
        match self {
            ProxBase::Dual(z) => reg.mirror_map(&DualVector::new(reg.shape(), axpy(z, 1.0, v))?),
            ProxBase::Primal(x) => reg.prox_map(x, &DualVector::new(reg.shape(), v.to_vec())?),
        }
    }

    /// Replaces the base by `P_x(v)`.
    pub(crate) fn advance(&mut self, reg: &Regularizer, v: &[f64]) -> Result<()> {
        match self {
            ProxBase::Dual(z) => {
                for (zi, vi) in z.iter_mut().zip(v) {
                    *zi += vi;
                }
            }
            ProxBase::Primal(x) => {
                *x = reg.prox_map(x, &DualVector::new(reg.shape(), v.to_vec())?)?;
            }
        }
        Ok(())
    }

    pub(crate) fn is_finite(&self) -> bool {
        match self {
            ProxBase::Dual(z) => z.iter().all(|v| v.is_finite()),
            ProxBase::Primal(x) => x.is_finite(),
        }
    }
}

pub(crate) fn ensure_finite(t: usize, what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical_at(format!("non-finite entries in {what}"), t))
    }
}

/// Attaches the iteration index to errors raised mid-run.
pub(crate) fn at_iteration(t: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NumericalFailure { message, iteration: None } => Error::NumericalFailure {
            message,
            iteration: Some(t),
        },
        Error::Domain(m) => Error::numerical_at(format!("iterate left the domain: {m}"), t),
        other => other,
    }
}

pub(crate) fn meta(
    algorithm: &str,
    problem: &Problem,
    sigma: f64,
    seed: u64,
    parameters: &[(&str, f64)],
) -> RunMeta {
    RunMeta {
        algorithm: algorithm.to_string(),
        problem: problem.name().to_string(),
        seed,
        sigma,
        parameters: parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        let w = StepWeights::Linear;
        let mut acc = 0.0;
        for t in 1..=200 {
            acc += w.gamma(t);
            assert_eq!(acc, w.cumulative(t));
            assert!(w.cumulative(t) > (t * t) as f64 / 2.0);
        }
        assert_eq!(StepWeights::Constant.gamma(9), 1.0);
        assert_eq!(StepWeights::Constant.cumulative(9), 9.0);
    }

    #[test]
    fn schedule_shapes() {
        assert_eq!(checkpoint_schedule(5), vec![1, 2, 3, 4, 5]);
        assert_eq!(checkpoint_schedule(10_000).len(), 10_000);
        let long = checkpoint_schedule(1_000_000);
        assert_eq!(*long.last().unwrap(), 1_000_000);
        assert!(long.windows(2).all(|w| w[0] < w[1]));
        assert!(long.len() < 10_000 + 200);
    }
}
