//! Non-universal reference methods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{scaled, DualVector, PrimalPoint};
use crate::oracle::Oracle;
use crate::problems::Problem;

use super::{
    at_iteration, ensure_finite, meta, undergrad_run, IterateRecord, ProxBase, Recorder, RunOptions, StepWeights,
    Trajectory, UnderGradParams,
};

/// Which tuning rule fixes the mirror-prox step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorProxStep {
    /// `1/√((G² + σ²)T)`
    Bg,
    /// `K/L`
    LgDeterministic,
    /// `1/(σ√T)`
    LgStochastic,
}

impl MirrorProxStep {
    /// The step for the given constants, before the multiplier.
    pub fn step(&self, k: f64, g: f64, l: f64, sigma: f64, iterations: usize) -> Result<f64> {
        let t = iterations as f64;
        let alpha = match self {
            MirrorProxStep::Bg => {
                if !g.is_finite() {
                    return Err(Error::config("bounded-gradient step needs a finite G"));
                }
                1.0 / ((g * g + sigma * sigma) * t).sqrt()
            }
            MirrorProxStep::LgDeterministic => {
                if !(l.is_finite() && l > 0.0) {
                    return Err(Error::config("smooth step needs a finite positive L"));
                }
                k / l
            }
            MirrorProxStep::LgStochastic => {
                if !(sigma > 0.0) {
                    return Err(Error::config("stochastic smooth step needs sigma > 0"));
                }
                1.0 / (sigma * t.sqrt())
            }
        };
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::config(format!("step evaluated to {alpha}")));
        }
        Ok(alpha)
    }
}

/// Mirror-prox with a constant step `multiplier · mode(G, L, σ, T)`.
pub fn mirror_prox_run(
    problem: &Problem,
    oracle: &mut Oracle,
    opts: &RunOptions,
    mode: MirrorProxStep,
    multiplier: f64,
) -> Result<Trajectory> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::config(format!("step multiplier must be positive, got {multiplier}")));
    }
    let reg = problem.regularizer();
    let alpha = multiplier
        * mode.step(
            reg.strong_convexity(),
            problem.lipschitz(),
            problem.smoothness(),
            oracle.sigma(),
            opts.iterations,
        )?;
    let mut rec = Recorder::new(problem, opts)?;
    let mut base = ProxBase::start(reg);
    let mut avg = Average::new(reg.shape().len());
    let mut output = reg.prox_center().clone();

    for t in 1..=opts.iterations {
        let err = at_iteration(t);
        let x = base.point(reg).map_err(&err)?;
        let g = oracle.query(&x).map_err(&err)?;
        ensure_finite(t, "gradient signal", g.as_slice())?;
        let x_lead = base.step(reg, &scaled(g.as_slice(), -alpha)).map_err(&err)?;
        let g_lead = oracle.query(&x_lead).map_err(&err)?;
        ensure_finite(t, "gradient signal", g_lead.as_slice())?;

        let y = base.dual(reg);
        base.advance(reg, &scaled(g_lead.as_slice(), -alpha)).map_err(&err)?;
        if !base.is_finite() {
            return Err(Error::numerical_at("non-finite base state", t));
        }
        let out = avg.push(&x_lead);
        rec.checkpoint(t, &out, alpha, 0.0, oracle.query_count()).map_err(&err)?;
        if rec.wants_iterates() {
            rec.push_iterate(prox_record(t, alpha, y, x, x_lead, g, g_lead));
        }
        output = out;
    }
    let run_meta = meta(
        "mirror_prox",
        problem,
        oracle.sigma(),
        opts.seed,
        &[("alpha", alpha), ("multiplier", multiplier)],
    );
    Ok(rec.finish(run_meta, output, alpha, 0.0))
}

/// Dual extrapolation with a constant step.
pub fn dual_extrapolation_run(
    problem: &Problem,
    oracle: &mut Oracle,
    opts: &RunOptions,
    alpha: f64,
) -> Result<Trajectory> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::config(format!("step must be positive, got {alpha}")));
    }
    let reg = problem.regularizer();
    let mut rec = Recorder::new(problem, opts)?;
    let mut y = vec![0.0; reg.shape().len()];
    let mut x = reg.prox_center().clone();
    let mut avg = Average::new(reg.shape().len());
    let legendre = reg.geometry().is_legendre();

    for t in 1..=opts.iterations {
        let err = at_iteration(t);
        let g = oracle.query(&x).map_err(&err)?;
        ensure_finite(t, "gradient signal", g.as_slice())?;
        // for Legendre geometries ∇h(Q(αy)) = αy up to the kernel of Q, so the
        // prox-step from x can run from the dual aggregate directly
        let x_lead = if legendre {
            let z: Vec<f64> = y.iter().zip(g.as_slice()).map(|(yi, gi)| alpha * (yi - gi)).collect();
            reg.mirror_map(&DualVector::new(reg.shape(), z)?)
        } else {
            reg.prox_map(&x, &DualVector::new(reg.shape(), scaled(g.as_slice(), -alpha))?)
        }
        .map_err(&err)?;
        let g_lead = oracle.query(&x_lead).map_err(&err)?;
        ensure_finite(t, "gradient signal", g_lead.as_slice())?;

        let y_now = DualVector::new(reg.shape(), y.clone())?;
        for (yi, gi) in y.iter_mut().zip(g_lead.as_slice()) {
            *yi -= gi;
        }
        ensure_finite(t, "dual state", &y)?;
        let x_next = reg
            .mirror_map(&DualVector::new(reg.shape(), scaled(&y, alpha))?)
            .map_err(&err)?;
        let out = avg.push(&x_lead);
        rec.checkpoint(t, &out, alpha, 0.0, oracle.query_count()).map_err(&err)?;
        if rec.wants_iterates() {
            rec.push_iterate(prox_record(t, alpha, y_now, x, x_lead, g, g_lead));
        }
        x = x_next;
        output_guard(&out, t)?;
    }
    let output = avg.current(reg.prox_center());
    let run_meta = meta("dual_extrapolation", problem, oracle.sigma(), opts.seed, &[("alpha", alpha)]);
    Ok(rec.finish(run_meta, output, alpha, 0.0))
}

/// Accelerated entropic gradient stand-in: the UnderGrad loop with η frozen.
pub fn fixed_lr_accelerated_run(
    problem: &Problem,
    oracle: &mut Oracle,
    opts: &RunOptions,
    weights: StepWeights,
    eta: f64,
) -> Result<Trajectory> {
    let params = UnderGradParams {
        weights,
        frozen_eta: Some(eta),
        ..Default::default()
    };
    undergrad_run(problem, oracle, opts, &params)
}

fn output_guard(out: &PrimalPoint, t: usize) -> Result<()> {
    ensure_finite(t, "output", out.as_slice())
}

/// Prox methods query at their own states, so `xbar = x`.
fn prox_record(
    t: usize,
    alpha: f64,
    y: DualVector,
    x: PrimalPoint,
    x_lead: PrimalPoint,
    g: DualVector,
    g_lead: DualVector,
) -> IterateRecord {
    IterateRecord {
        t,
        gamma: 1.0,
        eta: alpha,
        s: 0.0,
        y,
        xbar: x.clone(),
        x,
        xbar_lead: x_lead.clone(),
        x_lead,
        g,
        g_lead,
    }
}

/// Running uniform average of the leading states.
struct Average {
    sum: Vec<f64>,
    count: usize,
    shape: Option<crate::geometry::Shape>,
}

impl Average {
    fn new(len: usize) -> Self {
        Average {
            sum: vec![0.0; len],
            count: 0,
            shape: None,
        }
    }

    fn push(&mut self, x: &PrimalPoint) -> PrimalPoint {
        self.count += 1;
        self.shape = Some(x.shape());
        for (s, v) in self.sum.iter_mut().zip(x.as_slice()) {
            *s += v;
        }
        self.current(x)
    }

    fn current(&self, fallback: &PrimalPoint) -> PrimalPoint {
        match self.shape {
            Some(shape) if self.count > 0 => {
                let n = self.count as f64;
                PrimalPoint::new(shape, self.sum.iter().map(|s| s / n).collect()).expect("shapes agree")
            }
            _ => fallback.clone(),
        }
    }
}
