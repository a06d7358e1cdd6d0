use crate::error::{Error, Result};
use crate::geometry::{axpy, scaled, sub, DualVector, PrimalPoint, Regularizer};
use crate::oracle::Oracle;
use crate::problems::Problem;

use super::{at_iteration, ensure_finite, meta, mix, IterateRecord, Recorder, RunOptions, StepWeights, Trajectory};

/// Parameters of the universal dual extrapolation loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnderGradParams {
    pub weights: StepWeights,
    /// Learning-rate numerator θ; defaults to `√(K(Ω + K·D²))`.
    pub theta: Option<f64>,
    /// Initial preconditioner root δ; defaults to `√K`.
    pub delta: Option<f64>,
    /// Freeze η_t at this value and skip the preconditioner update.
    pub frozen_eta: Option<f64>,
}

impl UnderGradParams {
    pub fn new(weights: StepWeights) -> Self {
        UnderGradParams {
            weights,
            ..Default::default()
        }
    }

    /// θ = δ = √K, the choice used on unbounded domains.
    pub fn unbounded(weights: StepWeights, reg: &Regularizer) -> Self {
        let root = reg.strong_convexity().sqrt();
        UnderGradParams {
            weights,
            theta: Some(root),
            delta: Some(root),
            frozen_eta: None,
        }
    }

    /// Resolves `(θ, δ)` against the regularizer's constants.
    pub fn resolve(&self, reg: &Regularizer) -> Result<(f64, f64)> {
        let k = reg.strong_convexity();
        let delta = self.delta.unwrap_or_else(|| k.sqrt());
        let theta = match self.theta {
            Some(theta) => theta,
            None => {
                let h = reg.h_constant();
                if !h.is_finite() {
                    return Err(Error::config(
                        "domain has infinite range or diameter: supply theta and delta explicitly",
                    ));
                }
                (k * h * h).sqrt()
            }
        };
        if !(theta > 0.0 && theta.is_finite()) || !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::config(format!(
                "theta and delta must be positive and finite (theta = {theta}, delta = {delta})"
            )));
        }
        Ok((theta, delta))
    }
}

/// UnderGrad: universal dual extrapolation with averaged queries and the
/// adaptive learning rate `η_t = θ / √S_t`.
///
/// Returns the trajectory of the output point `x̄_{t+1/2}`.
pub fn undergrad_run(
    problem: &Problem,
    oracle: &mut Oracle,
    opts: &RunOptions,
    params: &UnderGradParams,
) -> Result<Trajectory> {
    let label = if params.frozen_eta.is_some() { "aeg" } else { "undergrad" };
    let reg = problem.regularizer();
    let (theta, delta) = match params.frozen_eta {
        Some(eta) => {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::config(format!("fixed learning rate must be positive, got {eta}")));
            }
            params.resolve(reg).unwrap_or((eta, 1.0))
        }
        None => params.resolve(reg)?,
    };
    let mut rec = Recorder::new(problem, opts)?;
    let shape = reg.shape();
    let weights = params.weights;

    let mut y = vec![0.0; shape.len()];
    let mut anchor = vec![0.0; shape.len()];
    let mut s = delta * delta;
    let eta_of = |s: f64| params.frozen_eta.unwrap_or(theta / s.sqrt());
    let mut output = reg.prox_center().clone();

    for t in 1..=opts.iterations {
        let err = at_iteration(t);
        let gamma = weights.gamma(t);
        let total = weights.cumulative(t);
        let eta = eta_of(s);
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::numerical_at(format!("learning rate became {eta}"), t));
        }

        let x = mirror(reg, &y, eta).map_err(&err)?;
        let xbar = mix(reg, gamma, &x, &anchor, total);
        let g = oracle.query(&xbar).map_err(&err)?;
        ensure_finite(t, "gradient signal", g.as_slice())?;

        let y_lead = axpy(&y, -gamma, g.as_slice());
        let x_lead = mirror(reg, &y_lead, eta).map_err(&err)?;
        let xbar_lead = mix(reg, gamma, &x_lead, &anchor, total);
        let g_lead = oracle.query(&xbar_lead).map_err(&err)?;
        ensure_finite(t, "gradient signal", g_lead.as_slice())?;

        let s_now = s;
        let y_next = axpy(&y, -gamma, g_lead.as_slice());
        if params.frozen_eta.is_none() {
            let diff = reg.dual_norm(&sub(g_lead.as_slice(), g.as_slice()));
            s += gamma * gamma * diff * diff;
        }
        for (w, xi) in anchor.iter_mut().zip(x_lead.as_slice()) {
            *w += gamma * xi;
        }
        ensure_finite(t, "dual state", &y_next)?;
        if !s.is_finite() {
            return Err(Error::numerical_at("preconditioner overflowed", t));
        }

        if rec.wants_iterates() {
            rec.push_iterate(IterateRecord {
                t,
                gamma,
                eta,
                s: s_now,
                y: DualVector::new(shape, y.clone())?,
                x,
                x_lead,
                xbar,
                xbar_lead: xbar_lead.clone(),
                g,
                g_lead,
            });
        }
        y = y_next;
        rec.checkpoint(t, &xbar_lead, eta, s_now, oracle.query_count())
            .map_err(&err)?;
        output = xbar_lead;
    }

    let mut parameters = vec![("theta", theta), ("delta", delta)];
    if let Some(eta) = params.frozen_eta {
        parameters.push(("eta", eta));
    }
    let run_meta = meta(label, problem, oracle.sigma(), opts.seed, &parameters);
    Ok(rec.finish(run_meta, output, eta_of(s), s))
}

/// `Q(η·y)`
pub(crate) fn mirror(reg: &Regularizer, y: &[f64], eta: f64) -> Result<PrimalPoint> {
    reg.mirror_map(&DualVector::new(reg.shape(), scaled(y, eta))?)
}
