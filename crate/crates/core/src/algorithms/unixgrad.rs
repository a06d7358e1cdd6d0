use crate::error::{Error, Result};
use crate::geometry::{scaled, sub, Regularizer};
use crate::oracle::Oracle;
use crate::problems::Problem;

use super::{
    at_iteration, ensure_finite, meta, mix, IterateRecord, ProxBase, Recorder, RunOptions, StepWeights,
    Trajectory,
};

/// Step scale making UnixGrad's first step equal UnderGrad's first learning
/// rate `H` (both weight rules have γ_1 = 1).
pub fn calibrated_step_scale(reg: &Regularizer) -> f64 {
    reg.h_constant()
}

/// UnixGrad: mirror-prox double step from the base state with queries at the
/// averaged states and step
/// `α_t = scale·γ_t / √(1 + Σ_{s<t} γ_s²‖g_{s+1/2} − g_s‖²_*)`.
pub fn unixgrad_run(
    problem: &Problem,
    oracle: &mut Oracle,
    opts: &RunOptions,
    weights: StepWeights,
    step_scale: f64,
) -> Result<Trajectory> {
    if !(step_scale > 0.0 && step_scale.is_finite()) {
        return Err(Error::config(format!("step scale must be positive, got {step_scale}")));
    }
    let reg = problem.regularizer();
    let mut rec = Recorder::new(problem, opts)?;
    let mut base = ProxBase::start(reg);
    let mut anchor = vec![0.0; reg.shape().len()];
    let mut denom = 1.0;
    let mut output = reg.prox_center().clone();

    for t in 1..=opts.iterations {
        let err = at_iteration(t);
        let gamma = weights.gamma(t);
        let total = weights.cumulative(t);
        let alpha = step_scale * gamma / f64::sqrt(denom);

        let x = base.point(reg).map_err(&err)?;
        let xbar = mix(reg, gamma, &x, &anchor, total);
        let g = oracle.query(&xbar).map_err(&err)?;
        ensure_finite(t, "gradient signal", g.as_slice())?;

        let x_lead = base.step(reg, &scaled(g.as_slice(), -alpha)).map_err(&err)?;
        let xbar_lead = mix(reg, gamma, &x_lead, &anchor, total);
        let g_lead = oracle.query(&xbar_lead).map_err(&err)?;
        ensure_finite(t, "gradient signal", g_lead.as_slice())?;

        let denom_now = denom;
        let diff = reg.dual_norm(&sub(g_lead.as_slice(), g.as_slice()));
        denom += gamma * gamma * diff * diff;
        for (w, xi) in anchor.iter_mut().zip(x_lead.as_slice()) {
            *w += gamma * xi;
        }
        if rec.wants_iterates() {
            rec.push_iterate(IterateRecord {
                t,
                gamma,
                eta: alpha,
                s: denom_now,
                y: base.dual(reg),
                x,
                x_lead,
                xbar,
                xbar_lead: xbar_lead.clone(),
                g,
                g_lead: g_lead.clone(),
            });
        }
        base.advance(reg, &scaled(g_lead.as_slice(), -alpha))
            .map_err(|e| match e {
                Error::Domain(m) => Error::numerical_at(format!("base point left the prox-domain: {m}"), t),
                other => err(other),
            })?;
        if !base.is_finite() || !denom.is_finite() {
            return Err(Error::numerical_at("non-finite base state", t));
        }
        rec.checkpoint(t, &xbar_lead, alpha, denom_now, oracle.query_count())
            .map_err(&err)?;
        output = xbar_lead;
    }

    let last = opts.iterations + 1;
    let final_alpha = step_scale * weights.gamma(last) / denom.sqrt();
    let run_meta = meta("unixgrad", problem, oracle.sigma(), opts.seed, &[("step_scale", step_scale)]);
    Ok(rec.finish(run_meta, output, final_alpha, denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{undergrad_run, UnderGradParams};

    #[test]
    fn calibration_matches_first_learning_rate() {
        let p = Problem::linear_simplex_random(30, 4).unwrap();
        let scale = calibrated_step_scale(p.regularizer());
        let mut o = Oracle::perfect(&p);
        let ux = unixgrad_run(&p, &mut o, &RunOptions::new(5), StepWeights::Linear, scale).unwrap();
        let mut o = Oracle::perfect(&p);
        let ug = undergrad_run(&p, &mut o, &RunOptions::new(5), &UnderGradParams::default()).unwrap();
        assert_eq!(ux.records[0].eta, ug.records[0].eta);
    }

    #[test]
    fn constant_gradient_keeps_denominator_at_one() {
        let p = Problem::linear_simplex_random(12, 5).unwrap();
        let mut o = Oracle::perfect(&p);
        let tr = unixgrad_run(&p, &mut o, &RunOptions::new(50), StepWeights::Linear, 0.7).unwrap();
        for r in &tr.records {
            assert_eq!(r.s, 1.0);
            assert!((r.eta - 0.7 * r.t as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_simplex_stays_feasible() {
        let target = vec![0.1, 0.5, 0.2, 0.2];
        let p = Problem::quadratic_simplex(target).unwrap().on_euclidean_simplex().unwrap();
        let mut o = Oracle::perfect(&p);
        let tr = unixgrad_run(&p, &mut o, &RunOptions::new(300), StepWeights::Linear, 2f64.sqrt()).unwrap();
        assert!(p.regularizer().contains(&tr.output));
        assert!(tr.final_gap() < 1e-4, "{}", tr.final_gap());
    }

    #[test]
    fn rejects_nonpositive_scale() {
        let p = Problem::linear_simplex_random(3, 1).unwrap();
        let mut o = Oracle::perfect(&p);
        assert!(unixgrad_run(&p, &mut o, &RunOptions::new(5), StepWeights::Linear, 0.0).is_err());
    }
}
