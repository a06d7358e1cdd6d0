//! Rate bounds, slope fits and executable forms of the convergence lemmas.

use serde::{Deserialize, Serialize};

use crate::algorithms::Trajectory;
use crate::error::{Error, Result};
use crate::geometry::{dot, sub, DualVector, PrimalPoint, Regularizer};
use crate::problems::Problem;

fn check_common(k: f64, t: usize, args: &[(&str, f64)]) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("strong convexity modulus must be positive, got {k}")));
    }
    if t == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    for (name, v) in args {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    Ok(())
}

/// `H = √(Ω + K·D²)`
pub fn h_constant(k: f64, omega: f64, diam: f64) -> f64 {
    (omega + k * diam * diam).sqrt()
}

/// UnderGrad's guarantee under bounded gradients:
/// `2H·√((K + 8(G² + σ²)) / (K·T))`.
pub fn bg_bound(k: f64, omega: f64, diam: f64, g: f64, sigma: f64, t: usize) -> Result<f64> {
    check_common(k, t, &[("range", omega), ("diameter", diam), ("G", g), ("sigma", sigma)])?;
    let h = h_constant(k, omega, diam);
    Ok(2.0 * h * ((k + 8.0 * (g * g + sigma * sigma)) / (k * t as f64)).sqrt())
}

/// UnderGrad's guarantee under Lipschitz gradients:
/// `32√2·H²·L/(K·T²) + 8√2·H·σ/√(K·T)`.
pub fn lg_bound(k: f64, omega: f64, diam: f64, l: f64, sigma: f64, t: usize) -> Result<f64> {
    check_common(k, t, &[("range", omega), ("diameter", diam), ("L", l), ("sigma", sigma)])?;
    let h = h_constant(k, omega, diam);
    let t = t as f64;
    let r2 = std::f64::consts::SQRT_2;
    Ok(32.0 * r2 * h * h * l / (k * t * t) + 8.0 * r2 * h * sigma / (k * t).sqrt())
}

/// Mirror-prox guarantees, up to the absolute constant `c` (1 by default).
/// The initial divergence is replaced by Ω, valid when starting at the
/// prox-center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorProxBounds {
    pub constant: f64,
}

impl Default for MirrorProxBounds {
    fn default() -> Self {
        MirrorProxBounds { constant: 1.0 }
    }
}

impl MirrorProxBounds {
    /// Constant under which `bg` covers the implemented bounded-gradient step
    /// `α = m/√(G²T)` with a perfect oracle. Summing the per-step mirror-prox
    /// inequality with `‖g_{t+1/2} − g_t‖ ≤ 2G` gives `Ω/(αT) + 2αG²/K`.
    pub fn for_bg_step(k: f64, omega: f64, multiplier: f64) -> Self {
        MirrorProxBounds {
            constant: (omega / multiplier + 2.0 * multiplier / k) * (k / omega).sqrt(),
        }
    }

    /// `c·√((G² + σ²)/K · Ω/T)`
    pub fn bg(&self, k: f64, omega: f64, g: f64, sigma: f64, t: usize) -> Result<f64> {
        check_common(k, t, &[("range", omega), ("G", g), ("sigma", sigma)])?;
        Ok(self.constant * ((g * g + sigma * sigma) / k * omega / t as f64).sqrt())
    }

    /// `c·(L·Ω/(K·T) + σ·√(Ω/(K·T)))`
    pub fn lg(&self, k: f64, omega: f64, l: f64, sigma: f64, t: usize) -> Result<f64> {
        check_common(k, t, &[("range", omega), ("L", l), ("sigma", sigma)])?;
        let t = t as f64;
        Ok(self.constant * (l * omega / (k * t) + sigma * (omega / (k * t)).sqrt()))
    }
}

/// Norm-invariant shape factor: `√((G² + σ²)/K)` for non-smooth problems
/// (`L = ∞`), `√(L/K)` for smooth deterministic ones, `σ/√K` otherwise.
pub fn shape_factor(k: f64, g: f64, l: f64, sigma: f64) -> f64 {
    if l.is_infinite() {
        ((g * g + sigma * sigma) / k).sqrt()
    } else if sigma == 0.0 {
        (l / k).sqrt()
    } else {
        sigma / k.sqrt()
    }
}

/// The constants a bound needs, read off a problem and a noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub k: f64,
    pub omega: f64,
    pub diam: f64,
    pub g: f64,
    pub l: f64,
    pub sigma: f64,
}

impl ProblemConstants {
    pub fn of(problem: &Problem, sigma: f64) -> Self {
        let reg = problem.regularizer();
        ProblemConstants {
            k: reg.strong_convexity(),
            omega: reg.range(),
            diam: reg.diameter(),
            g: problem.lipschitz(),
            l: problem.smoothness(),
            sigma,
        }
    }

    pub fn bg_bound(&self, t: usize) -> Result<f64> {
        bg_bound(self.k, self.omega, self.diam, self.g, self.sigma, t)
    }

    pub fn lg_bound(&self, t: usize) -> Result<f64> {
        lg_bound(self.k, self.omega, self.diam, self.l, self.sigma, t)
    }

    /// The tighter of the two UnderGrad bounds that apply.
    pub fn best_bound(&self, t: usize) -> Option<f64> {
        let bg = self.bg_bound(t).ok();
        let lg = self.lg_bound(t).ok();
        match (bg, lg) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Least-squares power-law fit `log gap ≈ slope·log t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
}

/// Minimum number of positive points a fit needs.
pub const MIN_FIT_POINTS: usize = 10;

/// `[T/100, T]`, skipping the warm-up phase.
pub fn default_window(t: usize) -> (f64, f64) {
    ((t as f64 / 100.0).max(1.0), t as f64)
}

/// Fits a power law to the `(t, gap)` pairs with `t` in the closed window and
/// positive gap.
pub fn fit_power_law(points: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty fit window [{lo}, {hi}]")));
    }
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, g)| *t >= lo && *t <= hi && *g > 0.0 && g.is_finite())
        .map(|(t, g)| (t.ln(), g.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} positive points in [{lo}, {hi}], need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all points share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    // a flat series is fitted perfectly by slope 0
    let r_squared = if syy <= f64::EPSILON * n { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    Ok(RateFit {
        slope,
        intercept,
        window,
        r_squared,
        points: pts.len(),
    })
}

pub fn rate_slope(traj: &Trajectory, window: (f64, f64)) -> Result<RateFit> {
    fit_power_law(&traj.gap_series(), window)
}

/// Margins of the chain
/// `√(δ² + Σa) ≤ δ + Σ_t a_t/√(δ² + Σ_{s≤t} a_s) ≤ 2√(δ² + Σa)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtLemmaCheck {
    /// middle − left
    pub lower_margin: f64,
    /// right − middle
    pub upper_margin: f64,
}

impl SqrtLemmaCheck {
    pub fn holds(&self) -> bool {
        self.lower_margin >= -1e-12 && self.upper_margin >= -1e-12
    }
}

pub fn check_sqrt_lemma(delta: f64, seq: &[f64]) -> Result<SqrtLemmaCheck> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be nonnegative, got {delta}")));
    }
    if let Some(a) = seq.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
        return Err(Error::invalid(format!("sequence entries must be nonnegative, got {a}")));
    }
    let d2 = delta * delta;
    let mut partial = 0.0;
    let mut middle = delta;
    for &a in seq {
        partial += a;
        let den = (d2 + partial).sqrt();
        if den > 0.0 {
            middle += a / den;
        }
    }
    let total = (d2 + partial).sqrt();
    let scale = total.max(1.0);
    Ok(SqrtLemmaCheck {
        lower_margin: (middle - total) / scale,
        upper_margin: (2.0 * total - middle) / scale,
    })
}

/// Residual of the three-point identity
/// `F(p, y⁺) = F(p, y) + F(Q(y), y⁺) + ⟨y⁺ − y, Q(y) − p⟩`.
pub fn check_three_point(reg: &Regularizer, p: &PrimalPoint, y: &DualVector, y_plus: &DualVector) -> Result<f64> {
    let q = reg.mirror_map(y)?;
    let lhs = reg.fenchel_coupling(p, y_plus)?;
    let rhs = reg.fenchel_coupling(p, y)?
        + reg.fenchel_coupling(&q, y_plus)?
        + dot(&sub(y_plus.as_slice(), y.as_slice()), &sub(q.as_slice(), p.as_slice()));
    Ok((lhs - rhs).abs())
}

/// Signature of a three-point checker, so alternative implementations can be
/// plugged into the verification driver.
pub type ThreePointCheck = fn(&Regularizer, &PrimalPoint, &DualVector, &DualVector) -> Result<f64>;

/// `F(p, y) − (K/2)‖Q(y) − p‖²`, nonnegative for a K-strongly convex h.
pub fn fenchel_lower_bound_margin(reg: &Regularizer, p: &PrimalPoint, y: &DualVector) -> Result<f64> {
    let q = reg.mirror_map(y)?;
    let dist = reg.primal_norm(&sub(q.as_slice(), p.as_slice()));
    Ok(reg.fenchel_coupling(p, y)? - 0.5 * reg.strong_convexity() * dist * dist)
}

/// `‖P_x(v) − Q(∇h(x) + v)‖` in the primal norm.
pub fn mirror_prox_residual(reg: &Regularizer, x: &PrimalPoint, v: &DualVector) -> Result<f64> {
    let prox = reg.prox_map(x, v)?;
    let grad = reg.reg_grad(x)?;
    let z = DualVector::new(reg.shape(), crate::geometry::axpy(grad.as_slice(), 1.0, v.as_slice()))?;
    let direct = reg.mirror_map(&z)?;
    Ok(reg.primal_norm(&sub(prox.as_slice(), direct.as_slice())))
}

/// Template inequality terms at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateSlack {
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl TemplateSlack {
    /// `lhs − rhs`; the inequality holds when this is ≤ 0.
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

fn require_deterministic_full(traj: &Trajectory) -> Result<()> {
    if !traj.is_perfect_oracle() {
        return Err(Error::invalid("pathwise checks apply to perfect-oracle runs only"));
    }
    if traj.iterates.is_empty() {
        return Err(Error::invalid("trajectory was recorded without iterates"));
    }
    Ok(())
}

/// Checks, at every iteration `T'`,
///
/// `Σ γ_t⟨g_{t+1/2}, x_{t+1/2} − p⟩ ≤ [h(p) − min h]/η_{T'+1}
///     + Σ γ_t⟨g_{t+1/2} − g_t, x_{t+1/2} − x_{t+1}⟩
///     − Σ K/(2η_t)·(‖x_{t+1} − x_{t+1/2}‖² + ‖x_{t+1/2} − x_t‖²)`
///
/// for a dual-averaging trajectory, with `x_{t+1} = Q(η_{t+1} y_{t+1})`
/// rebuilt from the stored state. `h(p) − min h` never exceeds Ω, so this is
/// at least as strict as the Ω form.
pub fn check_template_inequality(traj: &Trajectory, reg: &Regularizer, x_ref: &PrimalPoint) -> Result<Vec<TemplateSlack>> {
    require_deterministic_full(traj)?;
    let its = &traj.iterates;
    let k = reg.strong_convexity();
    let h_ref = reg.value(x_ref)? - reg.min_value();

    let mut lhs = 0.0;
    let mut cross = 0.0;
    let mut penalty = 0.0;
    let mut out = Vec::with_capacity(its.len());
    for (i, it) in its.iter().enumerate() {
        let y_next = crate::geometry::axpy(it.y.as_slice(), -it.gamma, it.g_lead.as_slice());
        let eta_next = its.get(i + 1).map(|n| n.eta).unwrap_or(traj.final_eta);
        let x_next = reg.mirror_map(&DualVector::new(reg.shape(), crate::geometry::scaled(&y_next, eta_next))?)?;

        lhs += it.gamma * dot(it.g_lead.as_slice(), &sub(it.x_lead.as_slice(), x_ref.as_slice()));
        cross += it.gamma
            * dot(
                &sub(it.g_lead.as_slice(), it.g.as_slice()),
                &sub(it.x_lead.as_slice(), x_next.as_slice()),
            );
        let a = reg.primal_norm(&sub(x_next.as_slice(), it.x_lead.as_slice()));
        let b = reg.primal_norm(&sub(it.x_lead.as_slice(), it.x.as_slice()));
        penalty += k / (2.0 * it.eta) * (a * a + b * b);
        out.push(TemplateSlack {
            t: it.t,
            lhs,
            rhs: h_ref / eta_next + cross - penalty,
        });
    }
    Ok(out)
}

/// Checks `f(x̄_{T'+1/2}) − min f ≤ (2/T'²)·Σ γ_t⟨∇f(x̄_{t+1/2}), x_{t+1/2} − x*⟩`
/// at every iteration; returns `lhs − rhs` per iteration.
pub fn check_regret_to_rate(traj: &Trajectory, problem: &Problem) -> Result<Vec<f64>> {
    require_deterministic_full(traj)?;
    let x_star = problem
        .x_star()
        .ok_or_else(|| Error::invalid("problem has no reference minimizer"))?;
    let mut regret = 0.0;
    let mut out = Vec::with_capacity(traj.iterates.len());
    for it in &traj.iterates {
        regret += it.gamma * dot(it.g_lead.as_slice(), &sub(it.x_lead.as_slice(), x_star.as_slice()));
        let t = it.t as f64;
        out.push(problem.gap(&it.xbar_lead)? - 2.0 / (t * t) * regret);
    }
    Ok(out)
}

/// Recomputes every averaged state from scratch and returns the largest
/// deviation from the stored ones.
pub fn averaging_residual(traj: &Trajectory, weights: crate::algorithms::StepWeights) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, it) in traj.iterates.iter().enumerate() {
        let total: f64 = (1..=it.t).map(|s| weights.gamma(s)).sum();
        let n = it.x.as_slice().len();
        for j in 0..n {
            let past: f64 = traj.iterates[..i].iter().map(|p| p.gamma * p.x_lead.as_slice()[j]).sum();
            let xbar = (it.gamma * it.x.as_slice()[j] + past) / total;
            let lead = (it.gamma * it.x_lead.as_slice()[j] + past) / total;
            worst = worst
                .max((xbar - it.xbar.as_slice()[j]).abs())
                .max((lead - it.xbar_lead.as_slice()[j]).abs());
        }
    }
    worst
}
