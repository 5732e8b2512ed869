//! Monte Carlo maximum likelihood for `(θ, β)`.
//!
//! The log-likelihood of an observed network splits into a network term
//! `θ'h(T(y, β)) - log C(θ)` and the log-Jacobian of the marginal transform.
//! The fit alternates two moves:
//!
//! * with `θ` fixed, gradient ascent in `β` on `θ'h(T(y, β)) + Σ log t_ij(y, β)`;
//! * with `β` fixed, `x̂ = T(y, β)` is treated as data and `θ` is updated by
//!   maximizing the importance-sampling approximation of the log-likelihood
//!   ratio, built from networks simulated at the current `θ`.
//!
//! `θ` is started from the maximum pseudo-likelihood estimate followed by one
//! Newton–Raphson correction from a short pilot sample.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GergmError, Result};
use crate::network::{edge_indices, ObservedNetwork, RestrictedNetwork};
use crate::samplers::{simulate_from, ChainResult, SamplerConfig, SamplerKind};
use crate::special::{tilted_uniform_log_partition, tilted_uniform_mean, tilted_uniform_variance};
use crate::statistics::{dot, gradient_matrix, theta_dot_gradient_matrix, StatisticSet};
use crate::transform::{log_jacobian, log_jacobian_gradient, restricted_param_jacobian, to_restricted, TransformSpec};

const GRADIENT_TOLERANCE: f64 = 1e-8;
const MAX_HALVINGS: usize = 50;
const MAX_ASCENT_ITERS: usize = 20_000;
const ARMIJO_C: f64 = 1e-4;
const NEWTON_MAX_ITERS: usize = 200;
/// Newton iterates of the importance-sampling objective beyond this norm are
/// taken as a sign that the objective is unbounded.
const DIVERGENCE_NORM: f64 = 1e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Outer tolerance on the combined relative change of `(β, θ)`.
    pub tol_outer: f64,
    /// Tolerance on the relative squared change of `θ` between MC-MLE rounds.
    pub tol_theta: f64,
    pub max_outer_iters: usize,
    pub max_theta_iters: usize,
    pub sampler: SamplerKind,
    /// `n_samples` is the number of simulated networks per MC-MLE round.
    pub sampler_cfg: SamplerConfig,
    /// Networks simulated for the Newton–Raphson correction of the MPLE.
    pub pilot_samples: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tol_outer: 1e-4,
            tol_theta: 1e-4,
            max_outer_iters: 10,
            max_theta_iters: 10,
            sampler: SamplerKind::Auto,
            sampler_cfg: SamplerConfig::default(),
            pilot_samples: 500,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_outer > 0.0 && self.tol_theta > 0.0) {
            return Err(GergmError::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_outer_iters == 0 || self.max_theta_iters == 0 || self.pilot_samples == 0 {
            return Err(GergmError::InvalidConfig(
                "iteration caps and pilot sample size must be at least 1".into(),
            ));
        }
        self.sampler_cfg.validate()
    }
}

// ── Optimizers ──

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Gradient ascent with a Barzilai–Borwein trial step and Armijo backtracking.
///
/// Stops when the gradient's ∞-norm drops below `1e-8`. If the line search
/// cannot improve the objective at a point whose gradient is already below
/// `1e-6 · (1 + |f|)`, the iterate is returned as the optimum: at that point
/// the remaining ascent is below floating-point resolution of `f`.
pub(crate) fn gradient_ascent(
    mut objective: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    start: &[f64],
) -> Result<Vec<f64>> {
    let mut x = start.to_vec();
    if x.is_empty() {
        return Ok(x);
    }
    let (mut f, mut g) = objective(&x)?;
    if !f.is_finite() {
        return Err(GergmError::Optimization(format!("non-finite objective at start {x:?}")));
    }
    let mut step = 1.0 / inf_norm(&g).max(1.0);
    for _ in 0..MAX_ASCENT_ITERS {
        if inf_norm(&g) < GRADIENT_TOLERANCE {
            return Ok(x);
        }
        let g2 = sq_norm(&g);
        let mut t = step;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + t * b).collect();
            match objective(&cand) {
                Ok((fc, gc)) if fc.is_finite() && fc >= f + ARMIJO_C * t * g2 && cand != x => {
                    accepted = Some((cand, fc, gc));
                    break;
                }
                _ => t *= 0.5,
            }
        }
        let Some((cand, fc, gc)) = accepted else {
            if inf_norm(&g) < 1e-6 * (1.0 + f.abs()) {
                return Ok(x);
            }
            return Err(GergmError::Optimization(format!(
                "line search failed after {MAX_HALVINGS} halvings at {x:?} (gradient {g:?})"
            )));
        };
        let s: Vec<f64> = cand.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let curvature = -dot(&s, &dg);
        step = if curvature > 0.0 { sq_norm(&s) / curvature } else { 2.0 * t };
        x = cand;
        f = fc;
        g = gc;
    }
    Err(GergmError::Optimization(format!(
        "gradient ascent did not converge in {MAX_ASCENT_ITERS} iterations (gradient {g:?})"
    )))
}

/// Damped Newton ascent for a concave objective given value, gradient and Hessian.
fn newton_ascent(
    mut objective: impl FnMut(&[f64]) -> (f64, DVector<f64>, DMatrix<f64>),
    start: &[f64],
    grad_tol: f64,
) -> Result<Vec<f64>> {
    let p = start.len();
    let mut x = DVector::from_column_slice(start);
    let (mut f, mut g, mut h) = objective(x.as_slice());
    for _ in 0..NEWTON_MAX_ITERS {
        if g.amax() < grad_tol {
            return Ok(x.as_slice().to_vec());
        }
        // Solve (-H) d = g; fall back to steepest ascent when -H is not positive definite.
        let neg_h = -h.clone() + DMatrix::identity(p, p) * 1e-12 * (1.0 + h.amax());
        let (dir, newton) = match neg_h.cholesky() {
            Some(c) => (c.solve(&g), true),
            None => (g.clone(), false),
        };
        let slope = g.dot(&dir);
        // Half the Newton decrement is the predicted gain; below the
        // resolution of `f` no step can be verified.
        if newton && 0.5 * slope <= 1e-13 * (1.0 + f.abs()) {
            return Ok(x.as_slice().to_vec());
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = &x + &dir * t;
            let (fc, gc, hc) = objective(cand.as_slice());
            if fc.is_finite() && fc >= f + ARMIJO_C * t * slope && cand != x {
                x = cand;
                f = fc;
                g = gc;
                h = hc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if x.norm() > DIVERGENCE_NORM {
            return Err(GergmError::OutsideHull);
        }
        if !moved {
            if g.amax() < 1e-6 * (1.0 + f.abs()) {
                return Ok(x.as_slice().to_vec());
            }
            return Err(GergmError::Optimization(format!(
                "Newton line search failed at {:?}",
                x.as_slice()
            )));
        }
    }
    if x.norm() > 1e3 {
        return Err(GergmError::OutsideHull);
    }
    Err(GergmError::Optimization(format!(
        "Newton ascent did not converge in {NEWTON_MAX_ITERS} iterations"
    )))
}

// ── β updates ──

/// Value and gradient of `θ'h(T(y, β)) + Σ log t_ij(y, β)` with respect to
/// `tspec.params()`. `set` supplies `θ`; an empty set gives the log-Jacobian alone.
pub fn beta_objective(y: &ObservedNetwork, tspec: &TransformSpec, set: &StatisticSet) -> Result<(f64, Vec<f64>)> {
    let mut value = log_jacobian(y, tspec);
    let mut grad = log_jacobian_gradient(y, tspec);
    if set.theta().iter().any(|&t| t != 0.0) {
        let x = to_restricted(y, tspec)?;
        value += set.energy(&x);
        let tilt = theta_dot_gradient_matrix(&x, set)?;
        let jac = restricted_param_jacobian(y, tspec);
        let n = y.n();
        for (gk, dk) in grad.iter_mut().zip(&jac) {
            *gk += edge_indices(n).map(|(i, j)| tilt[i * n + j] * dk[i * n + j]).sum::<f64>();
        }
    }
    Ok((value, grad))
}

fn maximize_beta(y: &ObservedNetwork, tspec: &TransformSpec, set: &StatisticSet) -> Result<Vec<f64>> {
    gradient_ascent(
        |p| {
            let spec = tspec.with_params(p)?;
            beta_objective(y, &spec, set)
        },
        &tspec.params(),
    )
}

/// Maximizer of the log-Jacobian alone, starting from `tspec.params()`.
pub fn beta_init(y: &ObservedNetwork, tspec: &TransformSpec) -> Result<Vec<f64>> {
    maximize_beta(y, tspec, &StatisticSet::empty())
}

/// Maximizer in `β` of the joint objective with `θ` held at `set.theta()`.
pub fn beta_step(y: &ObservedNetwork, tspec: &TransformSpec, set: &StatisticSet) -> Result<Vec<f64>> {
    if set.theta().iter().any(|v| !v.is_finite()) {
        return Err(GergmError::Optimization("theta must be finite".into()));
    }
    maximize_beta(y, tspec, set)
}

// ── θ updates ──

/// Per-edge gradients of each statistic's linear relaxation at `x`, as an
/// `m × p` matrix in canonical edge order.
fn relaxed_gradients(x: &RestrictedNetwork, set: &StatisticSet) -> Result<DMatrix<f64>> {
    let n = x.n();
    let m = x.num_edges();
    let mut g = DMatrix::zeros(m, set.len());
    for (k, spec) in set.specs().iter().enumerate() {
        let gm = gradient_matrix(x, &spec.relaxed())?;
        for (e, (i, j)) in edge_indices(n).enumerate() {
            g[(e, k)] = gm[i * n + j];
        }
    }
    Ok(g)
}

fn pseudo_loglik_parts(x: &[f64], g: &DMatrix<f64>, theta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let p = theta.len();
    let th = DVector::from_column_slice(theta);
    let s = g * &th;
    let mut value = 0.0;
    let mut resid = DVector::zeros(x.len());
    let mut weights = DVector::zeros(x.len());
    for (e, &xe) in x.iter().enumerate() {
        value += s[e] * xe - tilted_uniform_log_partition(s[e]);
        resid[e] = xe - tilted_uniform_mean(s[e]);
        weights[e] = tilted_uniform_variance(s[e]);
    }
    let grad = g.transpose() * resid;
    let mut hess = DMatrix::zeros(p, p);
    for e in 0..x.len() {
        let row = g.row(e);
        hess -= row.transpose() * row * weights[e];
    }
    (value, grad, hess)
}

/// Log pseudo-likelihood `Σ log f(x_ij | x_-ij; θ)` under the linear
/// relaxation of `set`, and its gradient in `θ`.
pub fn pseudo_loglik(x: &RestrictedNetwork, set: &StatisticSet) -> Result<(f64, Vec<f64>)> {
    let g = relaxed_gradients(x, set)?;
    let (v, grad, _) = pseudo_loglik_parts(&x.edge_vector(), &g, set.theta());
    Ok((v, grad.as_slice().to_vec()))
}

/// Maximum pseudo-likelihood estimate on the linear relaxation of `set`.
pub fn mple(x: &RestrictedNetwork, set: &StatisticSet) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Ok(Vec::new());
    }
    let g = relaxed_gradients(x, set)?;
    let xs = x.edge_vector();
    newton_ascent(|t| pseudo_loglik_parts(&xs, &g, t), &vec![0.0; set.len()], 1e-9)
        .map_err(|e| match e {
            GergmError::OutsideHull => {
                GergmError::Optimization("pseudo-likelihood has no finite maximizer".into())
            }
            other => other,
        })
}

/// Sample mean and covariance of statistic vectors.
fn moments(trace: &[Vec<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let p = trace.first().map_or(0, Vec::len);
    let m = trace.len() as f64;
    let mut mean = DVector::zeros(p);
    for h in trace {
        mean += DVector::from_column_slice(h);
    }
    mean /= m;
    let mut cov = DMatrix::zeros(p, p);
    for h in trace {
        let d = DVector::from_column_slice(h) - &mean;
        cov += &d * d.transpose();
    }
    if trace.len() > 1 {
        cov /= m - 1.0;
    }
    (mean, cov)
}

/// Largest Mahalanobis length `√(Δ'Σ Δ)` of the Newton–Raphson step in
/// [`theta_init`].
pub const INIT_STEP_CAP: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaInit {
    pub theta: Vec<f64>,
    pub mple: Vec<f64>,
    /// Point the Newton–Raphson step started from: the MPLE or zero.
    pub base: Vec<f64>,
    /// The pilot covariance was singular and `theta` is `base`.
    pub pilot_singular: bool,
    /// Mahalanobis distance of `h(x_obs)` from the pilot mean at `base`.
    pub pilot_distance: Option<f64>,
}

struct Pilot {
    base: Vec<f64>,
    step: Option<DVector<f64>>,
    distance: f64,
}

fn pilot_at<R: Rng + ?Sized>(
    x_obs: &RestrictedNetwork,
    set: &StatisticSet,
    base: Vec<f64>,
    cfg: &FitConfig,
    rng: &mut R,
) -> Result<Pilot> {
    let pilot_cfg = SamplerConfig { n_samples: cfg.pilot_samples, ..cfg.sampler_cfg.clone() };
    let chain = simulate_from(x_obs, &set.with_theta(base.clone())?, cfg.sampler, &pilot_cfg, rng)?;
    let (mean, cov) = moments(&chain.stat_trace);
    let diff = DVector::from_vec(set.values(x_obs)) - mean;
    Ok(match cov.cholesky() {
        Some(c) => {
            let step = c.solve(&diff);
            let distance = diff.dot(&step).max(0.0).sqrt();
            Pilot { base, step: Some(step), distance }
        }
        None => Pilot { base, step: None, distance: f64::INFINITY },
    })
}

/// MPLE followed by one Newton–Raphson step
/// `θ₁ = θ₀ + Cov(h)⁻¹ (h(x_obs) - mean(h))` from a pilot sample at `θ₀`.
///
/// `θ₀` is the MPLE, or zero when a pilot at zero lands closer to `h(x_obs)`
/// in Mahalanobis distance. The step is shortened to Mahalanobis length
/// [`INIT_STEP_CAP`] when `h(x_obs)` lies further than that from the pilot
/// mean, where the linearization no longer holds.
pub fn theta_init<R: Rng + ?Sized>(
    x_obs: &RestrictedNetwork,
    set: &StatisticSet,
    cfg: &FitConfig,
    rng: &mut R,
) -> Result<ThetaInit> {
    if set.is_empty() {
        return Ok(ThetaInit {
            theta: Vec::new(),
            mple: Vec::new(),
            base: Vec::new(),
            pilot_singular: false,
            pilot_distance: None,
        });
    }
    let theta_mple = mple(x_obs, set)?;
    let mut pilot = pilot_at(x_obs, set, theta_mple.clone(), cfg, rng)?;
    if pilot.distance > INIT_STEP_CAP && theta_mple.iter().any(|&v| v != 0.0) {
        let at_zero = pilot_at(x_obs, set, vec![0.0; set.len()], cfg, rng)?;
        if at_zero.distance < pilot.distance {
            pilot = at_zero;
        }
    }
    let singular = ThetaInit {
        theta: pilot.base.clone(),
        mple: theta_mple.clone(),
        base: pilot.base.clone(),
        pilot_singular: true,
        pilot_distance: None,
    };
    let Some(step) = pilot.step else {
        return Ok(singular);
    };
    let shrink = if pilot.distance > INIT_STEP_CAP { INIT_STEP_CAP / pilot.distance } else { 1.0 };
    let theta: Vec<f64> = pilot.base.iter().zip(step.iter()).map(|(a, b)| a + shrink * b).collect();
    if !theta.iter().all(|v| v.is_finite()) {
        return Ok(singular);
    }
    Ok(ThetaInit {
        theta,
        mple: theta_mple,
        base: pilot.base,
        pilot_singular: false,
        pilot_distance: Some(pilot.distance),
    })
}

/// `-log((1/M) Σ_j exp(d'u_j))` and its gradient, where `u_j` are the
/// simulated statistics centred at the observed ones. This is the
/// importance-sampling estimate of the log-likelihood ratio at `θ_ref + d`.
pub fn mcmle_objective(delta: &[f64], centered: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let (v, g, _) = mcmle_parts(delta, centered);
    (v, g.as_slice().to_vec())
}

fn mcmle_parts(delta: &[f64], centered: &[Vec<f64>]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let p = delta.len();
    let a: Vec<f64> = centered.iter().map(|u| dot(delta, u)).collect();
    let amax = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = a.iter().map(|v| (v - amax).exp()).collect();
    let z: f64 = w.iter().sum();
    let value = -(amax + (z / centered.len() as f64).ln());
    let mut mean = DVector::zeros(p);
    for (u, wj) in centered.iter().zip(&w) {
        mean += DVector::from_column_slice(u) * (wj / z);
    }
    let mut second = DMatrix::zeros(p, p);
    for (u, wj) in centered.iter().zip(&w) {
        let d = DVector::from_column_slice(u) - &mean;
        second += &d * d.transpose() * (wj / z);
    }
    (value, -mean, -second)
}

/// Errors when some observed statistic lies outside the per-coordinate range
/// of the simulated ones.
fn hull_check(centered: &[Vec<f64>]) -> Result<()> {
    let p = centered.first().map_or(0, Vec::len);
    for k in 0..p {
        let lo = centered.iter().map(|u| u[k]).fold(f64::INFINITY, f64::min);
        let hi = centered.iter().map(|u| u[k]).fold(f64::NEG_INFINITY, f64::max);
        if lo > 0.0 || hi < 0.0 {
            return Err(GergmError::OutsideHull);
        }
    }
    Ok(())
}

/// One maximization of the importance-sampling objective built from
/// `trace` (statistics simulated at `theta_ref`) against `h_obs`.
pub fn mcmle_update(theta_ref: &[f64], h_obs: &[f64], trace: &[Vec<f64>]) -> Result<Vec<f64>> {
    let centered: Vec<Vec<f64>> = trace
        .iter()
        .map(|h| h.iter().zip(h_obs).map(|(a, b)| a - b).collect())
        .collect();
    hull_check(&centered)?;
    let scale = centered.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let delta = newton_ascent(|d| mcmle_parts(d, &centered), &vec![0.0; theta_ref.len()], 1e-10 * scale)?;
    Ok(theta_ref.iter().zip(&delta).map(|(a, b)| a + b).collect())
}

/// Smallest fraction of the way toward `h_obs` tried by [`mcmle_partial_update`].
const MIN_STEP_FRACTION: f64 = 1.0 / 1024.0;

/// [`mcmle_update`] aimed at `h̄ + γ (h_obs − h̄)`, where `h̄` is the simulated
/// mean, for the largest `γ ∈ {1, 1/2, 1/4, …}` whose update succeeds.
/// Returns the update with its `γ`; errors only if every fraction fails.
pub fn mcmle_partial_update(theta_ref: &[f64], h_obs: &[f64], trace: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let m = trace.len() as f64;
    let mean: Vec<f64> = (0..h_obs.len()).map(|k| trace.iter().map(|h| h[k]).sum::<f64>() / m).collect();
    let mut gamma = 1.0;
    loop {
        let target: Vec<f64> = mean.iter().zip(h_obs).map(|(a, b)| a + gamma * (b - a)).collect();
        match mcmle_update(theta_ref, &target, trace) {
            Ok(theta) => return Ok((theta, gamma)),
            Err(GergmError::OutsideHull) if gamma > MIN_STEP_FRACTION => gamma *= 0.5,
            Err(e) => return Err(e),
        }
    }
}

fn relative_sq_change(new: &[f64], old: &[f64]) -> f64 {
    let diff: f64 = new.iter().zip(old).map(|(a, b)| (a - b) * (a - b)).sum();
    let base = sq_norm(old);
    if base > 0.0 {
        diff / base
    } else {
        diff
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaFit {
    pub theta: Vec<f64>,
    /// Relative squared change after each round.
    pub deltas: Vec<f64>,
    pub converged: bool,
    /// Fraction `γ` of the step toward `h(x̂)` taken in each round.
    pub step_fractions: Vec<f64>,
    /// Chain simulated at the last reference `θ`.
    pub chain: Option<ChainResult>,
}

/// Repeated MC-MLE rounds: simulate at `θ^(r)` starting from `x_hat`, maximize
/// the importance-sampling objective, stop when the relative squared change
/// falls below `cfg.tol_theta` after a full step, or after
/// `cfg.max_theta_iters` rounds.
///
/// When `h(x̂)` lies outside the simulated statistics, a round moves only part
/// of the way toward it (see [`mcmle_partial_update`]).
pub fn theta_mcmle<R: Rng + ?Sized>(
    x_hat: &RestrictedNetwork,
    set: &StatisticSet,
    cfg: &FitConfig,
    rng: &mut R,
) -> Result<ThetaFit> {
    if set.theta().iter().any(|v| !v.is_finite()) {
        return Err(GergmError::Optimization("theta must be finite".into()));
    }
    if set.is_empty() {
        return Ok(ThetaFit {
            theta: Vec::new(),
            deltas: Vec::new(),
            converged: true,
            step_fractions: Vec::new(),
            chain: None,
        });
    }
    let h_obs = set.values(x_hat);
    let mut theta = set.theta().to_vec();
    let mut deltas = Vec::new();
    let mut step_fractions = Vec::new();
    let mut chain = None;
    let mut converged = false;
    for _ in 0..cfg.max_theta_iters {
        let current = set.with_theta(theta.clone())?;
        let sim = simulate_from(x_hat, &current, cfg.sampler, &cfg.sampler_cfg, rng)?;
        let (next, gamma) = mcmle_partial_update(&theta, &h_obs, &sim.stat_trace)?;
        let d = relative_sq_change(&next, &theta);
        deltas.push(d);
        step_fractions.push(gamma);
        theta = next;
        chain = Some(sim);
        if gamma == 1.0 && d < cfg.tol_theta {
            converged = true;
            break;
        }
    }
    Ok(ThetaFit { theta, deltas, converged, step_fractions, chain })
}

// ── Full fit ──

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    /// Combined relative change of `(β, θ)`; absent on the first iteration.
    pub delta_outer: Option<f64>,
    /// Relative squared `θ` change per MC-MLE round.
    pub delta_theta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub theta_hat: Vec<f64>,
    pub theta_names: Vec<String>,
    /// `β`, followed by `ln c` when the scale is estimated.
    pub beta_hat: Vec<f64>,
    pub beta_names: Vec<String>,
    pub theta_se: Vec<Option<f64>>,
    pub beta_se: Vec<Option<f64>>,
    pub outer_iters: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
    /// Chain simulated at `θ̂`, used for the standard errors.
    pub final_chain: Option<ChainResult>,
    pub sampler: SamplerKind,
    pub warnings: Vec<String>,
}

impl FitResult {
    /// Fitted transform.
    pub fn transform(&self, tspec: &TransformSpec) -> Result<TransformSpec> {
        tspec.with_params(&self.beta_hat)
    }
}

fn outer_change(beta: &[f64], beta_prev: &[f64], theta: &[f64], theta_prev: &[f64]) -> f64 {
    let db: f64 = beta.iter().zip(beta_prev).map(|(a, b)| (a - b) * (a - b)).sum();
    let dt: f64 = theta.iter().zip(theta_prev).map(|(a, b)| (a - b) * (a - b)).sum();
    let (nb, nt) = (sq_norm(beta_prev), sq_norm(theta_prev));
    if nb * nt > 0.0 {
        0.5 * (db / nb + dt / nt)
    } else {
        0.5 * (db + dt)
    }
}

/// Alternating `β`/`θ` maximization followed by standard errors at the
/// final estimate. Hitting an iteration cap sets `converged = false`.
pub fn fit<R: Rng + ?Sized>(
    y: &ObservedNetwork,
    tspec: &TransformSpec,
    set: &StatisticSet,
    cfg: &FitConfig,
    rng: &mut R,
) -> Result<FitResult> {
    cfg.validate()?;
    if y.n() != tspec.n() {
        return Err(GergmError::InvalidConfig(format!(
            "network has {} nodes but the transform expects {}",
            y.n(),
            tspec.n()
        )));
    }
    let sampler = cfg.sampler.resolve(set)?;
    let mut warnings = Vec::new();
    let mut history = Vec::new();

    let mut beta = beta_init(y, tspec)?;
    let mut spec = tspec.with_params(&beta)?;
    let x_hat = to_restricted(y, &spec)?;
    let init = theta_init(&x_hat, set, cfg, rng)?;
    if init.pilot_singular {
        warnings.push("pilot covariance singular; theta initialized without the Newton-Raphson step".into());
    }
    if let Some(d) = init.pilot_distance.filter(|&d| d > INIT_STEP_CAP) {
        warnings.push(format!("observed statistics {d:.1} pilot SDs from the pilot mean; initial step shortened"));
    }
    let mut theta = init.theta;
    history.push(IterationRecord {
        iteration: 1,
        beta: beta.clone(),
        theta: theta.clone(),
        delta_outer: None,
        delta_theta: Vec::new(),
    });

    let mut converged = false;
    let mut outer_iters = 1;
    for t in 2..=cfg.max_outer_iters {
        outer_iters = t;
        let at_theta = set.with_theta(theta.clone())?;
        let new_beta = beta_step(y, &spec, &at_theta)?;
        spec = tspec.with_params(&new_beta)?;
        let x_hat = to_restricted(y, &spec)?;
        let tf = theta_mcmle(&x_hat, &at_theta, cfg, rng)?;
        if !tf.converged {
            warnings.push(format!("iteration {t}: theta update hit the round cap"));
        }
        if tf.step_fractions.iter().any(|&g| g < 1.0) {
            warnings.push(format!("iteration {t}: observed statistics outside the simulated hull, took partial steps"));
        }
        let d1 = outer_change(&new_beta, &beta, &tf.theta, &theta);
        history.push(IterationRecord {
            iteration: t,
            beta: new_beta.clone(),
            theta: tf.theta.clone(),
            delta_outer: Some(d1),
            delta_theta: tf.deltas.clone(),
        });
        beta = new_beta;
        theta = tf.theta;
        if d1 < cfg.tol_outer {
            converged = true;
            break;
        }
    }
    let fitted = set.with_theta(theta.clone())?;
    let x_hat = to_restricted(y, &spec)?;
    let final_chain = if set.is_empty() {
        None
    } else {
        Some(simulate_from(&x_hat, &fitted, sampler, &cfg.sampler_cfg, rng)?)
    };
    let (theta_se, beta_se) = standard_errors(final_chain.as_ref(), y, &spec, &fitted)?;
    if theta_se.iter().chain(&beta_se).any(Option::is_none) {
        warnings.push("some standard errors are undefined (singular information)".into());
    }
    Ok(FitResult {
        theta_names: set.labels(),
        theta_hat: theta,
        beta_names: spec.param_names(),
        beta_hat: beta,
        theta_se,
        beta_se,
        outer_iters,
        converged,
        history,
        final_chain,
        sampler,
        warnings,
    })
}

/// Inverse-Fisher standard errors from the covariance of simulated statistics.
/// Fewer than two samples or a singular covariance give `None`.
pub fn theta_standard_errors(trace: &[Vec<f64>]) -> Vec<Option<f64>> {
    let p = trace.first().map_or(0, Vec::len);
    if trace.len() < 2 {
        return vec![None; p];
    }
    let (_, cov) = moments(trace);
    match cov.cholesky() {
        Some(c) => {
            let inv = c.inverse();
            (0..p)
                .map(|k| {
                    let v = inv[(k, k)];
                    (v.is_finite() && v > 0.0).then(|| v.sqrt())
                })
                .collect()
        }
        None => vec![None; p],
    }
}

/// Standard errors of the transform parameters from the negative inverse of a
/// central-difference Hessian of the `β` objective at `tspec.params()`.
pub fn beta_standard_errors(y: &ObservedNetwork, tspec: &TransformSpec, set: &StatisticSet) -> Result<Vec<Option<f64>>> {
    let params = tspec.params();
    let k = params.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut hess = DMatrix::zeros(k, k);
    for l in 0..k {
        let h = 1e-5 * (1.0 + params[l].abs());
        let mut up = params.clone();
        let mut dn = params.clone();
        up[l] += h;
        dn[l] -= h;
        let (_, gu) = beta_objective(y, &tspec.with_params(&up)?, set)?;
        let (_, gd) = beta_objective(y, &tspec.with_params(&dn)?, set)?;
        for r in 0..k {
            hess[(r, l)] = (gu[r] - gd[r]) / (2.0 * h);
        }
    }
    let info = -(&hess + hess.transpose()) * 0.5;
    Ok(match info.cholesky() {
        Some(c) => {
            let inv = c.inverse();
            (0..k).map(|r| (inv[(r, r)] > 0.0).then(|| inv[(r, r)].sqrt())).collect()
        }
        None => vec![None; k],
    })
}

/// `(θ SEs, β SEs)`. `chain` must be simulated at `set.theta()`.
pub fn standard_errors(
    chain: Option<&ChainResult>,
    y: &ObservedNetwork,
    tspec: &TransformSpec,
    set: &StatisticSet,
) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>)> {
    let theta_se = match chain {
        Some(c) => theta_standard_errors(&c.stat_trace),
        None => vec![None; set.len()],
    };
    Ok((theta_se, beta_standard_errors(y, tspec, set)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::CovariateSet;
    use crate::rng::seeded;
    use crate::statistics::{StatKind, StatSpec};
    use crate::transform::Family;
    use crate::network::CovariateTerm;

    fn obs(n: usize, f: impl FnMut(usize, usize) -> f64) -> ObservedNetwork {
        ObservedNetwork::from_fn(n, f).unwrap()
    }

    #[test]
    fn gaussian_intercept_is_mean() {
        let mut rng = seeded(1);
        let y = obs(5, |_, _| rng.gen_range(-2.0..3.0));
        let tspec = TransformSpec::intercept(Family::Gaussian, 5, 0.0, 1.0).unwrap();
        let b = beta_init(&y, &tspec).unwrap();
        let mean = y.edges().map(|(_, _, w)| w).sum::<f64>() / 20.0;
        assert!((b[0] - mean).abs() < 1e-8, "{} vs {mean}", b[0]);
    }

    #[test]
    fn cauchy_symmetric_intercept_is_zero() {
        let vals = [-1.0, 0.0, 1.0, 1.0, 0.0, -1.0];
        let mut k = 0;
        let y = obs(3, |_, _| {
            k += 1;
            vals[k - 1]
        });
        let tspec = TransformSpec::intercept(Family::Cauchy, 3, 0.3, 1.0).unwrap();
        let b = beta_init(&y, &tspec).unwrap();
        assert!(b[0].abs() < 1e-8);
    }

    #[test]
    fn gaussian_design_matches_least_squares() {
        let n = 6;
        let mut rng = seeded(2);
        let mut cov = CovariateSet::new(n);
        cov.add_node("a", (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        cov.add_dyadic("d", (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let terms: Vec<CovariateTerm> =
            ["intercept", "sender(a)", "receiver(a)", "dyad(d)"].iter().map(|s| s.parse().unwrap()).collect();
        let tspec = TransformSpec::from_terms(Family::Gaussian, &cov, &terms, 1.0).unwrap();
        let y = obs(n, |_, _| rng.gen_range(-3.0..3.0));
        let b = beta_init(&y, &tspec).unwrap();
        let m = n * (n - 1);
        let mut xm = DMatrix::zeros(m, terms.len());
        let mut yv = DVector::zeros(m);
        for (e, (i, j)) in edge_indices(n).enumerate() {
            for (k, d) in tspec.design().iter().enumerate() {
                xm[(e, k)] = d.matrix[i * n + j];
            }
            yv[e] = y.get(i, j);
        }
        let xtx = xm.transpose() * &xm;
        let ls = xtx.cholesky().unwrap().solve(&(xm.transpose() * yv));
        for k in 0..terms.len() {
            assert!((b[k] - ls[k]).abs() < 1e-6, "term {k}: {} vs {}", b[k], ls[k]);
        }
    }

    #[test]
    fn location_shift_equivariance() {
        let mut rng = seeded(3);
        let y = obs(4, |_, _| rng.gen_range(0.0..2.0));
        let shifted = obs(4, |i, j| y.get(i, j) + 1.75);
        let tspec = TransformSpec::intercept(Family::Gaussian, 4, 0.0, 1.0).unwrap();
        let a = beta_init(&y, &tspec).unwrap()[0];
        let b = beta_init(&shifted, &tspec).unwrap()[0];
        assert!((b - a - 1.75).abs() < 1e-8);
    }

    fn mixed_set(theta: Vec<f64>) -> StatisticSet {
        StatisticSet::new(
            vec![
                StatSpec::linear(StatKind::EdgeDensity),
                StatSpec::outside(StatKind::Reciprocity, 0.5).unwrap(),
                StatSpec::inside(StatKind::TransitiveTriads, 0.75).unwrap(),
            ],
            theta,
        )
        .unwrap()
    }

    #[test]
    fn beta_step_with_zero_theta_equals_init() {
        let mut rng = seeded(4);
        let y = obs(4, |_, _| rng.gen_range(-1.0..1.0));
        let tspec = TransformSpec::intercept(Family::Cauchy, 4, 0.0, 1.0).unwrap();
        let a = beta_init(&y, &tspec).unwrap();
        let b = beta_step(&y, &tspec, &mixed_set(vec![0.0; 3])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn beta_step_is_local_optimum() {
        let mut rng = seeded(5);
        let y = obs(4, |_, _| rng.gen_range(-1.0..1.0));
        let tspec = TransformSpec::intercept(Family::Gaussian, 4, 0.0, 1.0).unwrap().with_scale_estimated(true);
        let set = mixed_set(vec![0.5, -1.0, 2.0]);
        let b = beta_step(&y, &tspec, &set).unwrap();
        let at = |p: &[f64]| beta_objective(&y, &tspec.with_params(p).unwrap(), &set).unwrap().0;
        let f0 = at(&b);
        for k in 0..b.len() {
            for &eps in &[1e-4, -1e-4] {
                let mut p = b.clone();
                p[k] += eps;
                assert!(at(&p) <= f0 + 1e-10, "direction {k} {eps}");
            }
        }
    }

    #[test]
    fn single_statistic_mple_matches_grid() {
        let mut rng = seeded(6);
        let x = RestrictedNetwork::from_fn(4, |_, _| rng.gen_range(0.5..0.95)).unwrap();
        let set = StatisticSet::zeros(vec![StatSpec::linear(StatKind::EdgeDensity)]);
        let est = mple(&x, &set).unwrap()[0];
        let pl = |s: f64| -> f64 {
            x.edges()
                .map(|(_, _, w)| {
                    if s.abs() < 1e-12 {
                        0.0
                    } else {
                        (s * (s * w).exp() / s.exp_m1()).ln()
                    }
                })
                .sum()
        };
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
        let mut s = -20.0;
        while s <= 20.0 {
            let v = pl(s);
            if v > best {
                best = v;
                arg = s;
            }
            s += 1e-4;
        }
        assert!((est - arg).abs() < 1e-3, "mple {est} grid {arg}");
    }

    #[test]
    fn mcmle_objective_stationary_at_moment_match() {
        // When h_obs equals the sample mean the gradient vanishes at d = 0.
        let trace = vec![vec![1.0, 2.0], vec![3.0, 0.5], vec![2.0, 3.5]];
        let mean = [2.0, 2.0];
        let next = mcmle_update(&[0.4, -0.2], &mean, &trace).unwrap();
        assert!((next[0] - 0.4).abs() < 1e-8 && (next[1] + 0.2).abs() < 1e-8);
    }

    #[test]
    fn mcmle_outside_hull_errors() {
        let trace = vec![vec![1.0], vec![2.0], vec![1.5]];
        assert!(matches!(mcmle_update(&[0.0], &[5.0], &trace), Err(GergmError::OutsideHull)));
    }

    #[test]
    fn partial_update_steps_toward_outside_target() {
        let trace = vec![vec![1.0], vec![2.0], vec![1.5], vec![1.2], vec![1.8]];
        let (theta, gamma) = mcmle_partial_update(&[0.0], &[5.0], &trace).unwrap();
        assert!(gamma < 1.0 && gamma > 0.0);
        assert!(theta[0] > 0.0);
        let (inside, full) = mcmle_partial_update(&[0.0], &[1.6], &trace).unwrap();
        assert_eq!(full, 1.0);
        assert_eq!(inside, mcmle_update(&[0.0], &[1.6], &trace).unwrap());
    }

    #[test]
    fn partial_update_errors_on_constant_trace() {
        let trace = vec![vec![1.0]; 4];
        assert!(matches!(mcmle_partial_update(&[0.0], &[2.0], &trace), Err(GergmError::OutsideHull)));
    }

    #[test]
    fn theta_se_one_dimensional() {
        let trace: Vec<Vec<f64>> = [1.0, 2.0, 4.0, 7.0].iter().map(|&v| vec![v]).collect();
        let mean = 3.5;
        let var = trace.iter().map(|h| (h[0] - mean) * (h[0] - mean)).sum::<f64>() / 3.0;
        let se = theta_standard_errors(&trace)[0].unwrap();
        assert!((se - var.powf(-0.5)).abs() < 1e-12);
        let flat = vec![vec![2.0]; 10];
        assert_eq!(theta_standard_errors(&flat), vec![None]);
    }

    #[test]
    fn empty_set_fit_is_marginal() {
        let mut rng = seeded(7);
        let y = obs(4, |_, _| rng.gen_range(-1.0..2.0));
        let tspec = TransformSpec::intercept(Family::Gaussian, 4, 0.0, 1.0).unwrap();
        let res = fit(&y, &tspec, &StatisticSet::empty(), &FitConfig::default(), &mut seeded(8)).unwrap();
        assert!(res.theta_hat.is_empty());
        assert_eq!(res.beta_hat, beta_init(&y, &tspec).unwrap());
        assert!(res.converged);
        assert!(res.final_chain.is_none());
    }

    #[test]
    fn empty_set_theta_init_is_empty() {
        let x = RestrictedNetwork::constant(3, 0.5).unwrap();
        let init = theta_init(&x, &StatisticSet::empty(), &FitConfig::default(), &mut seeded(1)).unwrap();
        assert!(init.theta.is_empty());
    }

    #[test]
    fn invalid_fit_config() {
        let bad = FitConfig { tol_outer: 0.0, ..FitConfig::default() };
        assert!(bad.validate().is_err());
        let bad = FitConfig { max_theta_iters: 0, ..FitConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn outer_change_falls_back_when_previous_is_zero() {
        assert_eq!(outer_change(&[1.0], &[0.0], &[2.0], &[1.0]), 0.5 * (1.0 + 1.0));
        assert_eq!(outer_change(&[2.0], &[1.0], &[3.0], &[2.0]), 0.5 * (1.0 + 0.25));
    }
}
