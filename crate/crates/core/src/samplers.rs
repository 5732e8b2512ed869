//! MCMC samplers for the restricted network density `f(x; θ) ∝ exp(θ'h(x))`.
//!
//! The Metropolis–Hastings kernel proposes a full network at once: every edge
//! moves independently under a normal random walk truncated to `[0, 1]`. The
//! proposal is not symmetric, so the acceptance ratio carries the truncation
//! masses `Z(μ) = Φ((1-μ)/σ) - Φ(-μ/σ)` of the forward and reverse moves. The
//! Gaussian kernels themselves cancel because `|y - x|` is the same either way.
//!
//! When every statistic is linear in each edge (all `α = 1`), the full
//! conditional of one edge is an exponentially tilted uniform and can be drawn
//! exactly, which gives the Gibbs sampler.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GergmError, Result};
use crate::network::{edge_indices, RestrictedNetwork, BOUNDARY_OFFSET};
use crate::rng::{seeded, GergmRng};
use crate::special::{norm_interval_mass, norm_logpdf, norm_quantile};
use crate::statistics::{dot, theta_dot_gradient, StatisticSet};

const SIGMA_MIN: f64 = 1e-4;
const SIGMA_MAX: f64 = 10.0;
const TUNE_MAX_STEPS: usize = 30;
const TUNE_PILOT_LEN: usize = 2000;
const TUNE_TOLERANCE: f64 = 0.05;

/// Open-interval uniform draw.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

fn clip_unit(w: f64) -> f64 {
    w.clamp(BOUNDARY_OFFSET, 1.0 - BOUNDARY_OFFSET)
}

/// Normal distribution `N(μ, σ²)` truncated to `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedNormal {
    mu: f64,
    sigma: f64,
    lower: f64,
    upper: f64,
}

impl TruncatedNormal {
    pub fn new(mu: f64, sigma: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(GergmError::InvalidConfig(format!(
                "truncated normal needs a positive finite sigma, got {sigma}"
            )));
        }
        if !(mu.is_finite() && lower < upper) {
            return Err(GergmError::InvalidConfig(format!(
                "truncated normal needs finite mu and lower < upper, got mu={mu}, [{lower}, {upper}]"
            )));
        }
        Ok(TruncatedNormal { mu, sigma, lower, upper })
    }

    /// Truncated to the unit interval.
    pub fn unit(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(mu, sigma, 0.0, 1.0)
    }

    fn bounds(&self) -> (f64, f64) {
        ((self.lower - self.mu) / self.sigma, (self.upper - self.mu) / self.sigma)
    }

    /// Probability the untruncated normal assigns to `[lower, upper]`.
    pub fn mass(&self) -> f64 {
        let (a, b) = self.bounds();
        norm_interval_mass(a, b)
    }

    pub fn log_pdf(&self, w: f64) -> f64 {
        if !(self.lower..=self.upper).contains(&w) {
            return f64::NEG_INFINITY;
        }
        norm_logpdf((w - self.mu) / self.sigma) - self.sigma.ln() - self.mass().ln()
    }

    pub fn cdf(&self, w: f64) -> f64 {
        if w <= self.lower {
            return 0.0;
        }
        if w >= self.upper {
            return 1.0;
        }
        let (a, _) = self.bounds();
        (norm_interval_mass(a, (w - self.mu) / self.sigma) / self.mass()).clamp(0.0, 1.0)
    }

    /// Inverse-cdf draw. Intervals lying wholly above the mean are reflected
    /// so the quantile is taken in the lower tail, where it is accurate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, b) = self.bounds();
        let u = open_uniform(rng);
        let z = if a > 0.0 {
            -standard_tail_quantile(-b, -a, u)
        } else {
            standard_tail_quantile(a, b, u)
        };
        (self.mu + self.sigma * z).clamp(self.lower, self.upper)
    }
}

/// Quantile `u` of the standard normal truncated to `[a, b]`, for `a <= 0`.
fn standard_tail_quantile(a: f64, b: f64, u: f64) -> f64 {
    let mass = norm_interval_mass(a, b);
    if !(mass > 0.0) {
        // no representable mass: the interval is far in a tail and tiny
        return a + u * (b - a);
    }
    let pa = norm_interval_mass(f64::NEG_INFINITY, a);
    norm_quantile(pa + u * mass).clamp(a, b)
}

/// Draws one value from the normal truncated to `[0, 1]`.
pub fn tn_sample<R: Rng + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> Result<f64> {
    Ok(TruncatedNormal::unit(mu, sigma)?.sample(rng))
}

/// Log density of the normal truncated to `[0, 1]`. `-∞` outside.
pub fn tn_logpdf(w: f64, mu: f64, sigma: f64) -> Result<f64> {
    Ok(TruncatedNormal::unit(mu, sigma)?.log_pdf(w))
}

/// `ln Z(μ)`: log mass of `N(μ, σ²)` on `[0, 1]`.
fn log_unit_mass(mu: f64, sigma: f64) -> f64 {
    norm_interval_mass(-mu / sigma, (1.0 - mu) / sigma).ln()
}

/// Natural log of the MH acceptance ratio for moving `current → proposal`.
///
/// The proposal-ratio part is `Σ ln Z(x_ij) - ln Z(y_ij)` over all edges.
pub fn mh_log_acceptance(
    current: &RestrictedNetwork,
    proposal: &RestrictedNetwork,
    set: &StatisticSet,
    sigma: f64,
) -> f64 {
    let proposal_ratio: f64 = current
        .edges()
        .zip(proposal.edges())
        .map(|((_, _, x), (_, _, y))| log_unit_mass(x, sigma) - log_unit_mass(y, sigma))
        .sum();
    set.energy(proposal) - set.energy(current) + proposal_ratio
}

/// `min(1, exp(log_ratio))`.
pub fn acceptance_probability(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

/// Running state of a Metropolis–Hastings chain.
///
/// Keeps the current statistics and the per-edge `ln Z` so a step costs one
/// evaluation of `h` on the proposal.
pub struct MhChain<'a> {
    set: &'a StatisticSet,
    sigma: f64,
    current: RestrictedNetwork,
    stats: Vec<f64>,
    energy: f64,
    log_mass: Vec<f64>,
    proposal: RestrictedNetwork,
    proposal_log_mass: Vec<f64>,
}

impl<'a> MhChain<'a> {
    pub fn new(x0: RestrictedNetwork, set: &'a StatisticSet, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let n = x0.n();
        let stats = set.values(&x0);
        let energy = dot(set.theta(), &stats);
        let mut log_mass = vec![0.0; n * n];
        for (i, j, w) in x0.edges() {
            log_mass[i * n + j] = log_unit_mass(w, sigma);
        }
        Ok(MhChain {
            set,
            sigma,
            proposal: x0.clone(),
            proposal_log_mass: log_mass.clone(),
            current: x0,
            stats,
            energy,
            log_mass,
        })
    }

    pub fn current(&self) -> &RestrictedNetwork {
        &self.current
    }

    pub fn stats(&self) -> &[f64] {
        &self.stats
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn into_current(self) -> RestrictedNetwork {
        self.current
    }

    /// One full-network proposal. Returns whether it was accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let n = self.current.n();
        let sigma = self.sigma;
        let mut proposal_ratio = 0.0;
        {
            let cur = self.current.weights();
            let prop = self.proposal.weights_mut();
            for (i, j) in edge_indices(n) {
                let k = i * n + j;
                let mu = cur[k];
                let a = -mu / sigma;
                let b = (1.0 - mu) / sigma;
                let u = open_uniform(rng);
                let z = if a > 0.0 {
                    -standard_tail_quantile(-b, -a, u)
                } else {
                    standard_tail_quantile(a, b, u)
                };
                let y = clip_unit(mu + sigma * z);
                prop[k] = y;
                let lz = log_unit_mass(y, sigma);
                self.proposal_log_mass[k] = lz;
                proposal_ratio += self.log_mass[k] - lz;
            }
        }
        let stats = self.set.values(&self.proposal);
        let energy = dot(self.set.theta(), &stats);
        let log_ratio = energy - self.energy + proposal_ratio;
        let u = open_uniform(rng);
        let accept = log_ratio >= 0.0 || u.ln() < log_ratio;
        if accept {
            std::mem::swap(&mut self.current, &mut self.proposal);
            std::mem::swap(&mut self.log_mass, &mut self.proposal_log_mass);
            self.stats = stats;
            self.energy = energy;
        }
        accept
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(GergmError::InvalidConfig(format!(
            "proposal sigma must be positive and finite, got {sigma}"
        )))
    }
}

/// One MH step from `current`. Returns the next state and whether the
/// proposal was accepted.
pub fn mh_step<R: Rng + ?Sized>(
    current: &RestrictedNetwork,
    set: &StatisticSet,
    sigma: f64,
    rng: &mut R,
) -> Result<(RestrictedNetwork, bool)> {
    let mut chain = MhChain::new(current.clone(), set, sigma)?;
    let accepted = chain.step(rng);
    Ok((chain.into_current(), accepted))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Mh,
    Gibbs,
    /// Gibbs when every statistic is linear, MH otherwise.
    Auto,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Mh => "mh",
            SamplerKind::Gibbs => "gibbs",
            SamplerKind::Auto => "auto",
        }
    }

    /// Resolves `Auto` against a model. Asking for Gibbs on a nonlinear model is an error.
    pub fn resolve(self, set: &StatisticSet) -> Result<SamplerKind> {
        match self {
            SamplerKind::Auto if is_gibbs_compatible(set) => Ok(SamplerKind::Gibbs),
            SamplerKind::Auto => Ok(SamplerKind::Mh),
            SamplerKind::Gibbs if !is_gibbs_compatible(set) => Err(GergmError::GibbsIncompatible),
            other => Ok(other),
        }
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = GergmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mh" | "metropolis" => Ok(SamplerKind::Mh),
            "gibbs" => Ok(SamplerKind::Gibbs),
            "auto" => Ok(SamplerKind::Auto),
            other => Err(GergmError::InvalidConfig(format!(
                "unknown sampler '{other}' (expected mh, gibbs or auto)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of networks kept.
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_sigma: f64,
    pub target_accept: f64,
    pub seed: u64,
    /// Tune `proposal_sigma` toward `target_accept` before sampling (MH only).
    pub tune: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_samples: 1000,
            burn_in: 1000,
            thin: 1,
            proposal_sigma: 0.1,
            target_accept: 0.25,
            seed: 1,
            tune: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(GergmError::InvalidConfig("n_samples must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(GergmError::InvalidConfig("thin must be at least 1".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(GergmError::InvalidConfig(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        check_sigma(self.proposal_sigma)
    }
}

/// Output of one chain: kept networks, their statistics, and one acceptance
/// indicator per post-burn-in step.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainResult {
    pub samples: Vec<RestrictedNetwork>,
    pub stat_trace: Vec<Vec<f64>>,
    pub accepted: Vec<bool>,
    pub accept_rate: f64,
    pub seed: u64,
    /// Proposal scale used after tuning. `None` for Gibbs.
    pub sigma: Option<f64>,
    pub sampler: SamplerKind,
    pub tuning: Option<TuningReport>,
}

/// Summary returned by the streaming runners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSummary {
    pub kept: usize,
    pub steps: usize,
    pub accepted: usize,
    pub accept_rate: f64,
    pub sigma: Option<f64>,
    pub sampler: SamplerKind,
    pub tuning: Option<TuningReport>,
}

/// Runs an MH chain and hands every kept state to `visit` as
/// `(network, statistics)`. `on_step` sees each post-burn-in acceptance flag.
pub fn mh_stream<R: Rng + ?Sized>(
    x0: RestrictedNetwork,
    set: &StatisticSet,
    sigma: f64,
    burn_in: usize,
    n_samples: usize,
    thin: usize,
    rng: &mut R,
    mut visit: impl FnMut(&RestrictedNetwork, &[f64]),
    mut on_step: impl FnMut(bool),
) -> Result<(ChainSummary, RestrictedNetwork)> {
    if thin == 0 {
        return Err(GergmError::InvalidConfig("thin must be at least 1".into()));
    }
    let mut chain = MhChain::new(x0, set, sigma)?;
    for _ in 0..burn_in {
        chain.step(rng);
    }
    let mut accepted = 0usize;
    let steps = n_samples * thin;
    for s in 0..steps {
        let a = chain.step(rng);
        accepted += a as usize;
        on_step(a);
        if (s + 1) % thin == 0 {
            visit(chain.current(), chain.stats());
        }
    }
    let summary = ChainSummary {
        kept: n_samples,
        steps,
        accepted,
        accept_rate: if steps > 0 { accepted as f64 / steps as f64 } else { 0.0 },
        sigma: Some(sigma),
        sampler: SamplerKind::Mh,
        tuning: None,
    };
    Ok((summary, chain.into_current()))
}

/// MH chain with a fixed proposal scale, collected into a [`ChainResult`].
pub fn mh_run<R: Rng + ?Sized>(
    x0: &RestrictedNetwork,
    set: &StatisticSet,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ChainResult> {
    config.validate()?;
    let mut samples = Vec::with_capacity(config.n_samples);
    let mut trace = Vec::with_capacity(config.n_samples);
    let mut flags = Vec::with_capacity(config.n_samples * config.thin);
    let (summary, _) = mh_stream(
        x0.clone(),
        set,
        config.proposal_sigma,
        config.burn_in,
        config.n_samples,
        config.thin,
        rng,
        |x, h| {
            samples.push(x.clone());
            trace.push(h.to_vec());
        },
        |a| flags.push(a),
    )?;
    Ok(ChainResult {
        samples,
        stat_trace: trace,
        accepted: flags,
        accept_rate: summary.accept_rate,
        seed: config.seed,
        sigma: Some(config.proposal_sigma),
        sampler: SamplerKind::Mh,
        tuning: None,
    })
}

/// Acceptance rate of a short MH pilot from `x0`.
fn pilot_rate<R: Rng + ?Sized>(
    x0: &RestrictedNetwork,
    set: &StatisticSet,
    sigma: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut chain = MhChain::new(x0.clone(), set, sigma)?;
    let accepted = (0..TUNE_PILOT_LEN).filter(|_| chain.step(rng)).count();
    Ok(accepted as f64 / TUNE_PILOT_LEN as f64)
}

/// Outcome of the proposal-scale search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    /// The first scale whose pilot hit the target band, otherwise the one
    /// whose pilot came closest.
    pub sigma: f64,
    pub pilot_rate: f64,
    pub hit_target: bool,
    pub pilots: usize,
    pub last_sigma: f64,
    pub last_rate: f64,
}

/// Finds `σ` whose 2000-step pilot from `x0` accepts within `target ± 0.05`.
///
/// A half-decade scan upward from `1e-4` brackets the first crossing of the
/// target, then bisection on `ln σ` refines it. At most 30 pilots; otherwise
/// [`GergmError::TuningFailed`] with the last pilot.
///
/// Acceptance is not monotone in `σ` for every model. Under `θ = 0` it tends
/// to one both as `σ → 0` and as `σ → ∞`, and low targets can be out of reach.
pub fn tune_sigma<R: Rng + ?Sized>(
    set: &StatisticSet,
    x0: &RestrictedNetwork,
    target: f64,
    rng: &mut R,
) -> Result<f64> {
    let r = tune_sigma_report(set, x0, target, rng)?;
    if r.hit_target {
        Ok(r.sigma)
    } else {
        Err(GergmError::TuningFailed { rate: r.last_rate, sigma: r.last_sigma })
    }
}

/// The same search as [`tune_sigma`], reporting a missed target instead of
/// failing.
pub fn tune_sigma_report<R: Rng + ?Sized>(
    set: &StatisticSet,
    x0: &RestrictedNetwork,
    target: f64,
    rng: &mut R,
) -> Result<TuningReport> {
    if !(target > 0.0 && target < 1.0) {
        return Err(GergmError::InvalidConfig(format!(
            "target acceptance must lie in (0, 1), got {target}"
        )));
    }
    let mut r = TuningReport {
        sigma: f64::NAN,
        pilot_rate: f64::NAN,
        hit_target: false,
        pilots: 0,
        last_sigma: f64::NAN,
        last_rate: f64::NAN,
    };
    let pilot = |ln_sigma: f64, r: &mut TuningReport, rng: &mut R| -> Result<f64> {
        let sigma = ln_sigma.exp();
        let rate = pilot_rate(x0, set, sigma, rng)?;
        r.pilots += 1;
        r.last_sigma = sigma;
        r.last_rate = rate;
        if r.pilot_rate.is_nan() || (rate - target).abs() < (r.pilot_rate - target).abs() {
            r.sigma = sigma;
            r.pilot_rate = rate;
        }
        r.hit_target = (rate - target).abs() <= TUNE_TOLERANCE;
        Ok(rate)
    };

    let (ln_min, ln_max) = (SIGMA_MIN.ln(), SIGMA_MAX.ln());
    let step = 0.5 * std::f64::consts::LN_10;
    let mut prev = ln_min;
    let mut bracket = None;
    let mut ln_s = ln_min;
    loop {
        let rate = pilot(ln_s, &mut r, rng)?;
        if r.hit_target {
            return Ok(r);
        }
        if rate < target {
            bracket = Some((prev, ln_s));
            break;
        }
        if ln_s >= ln_max || r.pilots >= TUNE_MAX_STEPS {
            break;
        }
        prev = ln_s;
        ln_s = (ln_s + step).min(ln_max);
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(r);
    };
    while r.pilots < TUNE_MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        let rate = pilot(mid, &mut r, rng)?;
        if r.hit_target {
            return Ok(r);
        }
        if rate > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(r)
}

/// True when every statistic is linear in each edge, so the full conditionals
/// are tilted uniforms.
pub fn is_gibbs_compatible(set: &StatisticSet) -> bool {
    set.specs().iter().all(|s| s.is_linear())
}

/// Inverse cdf of the density `∝ exp(s w)` on `[0, 1]`, evaluated at `u`.
///
/// Written so that neither branch overflows for large `|s|`.
pub fn gibbs_inverse_cdf(s: f64, u: f64) -> f64 {
    if s.abs() < 1e-12 {
        return u;
    }
    let w = if s > 0.0 {
        1.0 + ((1.0 - u) * (-s).exp_m1()).ln_1p() / s
    } else {
        (u * s.exp_m1()).ln_1p() / s
    };
    w.clamp(0.0, 1.0)
}

/// Exact draw of edge `(i, j)` from its full conditional, kept inside `[δ, 1-δ]`.
pub fn gibbs_draw_edge<R: Rng + ?Sized>(
    x: &RestrictedNetwork,
    set: &StatisticSet,
    i: usize,
    j: usize,
    rng: &mut R,
) -> Result<f64> {
    let s = theta_dot_gradient(x, set, i, j)?;
    Ok(clip_unit(gibbs_inverse_cdf(s, open_uniform(rng))))
}

/// Gibbs chain: one sweep updates every edge in canonical order.
pub fn gibbs_stream<R: Rng + ?Sized>(
    x0: RestrictedNetwork,
    set: &StatisticSet,
    burn_in: usize,
    n_samples: usize,
    thin: usize,
    rng: &mut R,
    mut visit: impl FnMut(&RestrictedNetwork, &[f64]),
) -> Result<(ChainSummary, RestrictedNetwork)> {
    if !is_gibbs_compatible(set) {
        return Err(GergmError::GibbsIncompatible);
    }
    if thin == 0 {
        return Err(GergmError::InvalidConfig("thin must be at least 1".into()));
    }
    let n = x0.n();
    let mut x = x0;
    let sweep = |x: &mut RestrictedNetwork, rng: &mut R| -> Result<()> {
        for (i, j) in edge_indices(n) {
            let w = gibbs_draw_edge(x, set, i, j, rng)?;
            x.set(i, j, w);
        }
        Ok(())
    };
    for _ in 0..burn_in {
        sweep(&mut x, rng)?;
    }
    let steps = n_samples * thin;
    for s in 0..steps {
        sweep(&mut x, rng)?;
        if (s + 1) % thin == 0 {
            let h = set.values(&x);
            visit(&x, &h);
        }
    }
    let summary = ChainSummary {
        kept: n_samples,
        steps,
        accepted: steps,
        accept_rate: 1.0,
        sigma: None,
        sampler: SamplerKind::Gibbs,
        tuning: None,
    };
    Ok((summary, x))
}

pub fn gibbs_run<R: Rng + ?Sized>(
    x0: &RestrictedNetwork,
    set: &StatisticSet,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ChainResult> {
    config.validate()?;
    let mut samples = Vec::with_capacity(config.n_samples);
    let mut trace = Vec::with_capacity(config.n_samples);
    let (summary, _) = gibbs_stream(
        x0.clone(),
        set,
        config.burn_in,
        config.n_samples,
        config.thin,
        rng,
        |x, h| {
            samples.push(x.clone());
            trace.push(h.to_vec());
        },
    )?;
    Ok(ChainResult {
        samples,
        stat_trace: trace,
        accepted: vec![true; summary.steps],
        accept_rate: 1.0,
        seed: config.seed,
        sigma: None,
        sampler: SamplerKind::Gibbs,
        tuning: None,
    })
}

/// Full pipeline from a starting network: resolve the sampler, and for MH
/// spend half the burn-in warming up, tune `σ` if requested, then spend the
/// other half before keeping samples.
///
/// `visit` receives every kept network with its statistics.
pub fn simulate_stream<R: Rng + ?Sized>(
    x0: RestrictedNetwork,
    set: &StatisticSet,
    kind: SamplerKind,
    config: &SamplerConfig,
    rng: &mut R,
    visit: impl FnMut(&RestrictedNetwork, &[f64]),
) -> Result<ChainSummary> {
    config.validate()?;
    match kind.resolve(set)? {
        SamplerKind::Gibbs => {
            gibbs_stream(x0, set, config.burn_in, config.n_samples, config.thin, rng, visit)
                .map(|(s, _)| s)
        }
        _ => {
            let (x, sigma, rest, tuning) = warm_and_tune(x0, set, config, rng)?;
            mh_stream(x, set, sigma, rest, config.n_samples, config.thin, rng, visit, |_| {})
                .map(|(s, _)| ChainSummary { tuning, ..s })
        }
    }
}

fn warm_and_tune<R: Rng + ?Sized>(
    x0: RestrictedNetwork,
    set: &StatisticSet,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<(RestrictedNetwork, f64, usize, Option<TuningReport>)> {
    if !config.tune {
        return Ok((x0, config.proposal_sigma, config.burn_in, None));
    }
    let warm = config.burn_in / 2;
    let mut chain = MhChain::new(x0, set, config.proposal_sigma)?;
    for _ in 0..warm {
        chain.step(rng);
    }
    let x = chain.into_current();
    let report = tune_sigma_report(set, &x, config.target_accept, rng)?;
    Ok((x, report.sigma, config.burn_in - warm, Some(report)))
}

/// Collecting version of [`simulate_stream`].
pub fn simulate_from<R: Rng + ?Sized>(
    x0: &RestrictedNetwork,
    set: &StatisticSet,
    kind: SamplerKind,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ChainResult> {
    config.validate()?;
    match kind.resolve(set)? {
        SamplerKind::Gibbs => gibbs_run(x0, set, config, rng),
        _ => {
            let (x, sigma, rest, tuning) = warm_and_tune(x0.clone(), set, config, rng)?;
            let tuned = SamplerConfig { proposal_sigma: sigma, burn_in: rest, ..config.clone() };
            mh_run(&x, set, &tuned, rng).map(|r| ChainResult { tuning, ..r })
        }
    }
}

/// Simulates `n`-node networks from uniform starting weights, seeded by
/// `config.seed`.
pub fn simulate(
    n: usize,
    set: &StatisticSet,
    kind: SamplerKind,
    config: &SamplerConfig,
) -> Result<ChainResult> {
    if n < 2 {
        return Err(GergmError::InvalidNetwork(format!("need at least 2 nodes, got {n}")));
    }
    let mut rng: GergmRng = seeded(config.seed);
    let x0 = RestrictedNetwork::uniform(n, &mut rng);
    simulate_from(&x0, set, kind, config, &mut rng)
}
