//! Convergence, goodness-of-fit and degeneracy tooling.
//!
//! Everything here consumes chains or simulates new ones and returns plain
//! data: z-scores, quantile tables, curves and sweep grids. Writing them out
//! as delimited text lives in [`crate::io`].

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GergmError, Result};
use crate::network::{ObservedNetwork, RestrictedNetwork};
use crate::rng::stream;
use crate::samplers::{simulate_stream, ChainResult, SamplerConfig, SamplerKind};
use crate::statistics::{stat_value, StatKind, StatSpec, StatisticSet, Weighting};
use crate::transform::{to_restricted, TransformSpec};

const GEWEKE_MIN_LEN: usize = 100;

// ── Trace summaries ──

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Autocovariances `γ_0..=γ_max_lag` with divisor `len`.
fn autocovariances(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let m = mean(xs);
    let d: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let len = d.len() as f64;
    (0..=max_lag.min(d.len() - 1))
        .map(|k| d.iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / len)
        .collect()
}

/// Spectral density at frequency zero with Bartlett weights and lag
/// `⌊√len⌋`: `γ_0 + 2 Σ_k (1 - k/(L+1)) γ_k`.
pub fn spectral_density_at_zero(xs: &[f64]) -> f64 {
    let lag = (xs.len() as f64).sqrt().floor() as usize;
    let g = autocovariances(xs, lag);
    let l1 = (lag + 1) as f64;
    g[0] + 2.0 * g.iter().enumerate().skip(1).map(|(k, v)| (1.0 - k as f64 / l1) * v).sum::<f64>()
}

/// Geweke z-score comparing the first `frac_a` of the trace with the last `frac_b`.
pub fn geweke(trace: &[f64], frac_a: f64, frac_b: f64) -> Result<f64> {
    if trace.len() < GEWEKE_MIN_LEN {
        return Err(GergmError::DegenerateTrace(format!(
            "need at least {GEWEKE_MIN_LEN} values, got {}",
            trace.len()
        )));
    }
    if !(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0) {
        return Err(GergmError::InvalidConfig(format!(
            "window fractions must be positive with sum at most 1, got {frac_a} and {frac_b}"
        )));
    }
    let len = trace.len();
    let na = ((frac_a * len as f64).floor() as usize).max(2);
    let nb = ((frac_b * len as f64).floor() as usize).max(2);
    let a = &trace[..na];
    let b = &trace[len - nb..];
    let (sa, sb) = (spectral_density_at_zero(a), spectral_density_at_zero(b));
    if !(sa > 0.0 && sb > 0.0) {
        return Err(GergmError::DegenerateTrace("zero variance in a Geweke window".into()));
    }
    Ok((mean(a) - mean(b)) / (sa / na as f64 + sb / nb as f64).sqrt())
}

/// Geweke z with the default 10% / 50% windows.
pub fn geweke_default(trace: &[f64]) -> Result<f64> {
    geweke(trace, 0.1, 0.5)
}

/// Effective sample size by Geyer's initial positive sequence.
pub fn effective_sample_size(trace: &[f64]) -> Result<f64> {
    let len = trace.len();
    if len < 2 {
        return Err(GergmError::DegenerateTrace("need at least 2 values".into()));
    }
    let g = autocovariances(trace, len - 1);
    if !(g[0] > 0.0) {
        return Err(GergmError::DegenerateTrace("zero variance".into()));
    }
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < g.len() {
        let pair = (g[k] + g[k + 1]) / g[0];
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    let tau = tau.max(1.0 / len as f64);
    Ok((len as f64 / tau).min(len as f64))
}

/// Monte Carlo standard error of the trace mean, `sd / sqrt(ESS)`.
pub fn mc_standard_error(trace: &[f64]) -> Result<f64> {
    let ess = effective_sample_size(trace)?;
    let m = mean(trace);
    let var = trace.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (trace.len() - 1) as f64;
    Ok((var / ess).sqrt())
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile_type7(data: &[f64], p: f64) -> f64 {
    let mut s = data.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, p)
}

// ── Dip test ──

/// Hartigan's dip statistic of a sample (sorted internally).
///
/// Follows the classic greatest-convex-minorant / least-concave-majorant
/// algorithm. The smallest possible value is `1/(2n)`.
pub fn dip(data: &[f64]) -> f64 {
    let mut x = data.to_vec();
    x.sort_by(f64::total_cmp);
    dip_sorted(&x)
}

fn dip_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    // 1-based working arrays
    let mut x = Vec::with_capacity(n + 1);
    x.push(0.0);
    x.extend_from_slice(xs);
    let mut dip = 1.0;
    if n < 2 || x[n] == x[1] {
        return dip / (2 * n) as f64;
    }
    let mut mn = vec![0usize; n + 1];
    let mut mj = vec![0usize; n + 1];
    let mut gcm = vec![0usize; n + 2];
    let mut lcm = vec![0usize; n + 2];

    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1
                || (x[j] - x[mnj]) * ((mnj - mnmnj) as f64) < (x[mnj] - x[mnmnj]) * ((j - mnj) as f64)
            {
                break;
            }
            mn[j] = mnmnj;
        }
    }
    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n
                || (x[k] - x[mjk]) * (mjk as f64 - mjmjk as f64)
                    < (x[mjk] - x[mjmjk]) * (k as f64 - mjk as f64)
            {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    let (mut low, mut high) = (1usize, n);
    loop {
        gcm[1] = high;
        let mut i = 1;
        while gcm[i] > low {
            gcm[i + 1] = mn[gcm[i]];
            i += 1;
        }
        let l_gcm = i;
        let mut ig = l_gcm;
        let mut ix = ig - 1;

        lcm[1] = low;
        let mut i = 1;
        while lcm[i] < high {
            lcm[i + 1] = mj[lcm[i]];
            i += 1;
        }
        let l_lcm = i;
        let mut ih = l_lcm;
        let mut iv = 2;

        let mut d = 0.0;
        if l_gcm != 2 || l_lcm != 2 {
            loop {
                let gcmix = gcm[ix];
                let lcmiv = lcm[iv];
                if gcmix > lcmiv {
                    let gcmi1 = gcm[ix + 1];
                    let dx = (lcmiv as f64 - gcmi1 as f64 + 1.0)
                        - (x[lcmiv] - x[gcmi1]) * (gcmix as f64 - gcmi1 as f64) / (x[gcmix] - x[gcmi1]);
                    iv += 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    let lcmiv1 = lcm[iv - 1];
                    let dx = (x[gcmix] - x[lcmiv1]) * (lcmiv as f64 - lcmiv1 as f64) / (x[lcmiv] - x[lcmiv1])
                        - (gcmix as f64 - lcmiv1 as f64 - 1.0);
                    ix -= 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv;
                    }
                }
                if ix < 1 {
                    ix = 1;
                }
                if iv > l_lcm {
                    iv = l_lcm;
                }
                if gcm[ix] == lcm[iv] {
                    break;
                }
            }
        } else {
            d = 1.0;
        }
        if d < dip {
            break;
        }

        let mut dip_l: f64 = 0.0;
        for j in ig..l_gcm {
            let mut max_t: f64 = 1.0;
            let (jb, je) = (gcm[j + 1], gcm[j]);
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (jj - jb + 1) as f64 - (x[jj] - x[jb]) * c;
                    max_t = max_t.max(t);
                }
            }
            dip_l = dip_l.max(max_t);
        }
        let mut dip_u: f64 = 0.0;
        for j in ih..l_lcm {
            let mut max_t: f64 = 1.0;
            let (jb, je) = (lcm[j], lcm[j + 1]);
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (x[jj] - x[jb]) * c - (jj as f64 - jb as f64 - 1.0);
                    max_t = max_t.max(t);
                }
            }
            dip_u = dip_u.max(max_t);
        }
        dip = dip.max(dip_u.max(dip_l));

        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }
    dip / (2 * n) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipTest {
    pub dip: f64,
    pub p_value: f64,
    /// Size of the uniform reference samples.
    pub reference_size: usize,
}

/// Dip test against the uniform null by Monte Carlo.
///
/// The reference samples have `reference_size` points. Pass the effective
/// sample size for autocorrelated traces, since the dip of `n` dependent draws
/// fluctuates like that of far fewer independent ones.
pub fn dip_test<R: Rng + ?Sized>(
    data: &[f64],
    reference_size: usize,
    replicates: usize,
    rng: &mut R,
) -> Result<DipTest> {
    if data.len() < 4 || reference_size < 4 || replicates == 0 {
        return Err(GergmError::InvalidConfig(
            "dip test needs at least 4 points, a reference size of at least 4 and one replicate".into(),
        ));
    }
    let d = dip(data);
    let mut buf = vec![0.0; reference_size];
    let mut exceed = 0usize;
    for _ in 0..replicates {
        buf.iter_mut().for_each(|v| *v = rng.gen());
        buf.sort_by(f64::total_cmp);
        if dip_sorted(&buf) >= d {
            exceed += 1;
        }
    }
    Ok(DipTest {
        dip: d,
        p_value: (exceed + 1) as f64 / (replicates + 1) as f64,
        reference_size,
    })
}

/// Dip test of an MCMC trace with the reference size set to its ESS.
pub fn dip_test_trace<R: Rng + ?Sized>(trace: &[f64], replicates: usize, rng: &mut R) -> Result<DipTest> {
    let ess = effective_sample_size(trace)?;
    let size = (ess.round() as usize).clamp(4, trace.len());
    dip_test(trace, size, replicates, rng)
}

// ── Histograms ──

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lower: f64, upper: f64, bins: usize) -> Self {
        assert!(upper > lower && bins > 0);
        Histogram { lower, upper, counts: vec![0; bins] }
    }

    /// Values outside the range go to the end bins.
    pub fn add(&mut self, v: f64) {
        let bins = self.counts.len();
        let pos = (v - self.lower) / (self.upper - self.lower) * bins as f64;
        let k = if pos.is_nan() { 0 } else { (pos.max(0.0) as usize).min(bins - 1) };
        self.counts[k] += 1;
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let bins = self.counts.len();
        (0..=bins)
            .map(|k| self.lower + (self.upper - self.lower) * k as f64 / bins as f64)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

// ── Goodness of fit ──

/// The six statistics at `α = 1`, unnormalized, in a fixed order.
pub fn gof_statistics() -> Vec<StatSpec> {
    StatKind::ALL.iter().map(|&k| StatSpec::linear(k)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofRow {
    pub statistic: String,
    pub observed: f64,
    pub mean: f64,
    /// 5%, 25%, 50%, 75% and 95% quantiles of the simulated values.
    pub quantiles: [f64; 5],
    /// Observed value within the 5%–95% band.
    pub covered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub rows: Vec<GofRow>,
    pub n_simulated: usize,
}

impl GofReport {
    pub fn covered_count(&self) -> usize {
        self.rows.iter().filter(|r| r.covered).count()
    }
}

pub const GOF_PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Builds a report from observed statistics and one simulated vector per network.
pub fn gof_from_samples(labels: &[String], observed: &[f64], simulated: &[Vec<f64>]) -> Result<GofReport> {
    if simulated.is_empty() {
        return Err(GergmError::InvalidConfig("no simulated networks".into()));
    }
    let rows = labels
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let mut col: Vec<f64> = simulated.iter().map(|h| h[k]).collect();
            col.sort_by(f64::total_cmp);
            let q = GOF_PROBS.map(|p| quantile_sorted(&col, p));
            GofRow {
                statistic: label.clone(),
                observed: observed[k],
                mean: mean(&col),
                quantiles: q,
                covered: observed[k] >= q[0] && observed[k] <= q[4],
            }
        })
        .collect();
    Ok(GofReport { rows, n_simulated: simulated.len() })
}

/// Transforms `y` with the fitted `tspec`, simulates at the fitted `set`
/// starting from the observed restricted network, and compares all six
/// statistics.
pub fn gof_compare<R: Rng + ?Sized>(
    y: &ObservedNetwork,
    tspec: &TransformSpec,
    set: &StatisticSet,
    kind: SamplerKind,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<GofReport> {
    let x_obs = to_restricted(y, tspec)?;
    let specs = gof_statistics();
    let eval = |x: &RestrictedNetwork| specs.iter().map(|s| stat_value(x, s)).collect::<Vec<f64>>();
    let observed = eval(&x_obs);
    let mut simulated = Vec::with_capacity(cfg.n_samples);
    simulate_stream(x_obs, set, kind, cfg, rng, |x, _| simulated.push(eval(x)))?;
    let labels: Vec<String> = StatKind::ALL.iter().map(|k| k.name().to_string()).collect();
    gof_from_samples(&labels, &observed, &simulated)
}

// ── Hysteresis ──

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HysteresisPoint {
    pub value: f64,
    pub mean_density: Option<f64>,
    pub sd_density: Option<f64>,
    /// Error message when the cell failed.
    pub error: Option<String>,
}

/// Grid of `n_points` equally spaced values on `center ± 2·se`; a single point
/// when `se = 0` or `n_points = 1`.
pub fn hysteresis_grid(center: f64, se: f64, n_points: usize) -> Vec<f64> {
    if se == 0.0 || n_points <= 1 {
        return vec![center];
    }
    let (lo, hi) = (center - 2.0 * se, center + 2.0 * se);
    (0..n_points)
        .map(|k| lo + (hi - lo) * k as f64 / (n_points - 1) as f64)
        .collect()
}

/// Start value for hysteresis chains: every edge at 0.05.
pub const SPARSE_START: f64 = 0.05;

/// Varies coefficient `which` over `θ̂ ± 2·SE` with the others fixed and
/// records the mean and sd of edge density of networks simulated from a
/// sparse start. Cells run in parallel with streams keyed by grid value.
pub fn hysteresis_scan(
    n: usize,
    set: &StatisticSet,
    which: usize,
    se: f64,
    n_points: usize,
    kind: SamplerKind,
    cfg: &SamplerConfig,
) -> Result<Vec<HysteresisPoint>> {
    if which >= set.len() {
        return Err(GergmError::InvalidConfig(format!(
            "coefficient index {which} out of range for {} statistics",
            set.len()
        )));
    }
    if !(se >= 0.0 && se.is_finite()) {
        return Err(GergmError::InvalidConfig(format!("standard error must be finite and non-negative, got {se}")));
    }
    let start = RestrictedNetwork::constant(n, SPARSE_START)?;
    let grid = hysteresis_grid(set.theta()[which], se, n_points);
    Ok(grid
        .par_iter()
        .map(|&value| {
            let run = || -> Result<(f64, f64)> {
                let mut theta = set.theta().to_vec();
                theta[which] = value;
                let s = set.with_theta(theta)?;
                let mut rng = stream(cfg.seed, &[which as u64, value.to_bits()]);
                let mut dens = Vec::with_capacity(cfg.n_samples);
                simulate_stream(start.clone(), &s, kind, cfg, &mut rng, |x, _| dens.push(x.density()))?;
                let m = mean(&dens);
                let sd = if dens.len() > 1 {
                    (dens.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (dens.len() - 1) as f64).sqrt()
                } else {
                    0.0
                };
                Ok((m, sd))
            };
            match run() {
                Ok((m, sd)) => HysteresisPoint { value, mean_density: Some(m), sd_density: Some(sd), error: None },
                Err(e) => HysteresisPoint { value, mean_density: None, sd_density: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}

// ── Two-star sweep ──

/// The two-star model: edge density divided by `m`, plus in-two-stars with
/// outside weighting `α`.
pub fn twostar_model(theta_e: f64, theta_its: f64, alpha: f64) -> Result<StatisticSet> {
    StatisticSet::new(
        vec![
            StatSpec::new(StatKind::EdgeDensity, 1.0, Weighting::None, true)?,
            StatSpec::outside(StatKind::InTwoStars, alpha)?,
        ],
        vec![theta_e, theta_its],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub sampler: SamplerKind,
    pub sampler_cfg: SamplerConfig,
    pub bins: usize,
    /// Uniform reference samples for the dip-test p-value.
    pub dip_replicates: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sampler: SamplerKind::Auto,
            sampler_cfg: SamplerConfig { n_samples: 50_000, burn_in: 5_000, ..SamplerConfig::default() },
            bins: 50,
            dip_replicates: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCellStats {
    pub mean_density: f64,
    pub sd_density: f64,
    /// Mean of the unweighted in-two-stars sum.
    pub mean_its_raw: f64,
    /// Mean of the in-two-stars sum raised to `α`, the model statistic.
    pub mean_its_weighted: f64,
    /// Mean of the in-two-stars sum divided by its term count.
    pub mean_its_normalized: f64,
    pub density_hist: Histogram,
    pub its_hist: Histogram,
    pub density_dip: DipTest,
    pub density_geweke: Option<f64>,
    pub accept_rate: f64,
    pub sigma: Option<f64>,
    pub kept: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub theta_its: f64,
    pub alpha: f64,
    pub stats: Option<SweepCellStats>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub n: usize,
    pub theta_e: f64,
    /// Row-major over `alpha_grid × theta_its_grid`.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, theta_its: f64, alpha: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.theta_its == theta_its && c.alpha == alpha)
    }
}

/// Simulates one cell of the two-star sweep with its own seeded stream.
pub fn twostar_cell(n: usize, theta_e: f64, theta_its: f64, alpha: f64, cfg: &SweepConfig) -> Result<SweepCellStats> {
    let set = twostar_model(theta_e, theta_its, alpha)?;
    let mut rng = stream(cfg.sampler_cfg.seed, &[theta_its.to_bits(), alpha.to_bits()]);
    let x0 = RestrictedNetwork::uniform(n, &mut rng);
    let its_count = StatKind::InTwoStars.term_count(n);
    let raw_spec = StatSpec::linear(StatKind::InTwoStars);
    let mut dens = Vec::with_capacity(cfg.sampler_cfg.n_samples);
    let (mut raw_sum, mut weighted_sum) = (0.0, 0.0);
    let mut density_hist = Histogram::new(0.0, 1.0, cfg.bins);
    let mut its_hist = Histogram::new(0.0, its_count, cfg.bins);
    let summary = simulate_stream(x0, &set, cfg.sampler, &cfg.sampler_cfg, &mut rng, |x, h| {
        let d = x.density();
        let raw = stat_value(x, &raw_spec);
        dens.push(d);
        raw_sum += raw;
        weighted_sum += h[1];
        density_hist.add(d);
        its_hist.add(raw);
    })?;
    let kept = dens.len() as f64;
    let m = mean(&dens);
    let sd = (dens.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (kept - 1.0).max(1.0)).sqrt();
    let density_dip = dip_test_trace(&dens, cfg.dip_replicates, &mut rng)?;
    Ok(SweepCellStats {
        mean_density: m,
        sd_density: sd,
        mean_its_raw: raw_sum / kept,
        mean_its_weighted: weighted_sum / kept,
        mean_its_normalized: raw_sum / kept / its_count,
        density_hist,
        its_hist,
        density_dip,
        density_geweke: geweke_default(&dens).ok(),
        accept_rate: summary.accept_rate,
        sigma: summary.sigma,
        kept: dens.len(),
    })
}

/// Runs every `(α, θ_ITS)` cell in parallel. A failing cell keeps its error
/// message and the sweep continues.
pub fn twostar_sweep(
    n: usize,
    theta_e: f64,
    theta_its_grid: &[f64],
    alpha_grid: &[f64],
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    if theta_its_grid.is_empty() || alpha_grid.is_empty() {
        return Err(GergmError::InvalidConfig("sweep grids must be nonempty".into()));
    }
    if n < 3 {
        return Err(GergmError::InvalidConfig(format!("two-star sweep needs n >= 3, got {n}")));
    }
    let coords: Vec<(f64, f64)> = alpha_grid
        .iter()
        .flat_map(|&a| theta_its_grid.iter().map(move |&t| (t, a)))
        .collect();
    let cells = coords
        .par_iter()
        .map(|&(theta_its, alpha)| match twostar_cell(n, theta_e, theta_its, alpha, cfg) {
            Ok(stats) => SweepCell { theta_its, alpha, stats: Some(stats), error: None },
            Err(e) => SweepCell { theta_its, alpha, stats: None, error: Some(e.to_string()) },
        })
        .collect();
    Ok(SweepResult { n, theta_e, cells })
}

// ── Trace export ──

/// Acceptance flag of the step that produced each kept sample.
pub fn kept_acceptance(chain: &ChainResult) -> Vec<bool> {
    let kept = chain.stat_trace.len();
    if kept == 0 {
        return Vec::new();
    }
    let thin = chain.accepted.len() / kept;
    (0..kept)
        .map(|k| chain.accepted.get((k + 1) * thin.max(1) - 1).copied().unwrap_or(true))
        .collect()
}

/// Writes `sample,<stat labels…>,accepted`, one row per kept sample.
pub fn trace_export(chain: &ChainResult, labels: &[String], path: &Path) -> Result<()> {
    if chain.stat_trace.is_empty() {
        return Err(GergmError::InvalidConfig("cannot export an empty chain".into()));
    }
    crate::io::write_trace(path, labels, &chain.stat_trace, &kept_acceptance(chain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::special::norm_quantile;

    fn normals(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..n).map(|_| norm_quantile(rng.gen_range(1e-300..1.0))).collect()
    }

    #[test]
    fn geweke_flags_mean_shift() {
        let mut rng = seeded(1);
        for _ in 0..20 {
            let mut t = normals(10_000, &mut rng);
            t[5000..].iter_mut().for_each(|v| *v += 5.0);
            assert!(geweke_default(&t).unwrap().abs() > 5.0);
        }
    }

    #[test]
    fn geweke_constant_trace_errors() {
        assert!(matches!(geweke_default(&[3.0; 500]), Err(GergmError::DegenerateTrace(_))));
        assert!(geweke_default(&[1.0; 10]).is_err());
    }

    #[test]
    fn geweke_affine_invariant() {
        let mut rng = seeded(2);
        let t = normals(2000, &mut rng);
        let z = geweke_default(&t).unwrap();
        let u: Vec<f64> = t.iter().map(|v| 3.5 * v - 12.0).collect();
        assert!((geweke_default(&u).unwrap() - z).abs() < 1e-9 * z.abs().max(1.0));
    }

    #[test]
    fn ess_of_iid_is_near_length() {
        let mut rng = seeded(3);
        let t = normals(20_000, &mut rng);
        let ess = effective_sample_size(&t).unwrap();
        assert!(ess > 15_000.0, "ess {ess}");
    }

    #[test]
    fn ess_of_ar1_matches_theory() {
        let mut rng = seeded(4);
        let phi = 0.9;
        let e = normals(200_000, &mut rng);
        let mut t = vec![0.0; e.len()];
        for k in 1..e.len() {
            t[k] = phi * t[k - 1] + e[k];
        }
        let ess = effective_sample_size(&t).unwrap();
        let theory = e.len() as f64 * (1.0 - phi) / (1.0 + phi);
        assert!((ess / theory - 1.0).abs() < 0.15, "ess {ess} theory {theory}");
    }

    #[test]
    fn type7_quantiles() {
        let d = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile_type7(&d, 0.0), 1.0);
        assert_eq!(quantile_type7(&d, 1.0), 4.0);
        assert!((quantile_type7(&d, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_type7(&d, 0.1) - 1.3).abs() < 1e-12);
        assert_eq!(quantile_type7(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn dip_of_grid_is_minimal() {
        let n = 200;
        let g: Vec<f64> = (0..n).map(|k| k as f64).collect();
        assert!((dip(&g) - 1.0 / (2.0 * n as f64)).abs() < 1e-12);
        assert_eq!(dip(&[1.0; 10]), 1.0 / 20.0);
    }

    #[test]
    fn dip_separated_clusters() {
        let mut d: Vec<f64> = (0..100).map(|k| k as f64 / 100.0).collect();
        d.extend((0..100).map(|k| 10.0 + k as f64 / 100.0));
        let v = dip(&d);
        assert!(v > 0.2 && v <= 0.25, "dip {v}");
    }

    #[test]
    fn dip_known_values() {
        // Four points at 0,0,1,1: the best unimodal fit misses by 1/4.
        assert!((dip(&[0.0, 0.0, 1.0, 1.0]) - 0.25).abs() < 1e-12);
        let v = dip(&[0.0, 1.0, 2.0, 3.0, 10.0, 11.0, 12.0, 13.0]);
        assert!((v - 0.175).abs() < 1e-12, "dip {v}");
        // Reference values from an independent implementation of the same algorithm.
        let a: Vec<f64> = (1..=50).map(|k| ((k as f64 * 0.6180339887498949) % 1.0).powi(2)).collect();
        assert!((dip(&a) - 0.01626852461836073).abs() < 1e-12);
        let mut b: Vec<f64> = (0..30).map(|k| (k as f64 * 1.3).sin()).collect();
        b.extend((0..20).map(|k| 3.0 + (k as f64 * 0.7).cos()));
        assert!((dip(&b) - 0.0702149105415482).abs() < 1e-12);
    }

    #[test]
    fn dip_reflection_and_affine_invariant() {
        let mut rng = seeded(5);
        let d: Vec<f64> = (0..300).map(|_| rng.gen::<f64>().powi(3)).collect();
        let v = dip(&d);
        let r: Vec<f64> = d.iter().map(|x| -2.0 * x + 7.0).collect();
        assert!((dip(&r) - v).abs() < 1e-12);
    }

    #[test]
    fn dip_test_separates_bimodal() {
        let mut rng = seeded(6);
        let uni: Vec<f64> = normals(500, &mut rng);
        let t = dip_test(&uni, 500, 300, &mut rng).unwrap();
        assert!(t.p_value > 0.05, "unimodal p {}", t.p_value);
        let mut bi = normals(250, &mut rng);
        bi.extend(normals(250, &mut rng).iter().map(|v| v + 6.0));
        let t = dip_test(&bi, 500, 300, &mut rng).unwrap();
        assert!(t.p_value < 0.01, "bimodal p {}", t.p_value);
    }

    #[test]
    fn histogram_binning() {
        let mut h = Histogram::new(0.0, 1.0, 4);
        for v in [0.0, 0.1, 0.3, 0.5, 0.99, 1.0, 2.0, -1.0] {
            h.add(v);
        }
        assert_eq!(h.counts, vec![3, 1, 1, 3]);
        assert_eq!(h.bin_edges(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn gof_single_sample_quantiles_equal() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let r = gof_from_samples(&labels, &[1.0, 5.0], &[vec![1.0, 2.0]]).unwrap();
        assert_eq!(r.rows[0].quantiles, [1.0; 5]);
        assert!(r.rows[0].covered);
        assert!(!r.rows[1].covered);
        assert_eq!(r.rows[1].quantiles, [2.0; 5]);
    }

    #[test]
    fn hysteresis_zero_se_is_single_point() {
        assert_eq!(hysteresis_grid(0.7, 0.0, 21), vec![0.7]);
        let g = hysteresis_grid(0.0, 1.0, 5);
        assert_eq!(g, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn kept_acceptance_picks_last_step_of_each_thin_block() {
        let chain = ChainResult {
            samples: Vec::new(),
            stat_trace: vec![vec![0.0]; 2],
            accepted: vec![true, false, false, true],
            accept_rate: 0.5,
            seed: 0,
            sigma: Some(0.1),
            sampler: SamplerKind::Mh,
            tuning: None,
        };
        assert_eq!(kept_acceptance(&chain), vec![false, true]);
    }
}
