//! The five commands. Each reads a [`RunManifest`], writes its outputs under
//! `manifest.out`, and returns the path of its main report.

use std::fs;
use std::path::{Path, PathBuf};

use gergm::diagnostics::{gof_compare, hysteresis_scan, kept_acceptance, twostar_sweep, SweepConfig};
use gergm::estimation::{fit, FitResult, IterationRecord};
use gergm::io::{fmt_f64, load_covariates, load_network, write_table, write_trace};
use gergm::rng::seeded;
use gergm::samplers::{simulate, ChainResult};
use gergm::special::norm_quantile;
use gergm::transform::{from_restricted, log1p_preprocess};
use gergm::{CovariateSet, ObservedNetwork, StatisticSet, TransformSpec};
use serde::{Deserialize, Serialize};

use crate::error::{fail, CliResult, Stage};
use crate::manifest::{NetworkFormat, RunManifest};

/// One coefficient with its normal-approximation intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub ci90: Option<[f64; 2]>,
    pub ci95: Option<[f64; 2]>,
}

impl Estimate {
    fn new(name: &str, estimate: f64, se: Option<f64>) -> Self {
        let ci = |level: f64| {
            let z = norm_quantile(0.5 + level / 2.0);
            se.map(|s| [estimate - z * s, estimate + z * s])
        };
        Estimate { name: name.to_string(), estimate, se, ci90: ci(0.90), ci95: ci(0.95) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub seed: u64,
    pub sampler: String,
    pub converged: bool,
    pub outer_iters: usize,
    pub theta: Vec<Estimate>,
    /// Transform parameters, with `log_scale` last when the scale is estimated.
    pub beta: Vec<Estimate>,
    pub scale: f64,
    pub accept_rate: Option<f64>,
    pub proposal_sigma: Option<f64>,
    pub history: Vec<IterationRecord>,
    pub warnings: Vec<String>,
    pub manifest: RunManifest,
}

impl FitReport {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).stage_at("load_fit_report", path.display())?;
        serde_json::from_str(&text).stage_at("load_fit_report", path.display())
    }

    pub fn theta_hat(&self) -> Vec<f64> {
        self.theta.iter().map(|e| e.estimate).collect()
    }

    pub fn beta_hat(&self) -> Vec<f64> {
        self.beta.iter().map(|e| e.estimate).collect()
    }
}

fn ensure_out(m: &RunManifest) -> CliResult<()> {
    fs::create_dir_all(&m.out).stage_at("write_output", m.out.display())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).stage("write_output")?;
    text.push('\n');
    fs::write(path, text).stage_at("write_output", path.display())
}

fn read_network(m: &RunManifest) -> CliResult<ObservedNetwork> {
    let Some(path) = &m.network else {
        return fail("load_network", "no network file given (--network)");
    };
    let y = load_network(path).stage("load_network")?;
    if m.log1p {
        log1p_preprocess(&y).stage("preprocess")
    } else {
        Ok(y)
    }
}

fn read_covariates(m: &RunManifest, n: usize) -> CliResult<CovariateSet> {
    let dyadic: Vec<(String, &Path)> = m.dyadic_covariates.iter().map(|d| (d.name.clone(), d.path.as_path())).collect();
    load_covariates(n, m.node_covariates.as_deref(), &dyadic).stage("load_covariates")
}

/// The transform with zero coefficients, as the fitting starting point.
fn base_transform(m: &RunManifest, n: usize) -> CliResult<TransformSpec> {
    let covariates = read_covariates(m, n)?;
    let terms = m.covariate_terms()?;
    let spec = TransformSpec::from_terms(m.family, &covariates, &terms, m.scale).stage("model")?;
    Ok(spec.with_scale_estimated(m.estimate_scale))
}

fn fitted_transform(m: &RunManifest, n: usize, params: &[f64]) -> CliResult<TransformSpec> {
    base_transform(m, n)?.with_params(params).stage("model")
}

fn trace_path(m: &RunManifest) -> PathBuf {
    m.out.join("trace.csv")
}

fn export_trace(m: &RunManifest, chain: &ChainResult, set: &StatisticSet) -> CliResult<()> {
    write_trace(&trace_path(m), &set.labels(), &chain.stat_trace, &kept_acceptance(chain)).stage("write_output")
}

pub fn fit_report(m: &RunManifest, res: &FitResult, tspec: &TransformSpec) -> FitReport {
    let theta = res
        .theta_names
        .iter()
        .zip(&res.theta_hat)
        .zip(&res.theta_se)
        .map(|((n, e), s)| Estimate::new(n, *e, *s))
        .collect();
    let beta = res
        .beta_names
        .iter()
        .zip(&res.beta_hat)
        .zip(&res.beta_se)
        .map(|((n, e), s)| Estimate::new(n, *e, *s))
        .collect();
    FitReport {
        seed: m.seed,
        sampler: res.sampler.name().to_string(),
        converged: res.converged,
        outer_iters: res.outer_iters,
        theta,
        beta,
        scale: tspec.scale(),
        accept_rate: res.final_chain.as_ref().map(|c| c.accept_rate),
        proposal_sigma: res.final_chain.as_ref().and_then(|c| c.sigma),
        history: res.history.clone(),
        warnings: res.warnings.clone(),
        manifest: m.clone(),
    }
}

/// Fits the model; writes `fit_report.json` and, when the model has
/// statistics, `trace.csv` from the chain at `θ̂`.
pub fn run_fit(m: &RunManifest) -> CliResult<PathBuf> {
    let y = read_network(m)?;
    let tspec = base_transform(m, y.n())?;
    let set = m.statistic_set()?;
    let cfg = m.fit_config();
    let mut rng = seeded(m.seed);
    let res = fit(&y, &tspec, &set, &cfg, &mut rng).stage("fit")?;
    let fitted = res.transform(&tspec).stage("fit")?;
    ensure_out(m)?;
    if let Some(chain) = &res.final_chain {
        export_trace(m, chain, &set)?;
    }
    let path = m.out.join("fit_report.json");
    write_json(&path, &fit_report(m, &res, &fitted))?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub n: usize,
    pub kept: usize,
    pub sampler: String,
    pub accept_rate: f64,
    pub proposal_sigma: Option<f64>,
    pub y_scale: bool,
    pub seed: u64,
    pub manifest: RunManifest,
}

fn node_count(m: &RunManifest) -> CliResult<usize> {
    if let Some(n) = m.nodes {
        return Ok(n);
    }
    if m.network.is_some() {
        return Ok(read_network(m)?.n());
    }
    fail("simulate", "give the node count (--nodes) or a network to take it from")
}

/// Simulates from `θ`; writes the kept networks, `trace.csv` and
/// `simulate_summary.json`. With `β` given, y-scale networks are written too.
pub fn run_simulate(m: &RunManifest) -> CliResult<PathBuf> {
    let n = node_count(m)?;
    let set = m.statistic_set()?;
    let tspec = match &m.beta {
        Some(b) => Some(fitted_transform(m, n, b)?),
        None => None,
    };
    let cfg = m.sampler_config(false);
    let chain = simulate(n, &set, m.sampler, &cfg).stage("simulate")?;
    let ys = match &tspec {
        Some(t) => Some(chain.samples.iter().map(|x| from_restricted(x, t)).collect::<Result<Vec<_>, _>>().stage("simulate")?),
        None => None,
    };
    ensure_out(m)?;
    export_trace(m, &chain, &set)?;
    match m.format {
        NetworkFormat::Matrices => {
            let dir = m.out.join("networks");
            fs::create_dir_all(&dir).stage_at("write_output", dir.display())?;
            let width = chain.samples.len().to_string().len();
            for (k, x) in chain.samples.iter().enumerate() {
                gergm::io::save_restricted(&dir.join(format!("x_{:0width$}.csv", k + 1)), x).stage("write_output")?;
                if let Some(ys) = &ys {
                    gergm::io::save_network(&dir.join(format!("y_{:0width$}.csv", k + 1)), &ys[k]).stage("write_output")?;
                }
            }
        }
        NetworkFormat::Long => {
            let mut header = vec!["sample".to_string(), "i".into(), "j".into(), "x".into()];
            if ys.is_some() {
                header.push("y".into());
            }
            let mut rows = Vec::with_capacity(chain.samples.len() * n * (n - 1));
            for (k, x) in chain.samples.iter().enumerate() {
                for (i, j, w) in x.edges() {
                    let mut r = vec![(k + 1).to_string(), (i + 1).to_string(), (j + 1).to_string(), fmt_f64(w)];
                    if let Some(ys) = &ys {
                        r.push(fmt_f64(ys[k].get(i, j)));
                    }
                    rows.push(r);
                }
            }
            write_table(&m.out.join("networks.csv"), &header, &rows).stage("write_output")?;
        }
    }
    let summary = SimulateSummary {
        n,
        kept: chain.samples.len(),
        sampler: chain.sampler.name().to_string(),
        accept_rate: chain.accept_rate,
        proposal_sigma: chain.sigma,
        y_scale: ys.is_some(),
        seed: m.seed,
        manifest: m.clone(),
    };
    let path = m.out.join("simulate_summary.json");
    write_json(&path, &summary)?;
    Ok(path)
}

/// `θ` and transform parameters from the fit report when given, else from
/// the manifest.
fn fitted_parameters(m: &RunManifest) -> CliResult<(Vec<f64>, Vec<f64>)> {
    if let Some(p) = &m.fit_report {
        let r = FitReport::load(p)?;
        return Ok((r.theta_hat(), r.beta_hat()));
    }
    let Some(theta) = m.theta.clone() else {
        return fail("load_fit_report", "give a fit report (--fit-report) or coefficients (--theta)");
    };
    Ok((theta, m.beta.clone().unwrap_or_default()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofSummary {
    pub covered: usize,
    pub statistics: usize,
    pub n_simulated: usize,
    pub seed: u64,
    pub manifest: RunManifest,
}

/// Compares the six statistics of the observed network with networks
/// simulated at the fitted parameters; writes `gof.csv` and `gof_summary.json`.
pub fn run_gof(m: &RunManifest) -> CliResult<PathBuf> {
    let y = read_network(m)?;
    let (theta, params) = fitted_parameters(m)?;
    let set = StatisticSet::new(m.stat_specs()?, theta).stage("model")?;
    let tspec = fitted_transform(m, y.n(), &params)?;
    let cfg = m.sampler_config(false);
    let report = gof_compare(&y, &tspec, &set, m.sampler, &cfg, &mut seeded(m.seed)).stage("gof")?;
    ensure_out(m)?;
    let header: Vec<String> = ["statistic", "observed", "mean", "q05", "q25", "q50", "q75", "q95", "covered"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.statistic.clone(), fmt_f64(r.observed), fmt_f64(r.mean)];
            row.extend(r.quantiles.iter().map(|q| fmt_f64(*q)));
            row.push(r.covered.to_string());
            row
        })
        .collect();
    write_table(&m.out.join("gof.csv"), &header, &rows).stage("write_output")?;
    let path = m.out.join("gof_summary.json");
    write_json(
        &path,
        &GofSummary {
            covered: report.covered_count(),
            statistics: report.rows.len(),
            n_simulated: report.n_simulated,
            seed: m.seed,
            manifest: m.clone(),
        },
    )?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HysteresisSummary {
    pub statistic: String,
    pub center: f64,
    pub se: f64,
    pub points: usize,
    pub failed: usize,
    pub seed: u64,
    pub manifest: RunManifest,
}

fn resolve_which(m: &RunManifest, labels: &[String]) -> CliResult<usize> {
    let Some(w) = &m.which else {
        return fail("hysteresis", "choose the scanned statistic (--which)");
    };
    if let Ok(k) = w.parse::<usize>() {
        if k < labels.len() {
            return Ok(k);
        }
    }
    let wanted = w.parse::<gergm::StatSpec>().ok().map(|s| s.label());
    labels
        .iter()
        .position(|l| l == w || Some(l) == wanted.as_ref() || l.split(':').next() == Some(w.as_str()))
        .map_or_else(|| fail("hysteresis", format!("no statistic '{w}' among {labels:?}")), Ok)
}

/// Scans one coefficient over `θ̂ ± 2 SE`; writes `hysteresis.csv` and
/// `hysteresis_summary.json`.
pub fn run_hysteresis(m: &RunManifest) -> CliResult<PathBuf> {
    let specs = m.stat_specs()?;
    let (theta, se_all) = match &m.fit_report {
        Some(p) => {
            let r = FitReport::load(p)?;
            (r.theta_hat(), r.theta.iter().map(|e| e.se).collect::<Vec<_>>())
        }
        None => {
            let Some(t) = m.theta.clone() else {
                return fail("load_fit_report", "give a fit report (--fit-report) or coefficients (--theta)");
            };
            let k = t.len();
            (t, vec![m.se; k])
        }
    };
    let set = StatisticSet::new(specs, theta).stage("model")?;
    let labels = set.labels();
    let which = resolve_which(m, &labels)?;
    let se = match m.se.or(se_all[which]) {
        Some(s) => s,
        None => return fail("hysteresis", format!("no standard error for '{}' (give --se)", labels[which])),
    };
    let n = match (m.nodes, &m.network) {
        (Some(n), _) => n,
        (None, Some(_)) => read_network(m)?.n(),
        (None, None) => return fail("hysteresis", "give the node count (--nodes) or a network"),
    };
    let cfg = m.sampler_config(false);
    let curve = hysteresis_scan(n, &set, which, se, m.points, m.sampler, &cfg).stage("hysteresis")?;
    ensure_out(m)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|p| vec![fmt_f64(p.value), opt(p.mean_density), opt(p.sd_density), p.error.clone().unwrap_or_default()])
        .collect();
    let header: Vec<String> = ["value", "mean_density", "sd_density", "error"].iter().map(|s| s.to_string()).collect();
    write_table(&m.out.join("hysteresis.csv"), &header, &rows).stage("write_output")?;
    let path = m.out.join("hysteresis_summary.json");
    write_json(
        &path,
        &HysteresisSummary {
            statistic: labels[which].clone(),
            center: set.theta()[which],
            se,
            points: curve.len(),
            failed: curve.iter().filter(|p| p.error.is_some()).count(),
            seed: m.seed,
            manifest: m.clone(),
        },
    )?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n: usize,
    pub theta_e: f64,
    pub cells: usize,
    pub failed: usize,
    pub seed: u64,
    pub manifest: RunManifest,
}

/// Runs the two-star sweep over `alphas × theta_its`; writes `sweep.csv`,
/// `sweep_histograms.csv` and `sweep_summary.json`.
pub fn run_sweep(m: &RunManifest) -> CliResult<PathBuf> {
    let n = match m.nodes {
        Some(n) => n,
        None => return fail("sweep", "give the node count (--nodes)"),
    };
    let cfg = SweepConfig {
        sampler: m.sampler,
        sampler_cfg: m.sampler_config(true),
        bins: m.bins,
        dip_replicates: m.dip_replicates,
    };
    let result = twostar_sweep(n, m.theta_e, &m.theta_its, &m.alphas, &cfg).stage("sweep")?;
    ensure_out(m)?;
    let header: Vec<String> = [
        "alpha", "theta_its", "mean_density", "sd_density", "mean_its_raw", "mean_its_weighted", "mean_its_normalized",
        "dip", "dip_p_value", "geweke_density", "accept_rate", "proposal_sigma", "kept", "error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut rows = Vec::new();
    let mut hist_rows = Vec::new();
    for c in &result.cells {
        let mut r = vec![fmt_f64(c.alpha), fmt_f64(c.theta_its)];
        match &c.stats {
            Some(s) => {
                r.extend([
                    fmt_f64(s.mean_density),
                    fmt_f64(s.sd_density),
                    fmt_f64(s.mean_its_raw),
                    fmt_f64(s.mean_its_weighted),
                    fmt_f64(s.mean_its_normalized),
                    fmt_f64(s.density_dip.dip),
                    fmt_f64(s.density_dip.p_value),
                    opt(s.density_geweke),
                    fmt_f64(s.accept_rate),
                    opt(s.sigma),
                    s.kept.to_string(),
                    String::new(),
                ]);
                for (name, h) in [("edge_density", &s.density_hist), ("in_two_stars", &s.its_hist)] {
                    let edges = h.bin_edges();
                    for (b, count) in h.counts.iter().enumerate() {
                        hist_rows.push(vec![
                            fmt_f64(c.alpha),
                            fmt_f64(c.theta_its),
                            name.to_string(),
                            b.to_string(),
                            fmt_f64(edges[b]),
                            fmt_f64(edges[b + 1]),
                            count.to_string(),
                        ]);
                    }
                }
            }
            None => {
                r.extend(std::iter::repeat_n(String::new(), 11));
                r.push(c.error.clone().unwrap_or_default());
            }
        }
        rows.push(r);
    }
    write_table(&m.out.join("sweep.csv"), &header, &rows).stage("write_output")?;
    let hist_header: Vec<String> =
        ["alpha", "theta_its", "statistic", "bin", "lower", "upper", "count"].iter().map(|s| s.to_string()).collect();
    write_table(&m.out.join("sweep_histograms.csv"), &hist_header, &hist_rows).stage("write_output")?;
    let path = m.out.join("sweep_summary.json");
    write_json(
        &path,
        &SweepSummary {
            n,
            theta_e: m.theta_e,
            cells: result.cells.len(),
            failed: result.cells.iter().filter(|c| c.error.is_some()).count(),
            seed: m.seed,
            manifest: m.clone(),
        },
    )?;
    Ok(path)
}
