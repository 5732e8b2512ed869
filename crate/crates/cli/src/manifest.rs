//! Run manifests: every input, model choice and tuning knob of one invocation.
//!
//! A manifest is a JSON object. Missing fields take the defaults below, so a
//! manifest can be as small as `{"network": "y.csv", "stats": ["edge_density"]}`.
//! Every report echoes the manifest it ran with, and that echo re-parses to
//! the same manifest.

use std::path::{Path, PathBuf};

use gergm::estimation::FitConfig;
use gergm::network::CovariateTerm;
use gergm::samplers::{SamplerConfig, SamplerKind};
use gergm::{Family, StatSpec, StatisticSet};
use serde::{Deserialize, Serialize};

use crate::error::{CliResult, Stage};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedPath {
    pub name: String,
    pub path: PathBuf,
}

/// How `simulate` writes kept networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NetworkFormat {
    /// One `n × n` table per sample.
    #[default]
    Matrices,
    /// A single `sample,i,j,x[,y]` table.
    Long,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub network: Option<PathBuf>,
    pub node_covariates: Option<PathBuf>,
    pub dyadic_covariates: Vec<NamedPath>,
    /// `kind:alpha:mode[:normalize]` per statistic.
    pub stats: Vec<String>,
    pub theta: Option<Vec<f64>>,
    pub family: Family,
    /// `intercept`, `sender(col)`, `receiver(col)` or `dyad(name)`.
    pub terms: Vec<String>,
    pub beta: Option<Vec<f64>>,
    pub scale: f64,
    pub estimate_scale: bool,
    pub log1p: bool,
    pub nodes: Option<usize>,

    pub sampler: SamplerKind,
    /// Kept networks; defaults to 1000, or 50000 for `sweep`.
    pub samples: Option<usize>,
    /// Defaults to `samples`, or 5000 for `sweep`.
    pub burn_in: Option<usize>,
    pub thin: usize,
    pub proposal_sigma: f64,
    pub target_accept: f64,
    pub tune: bool,
    pub seed: u64,

    pub tol_outer: f64,
    pub tol_theta: f64,
    pub max_outer_iters: usize,
    pub max_theta_iters: usize,
    pub pilot_samples: usize,

    pub out: PathBuf,
    pub format: NetworkFormat,
    /// Fit report read by `gof` and `hysteresis`.
    pub fit_report: Option<PathBuf>,

    /// Statistic scanned by `hysteresis`, by label or zero-based index.
    pub which: Option<String>,
    /// Standard error for `hysteresis` when no fit report is given.
    pub se: Option<f64>,
    pub points: usize,

    pub theta_e: f64,
    pub theta_its: Vec<f64>,
    pub alphas: Vec<f64>,
    pub bins: usize,
    pub dip_replicates: usize,
}

impl Default for RunManifest {
    fn default() -> Self {
        let fit = FitConfig::default();
        let sampler = SamplerConfig::default();
        RunManifest {
            network: None,
            node_covariates: None,
            dyadic_covariates: Vec::new(),
            stats: Vec::new(),
            theta: None,
            family: Family::Gaussian,
            terms: Vec::new(),
            beta: None,
            scale: 1.0,
            estimate_scale: false,
            log1p: false,
            nodes: None,
            sampler: SamplerKind::Auto,
            samples: None,
            burn_in: None,
            thin: 1,
            proposal_sigma: sampler.proposal_sigma,
            target_accept: sampler.target_accept,
            tune: true,
            seed: 1,
            tol_outer: fit.tol_outer,
            tol_theta: fit.tol_theta,
            max_outer_iters: fit.max_outer_iters,
            max_theta_iters: fit.max_theta_iters,
            pilot_samples: fit.pilot_samples,
            out: PathBuf::from("gergm-out"),
            format: NetworkFormat::Matrices,
            fit_report: None,
            which: None,
            se: None,
            points: 21,
            theta_e: -2.0,
            theta_its: (-10..=10).map(f64::from).collect(),
            alphas: vec![0.1, 0.25, 0.5, 0.75, 0.9, 1.0],
            bins: 50,
            dip_replicates: 500,
        }
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).stage_at("manifest", path.display())?;
        serde_json::from_str(&text).stage_at("manifest", path.display())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn stat_specs(&self) -> CliResult<Vec<StatSpec>> {
        self.stats.iter().map(|s| s.parse::<StatSpec>()).collect::<Result<_, _>>().stage("model")
    }

    /// Statistics with `theta`, or zeros when no coefficients are given.
    pub fn statistic_set(&self) -> CliResult<StatisticSet> {
        let specs = self.stat_specs()?;
        match &self.theta {
            Some(t) => StatisticSet::new(specs, t.clone()).stage("model"),
            None => Ok(StatisticSet::zeros(specs)),
        }
    }

    pub fn covariate_terms(&self) -> CliResult<Vec<CovariateTerm>> {
        self.terms.iter().map(|t| t.parse::<CovariateTerm>()).collect::<Result<_, _>>().stage("model")
    }

    pub fn sampler_config(&self, sweep: bool) -> SamplerConfig {
        let default_samples = if sweep { 50_000 } else { 1_000 };
        let samples = self.samples.unwrap_or(default_samples);
        let burn_in = self.burn_in.unwrap_or(if sweep { 5_000 } else { samples });
        SamplerConfig {
            n_samples: samples,
            burn_in,
            thin: self.thin,
            proposal_sigma: self.proposal_sigma,
            target_accept: self.target_accept,
            seed: self.seed,
            tune: self.tune,
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            tol_outer: self.tol_outer,
            tol_theta: self.tol_theta,
            max_outer_iters: self.max_outer_iters,
            max_theta_iters: self.max_theta_iters,
            sampler: self.sampler,
            sampler_cfg: self.sampler_config(false),
            pilot_samples: self.pilot_samples,
        }
    }
}
