use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gergm::samplers::SamplerKind;
use gergm::Family;

use crate::error::{fail, CliResult, Stage};
use crate::manifest::{NamedPath, NetworkFormat, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "gergm", version, about = "Fit, simulate and diagnose generalized exponential random graph models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Estimate θ and β from an observed network.
    Fit(CommonArgs),
    /// Draw networks from a model with known coefficients.
    Simulate(CommonArgs),
    /// Compare observed statistics with networks simulated at a fit.
    Gof(CommonArgs),
    /// Scan one coefficient over its estimate ± 2 SE and track density.
    Hysteresis(CommonArgs),
    /// Two-star model sweep over θ_ITS and α.
    Sweep(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Fit(a) | Command::Simulate(a) | Command::Gof(a) | Command::Hysteresis(a) | Command::Sweep(a) => a,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON manifest; flags below override its fields.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long = "node-covariates")]
    pub node_covariates: Option<PathBuf>,
    /// NAME=PATH, repeatable.
    #[arg(long = "dyadic-covariate", value_name = "NAME=PATH")]
    pub dyadic_covariate: Vec<String>,
    /// kind:alpha:mode[:normalize], repeatable.
    #[arg(long = "stats", value_name = "SPEC")]
    pub stats: Vec<String>,
    /// Coefficients, comma-separated, one per statistic.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long)]
    pub family: Option<String>,
    /// intercept | sender(col) | receiver(col) | dyad(name), repeatable.
    #[arg(long = "term")]
    pub term: Vec<String>,
    /// Transform parameters, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long = "estimate-scale")]
    pub estimate_scale: bool,
    #[arg(long)]
    pub log1p: bool,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long = "burnin")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long = "proposal-sigma")]
    pub proposal_sigma: Option<f64>,
    #[arg(long = "target-accept")]
    pub target_accept: Option<f64>,
    /// Keep the proposal scale fixed instead of tuning it.
    #[arg(long = "no-tune")]
    pub no_tune: bool,
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "max-outer-iters")]
    pub max_outer_iters: Option<usize>,
    #[arg(long = "max-theta-iters")]
    pub max_theta_iters: Option<usize>,
    #[arg(long = "pilot-samples")]
    pub pilot_samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<NetworkFormat>,
    #[arg(long = "fit-report")]
    pub fit_report: Option<PathBuf>,
    /// Scanned statistic: label, kind or zero-based index.
    #[arg(long)]
    pub which: Option<String>,
    #[arg(long)]
    pub se: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long = "theta-e", allow_hyphen_values = true)]
    pub theta_e: Option<f64>,
    #[arg(long = "theta-its", value_delimiter = ',', allow_hyphen_values = true)]
    pub theta_its: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long = "dip-replicates")]
    pub dip_replicates: Option<usize>,
}

impl CommonArgs {
    /// The manifest file (or defaults) with every given flag applied.
    pub fn to_manifest(&self) -> CliResult<RunManifest> {
        let mut m = match &self.manifest {
            Some(p) => RunManifest::load(p)?,
            None => RunManifest::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    m.$field = v.clone().into();
                }
            )*};
        }
        set!(network, node_covariates, theta, beta, nodes, samples, burn_in, fit_report, which, se);
        if let Some(v) = self.scale {
            m.scale = v;
        }
        if let Some(v) = self.thin {
            m.thin = v;
        }
        if let Some(v) = self.proposal_sigma {
            m.proposal_sigma = v;
        }
        if let Some(v) = self.target_accept {
            m.target_accept = v;
        }
        if let Some(v) = self.seed {
            m.seed = v;
        }
        if let Some(v) = self.max_outer_iters {
            m.max_outer_iters = v;
        }
        if let Some(v) = self.max_theta_iters {
            m.max_theta_iters = v;
        }
        if let Some(v) = self.pilot_samples {
            m.pilot_samples = v;
        }
        if let Some(v) = &self.out {
            m.out = v.clone();
        }
        if let Some(v) = self.format {
            m.format = v;
        }
        if let Some(v) = self.points {
            m.points = v;
        }
        if let Some(v) = self.theta_e {
            m.theta_e = v;
        }
        if let Some(v) = &self.theta_its {
            m.theta_its = v.clone();
        }
        if let Some(v) = &self.alphas {
            m.alphas = v.clone();
        }
        if let Some(v) = self.bins {
            m.bins = v;
        }
        if let Some(v) = self.dip_replicates {
            m.dip_replicates = v;
        }
        if let Some(f) = &self.family {
            m.family = f.parse::<Family>().stage("manifest")?;
        }
        if let Some(s) = &self.sampler {
            m.sampler = s.parse::<SamplerKind>().stage("manifest")?;
        }
        if !self.stats.is_empty() {
            m.stats = self.stats.clone();
        }
        if !self.term.is_empty() {
            m.terms = self.term.clone();
        }
        if !self.dyadic_covariate.is_empty() {
            m.dyadic_covariates = self
                .dyadic_covariate
                .iter()
                .map(|d| match d.split_once('=') {
                    Some((name, path)) if !name.trim().is_empty() => {
                        Ok(NamedPath { name: name.trim().to_string(), path: PathBuf::from(path.trim()) })
                    }
                    _ => fail("manifest", format!("dyadic covariate '{d}' is not NAME=PATH")),
                })
                .collect::<CliResult<_>>()?;
        }
        m.estimate_scale |= self.estimate_scale;
        m.log1p |= self.log1p;
        if self.no_tune {
            m.tune = false;
        }
        Ok(m)
    }
}

impl Cli {
    pub fn resolve(&self) -> CliResult<(Command, RunManifest)> {
        Ok((self.command.clone(), self.command.args().to_manifest()?))
    }
}
