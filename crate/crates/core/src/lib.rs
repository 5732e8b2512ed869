//! Generalized exponential random graph models (GERGMs) for directed,
//! continuous-weighted networks.
//!
//! A GERGM splits a weighted network into two layers. The *restricted*
//! network `x ∈ [0,1]^m` carries all dependence through an exponential family
//! `f(x; θ) ∝ exp(θ'h(x))`, and a coordinate-wise cdf transform maps observed
//! real-valued weights `y` onto `x`, with covariates entering through the
//! location of the marginal distribution.
//!
//! Module map:
//!
//! * [`network`]: dense network containers, canonical edge order, covariates.
//! * [`statistics`]: reciprocity, triads, two-stars and edge density under
//!   α-inside / α-outside weighting, with analytic change statistics.
//! * [`transform`]: Gaussian and Cauchy marginal transforms and the log-Jacobian.
//! * [`samplers`]: truncated-normal Metropolis–Hastings and Gibbs samplers.
//! * [`estimation`]: Monte Carlo maximum likelihood for `(θ, β)`.
//! * [`diagnostics`]: Geweke, dip test, goodness of fit, hysteresis, two-star sweeps.
//! * [`io`]: delimited-text loaders and writers.

pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod io;
pub mod network;
pub mod rng;
pub mod samplers;
pub mod special;
pub mod statistics;
pub mod transform;

pub use error::{GergmError, Result};
pub use network::{CovariateSet, ObservedNetwork, RestrictedNetwork};
pub use statistics::{StatKind, StatSpec, StatisticSet, Weighting};
pub use transform::{Family, TransformSpec};
