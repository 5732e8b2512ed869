//! Marginal transform between observed weights `y` and restricted weights `x`.
//!
//! Edge `(i, j)` has location `μ_ij = Σ_k β_k D_k[i, j]` over the design
//! matrices `D_k` and a global scale `c`. The forward map is the marginal cdf,
//! `x_ij = F((y_ij - μ_ij) / c)`, with `F` the standard normal or standard
//! Cauchy cdf. Its derivative `t_ij = f((y_ij - μ_ij)/c) / c` is the marginal
//! pdf, and `Σ log t_ij` is the Jacobian term of the observed-data likelihood.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GergmError, Result};
use crate::network::{clamp_to_unit, edge_indices, CovariateSet, CovariateTerm, ObservedNetwork, RestrictedNetwork};
use crate::special;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    /// Student-t with one degree of freedom.
    Cauchy,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Cauchy => "cauchy",
        }
    }

    pub fn cdf(self, z: f64) -> f64 {
        match self {
            Family::Gaussian => special::norm_cdf(z),
            Family::Cauchy => special::cauchy_cdf(z),
        }
    }

    pub fn quantile(self, p: f64) -> f64 {
        match self {
            Family::Gaussian => special::norm_quantile(p),
            Family::Cauchy => special::cauchy_quantile(p),
        }
    }

    pub fn log_pdf(self, z: f64) -> f64 {
        match self {
            Family::Gaussian => special::norm_logpdf(z),
            Family::Cauchy => special::cauchy_logpdf(z),
        }
    }

    /// `d log f(z) / dz`.
    fn score(self, z: f64) -> f64 {
        match self {
            Family::Gaussian => -z,
            Family::Cauchy => -2.0 * z / (1.0 + z * z),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GergmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Family::Gaussian),
            "cauchy" => Ok(Family::Cauchy),
            other => Err(GergmError::InvalidTransform(format!(
                "unknown family '{other}' (expected gaussian or cauchy)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignTerm {
    pub name: String,
    /// Row-major `n × n`, zero diagonal.
    pub matrix: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformSpec {
    family: Family,
    n: usize,
    design: Vec<DesignTerm>,
    beta: Vec<f64>,
    scale: f64,
    estimate_scale: bool,
}

impl TransformSpec {
    pub fn new(family: Family, n: usize, design: Vec<DesignTerm>, beta: Vec<f64>, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(GergmError::InvalidTransform(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if beta.len() != design.len() {
            return Err(GergmError::InvalidTransform(format!(
                "{} coefficients for {} design terms",
                beta.len(),
                design.len()
            )));
        }
        for d in &design {
            if d.matrix.len() != n * n {
                return Err(GergmError::InvalidTransform(format!(
                    "design term '{}' is not {n} x {n}",
                    d.name
                )));
            }
        }
        if let Some(b) = beta.iter().find(|b| !b.is_finite()) {
            return Err(GergmError::InvalidTransform(format!("non-finite coefficient {b}")));
        }
        Ok(TransformSpec {
            family,
            n,
            design,
            beta,
            scale,
            estimate_scale: false,
        })
    }

    /// Expands covariate terms (sender/receiver become row/column-constant
    /// matrices) with all coefficients zero.
    pub fn from_terms(family: Family, covariates: &CovariateSet, terms: &[CovariateTerm], scale: f64) -> Result<Self> {
        let design = terms
            .iter()
            .map(|t| {
                Ok(DesignTerm {
                    name: t.label(),
                    matrix: covariates.design_matrix(t)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let k = design.len();
        TransformSpec::new(family, covariates.n(), design, vec![0.0; k], scale)
    }

    /// No covariates: every edge has location 0.
    pub fn standard(family: Family, n: usize) -> Self {
        TransformSpec {
            family,
            n,
            design: Vec::new(),
            beta: Vec::new(),
            scale: 1.0,
            estimate_scale: false,
        }
    }

    /// Intercept-only design with the given location and scale.
    pub fn intercept(family: Family, n: usize, location: f64, scale: f64) -> Result<Self> {
        let covariates = CovariateSet::new(n);
        let mut spec = TransformSpec::from_terms(family, &covariates, &[CovariateTerm::Intercept], scale)?;
        spec.beta[0] = location;
        Ok(spec)
    }

    pub fn with_scale_estimated(mut self, estimate: bool) -> Self {
        self.estimate_scale = estimate;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn estimates_scale(&self) -> bool {
        self.estimate_scale
    }

    pub fn design(&self) -> &[DesignTerm] {
        &self.design
    }

    pub fn term_names(&self) -> Vec<String> {
        self.design.iter().map(|d| d.name.clone()).collect()
    }

    pub fn with_beta(&self, beta: Vec<f64>) -> Result<Self> {
        let mut out = TransformSpec::new(self.family, self.n, self.design.clone(), beta, self.scale)?;
        out.estimate_scale = self.estimate_scale;
        Ok(out)
    }

    /// Optimization vector: `β`, followed by `ln c` when the scale is estimated.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.beta.clone();
        if self.estimate_scale {
            p.push(self.scale.ln());
        }
        p
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = self.term_names();
        if self.estimate_scale {
            names.push("log_scale".to_string());
        }
        names
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let k = self.design.len();
        let expected = k + usize::from(self.estimate_scale);
        if params.len() != expected {
            return Err(GergmError::InvalidTransform(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        let scale = if self.estimate_scale { params[k].exp() } else { self.scale };
        let mut out = TransformSpec::new(self.family, self.n, self.design.clone(), params[..k].to_vec(), scale)?;
        out.estimate_scale = self.estimate_scale;
        Ok(out)
    }

    #[inline]
    pub fn location(&self, i: usize, j: usize) -> f64 {
        let idx = i * self.n + j;
        self.design
            .iter()
            .zip(&self.beta)
            .map(|(d, b)| b * d.matrix[idx])
            .sum()
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(GergmError::InvalidTransform(format!(
                "transform built for {} nodes applied to a {n}-node network",
                self.n
            )));
        }
        Ok(())
    }

    fn standardized(&self, y: &ObservedNetwork, i: usize, j: usize) -> f64 {
        (y.get(i, j) - self.location(i, j)) / self.scale
    }
}

/// `x = T(y, β)`: marginal cdf per edge, clipped into `[δ, 1-δ]`.
pub fn to_restricted(y: &ObservedNetwork, spec: &TransformSpec) -> Result<RestrictedNetwork> {
    spec.check_n(y.n())?;
    let n = y.n();
    let mut w = vec![0.0; n * n];
    for (i, j) in edge_indices(n) {
        w[i * n + j] = spec.family.cdf(spec.standardized(y, i, j));
    }
    clamp_to_unit(n, &w)
}

/// `y = T⁻¹(x, β)`: marginal quantile per edge.
pub fn from_restricted(x: &RestrictedNetwork, spec: &TransformSpec) -> Result<ObservedNetwork> {
    spec.check_n(x.n())?;
    let n = x.n();
    let mut w = vec![0.0; n * n];
    for (i, j, v) in x.edges() {
        if v <= 0.0 || v >= 1.0 {
            return Err(GergmError::UnboundedQuantile { i, j, value: v });
        }
        w[i * n + j] = spec.location(i, j) + spec.scale * spec.family.quantile(v);
    }
    ObservedNetwork::new(n, w)
}

/// `Σ_ij log t_ij(y, β)`.
pub fn log_jacobian(y: &ObservedNetwork, spec: &TransformSpec) -> f64 {
    assert_eq!(y.n(), spec.n, "network/transform size mismatch");
    let ln_c = spec.scale.ln();
    edge_indices(y.n())
        .map(|(i, j)| spec.family.log_pdf(spec.standardized(y, i, j)) - ln_c)
        .sum()
}

/// Gradient of [`log_jacobian`] with respect to [`TransformSpec::params`].
pub fn log_jacobian_gradient(y: &ObservedNetwork, spec: &TransformSpec) -> Vec<f64> {
    let k = spec.design.len();
    let n = y.n();
    let mut g = vec![0.0; k + usize::from(spec.estimate_scale)];
    for (i, j) in edge_indices(n) {
        let z = spec.standardized(y, i, j);
        let score = spec.family.score(z);
        // dz/dβ_k = -D_k / c
        for (gk, d) in g.iter_mut().zip(&spec.design) {
            *gk -= score * d.matrix[i * n + j] / spec.scale;
        }
        if spec.estimate_scale {
            // dz/d ln c = -z, plus the -ln c term
            g[k] += -score * z - 1.0;
        }
    }
    g
}

/// Per-edge derivatives `∂x_ij/∂params` of the (unclipped) forward map, as a
/// list of row-major matrices, one per parameter.
pub fn restricted_param_jacobian(y: &ObservedNetwork, spec: &TransformSpec) -> Vec<Vec<f64>> {
    let n = y.n();
    let k = spec.design.len();
    let mut out = vec![vec![0.0; n * n]; k + usize::from(spec.estimate_scale)];
    for (i, j) in edge_indices(n) {
        let z = spec.standardized(y, i, j);
        let pdf = spec.family.log_pdf(z).exp();
        let idx = i * n + j;
        for (m, d) in out.iter_mut().zip(&spec.design) {
            m[idx] = -pdf * d.matrix[idx] / spec.scale;
        }
        if spec.estimate_scale {
            out[k][idx] = -pdf * z;
        }
    }
    out
}

/// Entry-wise `ln(1 + y)`; weights must be non-negative.
pub fn log1p_preprocess(y: &ObservedNetwork) -> Result<ObservedNetwork> {
    let n = y.n();
    let mut w = vec![0.0; n * n];
    for (i, j, v) in y.edges() {
        if v < 0.0 {
            return Err(GergmError::NegativeWeight { i, j, value: v });
        }
        w[i * n + j] = v.ln_1p();
    }
    ObservedNetwork::new(n, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;
    use std::f64::consts::{E, PI};

    fn random_design(n: usize, k: usize, seed: u64) -> Vec<DesignTerm> {
        let mut rng = seeded(seed);
        (0..k)
            .map(|t| DesignTerm {
                name: format!("d{t}"),
                matrix: (0..n * n)
                    .map(|idx| if idx / n == idx % n { 0.0 } else { rng.gen_range(-1.0..1.0) })
                    .collect(),
            })
            .collect()
    }

    fn random_y(n: usize, seed: u64, spread: f64) -> ObservedNetwork {
        let mut rng = seeded(seed);
        ObservedNetwork::from_fn(n, |_, _| rng.gen_range(-spread..spread)).unwrap()
    }

    #[test]
    fn median_maps_to_half() {
        let spec = TransformSpec::intercept(Family::Cauchy, 3, 1.7, 2.0).unwrap();
        let y = ObservedNetwork::from_fn(3, |_, _| 1.7).unwrap();
        let x = to_restricted(&y, &spec).unwrap();
        assert!(x.edges().all(|(_, _, v)| (v - 0.5).abs() < 1e-15));
        let back = from_restricted(&x, &spec).unwrap();
        assert!(back.edges().all(|(_, _, v)| (v - 1.7).abs() < 1e-12));

        let g = TransformSpec::standard(Family::Gaussian, 2);
        let y0 = ObservedNetwork::from_fn(2, |_, _| 0.0).unwrap();
        assert!(to_restricted(&y0, &g).unwrap().edges().all(|(_, _, v)| v == 0.5));
    }

    #[test]
    fn gaussian_quantile_example() {
        let g = TransformSpec::standard(Family::Gaussian, 2);
        let p = special::norm_cdf(1.0);
        let x = RestrictedNetwork::from_fn(2, |_, _| p).unwrap();
        let y = from_restricted(&x, &g).unwrap();
        assert!(y.edges().all(|(_, _, v)| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn boundary_is_an_unbounded_quantile() {
        let g = TransformSpec::standard(Family::Cauchy, 2);
        let x = RestrictedNetwork::from_edges(2, [(0, 1, 1.0), (1, 0, 0.5)]).unwrap();
        assert!(matches!(
            from_restricted(&x, &g),
            Err(GergmError::UnboundedQuantile { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn roundtrip_on_random_networks() {
        for (family, seed) in [(Family::Gaussian, 1), (Family::Cauchy, 2), (Family::Gaussian, 3)] {
            let n = 5;
            let design = random_design(n, 3, seed);
            let spec = TransformSpec::new(family, n, design, vec![0.4, -1.0, 0.25], 1.3).unwrap();
            let y = random_y(n, seed + 10, 3.0);
            let back = from_restricted(&to_restricted(&y, &spec).unwrap(), &spec).unwrap();
            for ((_, _, a), (_, _, b)) in y.edges().zip(back.edges()) {
                assert!((a - b).abs() < 1e-8, "{family}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quantile_map_is_strictly_increasing() {
        let mut rng = seeded(77);
        for family in [Family::Gaussian, Family::Cauchy] {
            let spec = TransformSpec::intercept(family, 2, -0.3, 0.7).unwrap();
            for _ in 0..1000 {
                let a: f64 = rng.gen_range(1e-6..1.0 - 1e-6);
                let b: f64 = rng.gen_range(1e-6..1.0 - 1e-6);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                if lo == hi {
                    continue;
                }
                let ylo = from_restricted(&RestrictedNetwork::constant(2, lo).unwrap(), &spec).unwrap();
                let yhi = from_restricted(&RestrictedNetwork::constant(2, hi).unwrap(), &spec).unwrap();
                assert!(ylo.get(0, 1) < yhi.get(0, 1));
            }
        }
    }

    #[test]
    fn single_edge_log_jacobian() {
        let y = ObservedNetwork::from_edges(2, [(0, 1, 0.0), (1, 0, 0.0)]).unwrap();
        let g = TransformSpec::standard(Family::Gaussian, 2);
        assert!((log_jacobian(&y, &g) / 2.0 - (-0.918939)).abs() < 1e-6);
        let c = TransformSpec::standard(Family::Cauchy, 2);
        assert!((log_jacobian(&y, &c) / 2.0 - (1.0 / PI).ln()).abs() < 1e-12);
        assert!((log_jacobian(&y, &c) / 2.0 - (-1.144730)).abs() < 1e-6);
    }

    #[test]
    fn log_jacobian_gradient_matches_finite_differences() {
        for (family, est) in [
            (Family::Gaussian, false),
            (Family::Cauchy, false),
            (Family::Gaussian, true),
            (Family::Cauchy, true),
        ] {
            let n = 4;
            let spec = TransformSpec::new(family, n, random_design(n, 3, 5), vec![0.2, 0.5, -0.7], 0.9)
                .unwrap()
                .with_scale_estimated(est);
            let y = random_y(n, 6, 2.0);
            let g = log_jacobian_gradient(&y, &spec);
            let p = spec.params();
            for k in 0..p.len() {
                let h = 1e-6;
                let mut up = p.clone();
                let mut dn = p.clone();
                up[k] += h;
                dn[k] -= h;
                let fd = (log_jacobian(&y, &spec.with_params(&up).unwrap())
                    - log_jacobian(&y, &spec.with_params(&dn).unwrap()))
                    / (2.0 * h);
                assert!((g[k] - fd).abs() / fd.abs().max(1.0) < 1e-6, "{family} k={k}: {} vs {fd}", g[k]);
            }
        }
    }

    #[test]
    fn param_jacobian_matches_finite_differences() {
        let n = 3;
        let spec = TransformSpec::new(Family::Cauchy, n, random_design(n, 2, 8), vec![0.3, -0.2], 1.1)
            .unwrap()
            .with_scale_estimated(true);
        let y = random_y(n, 9, 1.5);
        let jac = restricted_param_jacobian(&y, &spec);
        let p = spec.params();
        for k in 0..p.len() {
            let h = 1e-6;
            let mut up = p.clone();
            let mut dn = p.clone();
            up[k] += h;
            dn[k] -= h;
            let xu = to_restricted(&y, &spec.with_params(&up).unwrap()).unwrap();
            let xd = to_restricted(&y, &spec.with_params(&dn).unwrap()).unwrap();
            for (i, j) in edge_indices(n) {
                let fd = (xu.get(i, j) - xd.get(i, j)) / (2.0 * h);
                assert!((jac[k][i * n + j] - fd).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gaussian_log_jacobian_is_concave_in_beta() {
        for seed in 0..10 {
            let n = 4;
            let spec = TransformSpec::new(Family::Gaussian, n, random_design(n, 3, 100 + seed), vec![0.1, -0.4, 0.9], 1.0)
                .unwrap();
            let y = random_y(n, 200 + seed, 2.0);
            // numerical Hessian from analytic gradients
            let p = spec.params();
            let k = p.len();
            let h = 1e-5;
            let mut hess = nalgebra::DMatrix::zeros(k, k);
            for a in 0..k {
                let mut up = p.clone();
                let mut dn = p.clone();
                up[a] += h;
                dn[a] -= h;
                let gu = log_jacobian_gradient(&y, &spec.with_params(&up).unwrap());
                let gd = log_jacobian_gradient(&y, &spec.with_params(&dn).unwrap());
                for b in 0..k {
                    hess[(a, b)] = (gu[b] - gd[b]) / (2.0 * h);
                }
            }
            let sym = (&hess + hess.transpose()) * 0.5;
            let eig = sym.symmetric_eigenvalues();
            assert!(eig.iter().all(|&e| e <= 1e-6), "eigenvalues {eig}");
        }
    }

    #[test]
    fn zero_coefficients_reduce_to_standard_normal_cdf() {
        let n = 3;
        let spec = TransformSpec::intercept(Family::Gaussian, n, 0.0, 2.0).unwrap();
        let y = random_y(n, 4, 3.0);
        let x = to_restricted(&y, &spec).unwrap();
        for (i, j, v) in x.edges() {
            assert!((v - special::norm_cdf(y.get(i, j) / 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn log1p_examples() {
        let y = ObservedNetwork::from_edges(2, [(0, 1, 0.0), (1, 0, E - 1.0)]).unwrap();
        let t = log1p_preprocess(&y).unwrap();
        assert_eq!(t.get(0, 1), 0.0);
        assert!((t.get(1, 0) - 1.0).abs() < 1e-15);
        let bad = ObservedNetwork::from_edges(2, [(0, 1, -0.5), (1, 0, 1.0)]).unwrap();
        assert!(matches!(log1p_preprocess(&bad), Err(GergmError::NegativeWeight { .. })));
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(TransformSpec::new(Family::Gaussian, 2, vec![], vec![], 0.0).is_err());
        assert!(TransformSpec::new(Family::Gaussian, 2, vec![], vec![1.0], 1.0).is_err());
        assert!("student".parse::<Family>().is_err());
        assert_eq!("cauchy".parse::<Family>().unwrap(), Family::Cauchy);
    }
}
