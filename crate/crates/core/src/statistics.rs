//! Network statistics `h(x)` and their change statistics.
//!
//! Six subgraph sums are supported, each built from products of distinct
//! edge weights:
//!
//! | kind                | raw sum                                                   | terms        |
//! |---------------------|-----------------------------------------------------------|--------------|
//! | `reciprocity`       | `Σ_{i<j} x_ij x_ji`                                       | `C(n,2)`     |
//! | `cyclic_triads`     | `Σ_{i<j<k} (x_ij x_jk x_ki + x_ik x_kj x_ji)`             | `2 C(n,3)`   |
//! | `in_two_stars`      | `Σ_i Σ_{j<k, j,k≠i} x_ji x_ki`                            | `n C(n-1,2)` |
//! | `out_two_stars`     | `Σ_i Σ_{j<k, j,k≠i} x_ij x_ik`                            | `n C(n-1,2)` |
//! | `edge_density`      | `Σ_{i≠j} x_ij`                                            | `n(n-1)`     |
//! | `transitive_triads` | six transitive orientations per `i<j<k`                   | `6 C(n,3)`   |
//!
//! Under [`Weighting::Outside`] the (optionally normalized) raw sum is raised
//! to the power `α`; under [`Weighting::Inside`] every subgraph product is
//! raised to `α` before summing. Because every product involves distinct
//! edges, `Π x^α = (Π x)^α`, so inside weighting is the raw sum evaluated on
//! the element-wise powered network.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GergmError, Result};
use crate::network::{edge_indices, RestrictedNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Reciprocity,
    CyclicTriads,
    InTwoStars,
    OutTwoStars,
    EdgeDensity,
    TransitiveTriads,
}

impl StatKind {
    pub const ALL: [StatKind; 6] = [
        StatKind::Reciprocity,
        StatKind::CyclicTriads,
        StatKind::InTwoStars,
        StatKind::OutTwoStars,
        StatKind::EdgeDensity,
        StatKind::TransitiveTriads,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatKind::Reciprocity => "reciprocity",
            StatKind::CyclicTriads => "cyclic_triads",
            StatKind::InTwoStars => "in_two_stars",
            StatKind::OutTwoStars => "out_two_stars",
            StatKind::EdgeDensity => "edge_density",
            StatKind::TransitiveTriads => "transitive_triads",
        }
    }

    /// Number of subgraph terms in the raw sum on `n` nodes.
    pub fn term_count(self, n: usize) -> f64 {
        let n = n as f64;
        let pairs = n * (n - 1.0) / 2.0;
        let triples = n * (n - 1.0) * (n - 2.0) / 6.0;
        match self {
            StatKind::Reciprocity => pairs,
            StatKind::CyclicTriads => 2.0 * triples,
            StatKind::InTwoStars | StatKind::OutTwoStars => n * (n - 1.0) * (n - 2.0) / 2.0,
            StatKind::EdgeDensity => n * (n - 1.0),
            StatKind::TransitiveTriads => 6.0 * triples,
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatKind {
    type Err = GergmError;

    fn from_str(s: &str) -> Result<Self> {
        StatKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| GergmError::InvalidStatistic(format!("unknown statistic '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    None,
    Inside,
    Outside,
}

impl Weighting {
    pub fn name(self) -> &'static str {
        match self {
            Weighting::None => "none",
            Weighting::Inside => "inside",
            Weighting::Outside => "outside",
        }
    }
}

impl FromStr for Weighting {
    type Err = GergmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Weighting::None),
            "inside" => Ok(Weighting::Inside),
            "outside" => Ok(Weighting::Outside),
            other => Err(GergmError::InvalidStatistic(format!(
                "unknown weighting mode '{other}'"
            ))),
        }
    }
}

/// One statistic of the model: its kind, weighting exponent and mode, and
/// whether the raw sum is divided by its number of subgraph terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatSpec {
    pub kind: StatKind,
    pub alpha: f64,
    pub mode: Weighting,
    pub normalize: bool,
}

impl StatSpec {
    pub fn new(kind: StatKind, alpha: f64, mode: Weighting, normalize: bool) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(GergmError::InvalidStatistic(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(StatSpec {
            kind,
            alpha,
            mode,
            normalize,
        })
    }

    /// Unweighted, unnormalized statistic.
    pub fn linear(kind: StatKind) -> Self {
        StatSpec {
            kind,
            alpha: 1.0,
            mode: Weighting::None,
            normalize: false,
        }
    }

    pub fn outside(kind: StatKind, alpha: f64) -> Result<Self> {
        Self::new(kind, alpha, Weighting::Outside, false)
    }

    pub fn inside(kind: StatKind, alpha: f64) -> Result<Self> {
        Self::new(kind, alpha, Weighting::Inside, false)
    }

    pub fn normalized(mut self) -> Self {
        self.normalize = true;
        self
    }

    /// The exponent actually applied; `mode = none` ignores `alpha`.
    pub fn effective_alpha(&self) -> f64 {
        match self.mode {
            Weighting::None => 1.0,
            _ => self.alpha,
        }
    }

    /// Multilinear in every edge, i.e. usable by the Gibbs sampler.
    pub fn is_linear(&self) -> bool {
        self.effective_alpha() == 1.0
    }

    /// Same statistic with the weighting dropped.
    pub fn relaxed(&self) -> Self {
        StatSpec {
            kind: self.kind,
            alpha: 1.0,
            mode: Weighting::None,
            normalize: self.normalize,
        }
    }

    /// `kind:alpha:mode[:normalize]`, the form accepted by [`FromStr`].
    pub fn label(&self) -> String {
        let mut s = format!("{}:{}:{}", self.kind, self.alpha, self.mode.name());
        if self.normalize {
            s.push_str(":normalize");
        }
        s
    }

    fn scale(&self, n: usize) -> f64 {
        // a statistic with no terms is identically zero; leave it unscaled
        if self.normalize && self.kind.term_count(n) > 0.0 {
            1.0 / self.kind.term_count(n)
        } else {
            1.0
        }
    }
}

impl FromStr for StatSpec {
    type Err = GergmError;

    /// Parses `kind[:alpha[:mode[:normalize]]]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.is_empty() || parts.len() > 4 {
            return Err(GergmError::InvalidStatistic(format!(
                "expected kind:alpha:mode[:normalize], got '{s}'"
            )));
        }
        let kind: StatKind = parts[0].parse()?;
        let alpha = match parts.get(1) {
            Some(a) => a.parse::<f64>().map_err(|_| {
                GergmError::InvalidStatistic(format!("alpha '{a}' is not a number in '{s}'"))
            })?,
            None => 1.0,
        };
        let mode = match parts.get(2) {
            Some(m) => m.parse()?,
            None => Weighting::None,
        };
        let normalize = match parts.get(3).copied() {
            None | Some("") | Some("raw") | Some("false") | Some("0") => false,
            Some("normalize") | Some("normalized") | Some("true") | Some("1") => true,
            Some(other) => {
                return Err(GergmError::InvalidStatistic(format!(
                    "unknown normalize flag '{other}' in '{s}'"
                )))
            }
        };
        StatSpec::new(kind, alpha, mode, normalize)
    }
}

/// The model's statistics together with their coefficients `θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticSet {
    specs: Vec<StatSpec>,
    theta: Vec<f64>,
}

impl StatisticSet {
    pub fn new(specs: Vec<StatSpec>, theta: Vec<f64>) -> Result<Self> {
        if specs.len() != theta.len() {
            return Err(GergmError::InvalidStatistic(format!(
                "{} statistics but {} coefficients",
                specs.len(),
                theta.len()
            )));
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return Err(GergmError::InvalidStatistic(format!(
                "non-finite coefficient {t}"
            )));
        }
        Ok(StatisticSet { specs, theta })
    }

    /// All coefficients zero.
    pub fn zeros(specs: Vec<StatSpec>) -> Self {
        let theta = vec![0.0; specs.len()];
        StatisticSet { specs, theta }
    }

    pub fn empty() -> Self {
        StatisticSet {
            specs: Vec::new(),
            theta: Vec::new(),
        }
    }

    pub fn specs(&self) -> &[StatSpec] {
        &self.specs
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        StatisticSet::new(self.specs.clone(), theta)
    }

    /// Each spec replaced by its unweighted relaxation, same coefficients.
    pub fn relaxed(&self) -> Self {
        StatisticSet {
            specs: self.specs.iter().map(StatSpec::relaxed).collect(),
            theta: self.theta.clone(),
        }
    }

    pub fn values(&self, x: &RestrictedNetwork) -> Vec<f64> {
        stat_vector(x, self)
    }

    /// `θ'h(x)`.
    pub fn energy(&self, x: &RestrictedNetwork) -> f64 {
        dot(&self.theta, &self.values(x))
    }

    pub fn labels(&self) -> Vec<String> {
        self.specs.iter().map(StatSpec::label).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn powered(w: &[f64], alpha: f64) -> Vec<f64> {
    w.iter().map(|v| v.powf(alpha)).collect()
}

/// `W²` with zero diagonal on `W`, so `(W²)_ac = Σ_{b≠a,c} w_ab w_bc`.
fn square(w: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        let row = &mut out[a * n..(a + 1) * n];
        for b in 0..n {
            let wab = w[a * n + b];
            if wab == 0.0 {
                continue;
            }
            let wb = &w[b * n..(b + 1) * n];
            for (o, &wbc) in row.iter_mut().zip(wb) {
                *o += wab * wbc;
            }
        }
    }
    out
}

fn raw_value(kind: StatKind, w: &[f64], n: usize) -> f64 {
    match kind {
        StatKind::EdgeDensity => w.iter().sum(),
        StatKind::Reciprocity => {
            let mut acc = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    acc += w[i * n + j] * w[j * n + i];
                }
            }
            acc
        }
        StatKind::InTwoStars => {
            let mut acc = 0.0;
            for c in 0..n {
                let (mut s, mut s2) = (0.0, 0.0);
                for r in 0..n {
                    let v = w[r * n + c];
                    s += v;
                    s2 += v * v;
                }
                acc += 0.5 * (s * s - s2);
            }
            acc
        }
        StatKind::OutTwoStars => {
            let mut acc = 0.0;
            for c in 0..n {
                let row = &w[c * n..(c + 1) * n];
                let s: f64 = row.iter().sum();
                let s2: f64 = row.iter().map(|v| v * v).sum();
                acc += 0.5 * (s * s - s2);
            }
            acc
        }
        StatKind::CyclicTriads => {
            let sq = square(w, n);
            let mut acc = 0.0;
            for a in 0..n {
                for c in 0..n {
                    acc += sq[a * n + c] * w[c * n + a];
                }
            }
            acc / 3.0
        }
        StatKind::TransitiveTriads => {
            let sq = square(w, n);
            sq.iter().zip(w).map(|(s, v)| s * v).sum()
        }
    }
}

fn raw_gradient(kind: StatKind, w: &[f64], n: usize, i: usize, j: usize) -> f64 {
    match kind {
        StatKind::EdgeDensity => 1.0,
        StatKind::Reciprocity => w[j * n + i],
        StatKind::InTwoStars => (0..n).map(|k| w[k * n + j]).sum::<f64>() - w[i * n + j],
        StatKind::OutTwoStars => (0..n).map(|k| w[i * n + k]).sum::<f64>() - w[i * n + j],
        StatKind::CyclicTriads => (0..n).map(|k| w[j * n + k] * w[k * n + i]).sum(),
        StatKind::TransitiveTriads => (0..n)
            .map(|k| {
                let (wik, wjk) = (w[i * n + k], w[j * n + k]);
                let (wki, wkj) = (w[k * n + i], w[k * n + j]);
                wjk * wik + wki * wkj + wik * wkj
            })
            .sum(),
    }
}

fn raw_gradient_matrix(kind: StatKind, w: &[f64], n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    match kind {
        StatKind::EdgeDensity => {
            for (i, j) in edge_indices(n) {
                g[i * n + j] = 1.0;
            }
        }
        StatKind::Reciprocity => {
            for (i, j) in edge_indices(n) {
                g[i * n + j] = w[j * n + i];
            }
        }
        StatKind::InTwoStars => {
            let col: Vec<f64> = (0..n).map(|c| (0..n).map(|r| w[r * n + c]).sum()).collect();
            for (i, j) in edge_indices(n) {
                g[i * n + j] = col[j] - w[i * n + j];
            }
        }
        StatKind::OutTwoStars => {
            let row: Vec<f64> = (0..n).map(|r| w[r * n..(r + 1) * n].iter().sum()).collect();
            for (i, j) in edge_indices(n) {
                g[i * n + j] = row[i] - w[i * n + j];
            }
        }
        StatKind::CyclicTriads => {
            let sq = square(w, n);
            for (i, j) in edge_indices(n) {
                g[i * n + j] = sq[j * n + i];
            }
        }
        StatKind::TransitiveTriads => {
            let sq = square(w, n);
            for (i, j) in edge_indices(n) {
                let mut acc = sq[i * n + j];
                for k in 0..n {
                    acc += w[i * n + k] * w[j * n + k] + w[k * n + i] * w[k * n + j];
                }
                g[i * n + j] = acc;
            }
        }
    }
    g
}

/// Value of a single statistic.
pub fn stat_value(x: &RestrictedNetwork, spec: &StatSpec) -> f64 {
    let n = x.n();
    let alpha = spec.effective_alpha();
    let base = if spec.mode == Weighting::Inside && alpha != 1.0 {
        raw_value(spec.kind, &powered(x.weights(), alpha), n)
    } else {
        raw_value(spec.kind, x.weights(), n)
    } * spec.scale(n);
    if spec.mode == Weighting::Outside && alpha != 1.0 {
        base.powf(alpha)
    } else {
        base
    }
}

/// `h(x)` for every statistic in the set, in set order.
pub fn stat_vector(x: &RestrictedNetwork, set: &StatisticSet) -> Vec<f64> {
    set.specs().iter().map(|s| stat_value(x, s)).collect()
}

fn singular(spec: &StatSpec, i: usize, j: usize) -> GergmError {
    GergmError::SingularGradient {
        kind: spec.label(),
        i,
        j,
    }
}

/// Exact partial derivative `∂h/∂x_ij` of one statistic.
///
/// Outside weighting with `α < 1` divides by `h^{1-α}`, so a zero raw sum is
/// reported as [`GergmError::SingularGradient`].
pub fn change_gradient(x: &RestrictedNetwork, spec: &StatSpec, i: usize, j: usize) -> Result<f64> {
    assert!(i != j, "change_gradient on diagonal entry ({i}, {i})");
    let n = x.n();
    let alpha = spec.effective_alpha();
    let scale = spec.scale(n);
    if alpha == 1.0 {
        return Ok(raw_gradient(spec.kind, x.weights(), n, i, j) * scale);
    }
    match spec.mode {
        Weighting::None => unreachable!(),
        Weighting::Inside => {
            let wp = powered(x.weights(), alpha);
            let rg = raw_gradient(spec.kind, &wp, n, i, j);
            inside_chain(rg, x.get(i, j), alpha)
                .map(|g| g * scale)
                .ok_or_else(|| singular(spec, i, j))
        }
        Weighting::Outside => {
            let base = raw_value(spec.kind, x.weights(), n) * scale;
            if base <= 0.0 {
                return Err(singular(spec, i, j));
            }
            let rg = raw_gradient(spec.kind, x.weights(), n, i, j) * scale;
            Ok(alpha * base.powf(alpha - 1.0) * rg)
        }
    }
}

// d/dx of the powered-network sum: rg(x^α) · α x^{α-1}; zero-weight edges are
// only well defined when the partner product vanishes too.
fn inside_chain(rg: f64, xij: f64, alpha: f64) -> Option<f64> {
    if xij == 0.0 {
        (rg == 0.0).then_some(0.0)
    } else {
        Some(rg * alpha * xij.powf(alpha - 1.0))
    }
}

/// `∂h/∂x_ij` for every edge at once (row-major, zero diagonal); `O(n³)` for
/// the triad statistics.
pub fn gradient_matrix(x: &RestrictedNetwork, spec: &StatSpec) -> Result<Vec<f64>> {
    let n = x.n();
    let alpha = spec.effective_alpha();
    let scale = spec.scale(n);
    if alpha == 1.0 {
        let mut g = raw_gradient_matrix(spec.kind, x.weights(), n);
        g.iter_mut().for_each(|v| *v *= scale);
        return Ok(g);
    }
    match spec.mode {
        Weighting::None => unreachable!(),
        Weighting::Inside => {
            let wp = powered(x.weights(), alpha);
            let mut g = raw_gradient_matrix(spec.kind, &wp, n);
            for (i, j) in edge_indices(n) {
                let k = i * n + j;
                g[k] = inside_chain(g[k], x.get(i, j), alpha).ok_or_else(|| singular(spec, i, j))?
                    * scale;
            }
            Ok(g)
        }
        Weighting::Outside => {
            let base = raw_value(spec.kind, x.weights(), n) * scale;
            if base <= 0.0 {
                return Err(singular(spec, 0, 1));
            }
            let factor = alpha * base.powf(alpha - 1.0) * scale;
            let mut g = raw_gradient_matrix(spec.kind, x.weights(), n);
            g.iter_mut().for_each(|v| *v *= factor);
            Ok(g)
        }
    }
}

/// `θ'∂h(x)/∂x_ij`, the tilt of the Gibbs full conditional.
pub fn theta_dot_gradient(x: &RestrictedNetwork, set: &StatisticSet, i: usize, j: usize) -> Result<f64> {
    let mut acc = 0.0;
    for (spec, &t) in set.specs().iter().zip(set.theta()) {
        if t != 0.0 {
            acc += t * change_gradient(x, spec, i, j)?;
        }
    }
    Ok(acc)
}

/// `θ'∂h(x)/∂x` over all edges (row-major, zero diagonal).
pub fn theta_dot_gradient_matrix(x: &RestrictedNetwork, set: &StatisticSet) -> Result<Vec<f64>> {
    let n = x.n();
    let mut acc = vec![0.0; n * n];
    for (spec, &t) in set.specs().iter().zip(set.theta()) {
        if t != 0.0 {
            let g = gradient_matrix(x, spec)?;
            acc.iter_mut().zip(g).for_each(|(a, v)| *a += t * v);
        }
    }
    Ok(acc)
}
