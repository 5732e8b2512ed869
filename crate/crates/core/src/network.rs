//! Dense directed network containers.
//!
//! Every network on `n` nodes stores an `n × n` row-major matrix whose
//! diagonal is fixed at zero and never read. The `m = n(n-1)` free entries
//! are visited in the *canonical edge order*: row-major, skipping the
//! diagonal, i.e. `(0,1), (0,2), …, (0,n-1), (1,0), (1,2), …`. Every module
//! that flattens edges into a vector uses this order.

use rand::Rng;

use crate::error::{GergmError, Result};

/// Clipping offset applied to restricted weights so that quantile transforms
/// and log-densities stay finite.
pub const BOUNDARY_OFFSET: f64 = 1e-10;

/// Numerical slack tolerated outside `[0, 1]` before [`clamp_to_unit`] rejects.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Number of free directed edges on `n` nodes.
pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1)
}

/// Canonical edge order: row-major over `(i, j)` with `i != j`.
pub fn edge_indices(n: usize) -> impl Iterator<Item = (usize, usize)> + Clone {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
}

fn check_shape(n: usize, len: usize) -> Result<()> {
    if n < 2 {
        return Err(GergmError::InvalidNetwork(format!(
            "need at least 2 nodes, got {n}"
        )));
    }
    if len != n * n {
        return Err(GergmError::InvalidNetwork(format!(
            "expected {} weights for {n} nodes, got {len}",
            n * n
        )));
    }
    Ok(())
}

/// A network with every off-diagonal weight in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedNetwork {
    n: usize,
    weights: Vec<f64>,
}

impl RestrictedNetwork {
    /// Builds from a row-major `n × n` matrix. The diagonal is ignored.
    pub fn new(n: usize, mut weights: Vec<f64>) -> Result<Self> {
        check_shape(n, weights.len())?;
        for i in 0..n {
            weights[i * n + i] = 0.0;
        }
        for (i, j) in edge_indices(n) {
            let value = weights[i * n + j];
            if !(0.0..=1.0).contains(&value) {
                return Err(GergmError::OutOfUnitInterval { i, j, value });
            }
        }
        Ok(RestrictedNetwork { n, weights })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut weights = vec![0.0; n * n];
        for (i, j) in edge_indices(n) {
            weights[i * n + j] = f(i, j);
        }
        Self::new(n, weights)
    }

    /// Builds from `(i, j, w)` triples; edges not listed are zero.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut weights = vec![0.0; n * n];
        for (i, j, w) in edges {
            if i >= n || j >= n || i == j {
                return Err(GergmError::InvalidNetwork(format!(
                    "edge ({i}, {j}) is not a valid off-diagonal index for {n} nodes"
                )));
            }
            weights[i * n + j] = w;
        }
        Self::new(n, weights)
    }

    pub fn constant(n: usize, w: f64) -> Result<Self> {
        Self::from_fn(n, |_, _| w)
    }

    /// Independent `Uniform(0,1)` edges, kept off the exact boundary.
    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut weights = vec![0.0; n * n];
        for (i, j) in edge_indices(n) {
            weights[i * n + j] = rng
                .gen::<f64>()
                .clamp(BOUNDARY_OFFSET, 1.0 - BOUNDARY_OFFSET);
        }
        RestrictedNetwork { n, weights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        edge_count(self.n)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Caller guarantees `i != j` and `0 <= w <= 1`.
    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, w: f64) {
        debug_assert!(i != j && (0.0..=1.0).contains(&w));
        self.weights[i * self.n + j] = w;
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Row-major matrix with zero diagonal.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        edge_indices(self.n).map(move |(i, j)| (i, j, self.get(i, j)))
    }

    /// Edge weights in canonical order.
    pub fn edge_vector(&self) -> Vec<f64> {
        self.edges().map(|(_, _, w)| w).collect()
    }

    /// Mean edge weight `Σ x_ij / m`.
    pub fn density(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum::<f64>() / self.num_edges() as f64
    }
}

/// Clips a matrix into `[δ, 1-δ]` after checking it lies within numerical
/// tolerance of the unit interval.
pub fn clamp_to_unit(n: usize, weights: &[f64]) -> Result<RestrictedNetwork> {
    check_shape(n, weights.len())?;
    let mut out = vec![0.0; n * n];
    for (i, j) in edge_indices(n) {
        let value = weights[i * n + j];
        if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&value) || value.is_nan() {
            return Err(GergmError::OutOfUnitInterval { i, j, value });
        }
        out[i * n + j] = value.clamp(BOUNDARY_OFFSET, 1.0 - BOUNDARY_OFFSET);
    }
    Ok(RestrictedNetwork { n, weights: out })
}

/// A network of real-valued directed weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedNetwork {
    n: usize,
    weights: Vec<f64>,
}

impl ObservedNetwork {
    pub fn new(n: usize, mut weights: Vec<f64>) -> Result<Self> {
        check_shape(n, weights.len())?;
        for i in 0..n {
            weights[i * n + i] = 0.0;
        }
        for (i, j) in edge_indices(n) {
            if !weights[i * n + j].is_finite() {
                return Err(GergmError::InvalidNetwork(format!(
                    "edge ({i}, {j}) has non-finite weight {}",
                    weights[i * n + j]
                )));
            }
        }
        Ok(ObservedNetwork { n, weights })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut weights = vec![0.0; n * n];
        for (i, j) in edge_indices(n) {
            weights[i * n + j] = f(i, j);
        }
        Self::new(n, weights)
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut weights = vec![0.0; n * n];
        for (i, j, w) in edges {
            if i >= n || j >= n || i == j {
                return Err(GergmError::InvalidNetwork(format!(
                    "edge ({i}, {j}) is not a valid off-diagonal index for {n} nodes"
                )));
            }
            weights[i * n + j] = w;
        }
        Self::new(n, weights)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        edge_count(self.n)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        edge_indices(self.n).map(move |(i, j)| (i, j, self.get(i, j)))
    }

    pub fn edge_vector(&self) -> Vec<f64> {
        self.edges().map(|(_, _, w)| w).collect()
    }
}

/// How a covariate enters the location of the marginal transform.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CovariateTerm {
    Intercept,
    /// Node covariate of the sender, `D[i][j] = v[i]`.
    Sender(String),
    /// Node covariate of the receiver, `D[i][j] = v[j]`.
    Receiver(String),
    /// A dyadic covariate matrix used as-is.
    Dyad(String),
}

impl CovariateTerm {
    pub fn label(&self) -> String {
        match self {
            CovariateTerm::Intercept => "intercept".to_string(),
            CovariateTerm::Sender(c) => format!("sender({c})"),
            CovariateTerm::Receiver(c) => format!("receiver({c})"),
            CovariateTerm::Dyad(c) => format!("dyad({c})"),
        }
    }
}

impl std::str::FromStr for CovariateTerm {
    type Err = GergmError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "intercept" {
            return Ok(CovariateTerm::Intercept);
        }
        let inner = |prefix: &str| -> Option<String> {
            s.strip_prefix(prefix)
                .and_then(|rest| rest.strip_prefix('('))
                .and_then(|rest| rest.strip_suffix(')'))
                .map(|name| name.trim().to_string())
                .filter(|name| !name.is_empty())
        };
        if let Some(name) = inner("sender") {
            Ok(CovariateTerm::Sender(name))
        } else if let Some(name) = inner("receiver") {
            Ok(CovariateTerm::Receiver(name))
        } else if let Some(name) = inner("dyad") {
            Ok(CovariateTerm::Dyad(name))
        } else {
            Err(GergmError::InvalidTransform(format!(
                "unknown covariate term '{s}' (expected intercept, sender(col), receiver(col) or dyad(name))"
            )))
        }
    }
}

/// Node-level and dyadic covariates for a network on `n` nodes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CovariateSet {
    n: usize,
    node: Vec<(String, Vec<f64>)>,
    dyadic: Vec<(String, Vec<f64>)>,
}

impl CovariateSet {
    pub fn new(n: usize) -> Self {
        CovariateSet {
            n,
            node: Vec::new(),
            dyadic: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_name(&self, name: &str) -> Result<()> {
        if self.node.iter().chain(&self.dyadic).any(|(c, _)| c == name) {
            return Err(GergmError::InvalidTransform(format!(
                "duplicate covariate name '{name}'"
            )));
        }
        Ok(())
    }

    pub fn add_node(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        self.check_name(&name)?;
        if values.len() != self.n {
            return Err(GergmError::InvalidTransform(format!(
                "node covariate '{name}' has {} values, network has {} nodes",
                values.len(),
                self.n
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(GergmError::InvalidTransform(format!(
                "node covariate '{name}' contains non-finite value {v}"
            )));
        }
        self.node.push((name, values));
        Ok(())
    }

    /// Adds an `n × n` row-major matrix. The diagonal is ignored.
    pub fn add_dyadic(&mut self, name: impl Into<String>, mut matrix: Vec<f64>) -> Result<()> {
        let name = name.into();
        self.check_name(&name)?;
        if matrix.len() != self.n * self.n {
            return Err(GergmError::InvalidTransform(format!(
                "dyadic covariate '{name}' has {} entries, expected {}",
                matrix.len(),
                self.n * self.n
            )));
        }
        for i in 0..self.n {
            matrix[i * self.n + i] = 0.0;
        }
        if let Some(v) = matrix.iter().find(|v| !v.is_finite()) {
            return Err(GergmError::InvalidTransform(format!(
                "dyadic covariate '{name}' contains non-finite value {v}"
            )));
        }
        self.dyadic.push((name, matrix));
        Ok(())
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.node.iter().map(|(c, _)| c.as_str())
    }

    pub fn dyadic_names(&self) -> impl Iterator<Item = &str> {
        self.dyadic.iter().map(|(c, _)| c.as_str())
    }

    pub fn node_covariate(&self, name: &str) -> Option<&[f64]> {
        self.node
            .iter()
            .find(|(c, _)| c == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn dyadic_covariate(&self, name: &str) -> Option<&[f64]> {
        self.dyadic
            .iter()
            .find(|(c, _)| c == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Expands a term into an `n × n` design matrix (zero diagonal).
    pub fn design_matrix(&self, term: &CovariateTerm) -> Result<Vec<f64>> {
        let n = self.n;
        let missing = |kind: &str, name: &str| {
            GergmError::InvalidTransform(format!("unknown {kind} covariate '{name}'"))
        };
        let mut out = vec![0.0; n * n];
        match term {
            CovariateTerm::Intercept => {
                for (i, j) in edge_indices(n) {
                    out[i * n + j] = 1.0;
                }
            }
            CovariateTerm::Sender(name) => {
                let v = self.node_covariate(name).ok_or_else(|| missing("node", name))?;
                for (i, j) in edge_indices(n) {
                    out[i * n + j] = v[i];
                }
            }
            CovariateTerm::Receiver(name) => {
                let v = self.node_covariate(name).ok_or_else(|| missing("node", name))?;
                for (i, j) in edge_indices(n) {
                    out[i * n + j] = v[j];
                }
            }
            CovariateTerm::Dyad(name) => {
                let d = self
                    .dyadic_covariate(name)
                    .ok_or_else(|| missing("dyadic", name))?;
                out.copy_from_slice(d);
            }
        }
        Ok(out)
    }
}
