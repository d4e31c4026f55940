//! Graph priors and precision-matrix prior densities.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gaussian::{GWishartParams, PrecisionMatrix};
use crate::graph::{all_pairs, pair_count, Edge, Graph};
use crate::linalg;

/// Largest node count accepted by [`GraphPrior::tabulated`].
pub const MAX_TABULATED_P: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub enum GraphPrior {
    /// Independent edges with inclusion probability `theta`.
    Bernoulli { theta: f64 },
    /// Explicit normalized log-probabilities indexed by [`graph_code`].
    Tabulated { p: usize, log_probs: Vec<f64> },
}

/// Bitmask of the edge set, bit `k` set iff the pair with index `k` is present.
pub fn graph_code(g: &Graph) -> usize {
    g.edges().fold(0usize, |acc, e| acc | 1 << e.index(g.p()))
}

/// Inverse of [`graph_code`].
pub fn graph_from_code(p: usize, code: usize) -> Graph {
    let mut g = Graph::new(p);
    for e in all_pairs(p) {
        if code >> e.index(p) & 1 == 1 {
            g.insert(e);
        }
    }
    g
}

impl GraphPrior {
    pub fn bernoulli(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!("theta must lie in (0, 1), got {theta}")));
        }
        Ok(Self::Bernoulli { theta })
    }

    /// Normalizes arbitrary log-weights over all graphs on `p <= 5` nodes.
    pub fn tabulated(p: usize, log_weights: Vec<f64>) -> Result<Self> {
        if p > MAX_TABULATED_P {
            return Err(Error::InvalidParameter(format!("tabulated priors need p <= {MAX_TABULATED_P}")));
        }
        let count = 1usize << pair_count(p);
        if log_weights.len() != count {
            return Err(Error::DimensionMismatch { expected: count, found: log_weights.len() });
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::InvalidParameter("tabulated log-weights must be finite or -inf".into()));
        }
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::InvalidParameter("tabulated prior has no mass".into()));
        }
        let log_z = max + log_weights.iter().map(|w| (w - max).exp()).sum::<f64>().ln();
        Ok(Self::Tabulated { p, log_probs: log_weights.into_iter().map(|w| w - log_z).collect() })
    }

    pub fn log_prior(&self, g: &Graph) -> Result<f64> {
        match self {
            Self::Bernoulli { theta } => {
                let e = g.edge_count() as f64;
                let m = pair_count(g.p()) as f64;
                Ok(e * theta.ln() + (m - e) * (1.0 - theta).ln())
            }
            Self::Tabulated { p, log_probs } => {
                if g.p() != *p {
                    return Err(Error::DimensionMismatch { expected: *p, found: g.p() });
                }
                Ok(log_probs[graph_code(g)])
            }
        }
    }

    /// `log P(G + e) - log P(G)` for `e ∉ E`.
    pub fn log_ratio_add(&self, g: &Graph, e: Edge) -> Result<f64> {
        g.check_edge(e)?;
        if g.contains(e) {
            return Err(Error::EdgePresent { i: e.i(), j: e.j() });
        }
        self.log_ratio_toggle(g, e)
    }

    /// `log P(G') - log P(G)` where `G'` toggles `e`.
    pub fn log_ratio_toggle(&self, g: &Graph, e: Edge) -> Result<f64> {
        match self {
            Self::Bernoulli { theta } => {
                let r = theta.ln() - (1.0 - theta).ln();
                Ok(if g.contains(e) { -r } else { r })
            }
            Self::Tabulated { p, log_probs } => {
                if g.p() != *p {
                    return Err(Error::DimensionMismatch { expected: *p, found: g.p() });
                }
                let code = graph_code(g);
                Ok(log_probs[code ^ (1 << e.index(*p))] - log_probs[code])
            }
        }
    }
}

/// Spike-and-slab hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpikeSlabParams {
    /// Spike variance.
    pub epsilon: f64,
    /// Slab variance.
    pub v: f64,
    /// The diagonal prior is exponential with rate `lambda / 2`.
    pub lambda: f64,
    pub pi: f64,
}

impl Default for SpikeSlabParams {
    fn default() -> Self {
        Self { epsilon: 0.02, v: 2.0, lambda: 2.0, pi: 0.2 }
    }
}

impl SpikeSlabParams {
    pub fn new(epsilon: f64, v: f64, lambda: f64, pi: f64) -> Result<Self> {
        let s = Self { epsilon, v, lambda, pi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.v > self.epsilon && self.v.is_finite()) {
            return Err(Error::InvalidParameter("need 0 < epsilon < v".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(Error::InvalidParameter("pi must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Conditional probability that a pair is an edge given its entry `k_ij`.
    pub fn inclusion_probability(&self, k_ij: f64) -> f64 {
        let slab = self.pi.ln() + log_normal(k_ij, self.v);
        let spike = (1.0 - self.pi).ln() + log_normal(k_ij, self.epsilon);
        1.0 / (1.0 + (spike - slab).exp())
    }
}

/// Log density of `N(0, var)` at `x`.
pub(crate) fn log_normal(x: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - x * x / (2.0 * var)
}

/// Log spike-and-slab density of `K`; `-inf` when a diagonal entry is negative.
pub fn spike_slab_log_density(k: &nalgebra::DMatrix<f64>, g: &Graph, params: &SpikeSlabParams) -> Result<f64> {
    params.validate()?;
    let p = g.p();
    if k.nrows() != p || k.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, found: k.nrows() });
    }
    let rate = params.lambda / 2.0;
    let mut total = 0.0;
    for i in 0..p {
        let kii = k[(i, i)];
        if kii < 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += rate.ln() - rate * kii;
        for j in (i + 1)..p {
            let var = if g.has_edge(i, j) { params.v } else { params.epsilon };
            total += log_normal(k[(i, j)], var);
        }
    }
    Ok(total)
}

/// `((b-2)/2) log|K| - tr(KD)/2`, without the normalizing constant.
pub fn gwishart_log_density_unnorm(k: &PrecisionMatrix, g: &Graph, params: &GWishartParams) -> Result<f64> {
    k.check_pattern(g)?;
    if params.p() != k.p() {
        return Err(Error::DimensionMismatch { expected: params.p(), found: k.p() });
    }
    let log_det = linalg::log_det_spd(k.matrix(), "precision matrix")?;
    let trace = k.matrix().component_mul(params.d()).sum();
    Ok((params.b() - 2.0) / 2.0 * log_det - 0.5 * trace)
}
