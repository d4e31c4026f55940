//! Edge-inclusion matrices from sampler traces, and graph point estimates.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::PrecisionMatrix;
use crate::graph::{all_pairs, pair_count, Edge, Graph};
use crate::samplers::{SamplerKind, SamplerTrace, Snapshot};

/// Symmetric matrix of edge-inclusion probabilities with where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeInclusionMatrix {
    p: usize,
    values: Vec<f64>,
    pub sampler: Option<SamplerKind>,
    /// States that contributed.
    pub states: usize,
    pub weighted: bool,
}

impl EdgeInclusionMatrix {
    /// From pair-indexed probabilities (see [`Edge::index`]).
    pub fn from_pair_values(p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != pair_count(p) {
            return Err(Error::DimensionMismatch { expected: pair_count(p), found: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("inclusion probability {v} outside [0, 1]")));
        }
        Ok(Self { p, values, sampler: None, states: 0, weighted: false })
    }

    /// The matrix at a trace snapshot.
    pub fn from_snapshot(trace: &SamplerTrace, snap: &Snapshot) -> Self {
        Self {
            p: trace.p(),
            values: snap.inclusion.clone(),
            sampler: Some(trace.sampler()),
            states: snap.states.saturating_sub(trace.burn_in()),
            weighted: trace.weighted(),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return f64::NAN;
        }
        self.values[Edge::new(i, j).expect("distinct nodes").index(self.p)]
    }

    pub fn pair_values(&self) -> &[f64] {
        &self.values
    }

    /// Dense symmetric matrix with a zero diagonal.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| if i == j { 0.0 } else { self.get(i, j) })
    }

    /// Dense CSV; provenance lines first, prefixed `#`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# ggmsl-inclusion v1\n");
        let name = self.sampler.map_or("unknown", |s| s.name());
        out.push_str(&format!("# sampler={name} states={} weighted={}\n", self.states, self.weighted));
        out.push_str(&crate::gaussian::matrix_to_csv(&self.to_matrix()));
        out
    }
}

/// `p_ij = Σ_s w_s 1[(i,j) ∈ G_s] / Σ_s w_s` over states after `burn_in`.
pub fn edge_inclusion(trace: &SamplerTrace, burn_in: usize) -> Result<EdgeInclusionMatrix> {
    if burn_in >= trace.len() {
        return Err(Error::Empty(format!("burn-in {burn_in} leaves no states out of {}", trace.len())));
    }
    let p = trace.p();
    let values = if burn_in == trace.burn_in() {
        trace.running_inclusion()
    } else {
        let mut sums = vec![0.0; pair_count(p)];
        let mut total = 0.0;
        let mut seen = 0usize;
        trace.for_each_state(|g, w| {
            seen += 1;
            if seen > burn_in {
                total += w;
                for e in g.edges() {
                    sums[e.index(p)] += w;
                }
            }
        })?;
        sums.into_iter().map(|s| (s / total).clamp(0.0, 1.0)).collect()
    };
    Ok(EdgeInclusionMatrix {
        p,
        values,
        sampler: Some(trace.sampler()),
        states: trace.len() - burn_in,
        weighted: trace.weighted(),
    })
}

/// Edges with `p_ij > t` (strict, so ties at `t` are excluded).
pub fn select_graph_threshold(p: &EdgeInclusionMatrix, t: f64) -> Result<Graph> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold {t} must lie in (0, 1)")));
    }
    let mut g = Graph::new(p.p());
    for (e, &v) in all_pairs(p.p()).zip(&p.values) {
        if v > t {
            g.insert(e);
        }
    }
    Ok(g)
}

/// Linear interpolation between order statistics at probability `q`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Keeps `(i, j)` unless the central `level` interval of the sampled `k_ij`
/// contains zero.
pub fn select_graph_credible(samples: &[PrecisionMatrix], level: f64) -> Result<Graph> {
    if samples.len() < 2 {
        return Err(Error::Empty("credible intervals need at least two samples".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("level {level} must lie in (0, 1)")));
    }
    let p = samples[0].p();
    if let Some(k) = samples.iter().find(|k| k.p() != p) {
        return Err(Error::DimensionMismatch { expected: p, found: k.p() });
    }
    let tail = (1.0 - level) / 2.0;
    let mut g = Graph::new(p);
    let mut vals = Vec::with_capacity(samples.len());
    for e in all_pairs(p) {
        vals.clear();
        vals.extend(samples.iter().map(|k| k.get(e.i(), e.j())));
        vals.sort_by(f64::total_cmp);
        let (lo, hi) = (quantile(&vals, tail), quantile(&vals, 1.0 - tail));
        if !(lo <= 0.0 && 0.0 <= hi) {
            g.insert(e);
        }
    }
    Ok(g)
}
