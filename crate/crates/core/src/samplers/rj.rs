use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::trace::{Recorder, SamplerTrace};
use super::{uniform_pair, SamplerConfig, SamplerKind};
use crate::error::{Error, Result};
use crate::gaussian::{
    gwishart_log_norm, scatter, CbfParts, DataMatrix, GWishartParams, GWishartState, NormMethod, ScatterMatrix,
};
use crate::graph::{Edge, Graph};
use crate::priors::GraphPrior;

/// How the prior normalizing-constant ratio in the acceptance ratio is handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RjStrategy {
    /// Exchange with an auxiliary draw from the prior on the proposed graph.
    Exchange,
    /// Plug in estimated prior normalizing constants, cached per graph.
    McEstimate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RjOptions {
    pub strategy: RjStrategy,
    /// Column updates of the auxiliary draw on the proposed graph.
    pub aux_rounds: usize,
    /// Full posterior sweeps per iteration on top of the two touched columns.
    pub refresh_sweeps: usize,
    /// Importance samples per constant for [`RjStrategy::McEstimate`].
    pub mc_samples: usize,
}

impl Default for RjOptions {
    fn default() -> Self {
        Self { strategy: RjStrategy::Exchange, aux_rounds: 1, refresh_sweeps: 0, mc_samples: 500 }
    }
}

/// Reversible-jump sampler on `(G, K)` under a G-Wishart prior.
pub fn run_rj(
    y: &DataMatrix,
    params: &GWishartParams,
    prior: &GraphPrior,
    config: &SamplerConfig,
    options: &RjOptions,
) -> Result<SamplerTrace> {
    run_rj_scatter(&scatter(y), params, prior, config, options)
}

/// Moves `K` between `G` and `G ± e` by changing only `φ_ij` (and hence
/// `k_ij`, `k_jj`) with `i, j` ordered last in the Cholesky factor.
pub(crate) fn dimension_match<R: Rng + ?Sized>(
    state: &mut GWishartState,
    parts: &CbfParts,
    e: Edge,
    add: bool,
    rng: &mut R,
) {
    let x = if add {
        parts.mean() + rng.sample::<f64, _>(StandardNormal) / parts.d_jj.sqrt()
    } else {
        parts.phi_zero
    };
    let (i, j) = (e.i(), e.j());
    let k = state.precision_mut();
    let k_ij = if add { parts.c1 + parts.phi_ii * x } else { 0.0 };
    k[(i, j)] = k_ij;
    k[(j, i)] = k_ij;
    k[(j, j)] += x * x - parts.phi_ij * parts.phi_ij;
    state.resync_column(j);
}

pub(crate) fn check_params(s: &ScatterMatrix, params: &GWishartParams) -> Result<GWishartParams> {
    if params.p() != s.p() {
        return Err(Error::DimensionMismatch { expected: s.p(), found: params.p() });
    }
    params.posterior(s.matrix(), s.n())
}

/// Cached `log I_G(b, D)` by graph.
pub(crate) struct ConstCache {
    map: HashMap<Graph, f64>,
    method: NormMethod,
    samples: usize,
}

impl ConstCache {
    pub fn new(method: NormMethod, samples: usize) -> Self {
        Self { map: HashMap::new(), method, samples }
    }

    pub fn get<R: Rng + ?Sized>(&mut self, g: &Graph, params: &GWishartParams, rng: &mut R) -> Result<f64> {
        if let Some(v) = self.map.get(g) {
            return Ok(*v);
        }
        let v = gwishart_log_norm(g, params, self.method, self.samples, rng)?.log_value;
        self.map.insert(g.clone(), v);
        Ok(v)
    }
}

/// Columns touched by a move on `e`, the changed column first.
pub(crate) fn touched(e: Edge) -> [usize; 2] {
    [e.j(), e.i()]
}

pub(crate) fn run_rj_scatter(
    s: &ScatterMatrix,
    params: &GWishartParams,
    prior: &GraphPrior,
    config: &SamplerConfig,
    options: &RjOptions,
) -> Result<SamplerTrace> {
    let p = s.p();
    config.validate(p)?;
    let post = check_params(s, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut g = config.start_graph(p);
    prior.log_prior(&g)?;

    let mut state = GWishartState::initial(&post);
    state.sweep(&g, &post, &mut rng)?;
    let mut aux = GWishartState::initial(params);
    aux.sweep(&g, params, &mut rng)?;
    let mut cache = ConstCache::new(NormMethod::Auto, options.mc_samples);
    let mut rec = Recorder::new(SamplerKind::Rj, false, &g, config);

    for _ in 0..config.iterations {
        let e = uniform_pair(p, &mut rng);
        let cols = touched(e);
        let add = !g.contains(e);
        let mut proposed = g.clone();
        proposed.toggle(e);
        let parts = CbfParts::new(state.precision(), state.covariance(), post.d(), e);
        let data_term = if add { parts.log_cbf() } else { -parts.log_cbf() };
        let mut aux_draw = None;
        let aux_term = match options.strategy {
            RjStrategy::Exchange => {
                // Carry the prior chain on G over to G ± e, then refresh the
                // touched columns under the proposed graph.
                let mut w = aux.clone();
                let wp = CbfParts::new(w.precision(), w.covariance(), params.d(), e);
                dimension_match(&mut w, &wp, e, add, &mut rng);
                for _ in 0..options.aux_rounds.max(1) {
                    w.update_columns(&proposed, params, &cols, &mut rng)?;
                }
                let c = CbfParts::new(w.precision(), w.covariance(), params.d(), e).log_cbf();
                aux_draw = Some(w);
                if add {
                    -c
                } else {
                    c
                }
            }
            RjStrategy::McEstimate => cache.get(&g, params, &mut rng)? - cache.get(&proposed, params, &mut rng)?,
        };
        let log_alpha = prior.log_ratio_toggle(&g, e)? + data_term + aux_term;
        if log_alpha.is_nan() {
            return Err(Error::Numerical(format!("acceptance ratio is NaN for pair {e}")));
        }
        let mut toggles = Vec::new();
        if log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha {
            dimension_match(&mut state, &parts, e, add, &mut rng);
            g = proposed;
            if let Some(w) = aux_draw {
                aux = w;
            }
            toggles.push(e);
        } else if options.strategy == RjStrategy::Exchange {
            aux.update_columns(&g, params, &cols, &mut rng)?;
        }
        state.update_columns(&g, &post, &cols, &mut rng)?;
        for _ in 0..options.refresh_sweeps {
            state.sweep(&g, &post, &mut rng)?;
        }
        rec.record(toggles, 1.0);
        if config.out_of_time(rec.elapsed()) {
            break;
        }
    }
    Ok(rec.finish())
}
