//! Exact graph posteriors on a handful of nodes, by enumerating every graph.
//! Used to check the stationary laws of the samplers.

use rand::Rng;

use super::mpl::NodeScore;
use super::trace::SamplerTrace;
use crate::error::{Error, Result};
use crate::gaussian::{gwishart_log_norm, sample_wishart, GWishartParams, NormMethod, ScatterMatrix};
use crate::graph::{all_pairs, pair_count};
use crate::priors::{graph_code, graph_from_code, log_normal, GraphPrior, SpikeSlabParams, MAX_TABULATED_P};

fn check_p(p: usize) -> Result<usize> {
    if !(2..=MAX_TABULATED_P).contains(&p) {
        return Err(Error::InvalidParameter(format!("enumeration needs 2 <= p <= {MAX_TABULATED_P}")));
    }
    Ok(1 << pair_count(p))
}

fn normalize(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// `P(G | Y) ∝ exp(score(G)) P(G)`, indexed by graph code.
pub fn pl_posterior<S: NodeScore>(scorer: &mut S, prior: &GraphPrior, p: usize) -> Result<Vec<f64>> {
    let count = check_p(p)?;
    let mut log_w = Vec::with_capacity(count);
    for code in 0..count {
        let g = graph_from_code(p, code);
        let mut total = prior.log_prior(&g)?;
        for j in 0..p {
            let nbrs: Vec<usize> = g.neighbor_iter(j).collect();
            total += scorer.local(j, &nbrs);
        }
        log_w.push(total);
    }
    Ok(normalize(&log_w))
}

/// `P(G | Y) ∝ P(G) I_G(b + n, D + S) / I_G(b, D)`. Exact when every graph is
/// decomposable (always for `p <= 3`); otherwise Monte Carlo with `mc_samples`.
pub fn gwishart_posterior<R: Rng + ?Sized>(
    s: &ScatterMatrix,
    params: &GWishartParams,
    prior: &GraphPrior,
    mc_samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let p = s.p();
    let count = check_p(p)?;
    let post = params.posterior(s.matrix(), s.n())?;
    let mut log_w = Vec::with_capacity(count);
    for code in 0..count {
        let g = graph_from_code(p, code);
        let a = gwishart_log_norm(&g, &post, NormMethod::Auto, mc_samples, rng)?;
        let b = gwishart_log_norm(&g, params, NormMethod::Auto, mc_samples, rng)?;
        log_w.push(prior.log_prior(&g)? + a.log_value - b.log_value);
    }
    Ok(normalize(&log_w))
}

/// Graph marginal of the spike-and-slab model with Bernoulli(π) indicators.
///
/// Given `G`, the diagonal prior times the likelihood is a Wishart kernel with
/// `n + p + 1` degrees of freedom and scale `(S + λI)⁻¹`, so
/// `P(G | Y) ∝ P(G) E_W[Π_{i<j} N(k_ij | 0, v_ij(G))]`. The expectation is
/// estimated with the same `draws` Wishart samples for every graph.
pub fn ss_posterior<R: Rng + ?Sized>(
    s: &ScatterMatrix,
    params: &SpikeSlabParams,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    params.validate()?;
    let p = s.p();
    let count = check_p(p)?;
    if draws == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let d = s.matrix() + nalgebra::DMatrix::identity(p, p) * params.lambda;
    // df = b + p - 1 = n + p + 1
    let wishart = GWishartParams::new(s.n() as f64 + 2.0, d)?;
    let pairs: Vec<_> = all_pairs(p).collect();
    let mut log_terms = vec![Vec::with_capacity(draws); count];
    for _ in 0..draws {
        let k = sample_wishart(&wishart, rng)?;
        let slab: Vec<f64> = pairs.iter().map(|e| log_normal(k.get(e.i(), e.j()), params.v)).collect();
        let spike: Vec<f64> = pairs.iter().map(|e| log_normal(k.get(e.i(), e.j()), params.epsilon)).collect();
        for (code, terms) in log_terms.iter_mut().enumerate() {
            let mut t = 0.0;
            for k in 0..pairs.len() {
                t += if code >> k & 1 == 1 { slab[k] } else { spike[k] };
            }
            terms.push(t);
        }
    }
    let bern = GraphPrior::bernoulli(params.pi)?;
    let mut log_w = Vec::with_capacity(count);
    for (code, terms) in log_terms.iter().enumerate() {
        let (lm, _) = crate::gaussian::log_mean_exp(terms);
        log_w.push(bern.log_prior(&graph_from_code(p, code))? + lm);
    }
    Ok(normalize(&log_w))
}

/// Weighted visit frequencies of every graph after `burn_in` states.
pub fn visit_distribution(trace: &SamplerTrace, burn_in: usize) -> Result<Vec<f64>> {
    let count = check_p(trace.p())?;
    let mut freq = vec![0.0; count];
    let mut seen = 0usize;
    trace.for_each_state(|g, w| {
        if seen >= burn_in {
            freq[graph_code(g)] += w;
        }
        seen += 1;
    })?;
    let total: f64 = freq.iter().sum();
    if total <= 0.0 {
        return Err(Error::Empty("no states after burn-in".into()));
    }
    Ok(freq.into_iter().map(|f| f / total).collect())
}

/// `½ Σ |a - b|`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Pair-indexed edge marginals of a distribution over graph codes.
pub fn edge_marginals(dist: &[f64], p: usize) -> Vec<f64> {
    let mut out = vec![0.0; pair_count(p)];
    for (code, &w) in dist.iter().enumerate() {
        for (k, o) in out.iter_mut().enumerate() {
            if code >> k & 1 == 1 {
                *o += w;
            }
        }
    }
    out
}
