use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fenwick::Fenwick;
use super::rj::{check_params, dimension_match, touched, ConstCache};
use super::trace::{Recorder, SamplerTrace};
use super::{SamplerConfig, SamplerKind};
use crate::error::{Error, Result};
use crate::gaussian::{
    scatter, CbfParts, DataMatrix, GWishartParams, GWishartState, NormMethod, PrecisionMatrix, ScatterMatrix,
};
use crate::graph::{all_pairs, pair_count, Edge, Graph};
use nalgebra::DMatrix;
use crate::priors::GraphPrior;

/// How the birth-death rates are computed.
///
/// The marginal strategies work on `G` alone with rates
/// `min(1, π(G ± e | Y) / π(G | Y))` from normalizing constants. The joint
/// strategies use the current `K`: the data part of the ratio is the
/// conditional Bayes factor at `K`, so only the prior ratio
/// `I_G(b, D) / I_{G±e}(b, D)` has to be supplied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdStrategy {
    /// Marginal, closed-form constants; every visited graph and its
    /// neighbours must be decomposable.
    Exact,
    /// Marginal, importance-sampling constants cached per graph.
    MonteCarlo { samples: usize },
    /// Joint, prior ratio from cached constants (exact when decomposable).
    JointCached { samples: usize },
    /// Joint, prior ratio averaged over `samples` auxiliary prior chains.
    JointAuxiliary { samples: usize },
}

impl BdStrategy {
    fn joint(&self) -> bool {
        matches!(self, Self::JointCached { .. } | Self::JointAuxiliary { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BdOptions {
    pub strategy: BdStrategy,
    /// Rate of `K`-refresh events for the joint strategies.
    pub refresh_rate: f64,
    /// Random columns updated per refresh event.
    pub refresh_columns: usize,
}

impl Default for BdOptions {
    fn default() -> Self {
        Self { strategy: BdStrategy::JointAuxiliary { samples: 4 }, refresh_rate: 1.0, refresh_columns: 2 }
    }
}

/// Pair-indexed jump rates out of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct BirthDeathRates {
    p: usize,
    present: Vec<bool>,
    /// Log target ratio of toggling each pair.
    pub log_ratios: Vec<f64>,
    /// `min(1, ratio)`.
    pub rates: Vec<f64>,
}

impl BirthDeathRates {
    fn new(g: &Graph, log_ratios: Vec<f64>) -> Result<Self> {
        if let Some(k) = log_ratios.iter().position(|x| x.is_nan()) {
            return Err(Error::Numerical(format!("birth-death rate of pair {} is NaN", Edge::from_index(k, g.p()))));
        }
        let rates = log_ratios.iter().map(|&x| x.min(0.0).exp()).collect();
        let present = all_pairs(g.p()).map(|e| g.contains(e)).collect();
        Ok(Self { p: g.p(), present, log_ratios, rates })
    }

    /// Birth rates of absent pairs.
    pub fn births(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.split(false)
    }

    /// Death rates of present pairs.
    pub fn deaths(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.split(true)
    }

    fn split(&self, present: bool) -> impl Iterator<Item = (Edge, f64)> + '_ {
        let p = self.p;
        (0..self.rates.len())
            .filter(move |&k| self.present[k] == present)
            .map(move |k| (Edge::from_index(k, p), self.rates[k]))
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }
}

fn signed(g: &Graph, e: Edge, log_cbf: f64) -> f64 {
    if g.contains(e) {
        -log_cbf
    } else {
        log_cbf
    }
}

fn log_mean(xs: &[f64]) -> f64 {
    crate::gaussian::log_mean_exp(xs).0
}

/// Joint-space log rate of toggling `e` at `(G, K)`, with the prior ratio
/// estimated from `aux` draws of `W_G(b, D)`.
pub fn joint_log_ratio(
    g: &Graph,
    e: Edge,
    k: &PrecisionMatrix,
    s: &ScatterMatrix,
    params: &GWishartParams,
    prior: &GraphPrior,
    aux: &[PrecisionMatrix],
) -> Result<f64> {
    let post = check_params(s, params)?;
    if aux.is_empty() {
        return Err(Error::Empty("need at least one auxiliary draw".into()));
    }
    let data = signed(g, e, CbfParts::new(k.matrix(), &k.covariance(), post.d(), e).log_cbf());
    let w = aux
        .iter()
        .map(|a| Ok(signed(g, e, CbfParts::new(a.matrix(), &a.covariance(), params.d(), e).log_cbf())))
        .collect::<Result<Vec<_>>>()?;
    Ok(prior.log_ratio_toggle(g, e)? + data - log_mean(&w))
}

/// Rates out of `(G, K)` for every pair at once; see [`joint_log_ratio`].
pub fn joint_birth_death_rates(
    g: &Graph,
    k: &PrecisionMatrix,
    s: &ScatterMatrix,
    params: &GWishartParams,
    prior: &GraphPrior,
    aux: &[PrecisionMatrix],
) -> Result<BirthDeathRates> {
    let post = check_params(s, params)?;
    if aux.is_empty() {
        return Err(Error::Empty("need at least one auxiliary draw".into()));
    }
    let state = GWishartState::new(k.matrix().clone())?;
    let aux = aux.iter().map(|a| GWishartState::new(a.matrix().clone())).collect::<Result<Vec<_>>>()?;
    let mut out = vec![0.0; pair_count(g.p())];
    let present = presence(g);
    add_data_terms(&present, &state, post.d(), &mut out);
    add_aux_terms(&present, &aux, params.d(), &mut out);
    add_prior_terms(g, &present, prior, &mut out)?;
    BirthDeathRates::new(g, out)
}

/// Unsigned log CBF of every pair at `(K, Σ)`, in pair order. Same
/// arithmetic as [`CbfParts::log_cbf`] without the per-pair struct.
fn pair_log_cbfs(state: &GWishartState, d: &DMatrix<f64>, out: &mut [f64]) {
    let (k, sigma) = (state.precision(), state.covariance());
    let p = k.nrows();
    let half_ln: Vec<f64> = (0..p).map(|j| 0.5 * (2.0 * std::f64::consts::PI / d[(j, j)]).ln()).collect();
    let mut idx = 0;
    for i in 0..p {
        let a = sigma[(i, i)];
        for j in i + 1..p {
            let (bb, c) = (sigma[(i, j)], sigma[(j, j)]);
            let det = a * c - bb * bb;
            let phi_ii = (c / det).sqrt();
            let c1 = k[(i, j)] + bb / det;
            let mean = -d[(i, j)] * phi_ii / d[(j, j)];
            let dev = -c1 / phi_ii - mean;
            out[idx] = phi_ii.ln() + half_ln[j] + 0.5 * d[(j, j)] * dev * dev;
            idx += 1;
        }
    }
}

fn presence(g: &Graph) -> Vec<bool> {
    let p = g.p();
    let mut out = Vec::with_capacity(pair_count(p));
    for i in 0..p {
        out.extend((i + 1..p).map(|j| g.has_edge(i, j)));
    }
    out
}

fn add_data_terms(present: &[bool], state: &GWishartState, d: &DMatrix<f64>, out: &mut [f64]) {
    let mut cbf = vec![0.0; out.len()];
    pair_log_cbfs(state, d, &mut cbf);
    for ((o, x), &present) in out.iter_mut().zip(cbf).zip(present) {
        *o += if present { -x } else { x };
    }
}

fn add_aux_terms(present: &[bool], aux: &[GWishartState], d: &DMatrix<f64>, out: &mut [f64]) {
    let m = out.len();
    let mut cbf = vec![0.0; m * aux.len()];
    for (a, chunk) in aux.iter().zip(cbf.chunks_mut(m)) {
        pair_log_cbfs(a, d, chunk);
    }
    let n = aux.len() as f64;
    for (idx, (o, &present)) in out.iter_mut().zip(present).enumerate() {
        let x = |s: usize| if present { -cbf[s * m + idx] } else { cbf[s * m + idx] };
        let top = (0..aux.len()).map(x).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = (0..aux.len()).map(|s| (x(s) - top).exp()).sum();
        *o -= top + (sum / n).ln();
    }
}

fn add_prior_terms(g: &Graph, present: &[bool], prior: &GraphPrior, out: &mut [f64]) -> Result<()> {
    if let GraphPrior::Bernoulli { theta } = prior {
        let r = theta.ln() - (1.0 - theta).ln();
        for (o, &present) in out.iter_mut().zip(present) {
            *o += if present { -r } else { r };
        }
        return Ok(());
    }
    for (o, e) in out.iter_mut().zip(all_pairs(g.p())) {
        *o += prior.log_ratio_toggle(g, e)?;
    }
    Ok(())
}

/// `Σ_e [log I_{G±e}(b*, D*) - log I_G(b*, D*)]`-type differences from a cache,
/// with `sign` applied to each.
fn add_cached_terms<R: Rng + ?Sized>(
    g: &Graph,
    params: &GWishartParams,
    cache: &mut ConstCache,
    sign: f64,
    out: &mut [f64],
    rng: &mut R,
) -> Result<()> {
    let base = cache.get(g, params, rng)?;
    let mut h = g.clone();
    for (o, e) in out.iter_mut().zip(all_pairs(g.p())) {
        h.toggle(e);
        *o += sign * (cache.get(&h, params, rng)? - base);
        h.toggle(e);
    }
    Ok(())
}

fn exact_guard(g: &Graph) -> Result<()> {
    let mut h = g.clone();
    for e in all_pairs(g.p()) {
        h.toggle(e);
        let ok = crate::chordal::is_decomposable(&h);
        h.toggle(e);
        if !ok {
            return Err(Error::NotDecomposable);
        }
    }
    Ok(())
}

fn marginal_caches(strategy: BdStrategy) -> Option<(ConstCache, ConstCache)> {
    let (method, samples) = match strategy {
        BdStrategy::Exact => (NormMethod::Exact, 1),
        BdStrategy::MonteCarlo { samples } => (NormMethod::Auto, samples.max(1)),
        _ => return None,
    };
    Some((ConstCache::new(method, samples), ConstCache::new(method, samples)))
}

fn marginal_rates<R: Rng + ?Sized>(
    g: &Graph,
    strategy: BdStrategy,
    params: &GWishartParams,
    post: &GWishartParams,
    prior: &GraphPrior,
    caches: &mut (ConstCache, ConstCache),
    rng: &mut R,
) -> Result<BirthDeathRates> {
    if strategy == BdStrategy::Exact {
        exact_guard(g)?;
    }
    let mut out = vec![0.0; pair_count(g.p())];
    add_cached_terms(g, post, &mut caches.0, 1.0, &mut out, rng)?;
    add_cached_terms(g, params, &mut caches.1, -1.0, &mut out, rng)?;
    add_prior_terms(g, &presence(g), prior, &mut out)?;
    BirthDeathRates::new(g, out)
}

/// Rates of the marginal strategies out of `g`, which need no `K`.
pub fn birth_death_rates<R: Rng + ?Sized>(
    g: &Graph,
    s: &ScatterMatrix,
    params: &GWishartParams,
    prior: &GraphPrior,
    strategy: BdStrategy,
    rng: &mut R,
) -> Result<BirthDeathRates> {
    let post = check_params(s, params)?;
    if g.p() != s.p() {
        return Err(Error::DimensionMismatch { expected: s.p(), found: g.p() });
    }
    let mut caches = marginal_caches(strategy)
        .ok_or_else(|| Error::InvalidParameter("joint strategies need K; use joint_birth_death_rates".into()))?;
    marginal_rates(g, strategy, params, &post, prior, &mut caches, rng)
}

/// Continuous-time birth-death sampler; states are weighted by their expected
/// holding times.
pub fn run_bd(
    y: &DataMatrix,
    params: &GWishartParams,
    prior: &GraphPrior,
    config: &SamplerConfig,
    options: &BdOptions,
) -> Result<SamplerTrace> {
    run_bd_scatter(&scatter(y), params, prior, config, options)
}

fn random_columns<R: Rng + ?Sized>(p: usize, count: usize, rng: &mut R) -> Vec<usize> {
    (0..count).map(|_| rng.random_range(0..p)).collect()
}

pub(crate) fn run_bd_scatter(
    s: &ScatterMatrix,
    params: &GWishartParams,
    prior: &GraphPrior,
    config: &SamplerConfig,
    options: &BdOptions,
) -> Result<SamplerTrace> {
    let p = s.p();
    config.validate(p)?;
    if !(options.refresh_rate >= 0.0 && options.refresh_rate.is_finite()) {
        return Err(Error::InvalidParameter("refresh rate must be finite and non-negative".into()));
    }
    let post = check_params(s, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut g = config.start_graph(p);
    prior.log_prior(&g)?;
    let mut rec = Recorder::new(SamplerKind::Bd, true, &g, config);
    let mut pending = Vec::new();

    let strategy = options.strategy;
    let mut caches = marginal_caches(strategy);
    let mut prior_cache = match strategy {
        BdStrategy::JointCached { samples } => Some(ConstCache::new(NormMethod::Auto, samples.max(1))),
        _ => None,
    };
    let n_aux = match strategy {
        BdStrategy::JointAuxiliary { samples } => samples.max(1),
        _ => 0,
    };
    let mut state = GWishartState::initial(&post);
    let mut aux: Vec<GWishartState> = (0..n_aux).map(|_| GWishartState::initial(params)).collect();
    if strategy.joint() {
        state.sweep(&g, &post, &mut rng)?;
        for a in aux.iter_mut() {
            a.sweep(&g, params, &mut rng)?;
        }
    }
    let refresh_rate = if strategy.joint() { options.refresh_rate } else { 0.0 };

    for _ in 0..config.iterations {
        let rates = if let Some(c) = caches.as_mut() {
            marginal_rates(&g, strategy, params, &post, prior, c, &mut rng)?
        } else {
            let mut out = vec![0.0; pair_count(p)];
            let present = presence(&g);
            add_data_terms(&present, &state, post.d(), &mut out);
            match prior_cache.as_mut() {
                Some(c) => add_cached_terms(&g, params, c, -1.0, &mut out, &mut rng)?,
                None => add_aux_terms(&present, &aux, params.d(), &mut out),
            }
            add_prior_terms(&g, &present, prior, &mut out)?;
            BirthDeathRates::new(&g, out)?
        };
        let jump_total = rates.total();
        let total = jump_total + refresh_rate;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numerical(format!("total event rate is {total}")));
        }
        rec.record(std::mem::take(&mut pending), 1.0 / total);
        if config.out_of_time(rec.elapsed()) {
            break;
        }

        let u = rng.random::<f64>() * total;
        if u < jump_total {
            let tree = Fenwick::from_values(rates.rates);
            let e = Edge::from_index(tree.find(u), p);
            let add = !g.contains(e);
            if strategy.joint() {
                let parts = CbfParts::new(state.precision(), state.covariance(), post.d(), e);
                dimension_match(&mut state, &parts, e, add, &mut rng);
            }
            g.toggle(e);
            for a in aux.iter_mut() {
                let parts = CbfParts::new(a.precision(), a.covariance(), params.d(), e);
                dimension_match(a, &parts, e, add, &mut rng);
                a.update_columns(&g, params, &touched(e), &mut rng)?;
            }
            pending.push(e);
        } else {
            let cols = random_columns(p, options.refresh_columns.max(1), &mut rng);
            state.update_columns(&g, &post, &cols, &mut rng)?;
            for a in aux.iter_mut() {
                let cols = random_columns(p, options.refresh_columns.max(1), &mut rng);
                a.update_columns(&g, params, &cols, &mut rng)?;
            }
        }
    }
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{log_ratio_single_edge, sample_gwishart, RatioEstimator};
    use crate::samplers::exhaustive::{gwishart_posterior, total_variation, visit_distribution};
    use crate::samplers::testutil::three_node_data;

    fn setup(seed: u64) -> (ScatterMatrix, GWishartParams, GraphPrior, Vec<f64>) {
        let s = scatter(&three_node_data(seed));
        let params = GWishartParams::identity(3, 3.0).unwrap();
        let prior = GraphPrior::bernoulli(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let exact = gwishart_posterior(&s, &params, &prior, 1, &mut rng).unwrap();
        (s, params, prior, exact)
    }

    fn options(strategy: BdStrategy) -> BdOptions {
        BdOptions { strategy, ..BdOptions::default() }
    }

    #[test]
    fn marginal_exact_matches_enumeration() {
        let (s, params, prior, exact) = setup(31);
        let o = options(BdStrategy::Exact);
        let trace = run_bd_scatter(&s, &params, &prior, &SamplerConfig::new(50_000, 2), &o).unwrap();
        let visits = visit_distribution(&trace, 0).unwrap();
        assert!(total_variation(&exact, &visits) < 0.02, "{exact:?} {visits:?}");
    }

    #[test]
    fn joint_cached_matches_enumeration() {
        let (s, params, prior, exact) = setup(32);
        let o = options(BdStrategy::JointCached { samples: 1 });
        let trace = run_bd_scatter(&s, &params, &prior, &SamplerConfig::new(100_000, 3), &o).unwrap();
        let visits = visit_distribution(&trace, 0).unwrap();
        assert!(total_variation(&exact, &visits) < 0.02, "{exact:?} {visits:?}");
    }

    #[test]
    fn joint_auxiliary_matches_enumeration() {
        let (s, params, prior, exact) = setup(33);
        let trace = run_bd_scatter(&s, &params, &prior, &SamplerConfig::new(100_000, 4), &BdOptions::default()).unwrap();
        let visits = visit_distribution(&trace, 0).unwrap();
        assert!(total_variation(&exact, &visits) < 0.05, "{exact:?} {visits:?}");
    }

    #[test]
    fn marginal_rates_match_single_edge_ratios() {
        let (s, params, prior, _) = setup(34);
        let g = Graph::from_pairs(3, [(0, 1)]).unwrap();
        let post = params.posterior(s.matrix(), s.n()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let batch = birth_death_rates(&g, &s, &params, &prior, BdStrategy::Exact, &mut rng).unwrap();
        let est = RatioEstimator::default();
        for (k, e) in all_pairs(3).enumerate() {
            let a = log_ratio_single_edge(&g, e, &post, &est, &mut rng).unwrap().value;
            let b = log_ratio_single_edge(&g, e, &params, &est, &mut rng).unwrap().value;
            let want = prior.log_ratio_toggle(&g, e).unwrap() + a - b;
            assert!((batch.log_ratios[k] - want).abs() < 1e-9, "{k}: {} vs {want}", batch.log_ratios[k]);
            assert!(batch.rates[k] <= 1.0 && batch.rates[k] > 0.0);
        }
        assert_eq!(batch.births().count(), 2);
        assert_eq!(batch.deaths().map(|(e, _)| e).collect::<Vec<_>>(), vec![Edge::new(0, 1).unwrap()]);
        let split: f64 = batch.births().chain(batch.deaths()).map(|(_, r)| r).sum();
        assert!((split - batch.total()).abs() < 1e-15);
        assert!(birth_death_rates(&g, &s, &params, &prior, BdStrategy::JointCached { samples: 1 }, &mut rng).is_err());
    }

    #[test]
    fn joint_rates_batch_equals_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k_true = crate::gaussian::PrecisionMatrix::identity(5);
        let s = scatter(&crate::gaussian::sample_mvn(&k_true, 25, &mut rng).unwrap());
        let params = GWishartParams::identity(5, 3.0).unwrap();
        let prior = GraphPrior::bernoulli(0.2).unwrap();
        let g = Graph::from_pairs(5, [(0, 1), (1, 2), (3, 4), (0, 4)]).unwrap();
        let post = params.posterior(s.matrix(), s.n()).unwrap();
        let k = sample_gwishart(&g, &post, 5, &mut rng).unwrap();
        let aux: Vec<_> = (0..3).map(|_| sample_gwishart(&g, &params, 5, &mut rng).unwrap()).collect();
        let batch = joint_birth_death_rates(&g, &k, &s, &params, &prior, &aux).unwrap();
        for (idx, e) in all_pairs(5).enumerate() {
            let single = joint_log_ratio(&g, e, &k, &s, &params, &prior, &aux).unwrap();
            assert!((single - batch.log_ratios[idx]).abs() < 1e-9);
            assert!(batch.rates[idx] > 0.0 && batch.rates[idx] <= 1.0);
        }
    }

    #[test]
    fn two_node_weighted_share_is_exact() {
        let s = ScatterMatrix::new(nalgebra::DMatrix::from_row_slice(2, 2, &[4.0, 1.5, 1.5, 3.0]), 6).unwrap();
        let params = GWishartParams::identity(2, 3.0).unwrap();
        let prior = GraphPrior::bernoulli(0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let exact = gwishart_posterior(&s, &params, &prior, 1, &mut rng).unwrap();
        let o = options(BdStrategy::Exact);
        let trace = run_bd_scatter(&s, &params, &prior, &SamplerConfig::new(1001, 1), &o).unwrap();
        // Alternating states with weights 1/r_add (empty) and 1/r_del (full):
        // 501 empty states and 500 full ones.
        let inc = trace.running_inclusion()[0];
        let r_add = (exact[1] / exact[0]).min(1.0);
        let r_del = (exact[0] / exact[1]).min(1.0);
        let want = 500.0 / r_del / (501.0 / r_add + 500.0 / r_del);
        assert!((inc - want).abs() < 1e-12, "{inc} vs {want}");
        assert!((inc - exact[1]).abs() < 1e-3);
    }

    #[test]
    fn exact_strategy_refuses_non_decomposable_neighbours() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = crate::gaussian::sample_mvn(&crate::gaussian::PrecisionMatrix::identity(4), 20, &mut rng).unwrap();
        let s = scatter(&y);
        let params = GWishartParams::identity(4, 3.0).unwrap();
        let prior = GraphPrior::bernoulli(0.3).unwrap();
        let g = Graph::from_pairs(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let r = birth_death_rates(&g, &s, &params, &prior, BdStrategy::Exact, &mut rng);
        assert!(matches!(r, Err(Error::NotDecomposable)));
    }

    #[test]
    fn deterministic_given_seed() {
        let (s, params, prior, _) = setup(35);
        let cfg = SamplerConfig::new(500, 8);
        let a = run_bd_scatter(&s, &params, &prior, &cfg, &BdOptions::default()).unwrap();
        let b = run_bd_scatter(&s, &params, &prior, &cfg, &BdOptions::default()).unwrap();
        assert!(a.same_states(&b));
        assert!(a.weighted());
        assert!(a.steps().unwrap().iter().all(|s| s.toggles.len() <= 1 && s.weight > 0.0));
    }
}
