use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fenwick::Fenwick;
use super::mpl::{MplHyper, MplScorer, NodeScore};
use super::plrj::{initial_locals, neighbour_lists, toggled};
use super::trace::{Recorder, SamplerTrace};
use super::{SamplerConfig, SamplerKind};
use crate::error::{Error, Result};
use crate::gaussian::DataMatrix;
use crate::graph::{all_pairs, pair_count, Edge, Graph};
use crate::priors::GraphPrior;

/// Birth-death chain on graphs with the pseudo-likelihood score. Each pair
/// toggles at rate `exp(min(0, Δ log target))`; states are weighted by their
/// expected holding time `1 / Σ rates`.
pub fn run_plbd(y: &DataMatrix, prior: &GraphPrior, hyper: MplHyper, config: &SamplerConfig) -> Result<SamplerTrace> {
    let mut scorer = MplScorer::from_data(y, hyper)?;
    run_plbd_with(&mut scorer, prior, config)
}

struct RateState {
    p: usize,
    /// `toggled[j][k]`: local score of `j` with `k` toggled in its neighbourhood.
    toggled: Vec<Vec<f64>>,
    locals: Vec<f64>,
}

impl RateState {
    fn log_ratio(&self, prior: &GraphPrior, g: &Graph, e: Edge) -> Result<f64> {
        let (i, j) = (e.i(), e.j());
        let data = self.toggled[i][j] - self.locals[i] + self.toggled[j][i] - self.locals[j];
        Ok(data + prior.log_ratio_toggle(g, e)?)
    }

    fn rate(&self, prior: &GraphPrior, g: &Graph, e: Edge) -> Result<f64> {
        let lr = self.log_ratio(prior, g, e)?;
        Ok(if lr >= 0.0 { 1.0 } else { lr.exp() })
    }

    fn refresh_node<S: NodeScore>(&mut self, scorer: &mut S, j: usize, nbrs: &[usize]) {
        let mut out = vec![f64::NEG_INFINITY; self.p];
        scorer.toggled_locals(j, nbrs, &mut out);
        self.toggled[j] = out;
    }
}

/// [`run_plbd`] with any node-decomposable score.
pub fn run_plbd_with<S: NodeScore>(scorer: &mut S, prior: &GraphPrior, config: &SamplerConfig) -> Result<SamplerTrace> {
    let p = scorer.p();
    config.validate(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut g = config.start_graph(p);
    prior.log_prior(&g)?;
    let mut nbrs = neighbour_lists(&g);
    let locals = initial_locals(scorer, &nbrs)?;
    let mut state = RateState { p, toggled: vec![Vec::new(); p], locals };
    for (j, n) in nbrs.iter().enumerate() {
        state.refresh_node(scorer, j, n);
    }
    let rates = all_pairs(p).map(|e| state.rate(prior, &g, e)).collect::<Result<Vec<_>>>()?;
    let mut tree = Fenwick::from_values(rates);
    // A tabulated prior couples every pair, so all rates change after a jump.
    let local_prior = matches!(prior, GraphPrior::Bernoulli { .. });

    let mut rec = Recorder::new(SamplerKind::Plbd, true, &g, config);
    let mut pending = Vec::new();
    for _ in 0..config.iterations {
        let total = tree.total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numerical(format!("total jump rate is {total}")));
        }
        rec.record(std::mem::take(&mut pending), 1.0 / total);
        if config.out_of_time(rec.elapsed()) {
            break;
        }

        let u: f64 = rng.random();
        let e = Edge::from_index(tree.find(u * total), p);
        let (i, j) = (e.i(), e.j());
        g.toggle(e);
        nbrs[i] = toggled(&nbrs[i], j);
        nbrs[j] = toggled(&nbrs[j], i);
        state.locals[i] = state.toggled[i][j];
        state.locals[j] = state.toggled[j][i];
        state.refresh_node(scorer, i, &nbrs[i]);
        state.refresh_node(scorer, j, &nbrs[j]);
        if local_prior {
            for &a in &[i, j] {
                for b in 0..p {
                    if b != a {
                        let f = Edge::new(a, b).expect("distinct");
                        tree.set(f.index(p), state.rate(prior, &g, f)?);
                    }
                }
            }
        } else {
            for f in all_pairs(p) {
                tree.set(f.index(p), state.rate(prior, &g, f)?);
            }
        }
        pending.push(e);
    }
    debug_assert_eq!(tree.total() > 0.0, pair_count(p) > 0);
    Ok(rec.finish())
}
