use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mpl::{MplHyper, MplScorer, NodeScore};
use super::trace::{Recorder, SamplerTrace};
use super::{uniform_pair, SamplerConfig, SamplerKind};
use crate::error::{Error, Result};
use crate::gaussian::DataMatrix;
use crate::graph::Graph;
use crate::priors::GraphPrior;

/// Metropolis-Hastings on graphs with the pseudo-likelihood score.
pub fn run_plrj(y: &DataMatrix, prior: &GraphPrior, hyper: MplHyper, config: &SamplerConfig) -> Result<SamplerTrace> {
    let mut scorer = MplScorer::from_data(y, hyper)?;
    run_plrj_with(&mut scorer, prior, config)
}

pub(crate) fn neighbour_lists(g: &Graph) -> Vec<Vec<usize>> {
    (0..g.p()).map(|j| g.neighbor_iter(j).collect()).collect()
}

pub(crate) fn toggled(list: &[usize], k: usize) -> Vec<usize> {
    let mut out = list.to_vec();
    match out.binary_search(&k) {
        Ok(pos) => {
            out.remove(pos);
        }
        Err(pos) => out.insert(pos, k),
    }
    out
}

pub(crate) fn initial_locals<S: NodeScore>(scorer: &mut S, nbrs: &[Vec<usize>]) -> Result<Vec<f64>> {
    let locals: Vec<f64> = nbrs.iter().enumerate().map(|(j, n)| scorer.local(j, n)).collect();
    if let Some(j) = locals.iter().position(|l| !l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "initial graph has an unsupported neighbourhood at node {}",
            j + 1
        )));
    }
    Ok(locals)
}

/// [`run_plrj`] with any node-decomposable score.
pub fn run_plrj_with<S: NodeScore>(scorer: &mut S, prior: &GraphPrior, config: &SamplerConfig) -> Result<SamplerTrace> {
    let p = scorer.p();
    config.validate(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut g = config.start_graph(p);
    prior.log_prior(&g)?;
    let mut nbrs = neighbour_lists(&g);
    let mut locals = initial_locals(scorer, &nbrs)?;
    let mut rec = Recorder::new(SamplerKind::Plrj, false, &g, config);

    for _ in 0..config.iterations {
        let e = uniform_pair(p, &mut rng);
        let (i, j) = (e.i(), e.j());
        let new_i = toggled(&nbrs[i], j);
        let new_j = toggled(&nbrs[j], i);
        let li = scorer.local(i, &new_i);
        let lj = scorer.local(j, &new_j);
        let log_alpha = li + lj - locals[i] - locals[j] + prior.log_ratio_toggle(&g, e)?;
        let u: f64 = rng.random();
        if log_alpha >= 0.0 || u.ln() < log_alpha {
            g.toggle(e);
            nbrs[i] = new_i;
            nbrs[j] = new_j;
            locals[i] = li;
            locals[j] = lj;
            rec.record(vec![e], 1.0);
        } else {
            rec.record(Vec::new(), 1.0);
        }
        if config.out_of_time(rec.elapsed()) {
            break;
        }
    }
    Ok(rec.finish())
}
