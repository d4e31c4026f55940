use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::trace::{Recorder, SamplerTrace};
use super::{SamplerConfig, SamplerKind};
use crate::error::{Error, Result};
use crate::gaussian::{scatter, set_column, DataMatrix, ScatterMatrix, Schur};
use crate::graph::all_pairs;
use crate::linalg;
use crate::priors::SpikeSlabParams;

/// Spike-and-slab block Gibbs sampler.
pub fn run_ss(y: &DataMatrix, params: &SpikeSlabParams, config: &SamplerConfig) -> Result<SamplerTrace> {
    run_ss_scatter(&scatter(y), params, config)
}

/// Column `j` of `K` given the rest: with `A = K_{-j,-j}`, `u = K_{-j,j}` and
/// `γ = k_jj - uᵀA⁻¹u`,
/// `γ ~ Gamma(n/2 + 1, rate (s_jj + λ)/2)` and `u ~ N(-C s_{-j,j}, C)` with
/// `C⁻¹ = (s_jj + λ) A⁻¹ + diag(1/v)` (slab or spike variance per pair).
pub fn run_ss_scatter(s: &ScatterMatrix, params: &SpikeSlabParams, config: &SamplerConfig) -> Result<SamplerTrace> {
    params.validate()?;
    let p = s.p();
    config.validate(p)?;
    let n = s.n() as f64;
    let sm = s.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut g = config.start_graph(p);
    let mut k = DMatrix::<f64>::identity(p, p);
        let mut rec = Recorder::new(SamplerKind::SsO, false, &g, config);

    let gammas: Vec<Gamma<f64>> = (0..p)
        .map(|j| {
            Gamma::new(n / 2.0 + 1.0, 2.0 / (sm[(j, j)] + params.lambda))
                .map_err(|e| Error::InvalidParameter(e.to_string()))
        })
        .collect::<Result<_>>()?;

    for _ in 0..config.iterations {
        let mut sigma = linalg::inverse_spd(&k, "spike-and-slab state")?;
        for j in 0..p {
            let others: Vec<usize> = (0..p).filter(|&x| x != j).collect();
            let schur = Schur::new(&sigma, j);
            let scale = sm[(j, j)] + params.lambda;
            let prec = DMatrix::from_fn(p - 1, p - 1, |a, b| {
                let (x, y) = (others[a], others[b]);
                let mut v = scale * schur.get(&sigma, x, y);
                if a == b {
                    v += 1.0 / if g.has_edge(j, x) { params.v } else { params.epsilon };
                }
                v
            });
            let chol = linalg::cholesky(&prec, "spike-and-slab column precision")?;
            let s12 = DVector::from_fn(p - 1, |a, _| sm[(others[a], j)]);
            let mean = -chol.solve(&s12);
            let z = DVector::from_fn(p - 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let u = linalg::gaussian_from_precision(&chol, &mean, z);
            let gamma = gammas[j].sample(&mut rng);
            let au = schur.apply(&sigma, &others, &u);
            set_column(&mut k, &mut sigma, &schur, &others, &u, &au, gamma);
        }

        let mut toggles = Vec::new();
        for e in all_pairs(p) {
            let prob = params.inclusion_probability(k[(e.i(), e.j())]);
            let on = rng.random::<f64>() < prob;
            if on != g.contains(e) {
                g.toggle(e);
                toggles.push(e);
            }
        }
        rec.record(toggles, 1.0);
        if config.out_of_time(rec.elapsed()) {
            break;
        }
    }
    Ok(rec.finish())
}
