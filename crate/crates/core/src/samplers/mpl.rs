//! Marginal pseudo-likelihood scoring.
//!
//! The local score of node `j` with neighbour set `N` (size `d`) is the log
//! marginal likelihood of the regression of column `j` on the columns in `N`
//! under a zero-mean g-prior `β | σ² ~ N(0, g σ² (X_NᵀX_N)⁻¹)` and the
//! improper prior `p(σ²) ∝ 1/σ²`:
//!
//! `-(n/2) log 2π - (d/2) log(1+g) + log Γ(n/2) - (n/2) log(Q/2)`,
//! `Q = s_jj - g/(1+g) · S_jN S_NN⁻¹ S_Nj`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{scatter, DataMatrix, ScatterMatrix};
use crate::graph::Graph;
use crate::linalg;

/// A decomposable graph score `Σ_j local(j, N_j)`.
pub trait NodeScore {
    fn p(&self) -> usize;

    /// Log local score of `node` given its sorted neighbour list. Returns
    /// `-inf` for neighbourhoods the model cannot support.
    fn local(&mut self, node: usize, nbrs: &[usize]) -> f64;

    /// Fills `out[k]` with the local score of `node` after toggling `k` in its
    /// neighbourhood, for every `k != node`.
    fn toggled_locals(&mut self, node: usize, nbrs: &[usize], out: &mut [f64]) {
        let mut work = Vec::with_capacity(nbrs.len() + 1);
        for k in 0..self.p() {
            if k == node {
                continue;
            }
            work.clear();
            match nbrs.binary_search(&k) {
                Ok(pos) => {
                    work.extend_from_slice(&nbrs[..pos]);
                    work.extend_from_slice(&nbrs[pos + 1..]);
                }
                Err(pos) => {
                    work.extend_from_slice(&nbrs[..pos]);
                    work.push(k);
                    work.extend_from_slice(&nbrs[pos..]);
                }
            }
            out[k] = self.local(node, &work);
        }
    }
}

/// Hyperparameters of the local regression models.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct MplHyper {
    /// g-prior scale; `None` uses the sample size (unit information).
    pub g: Option<f64>,
}

const CACHE_LIMIT: usize = 2_000_000;

/// Scorer with a memo table keyed by `(node, neighbour set)`.
#[derive(Clone, Debug)]
pub struct MplScorer {
    s: DMatrix<f64>,
    n: usize,
    g: f64,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl MplScorer {
    pub fn new(s: &ScatterMatrix, hyper: MplHyper) -> Result<Self> {
        let n = s.n();
        if n == 0 {
            return Err(Error::Empty("scorer needs at least one observation".into()));
        }
        let g = hyper.g.unwrap_or(n as f64);
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("g-prior scale must be positive, got {g}")));
        }
        Ok(Self { s: s.matrix().clone(), n, g, cache: HashMap::new() })
    }

    pub fn from_data(y: &DataMatrix, hyper: MplHyper) -> Result<Self> {
        Self::new(&scatter(y), hyper)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    fn closed_form(&self, d: usize, quad: f64, s_jj: f64) -> f64 {
        let n = self.n as f64;
        let q = s_jj - self.g / (1.0 + self.g) * quad;
        if !(q > 0.0) {
            return f64::NEG_INFINITY;
        }
        -n / 2.0 * (2.0 * std::f64::consts::PI).ln() - d as f64 / 2.0 * (1.0 + self.g).ln()
            + libm::lgamma(n / 2.0)
            - n / 2.0 * (q / 2.0).ln()
    }

    /// Uncached local score; errors when the neighbourhood is too large.
    pub fn local_score(&self, node: usize, nbrs: &[usize]) -> Result<f64> {
        let p = self.s.nrows();
        if node >= p {
            return Err(Error::NodeOutOfRange { index: node, p });
        }
        if let Some(&bad) = nbrs.iter().find(|&&k| k >= p || k == node) {
            return Err(if bad == node { Error::SelfLoop(node) } else { Error::NodeOutOfRange { index: bad, p } });
        }
        let d = nbrs.len();
        if d >= self.n {
            return Err(Error::SingularLocalModel { node, size: d, n: self.n });
        }
        let s_jj = self.s[(node, node)];
        let quad = if d == 0 {
            0.0
        } else {
            let s_nn = linalg::submatrix(&self.s, nbrs);
            let s_nj = DVector::from_fn(d, |a, _| self.s[(nbrs[a], node)]);
            let chol = linalg::cholesky(&s_nn, "neighbour scatter block")
                .map_err(|_| Error::SingularLocalModel { node, size: d, n: self.n })?;
            s_nj.dot(&chol.solve(&s_nj))
        };
        Ok(self.closed_form(d, quad, s_jj))
    }
}

impl NodeScore for MplScorer {
    fn p(&self) -> usize {
        self.s.nrows()
    }

    fn local(&mut self, node: usize, nbrs: &[usize]) -> f64 {
        if let Some(&v) = self.cache.get(&(node, nbrs.to_vec())) {
            return v;
        }
        let v = self.local_score(node, nbrs).unwrap_or(f64::NEG_INFINITY);
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert((node, nbrs.to_vec()), v);
        v
    }

    /// Additions reuse one Cholesky factor of `S_NN` through the bordered
    /// Schur complement; removals go through the cache.
    fn toggled_locals(&mut self, node: usize, nbrs: &[usize], out: &mut [f64]) {
        let p = self.s.nrows();
        let d = nbrs.len();
        let chol = if d == 0 {
            None
        } else {
            match linalg::cholesky(&linalg::submatrix(&self.s, nbrs), "") {
                Ok(c) => Some(c),
                Err(_) => {
                    // Degenerate block: fall back to direct evaluation.
                    let mut work = Vec::with_capacity(d + 1);
                    for k in 0..p {
                        if k == node {
                            continue;
                        }
                        work.clear();
                        work.extend(nbrs.iter().copied().filter(|&x| x != k));
                        if work.len() == d {
                            work.push(k);
                            work.sort_unstable();
                        }
                        out[k] = self.local(node, &work);
                    }
                    return;
                }
            }
        };
        let (l, w) = match &chol {
            Some(c) => {
                let l = c.l();
                let s_nj = DVector::from_fn(d, |a, _| self.s[(nbrs[a], node)]);
                let w = l.solve_lower_triangular(&s_nj).expect("positive diagonal");
                (Some(l), w)
            }
            None => (None, DVector::zeros(0)),
        };
        let quad = w.norm_squared();
        let s_jj = self.s[(node, node)];
        let mut work = Vec::with_capacity(d);
        for k in 0..p {
            if k == node {
                continue;
            }
            if let Ok(pos) = nbrs.binary_search(&k) {
                work.clear();
                work.extend_from_slice(&nbrs[..pos]);
                work.extend_from_slice(&nbrs[pos + 1..]);
                out[k] = self.local(node, &work);
                continue;
            }
            if d + 1 >= self.n {
                out[k] = f64::NEG_INFINITY;
                continue;
            }
            let (vw, vv) = match &l {
                Some(l) => {
                    let s_nk = DVector::from_fn(d, |a, _| self.s[(nbrs[a], k)]);
                    let v = l.solve_lower_triangular(&s_nk).expect("positive diagonal");
                    (v.dot(&w), v.norm_squared())
                }
                None => (0.0, 0.0),
            };
            let schur = self.s[(k, k)] - vv;
            if !(schur > 1e-12 * self.s[(k, k)].max(f64::MIN_POSITIVE)) {
                out[k] = f64::NEG_INFINITY;
                continue;
            }
            let extra = (self.s[(k, node)] - vw).powi(2) / schur;
            out[k] = self.closed_form(d + 1, quad + extra, s_jj);
        }
    }
}

/// `Σ_j local(j, N_j)`; errors on a neighbourhood with `|N_j| >= n`.
pub fn mpl_log_score(g: &Graph, y: &DataMatrix, hyper: MplHyper) -> Result<f64> {
    if g.p() != y.p() {
        return Err(Error::DimensionMismatch { expected: y.p(), found: g.p() });
    }
    let scorer = MplScorer::from_data(y, hyper)?;
    let mut total = 0.0;
    for j in 0..g.p() {
        let nbrs: Vec<usize> = g.neighbor_iter(j).collect();
        total += scorer.local_score(j, &nbrs)?;
    }
    Ok(total)
}
