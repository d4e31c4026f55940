use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use super::PrecisionMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg;

/// Shape `b` and scale `D` of the G-Wishart density
/// `p(K) ∝ |K|^((b-2)/2) exp(-tr(KD)/2)` on matrices with the graph's zero pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct GWishartParams {
    b: f64,
    d: DMatrix<f64>,
}

impl GWishartParams {
    pub fn new(b: f64, d: DMatrix<f64>) -> Result<Self> {
        if !(b > 2.0) || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("shape b must exceed 2, got {b}")));
        }
        if d.nrows() != d.ncols() {
            return Err(Error::DimensionMismatch { expected: d.nrows(), found: d.ncols() });
        }
        if linalg::asymmetry(&d) > 1e-12 {
            return Err(Error::InvalidParameter("scale matrix D is not symmetric".into()));
        }
        let mut d = d;
        linalg::symmetrize(&mut d);
        linalg::cholesky(&d, "scale matrix D")?;
        Ok(Self { b, d })
    }

    /// `b` with `D = I_p`.
    pub fn identity(p: usize, b: f64) -> Result<Self> {
        Self::new(b, DMatrix::identity(p, p))
    }

    /// Conjugate update `(b + n, D + S)`.
    pub fn posterior(&self, s: &DMatrix<f64>, n: usize) -> Result<Self> {
        if s.nrows() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), found: s.nrows() });
        }
        Self::new(self.b + n as f64, &self.d + s)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn p(&self) -> usize {
        self.d.nrows()
    }
}

/// Draw on the complete graph: a standard Wishart with `b + p - 1` degrees of
/// freedom and scale `D⁻¹`, via the Bartlett decomposition.
pub fn sample_wishart<R: Rng + ?Sized>(params: &GWishartParams, rng: &mut R) -> Result<PrecisionMatrix> {
    let p = params.p();
    let df = params.b + p as f64 - 1.0;
    let scale = linalg::inverse_spd(&params.d, "scale matrix D")?;
    let l = linalg::cholesky(&scale, "inverse scale")?.unpack();
    let mut a = DMatrix::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(df - i as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let la = l * a;
    let mut k = &la * la.transpose();
    linalg::symmetrize(&mut k);
    linalg::cholesky(&k, "Wishart draw")?;
    Ok(PrecisionMatrix::from_trusted(k))
}

/// Markov chain state for the column-wise block Gibbs sampler: `K ∈ P_G` and
/// its inverse.
///
/// For column `j` with neighbours `N`, write `A = K_{-j,-j}`, `k = K_{-j,j}`
/// and `γ = k_jj - kᵀA⁻¹k`. Conditionally on `A`, `γ ~ Gamma(b/2, rate d_jj/2)`
/// independently of `k_N ~ N(-Q⁻¹ d_N, Q⁻¹)` with `Q = d_jj (A⁻¹)_NN`.
#[derive(Clone, Debug)]
pub struct GWishartState {
    k: DMatrix<f64>,
    sigma: DMatrix<f64>,
    local_updates: usize,
}

impl GWishartState {
    pub fn new(k: DMatrix<f64>) -> Result<Self> {
        let sigma = linalg::inverse_spd(&k, "G-Wishart state")?;
        Ok(Self { k, sigma, local_updates: 0 })
    }

    /// A diagonal starting point `diag(b / d_jj)`.
    pub fn initial(params: &GWishartParams) -> Self {
        let p = params.p();
        let k = DMatrix::from_fn(p, p, |i, j| if i == j { params.b / params.d[(i, i)] } else { 0.0 });
        let sigma = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 / k[(i, i)] } else { 0.0 });
        Self { k, sigma, local_updates: 0 }
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Replaces `K` (which must be SPD) and recomputes `Σ`.
    pub fn set_precision(&mut self, k: DMatrix<f64>) -> Result<()> {
        self.sigma = linalg::inverse_spd(&k, "G-Wishart state")?;
        self.k = k;
        self.local_updates = 0;
        Ok(())
    }

    /// Mutable `K`. `Σ` goes stale; a column update of the modified column
    /// (or a refresh) restores it.
    pub(crate) fn precision_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.k
    }

    /// Recomputes `Σ` after `K` changed in column `j` only, in `O(p²)`.
    pub(crate) fn resync_column(&mut self, j: usize) {
        let p = self.k.nrows();
        let schur = Schur::new(&self.sigma, j);
        let nbrs: Vec<usize> = (0..p).filter(|&x| x != j && self.k[(x, j)] != 0.0).collect();
        let values = DVector::from_fn(nbrs.len(), |a, _| self.k[(nbrs[a], j)]);
        let au = schur.apply(&self.sigma, &nbrs, &values);
        let quad: f64 = nbrs.iter().map(|&x| au[x] * self.k[(x, j)]).sum();
        let gamma = self.k[(j, j)] - quad;
        set_column(&mut self.k, &mut self.sigma, &schur, &nbrs, &values, &au, gamma);
    }

    pub(crate) fn refresh_covariance(&mut self) -> Result<()> {
        self.sigma = linalg::inverse_spd(&self.k, "G-Wishart state")?;
        Ok(())
    }

    /// One full sweep over the columns.
    pub fn sweep<R: Rng + ?Sized>(&mut self, g: &Graph, params: &GWishartParams, rng: &mut R) -> Result<()> {
        self.check(g, params)?;
        self.refresh_covariance()?;
        for j in 0..g.p() {
            self.column(g, params, j, rng)?;
        }
        self.local_updates = 0;
        Ok(())
    }

    /// Gibbs updates of the listed columns only. `Σ` is carried by rank
    /// updates and recomputed from scratch after every `p` columns.
    pub fn update_columns<R: Rng + ?Sized>(
        &mut self,
        g: &Graph,
        params: &GWishartParams,
        columns: &[usize],
        rng: &mut R,
    ) -> Result<()> {
        self.check(g, params)?;
        for &j in columns {
            if self.local_updates >= g.p() {
                self.refresh_covariance()?;
                self.local_updates = 0;
            }
            self.column(g, params, j, rng)?;
            self.local_updates += 1;
        }
        Ok(())
    }

    fn check(&self, g: &Graph, params: &GWishartParams) -> Result<()> {
        let p = g.p();
        if p != self.k.nrows() || p != params.p() {
            return Err(Error::DimensionMismatch { expected: p, found: self.k.nrows() });
        }
        Ok(())
    }

    /// Needs `Σ_{-j,-j} - Σ_{-j,j} Σ_{j,-j} / Σ_jj = (K_{-j,-j})⁻¹`, which
    /// only involves `K` outside column `j`; column `j` itself may be stale.
    fn column<R: Rng + ?Sized>(&mut self, g: &Graph, params: &GWishartParams, j: usize, rng: &mut R) -> Result<()> {
        let d_jj = params.d[(j, j)];
        let gamma_dist = Gamma::new(params.b / 2.0, 2.0 / d_jj).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let gamma = gamma_dist.sample(rng);
        let nbrs: Vec<usize> = g.neighbor_iter(j).collect();
        let schur = Schur::new(&self.sigma, j);
        let m = nbrs.len();
        let mut k_n = DVector::zeros(m);
        if m > 0 {
            let q = DMatrix::from_fn(m, m, |a, c| d_jj * schur.get(&self.sigma, nbrs[a], nbrs[c]));
            let chol = linalg::cholesky(&q, "Gibbs column precision")?;
            let d_n = DVector::from_fn(m, |a, _| params.d[(nbrs[a], j)]);
            let mean = -chol.solve(&d_n);
            let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            k_n = linalg::gaussian_from_precision(&chol, &mean, z);
        }
        let au = schur.apply(&self.sigma, &nbrs, &k_n);
        set_column(&mut self.k, &mut self.sigma, &schur, &nbrs, &k_n, &au, gamma);
        Ok(())
    }
}

/// `(K_{-j,-j})⁻¹ = Σ_{-j,-j} - Σ_{-j,j} Σ_{j,-j} / Σ_jj`, read lazily from
/// `Σ` with row and column `j` treated as zero.
pub(crate) struct Schur {
    j: usize,
    col: DVector<f64>,
    s_jj: f64,
}

impl Schur {
    pub fn new(sigma: &DMatrix<f64>, j: usize) -> Self {
        Self { j, col: sigma.column(j).clone_owned(), s_jj: sigma[(j, j)] }
    }

    pub fn get(&self, sigma: &DMatrix<f64>, a: usize, c: usize) -> f64 {
        if a == self.j || c == self.j {
            0.0
        } else {
            sigma[(a, c)] - self.col[a] * self.col[c] / self.s_jj
        }
    }

    /// `A⁻¹ u` for `u` supported on `nbrs`, as a `p`-vector with entry `j` zero.
    pub fn apply(&self, sigma: &DMatrix<f64>, nbrs: &[usize], values: &DVector<f64>) -> DVector<f64> {
        let mut au = DVector::zeros(sigma.nrows());
        let mut along_j = 0.0;
        for (a, &x) in nbrs.iter().enumerate() {
            au.axpy(values[a], &sigma.column(x), 1.0);
            along_j += values[a] * self.col[x];
        }
        au.axpy(-along_j / self.s_jj, &self.col, 1.0);
        au[self.j] = 0.0;
        au
    }
}

/// Writes column `j` of `K` (entries `values` at `nbrs`, zero elsewhere, and
/// `k_jj = γ + kᵀA⁻¹k`) and updates `Σ` in place. `au` is
/// `schur.apply(sigma, nbrs, values)`.
pub(crate) fn set_column(
    k: &mut DMatrix<f64>,
    sigma: &mut DMatrix<f64>,
    schur: &Schur,
    nbrs: &[usize],
    values: &DVector<f64>,
    au: &DVector<f64>,
    gamma: f64,
) {
    let p = k.nrows();
    let j = schur.j;
    for x in 0..p {
        if x != j {
            k[(x, j)] = 0.0;
            k[(j, x)] = 0.0;
        }
    }
    for (a, &x) in nbrs.iter().enumerate() {
        k[(x, j)] = values[a];
        k[(j, x)] = values[a];
    }
    let quad: f64 = nbrs.iter().enumerate().map(|(a, &x)| values[a] * au[x]).sum();
    k[(j, j)] = gamma + quad;
    let col = &schur.col;
    for c in 0..p {
        if c == j {
            continue;
        }
        let (wc, uc) = (col[c] / schur.s_jj, au[c] / gamma);
        let mut column = sigma.column_mut(c);
        for a in 0..p {
            column[a] += au[a] * uc - col[a] * wc;
        }
    }
    for x in 0..p {
        let v = if x == j { 1.0 / gamma } else { -au[x] / gamma };
        sigma[(x, j)] = v;
        sigma[(j, x)] = v;
    }
}

/// Approximate G-Wishart draw after `sweeps` block Gibbs sweeps from
/// [`GWishartState::initial`]. The result lies in `P_G` exactly.
pub fn sample_gwishart<R: Rng + ?Sized>(
    g: &Graph,
    params: &GWishartParams,
    sweeps: usize,
    rng: &mut R,
) -> Result<PrecisionMatrix> {
    if sweeps == 0 {
        return Err(Error::InvalidParameter("sweeps must be at least 1".into()));
    }
    if g.p() != params.p() {
        return Err(Error::DimensionMismatch { expected: params.p(), found: g.p() });
    }
    let mut state = GWishartState::initial(params);
    for _ in 0..sweeps {
        state.sweep(g, params, rng)?;
    }
    linalg::cholesky(&state.k, "G-Wishart draw")?;
    Ok(PrecisionMatrix::from_trusted(state.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn params_validation() {
        assert!(GWishartParams::identity(3, 2.0).is_err());
        assert!(GWishartParams::new(3.0, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        let post = GWishartParams::identity(2, 3.0).unwrap().posterior(&DMatrix::identity(2, 2), 5).unwrap();
        assert_eq!(post.b(), 8.0);
        assert_eq!(post.d()[(0, 0)], 2.0);
    }

    #[test]
    fn wishart_mean_matches_df_times_scale() {
        let params = GWishartParams::identity(4, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draws = 100_000;
        let mut sum = DMatrix::zeros(4, 4);
        let mut sum_sq = DMatrix::zeros(4, 4);
        for _ in 0..draws {
            let k = sample_wishart(&params, &mut rng).unwrap().into_matrix();
            sum_sq += k.component_mul(&k);
            sum += k;
        }
        let mean = &sum / draws as f64;
        let var = &sum_sq / draws as f64 - mean.component_mul(&mean);
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 6.0 } else { 0.0 };
                let se = (var[(i, j)] / draws as f64).sqrt();
                assert!((mean[(i, j)] - target).abs() < 4.0 * se, "({i},{j}) {} vs {target}", mean[(i, j)]);
            }
        }
    }

    #[test]
    fn one_dimensional_wishart_is_gamma() {
        let params = GWishartParams::new(3.0, DMatrix::from_element(1, 1, 2.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample_wishart(&params, &mut rng).unwrap().get(0, 0)).sum::<f64>() / n as f64;
        // Gamma(3/2, rate 1): sd sqrt(1.5)
        assert!((mean - 1.5).abs() < 4.0 * (1.5f64 / n as f64).sqrt());
    }

    #[test]
    fn complete_graph_gibbs_matches_wishart() {
        let d = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 1.5]);
        let params = GWishartParams::new(4.0, d).unwrap();
        let g = Graph::complete(3);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 10_000;
        let mut gibbs = Vec::with_capacity(n);
        let mut direct = Vec::with_capacity(n);
        for _ in 0..n {
            gibbs.push(sample_gwishart(&g, &params, 10, &mut rng).unwrap().into_matrix());
            direct.push(sample_wishart(&params, &mut rng).unwrap().into_matrix());
        }
        for i in 0..3 {
            for j in i..3 {
                let stats = |xs: &[DMatrix<f64>]| {
                    let m = xs.iter().map(|k| k[(i, j)]).sum::<f64>() / n as f64;
                    let v = xs.iter().map(|k| (k[(i, j)] - m).powi(2)).sum::<f64>() / (n - 1) as f64;
                    (m, v)
                };
                let (m1, v1) = stats(&gibbs);
                let (m2, v2) = stats(&direct);
                let se = ((v1 + v2) / n as f64).sqrt();
                assert!((m1 - m2).abs() < 3.0 * se, "({i},{j}): {m1} vs {m2}, se {se}");
            }
        }
    }

    #[test]
    fn empty_graph_gives_independent_gammas() {
        let params = GWishartParams::identity(3, 3.0).unwrap();
        let g = Graph::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let n = 20_000;
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let k = sample_gwishart(&g, &params, 1, &mut rng).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert_eq!(k.get(i, j), 0.0);
                    }
                }
                sum[i] += k.get(i, i);
            }
        }
        // Gamma(b/2, rate 1/2) has mean b and variance 2b.
        for s in sum {
            assert!((s / n as f64 - 3.0).abs() < 4.0 * (6.0f64 / n as f64).sqrt());
        }
    }

    #[test]
    fn zero_pattern_and_covariance_tracking() {
        let g = Graph::from_pairs(6, [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (0, 4)]).unwrap();
        let params = GWishartParams::identity(6, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let mut state = GWishartState::initial(&params);
        for _ in 0..20 {
            state.sweep(&g, &params, &mut rng).unwrap();
            let k = PrecisionMatrix::with_graph(state.precision().clone(), &g).unwrap();
            assert_eq!(k.support(), g);
            let id = state.precision() * state.covariance();
            assert!((id - DMatrix::<f64>::identity(6, 6)).abs().max() < 1e-8);
        }
    }
}
