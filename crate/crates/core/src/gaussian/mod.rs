//! Gaussian data, precision matrices and (G-)Wishart numerics.

mod normconst;
mod wishart;

pub use normconst::{
    gwishart_log_norm, log_cbf, log_norm_complete, log_norm_decomposable, log_norm_monte_carlo,
    log_ratio_single_edge, LogRatio, NormMethod, NormTag, NormalizingConstantEstimate,
    RatioEstimator, RatioMethod,
};
pub use wishart::{sample_gwishart, sample_wishart, GWishartParams, GWishartState};

pub(crate) use normconst::{log_mean_exp, CbfParts};
pub(crate) use wishart::{set_column, Schur};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg;

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive-definite precision matrix `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionMatrix {
    k: DMatrix<f64>,
}

impl PrecisionMatrix {
    /// Validates squareness, symmetry and positive definiteness. The stored
    /// matrix is exactly symmetric (upper triangle mirrored).
    pub fn new(k: DMatrix<f64>) -> Result<Self> {
        if k.nrows() != k.ncols() {
            return Err(Error::DimensionMismatch { expected: k.nrows(), found: k.ncols() });
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("precision matrix has non-finite entries".into()));
        }
        if linalg::asymmetry(&k) > SYMMETRY_TOL {
            return Err(Error::InvalidParameter("precision matrix is not symmetric".into()));
        }
        let mut k = k;
        mirror_upper(&mut k);
        linalg::cholesky(&k, "precision matrix")?;
        Ok(Self { k })
    }

    /// Like [`PrecisionMatrix::new`] but also checks `k_ij = 0` off the edge set of `g`.
    pub fn with_graph(k: DMatrix<f64>, g: &Graph) -> Result<Self> {
        let k = Self::new(k)?;
        k.check_pattern(g)?;
        Ok(k)
    }

    pub(crate) fn from_trusted(k: DMatrix<f64>) -> Self {
        Self { k }
    }

    pub fn identity(p: usize) -> Self {
        Self { k: DMatrix::identity(p, p) }
    }

    pub fn p(&self) -> usize {
        self.k.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.k[(i, j)]
    }

    /// Derived covariance `Σ = K⁻¹`.
    pub fn covariance(&self) -> DMatrix<f64> {
        linalg::inverse_spd(&self.k, "precision matrix").expect("validated SPD")
    }

    /// Errors with the first pair outside `E` carrying a nonzero entry.
    pub fn check_pattern(&self, g: &Graph) -> Result<()> {
        if g.p() != self.p() {
            return Err(Error::DimensionMismatch { expected: g.p(), found: self.p() });
        }
        for i in 0..self.p() {
            for j in (i + 1)..self.p() {
                if !g.has_edge(i, j) && self.k[(i, j)] != 0.0 {
                    return Err(Error::PatternViolation { i, j });
                }
            }
        }
        Ok(())
    }

    /// Graph of the nonzero off-diagonal entries.
    pub fn support(&self) -> Graph {
        let p = self.p();
        let mut g = Graph::new(p);
        for i in 0..p {
            for j in (i + 1)..p {
                if self.k[(i, j)] != 0.0 {
                    g.insert(g.edge(i, j).expect("in range"));
                }
            }
        }
        g
    }
}

fn mirror_upper(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            m[(j, i)] = m[(i, j)];
        }
    }
}

/// `n × p` matrix of observations.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    y: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(y: DMatrix<f64>) -> Result<Self> {
        if y.nrows() < 1 {
            return Err(Error::Empty("data matrix needs at least one row".into()));
        }
        if y.ncols() < 2 {
            return Err(Error::InvalidParameter("data matrix needs at least two columns".into()));
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("data matrix has non-finite entries".into()));
        }
        Ok(Self { y })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn p(&self) -> usize {
        self.y.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.y
    }
}

/// Scatter matrix `S = YᵀY` together with the sample size it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatterMatrix {
    s: DMatrix<f64>,
    n: usize,
}

impl ScatterMatrix {
    /// Wraps a precomputed symmetric PSD matrix.
    pub fn new(s: DMatrix<f64>, n: usize) -> Result<Self> {
        if s.nrows() != s.ncols() {
            return Err(Error::DimensionMismatch { expected: s.nrows(), found: s.ncols() });
        }
        if linalg::asymmetry(&s) > SYMMETRY_TOL {
            return Err(Error::InvalidParameter("scatter matrix is not symmetric".into()));
        }
        let mut s = s;
        mirror_upper(&mut s);
        Ok(Self { s, n })
    }

    pub fn p(&self) -> usize {
        self.s.nrows()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }
}

/// `S = YᵀY`.
pub fn scatter(y: &DataMatrix) -> ScatterMatrix {
    let m = y.matrix();
    let mut s = m.tr_mul(m);
    mirror_upper(&mut s);
    ScatterMatrix { s, n: y.n() }
}

/// `ρ_ij = -k_ij / sqrt(k_ii k_jj)`, unit diagonal.
pub fn partial_correlations(k: &PrecisionMatrix) -> DMatrix<f64> {
    let m = k.matrix();
    let p = k.p();
    DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            -m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt()
        }
    })
}

/// Sign convention used by [`regression_coefficients`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum BetaSign {
    /// `β_ij = -k_ij / k_ii`, the coefficient of `y_j` when regressing `y_i`
    /// on the remaining variables.
    Standard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionCoefficients {
    /// Row `i` holds the coefficients of the regression of variable `i`; the
    /// diagonal is NaN.
    pub beta: DMatrix<f64>,
    pub sign: BetaSign,
}

pub fn regression_coefficients(k: &PrecisionMatrix) -> RegressionCoefficients {
    let m = k.matrix();
    let p = k.p();
    let beta = DMatrix::from_fn(p, p, |i, j| if i == j { f64::NAN } else { -m[(i, j)] / m[(i, i)] });
    RegressionCoefficients { beta, sign: BetaSign::Standard }
}

/// `n` i.i.d. rows from `N(0, K⁻¹)`. With `K = LLᵀ`, `y = L⁻ᵀ z`.
pub fn sample_mvn<R: Rng + ?Sized>(k: &PrecisionMatrix, n: usize, rng: &mut R) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::Empty("sample size must be at least 1".into()));
    }
    let p = k.p();
    let chol = linalg::cholesky(k.matrix(), "precision matrix")?;
    let mut y = DMatrix::zeros(n, p);
    for r in 0..n {
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = linalg::gaussian_from_precision(&chol, &DVector::zeros(p), z);
        y.set_row(r, &x.transpose());
    }
    DataMatrix::new(y)
}

/// Dense CSV with a header of 1-based column indices; values use the
/// shortest representation that round-trips exactly.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=m.ncols()).map(|c| c.to_string()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{}", m[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Empty("matrix CSV has no header".into()))?;
    let cols = header.split(',').count();
    let mut values = Vec::new();
    let mut rows = 0;
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Parse {
                line: ln + 1,
                message: format!("expected {cols} fields, found {}", fields.len()),
            });
        }
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                line: ln + 1,
                message: format!("not a number: {f:?}"),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        &a * a.transpose() + DMatrix::identity(p, p) * (p as f64)
    }

    #[test]
    fn partial_correlation_examples() {
        let r = partial_correlations(&PrecisionMatrix::identity(3));
        assert_eq!(r, DMatrix::identity(3, 3));
        let k = PrecisionMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap();
        assert!((partial_correlations(&k)[(0, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn precision_validation() {
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -0.5, 2.0]);
        assert!(matches!(PrecisionMatrix::new(asym), Err(Error::InvalidParameter(_))));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(PrecisionMatrix::new(indefinite), Err(Error::NotPositiveDefinite(_))));
        let g = Graph::new(2);
        let k = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert_eq!(PrecisionMatrix::with_graph(k, &g), Err(Error::PatternViolation { i: 0, j: 1 }));
    }

    #[test]
    fn zero_precision_entry_gives_zero_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut k = random_spd(4, &mut rng);
        k[(0, 1)] = 0.0;
        k[(1, 0)] = 0.0;
        // Diagonal dominance keeps it SPD after zeroing.
        k += DMatrix::identity(4, 4) * 10.0;
        let k = PrecisionMatrix::new(k).unwrap();
        assert_eq!(partial_correlations(&k)[(0, 1)], 0.0);
        assert_eq!(regression_coefficients(&k).beta[(0, 1)], 0.0);
    }

    #[test]
    fn regression_matches_submatrix_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = 4;
        let k = PrecisionMatrix::new(random_spd(p, &mut rng)).unwrap();
        let sigma = k.covariance();
        let beta = regression_coefficients(&k);
        assert_eq!(beta.sign, BetaSign::Standard);
        for i in 0..p {
            let rest: Vec<usize> = (0..p).filter(|&j| j != i).collect();
            let s_rr = linalg::submatrix(&sigma, &rest);
            let s_ri = DVector::from_iterator(p - 1, rest.iter().map(|&j| sigma[(j, i)]));
            let direct = s_rr.cholesky().unwrap().solve(&s_ri);
            for (a, &j) in rest.iter().enumerate() {
                assert!((direct[a].abs() - beta.beta[(i, j)].abs()).abs() < 1e-10);
                assert!((direct[a] - beta.beta[(i, j)]).abs() < 1e-10);
            }
        }
        let b2 = regression_coefficients(
            &PrecisionMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap(),
        );
        assert!((b2.beta[(0, 1)].abs() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mvn_moments_and_determinism() {
        let k = PrecisionMatrix::identity(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = sample_mvn(&k, 100_000, &mut rng).unwrap();
        let s = scatter(&y).matrix() / 100_000.0;
        assert!((s - DMatrix::<f64>::identity(3, 3)).abs().max() < 0.05);

        let k4 = PrecisionMatrix::new(DMatrix::from_diagonal_element(2, 2, 4.0)).unwrap();
        let y = sample_mvn(&k4, 100_000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let s = scatter(&y).matrix() / 100_000.0;
        assert!((s[(0, 0)] - 0.25).abs() < 0.01 && (s[(1, 1)] - 0.25).abs() < 0.01);

        let k2 = PrecisionMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap();
        let y = sample_mvn(&k2, 100_000, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let s = scatter(&y).matrix() / 100_000.0;
        assert!((s - k2.covariance()).abs().max() < 0.02);

        let a = sample_mvn(&k, 50, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_mvn(&k, 50, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scatter_examples() {
        let y = DataMatrix::new(DMatrix::from_row_slice(1, 2, &[1.0, 2.0])).unwrap();
        assert_eq!(scatter(&y).matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        let z = DataMatrix::new(DMatrix::zeros(3, 2)).unwrap();
        assert_eq!(scatter(&z).matrix(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_spd(3, &mut rng) * 1.0e-3;
        let text = matrix_to_csv(&m);
        assert!(text.starts_with("1,2,3\n"));
        assert_eq!(matrix_from_csv(&text).unwrap(), m);
        assert!(matches!(matrix_from_csv("1,2\n1.0\n"), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn scatter_is_sum_of_outer_products_and_psd(vals in prop::collection::vec(-5.0f64..5.0, 12)) {
            let y = DataMatrix::new(DMatrix::from_row_slice(4, 3, &vals)).unwrap();
            let s = scatter(&y);
            let mut direct = DMatrix::zeros(3, 3);
            for r in 0..4 {
                let row = y.matrix().row(r).transpose();
                direct += &row * row.transpose();
            }
            prop_assert!((s.matrix() - direct).abs().max() < 1e-12);
            let eig = s.matrix().clone().symmetric_eigen();
            prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-9));
        }

        #[test]
        fn partial_correlations_scale_free(seed in 0u64..1000, c in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = random_spd(4, &mut rng);
            let r1 = partial_correlations(&PrecisionMatrix::new(k.clone()).unwrap());
            let r2 = partial_correlations(&PrecisionMatrix::new(k * c).unwrap());
            prop_assert!((&r1 - &r2).abs().max() < 1e-12);
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        prop_assert!(r1[(i, j)].abs() < 1.0);
                    }
                }
            }
        }
    }
}
