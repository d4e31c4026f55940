//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub(crate) fn cholesky(m: &DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::NotPositiveDefinite(context.to_string()))
}

pub(crate) fn inverse_spd(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let mut inv = cholesky(m, context)?.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

pub(crate) fn log_det_spd(m: &DMatrix<f64>, context: &str) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = cholesky(m, context)?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Replaces `m` by `(m + mᵀ) / 2`.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Draw from `N(mean, Q⁻¹)` given the Cholesky factor `Q = LLᵀ` and a vector
/// of independent standard normals `z`: `mean + L⁻ᵀ z`.
pub(crate) fn gaussian_from_precision(
    chol: &Cholesky<f64, Dyn>,
    mean: &DVector<f64>,
    z: DVector<f64>,
) -> DVector<f64> {
    let l = chol.l_dirty();
    let x = l.tr_solve_lower_triangular(&z).expect("Cholesky factor has a positive diagonal");
    mean + x
}

/// Largest relative asymmetry `|m_ij - m_ji| / max(|m_ij|, |m_ji|, 1)`.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            let scale = a.abs().max(b.abs()).max(1.0);
            worst = worst.max((a - b).abs() / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_and_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert!((log_det_spd(&m, "").unwrap() - 3f64.ln()).abs() < 1e-14);
        let inv = inverse_spd(&m, "").unwrap();
        let id = &m * &inv;
        assert!((id - DMatrix::identity(2, 2)).abs().max() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky(&bad, "x"), Err(Error::NotPositiveDefinite(_))));
    }
}
