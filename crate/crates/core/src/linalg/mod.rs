//! Exact and tolerance-aware rank, plus affine dimension.

mod exact;
mod svd;

pub use exact::{bareiss_rank, content_rank, integer_rows};
pub use svd::singular_values;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Scalar, ScalarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Exact,
    Float,
}

/// How to compute a rank.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankMethod {
    /// Exact when every entry is rational; otherwise float with the given
    /// (or default) relative tolerance.
    Auto(Option<f64>),
    Exact,
    /// Float SVD with an optional relative tolerance.
    Float(Option<f64>),
}

impl Default for RankMethod {
    fn default() -> Self {
        RankMethod::Auto(None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankResult {
    pub rank: usize,
    pub mode: RankMode,
    /// Nonincreasing singular values (float mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singular_values: Option<Vec<f64>>,
    /// Relative tolerance factor applied to the largest singular value (float mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance_used: Option<f64>,
    /// Pivot columns chosen by elimination (exact mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pivot_columns: Option<Vec<usize>>,
}

/// Default relative tolerance `max(rows, cols) * eps`.
pub fn default_tolerance(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Rank over the rationals by fraction-free integer elimination.
pub fn rank_exact(m: &Matrix) -> Result<RankResult> {
    let rows = m.to_rational_rows()?;
    let (rank, pivots) = content_rank(integer_rows(&rows));
    Ok(RankResult {
        rank,
        mode: RankMode::Exact,
        singular_values: None,
        tolerance_used: None,
        pivot_columns: Some(pivots),
    })
}

/// Numerical rank: singular values strictly above `tol * sigma_max`.
pub fn rank_float(m: &Matrix, tol: Option<f64>) -> Result<RankResult> {
    let rows = m.to_f64_rows();
    for (i, row) in rows.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(m.rows(), m.cols()));
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::Precondition(format!("rank tolerance must be finite and >= 0, got {tol}")));
    }
    let sv = singular_values(&rows);
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > tol * sigma_max).count();
    Ok(RankResult {
        rank,
        mode: RankMode::Float,
        singular_values: Some(sv),
        tolerance_used: Some(tol),
        pivot_columns: None,
    })
}

/// Rank with the given method.
pub fn rank(m: &Matrix, method: RankMethod) -> Result<RankResult> {
    match method {
        RankMethod::Exact => rank_exact(m),
        RankMethod::Float(tol) => rank_float(m, tol),
        RankMethod::Auto(_) if m.kind() == ScalarKind::Exact => rank_exact(m),
        RankMethod::Auto(tol) => rank_float(m, tol),
    }
}

/// Dimension of the affine hull of `points` (matrices of identical shape).
pub fn affine_dim(points: &[Matrix], method: RankMethod) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::Precondition("affine_dim needs at least one point".into()))?;
    if points.len() == 1 {
        return Ok(0);
    }
    let len = first.rows() * first.cols();
    let mut data: Vec<Scalar> = Vec::with_capacity((points.len() - 1) * len);
    for p in &points[1..] {
        if p.rows() != first.rows() || p.cols() != first.cols() {
            return Err(Error::Structural(format!(
                "point of shape {}x{} does not match {}x{}",
                p.rows(),
                p.cols(),
                first.rows(),
                first.cols()
            )));
        }
        data.extend(p.entries().iter().zip(first.entries()).map(|(a, b)| a - b));
    }
    let diffs = Matrix::from_fn(points.len() - 1, len, |i, j| data[i * len + j].clone());
    Ok(rank(&diffs, method)?.rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_has_rank_zero() {
        let z = Matrix::from_ratios(2, 3, &[(0, 1); 6]).unwrap();
        assert_eq!(rank_exact(&z).unwrap().rank, 0);
        let zf = z.to_kind(ScalarKind::Float).unwrap();
        assert_eq!(rank_float(&zf, None).unwrap().rank, 0);
    }

    #[test]
    fn exact_rank_of_pk_matrix() {
        // rows (1/2,1/2,1,0), (1,0,1/2,1/2), (1,0,1,0)
        let m = Matrix::from_ratios(
            3,
            4,
            &[(1, 2), (1, 2), (1, 1), (0, 1), (1, 1), (0, 1), (1, 2), (1, 2), (1, 1), (0, 1), (1, 1), (0, 1)],
        )
        .unwrap();
        assert_eq!(rank_exact(&m).unwrap().rank, 3);
    }

    #[test]
    fn exact_rank_rejects_floats() {
        let m = Matrix::from_f64(1, 1, &[1.0]).unwrap();
        assert!(matches!(rank_exact(&m), Err(Error::WrongMode(_))));
    }

    #[test]
    fn identity_float_rank() {
        let id = Matrix::identity(3, ScalarKind::Float);
        let r = rank_float(&id, None).unwrap();
        assert_eq!(r.rank, 3);
        assert_eq!(r.tolerance_used, Some(3.0 * f64::EPSILON));
    }

    #[test]
    fn tiny_singular_value_below_default_tolerance() {
        let m = Matrix::from_f64(2, 2, &[1.0, 0.0, 0.0, 1e-17]).unwrap();
        let r = rank_float(&m, None).unwrap();
        assert_eq!(r.rank, 1);
        assert_eq!(r.singular_values.unwrap(), vec![1.0, 1e-17]);
    }

    #[test]
    fn non_finite_rejected() {
        let m = Matrix::from_f64(1, 2, &[1.0, f64::NAN]).unwrap();
        assert_eq!(rank_float(&m, None), Err(Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn affine_dim_edge_cases() {
        let p = Matrix::from_ratios(1, 2, &[(1, 2), (1, 3)]).unwrap();
        assert_eq!(affine_dim(&[p.clone()], RankMethod::Exact).unwrap(), 0);
        assert_eq!(affine_dim(&[p.clone(), p.clone()], RankMethod::Exact).unwrap(), 0);
        assert!(affine_dim(&[], RankMethod::Exact).is_err());
        let q = Matrix::from_ratios(2, 1, &[(1, 2), (1, 3)]).unwrap();
        assert!(matches!(affine_dim(&[p, q], RankMethod::Exact), Err(Error::Structural(_))));
    }
}
