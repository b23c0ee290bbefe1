//! Dense row-major matrix over [`Scalar`], homogeneous in scalar kind.

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{homogeneous_kind, Scalar, ScalarKind};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Matrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::Structural("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Structural(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if homogeneous_kind(&data).is_none() {
            return Err(Error::WrongMode("matrix mixes exact and float entries".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix entry by entry. Mixed kinds are promoted to float.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Matrix {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        let m = Matrix { rows, cols, data };
        if homogeneous_kind(&m.data).is_none() {
            m.to_kind(ScalarKind::Float).expect("promotion to float")
        } else {
            m
        }
    }

    pub fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Result<Matrix> {
        Matrix::from_vec(rows, cols, data.iter().map(|&v| Scalar::Float(v)).collect())
    }

    pub fn from_ratios(rows: usize, cols: usize, data: &[(i64, i64)]) -> Result<Matrix> {
        Matrix::from_vec(
            rows,
            cols,
            data.iter().map(|&(n, d)| Scalar::ratio(n, d)).collect(),
        )
    }

    pub fn identity(n: usize, kind: ScalarKind) -> Matrix {
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                Scalar::one(kind)
            } else {
                Scalar::zero(kind)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> ScalarKind {
        self.data[0].kind()
    }

    pub fn is_exact(&self) -> bool {
        self.kind() == ScalarKind::Exact
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn to_kind(&self, kind: ScalarKind) -> Result<Matrix> {
        let data = self
            .data
            .iter()
            .map(|v| v.to_kind(kind))
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(Scalar::to_f64).collect())
            .collect()
    }

    pub fn to_rational_rows(&self) -> Result<Vec<Vec<BigRational>>> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|v| {
                        v.as_rational().cloned().ok_or_else(|| {
                            Error::WrongMode("exact rank requested on float entries".into())
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Structural(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let kind = self.kind().join(other.kind());
        Ok(Matrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(Scalar::zero(kind), |acc, k| {
                &acc + &(self.get(i, k) * other.get(k, j))
            })
        }))
    }

    /// Entrywise `a*self + b*other`.
    pub fn lin_comb(&self, a: &Scalar, other: &Matrix, b: &Scalar) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Structural("shape mismatch in linear combination".into()));
        }
        Ok(Matrix::from_fn(self.rows, self.cols, |i, j| {
            &(a * self.get(i, j)) + &(b * other.get(i, j))
        }))
    }

    /// Keeps the listed rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    /// Maximum absolute entrywise difference, evaluated in floating point.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
            .fold(0.0, f64::max)
    }

    pub fn as_serializable(&self) -> SerializableMatrix {
        SerializableMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.to_string_rows(),
        }
    }

    fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.to_string()).collect())
            .collect()
    }
}

/// Printable form used inside reports.
#[derive(Clone, Debug, Serialize)]
pub struct SerializableMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<String>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_kinds_rejected_by_from_vec() {
        let err = Matrix::from_vec(1, 2, vec![Scalar::int(1), Scalar::Float(1.0)]);
        assert!(matches!(err, Err(Error::WrongMode(_))));
    }

    #[test]
    fn shape_checked() {
        assert!(Matrix::from_f64(2, 2, &[1.0, 2.0, 3.0]).is_err());
        assert!(Matrix::from_f64(0, 2, &[]).is_err());
    }

    #[test]
    fn exact_product() {
        let a = Matrix::from_ratios(2, 2, &[(1, 2), (0, 1), (1, 1), (1, 3)]).unwrap();
        let id = Matrix::identity(2, ScalarKind::Exact);
        assert_eq!(a.matmul(&id).unwrap(), a);
        assert_eq!(a.transpose().transpose(), a);
    }
}
