//! Small dense complex-matrix helpers for density matrices and POVMs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest tolerated `|A - A^dagger|` entry before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Slack for PSD, trace and completeness checks.
pub const OPERATOR_TOL: f64 = 1e-10;

/// Symmetrizes `m`, refusing deviations above [`HERMITIAN_TOL`].
pub fn hermitize(m: &CMatrix, what: &str) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::InvalidStrategy(format!("{what} is not square")));
    }
    let adj = m.adjoint();
    let dev = (m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(dev <= HERMITIAN_TOL) {
        return Err(Error::InvalidStrategy(format!("{what} is not Hermitian (deviation {dev:e})")));
    }
    Ok((m + adj).map(|z| z * 0.5))
}

/// Eigenvalues of a Hermitian matrix, sorted nonincreasing.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    ev
}

pub fn check_psd(m: &CMatrix, what: &str) -> Result<()> {
    let min = hermitian_eigenvalues(m).last().copied().unwrap_or(0.0);
    if !(min >= -OPERATOR_TOL) {
        return Err(Error::InvalidStrategy(format!("{what} is not positive semidefinite (eigenvalue {min:e})")));
    }
    Ok(())
}

pub fn real_trace(m: &CMatrix) -> f64 {
    m.trace().re
}

/// Number of eigenvalues above `1e-10` times the largest one.
pub fn support_rank(m: &CMatrix) -> usize {
    let ev = hermitian_eigenvalues(m);
    let top = ev.first().copied().unwrap_or(0.0).max(0.0);
    ev.iter().filter(|&&e| e > OPERATOR_TOL * top && e > 0.0).count()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Inverse square root of a positive definite Hermitian matrix.
pub fn inv_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidStrategy("measurement operators do not span the space".into()));
    }
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::new(1.0 / e.sqrt(), 0.0)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Block-diagonal `a (+) b`.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Reduced states `(rho_A, rho_B)` of a bipartite state on `C^dA (x) C^dB`.
pub fn partial_traces(rho: &CMatrix, da: usize, db: usize) -> (CMatrix, CMatrix) {
    let mut ra = CMatrix::zeros(da, da);
    let mut rb = CMatrix::zeros(db, db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                ra[(i, j)] += rho[(i * db + k, j * db + k)];
            }
        }
    }
    for k in 0..db {
        for l in 0..db {
            for i in 0..da {
                rb[(k, l)] += rho[(i * db + k, i * db + l)];
            }
        }
    }
    (ra, rb)
}

/// `d x e` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Normalized Ginibre density matrix `G G^dagger / tr(G G^dagger)`.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = ginibre(rng, d, d);
    let rho = &g * g.adjoint();
    let tr = real_trace(&rho);
    rho.map(|z| z / tr)
}

/// Haar unitary: QR of a Ginibre matrix with the phases of `R`'s diagonal absorbed.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let qr = ginibre(rng, d, d).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Sampling law used for random measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PovmLaw {
    /// Haar-random orthonormal basis; basis vector `i` goes to outcome `i mod n`.
    #[serde(rename = "haar-projective-v1")]
    HaarProjective,
    /// `S^{-1/2} W_b S^{-1/2}` with Wishart `W_b = G_b G_b^dagger`, used when there
    /// are more outcomes than dimensions.
    #[serde(rename = "wishart-v1")]
    Wishart,
}

/// Random `n`-outcome measurement on `C^d`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> (Vec<CMatrix>, PovmLaw) {
    if n <= d {
        let u = haar_unitary(rng, d);
        let mut ops = vec![CMatrix::zeros(d, d); n];
        for i in 0..d {
            let col = u.column(i);
            ops[i % n] += col * col.adjoint();
        }
        (ops, PovmLaw::HaarProjective)
    } else {
        let ws: Vec<CMatrix> = (0..n)
            .map(|_| {
                let g = ginibre(rng, d, d);
                &g * g.adjoint()
            })
            .collect();
        (normalize_povm(&ws).expect("Wishart sum is positive definite"), PovmLaw::Wishart)
    }
}

/// Applies `S^{-1/2} . S^{-1/2}` with `S = sum_b E_b`, so the elements sum to the identity.
pub fn normalize_povm(ops: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let d = ops[0].nrows();
    let total = ops.iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e);
    let isq = inv_sqrt(&total)?;
    Ok(ops
        .iter()
        .map(|e| {
            let m = &isq * e * &isq;
            (&m + m.adjoint()).map(|z| z * 0.5)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(&mut rng, 4);
        let id = &u * u.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn random_povms_complete_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (d, n) in [(1, 2), (2, 2), (3, 2), (2, 3), (4, 3)] {
            let (ops, law) = random_povm(&mut rng, d, n);
            assert_eq!(law, if n <= d { PovmLaw::HaarProjective } else { PovmLaw::Wishart });
            let total = ops.iter().fold(CMatrix::zeros(d, d), |a, e| a + e);
            assert!((total - CMatrix::identity(d, d)).iter().all(|z| z.norm() < 1e-12));
            for e in &ops {
                check_psd(e, "element").unwrap();
            }
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_density_matrix(&mut rng, 2);
        let b = random_density_matrix(&mut rng, 3);
        let ab = a.kronecker(&b);
        let (ra, rb) = partial_traces(&ab, 2, 3);
        assert!((ra - a).iter().all(|z| z.norm() < 1e-12));
        assert!((rb - b).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(hermitize(&m, "state").is_err());
        m[(0, 1)] = Complex64::new(1e-9, 0.0);
        assert!(hermitize(&m, "state").is_ok());
    }
}
