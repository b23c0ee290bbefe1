//! Singular values by one-sided Jacobi rotations.

const MAX_SWEEPS: usize = 80;

/// Singular values of a dense row-major matrix, sorted nonincreasing.
/// Returns `min(rows, cols)` values.
pub fn singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    // Orthogonalize the columns of whichever orientation has fewer columns.
    // `work[j]` holds column j.
    let mut work: Vec<Vec<f64>> = if cols <= rows {
        (0..cols).map(|j| (0..rows).map(|i| a[i][j]).collect()).collect()
    } else {
        a.to_vec()
    };
    let n = work.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = work[p].iter().zip(&work[q]).fold(
                    (0.0, 0.0, 0.0),
                    |(a, b, g), (&x, &y)| (a + x * x, b + y * y, g + x * y),
                );
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = work.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = work
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal() {
        let sv = singular_values(&[vec![3.0, 0.0], vec![0.0, -4.0]]);
        assert_eq!(sv, vec![4.0, 3.0]);
    }

    #[test]
    fn wide_and_tall_agree() {
        let a = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let at = vec![vec![1.0, 4.0], vec![2.0, 5.0], vec![3.0, 6.0]];
        let s1 = singular_values(&a);
        let s2 = singular_values(&at);
        assert_eq!(s1.len(), 2);
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x - y).abs() < 1e-12);
        }
        // Known values for this matrix.
        assert!((s1[0] - 9.508032000695723).abs() < 1e-12);
        assert!((s1[1] - 0.7728696356734838).abs() < 1e-12);
    }

    proptest! {
        // Independent route: nalgebra's bidiagonal SVD.
        #[test]
        fn matches_nalgebra(
            rows in 1usize..7,
            cols in 1usize..7,
            vals in prop::collection::vec(-10.0f64..10.0, 49),
        ) {
            let a: Vec<Vec<f64>> = (0..rows).map(|i| (0..cols).map(|j| vals[i * 7 + j]).collect()).collect();
            let ours = singular_values(&a);
            let na = nalgebra::DMatrix::from_fn(rows, cols, |i, j| a[i][j]);
            let mut theirs: Vec<f64> = na.singular_values().iter().copied().collect();
            theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
            prop_assert_eq!(ours.len(), theirs.len());
            let scale = theirs[0].max(1.0);
            for (x, y) in ours.iter().zip(&theirs) {
                prop_assert!((x - y).abs() <= 1e-10 * scale, "{:?} vs {:?}", ours, theirs);
            }
        }
    }
}
