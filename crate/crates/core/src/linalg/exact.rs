//! Fraction-free Gaussian elimination over the integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Scales each row by the lcm of its denominators, giving an integer matrix of equal rank.
pub fn integer_rows(rows: &[Vec<BigRational>]) -> Vec<Vec<BigInt>> {
    rows.iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter().map(|v| v.numer() * (&lcm / v.denom())).collect()
        })
        .collect()
}

/// Bareiss elimination. Returns the rank and the pivot columns.
///
/// After step `r`, every remaining entry equals an `(r+1)`-order minor of the
/// input, so the division by the previous pivot is always exact and the
/// previous pivot is never zero.
pub fn bareiss_rank(mut a: Vec<Vec<BigInt>>) -> (usize, Vec<usize>) {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let (top, bottom) = a.split_at_mut(r + 1);
        let pivot_row = &top[r];
        for row in bottom.iter_mut() {
            let factor = row[c].clone();
            for j in c + 1..cols {
                let num = &pivot_row[c] * &row[j] - &factor * &pivot_row[j];
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                row[j] = q;
            }
            row[c] = BigInt::zero();
        }
        prev = top[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    (r, pivots)
}

/// Integer elimination with content removal: each update is
/// `row <- pivot * row - factor * pivot_row` followed by division by the gcd of
/// the row. Rows already zero in the pivot column are left alone. Both steps
/// keep the row space, and entries stay small on sparse inputs.
pub fn content_rank(mut a: Vec<Vec<BigInt>>) -> (usize, Vec<usize>) {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    for row in a.iter_mut() {
        remove_content(row);
    }
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows)
            .filter(|&i| !a[i][c].is_zero())
            .min_by_key(|&i| a[i][c].magnitude().bits())
        else {
            continue;
        };
        a.swap(r, p);
        let (top, bottom) = a.split_at_mut(r + 1);
        let pivot_row = &top[r];
        let pivot = &pivot_row[c];
        for row in bottom.iter_mut() {
            if row[c].is_zero() {
                continue;
            }
            let g = pivot.gcd(&row[c]);
            let (pm, fm) = (pivot / &g, &row[c] / &g);
            for j in c + 1..cols {
                if pivot_row[j].is_zero() {
                    if !row[j].is_zero() {
                        row[j] = &row[j] * &pm;
                    }
                } else {
                    row[j] = &row[j] * &pm - &fm * &pivot_row[j];
                }
            }
            row[c] = BigInt::zero();
            remove_content(row);
        }
        pivots.push(c);
        r += 1;
    }
    (r, pivots)
}

fn remove_content(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if !g.is_zero() && !g.is_one() {
        for v in row.iter_mut() {
            *v = &*v / &g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
    }

    #[test]
    fn small_cases() {
        assert_eq!(bareiss_rank(ints(&[&[1, 2], &[2, 4]])).0, 1);
        assert_eq!(bareiss_rank(ints(&[&[0, 1], &[1, 0]])).0, 2);
        assert_eq!(bareiss_rank(ints(&[&[0, 0, 3], &[0, 0, 6], &[1, 0, 0]])), (2, vec![0, 2]));
        assert_eq!(content_rank(ints(&[&[0, 0, 3], &[0, 0, 6], &[1, 0, 0]])), (2, vec![0, 2]));
        assert_eq!(content_rank(ints(&[&[6, 4], &[9, 6]])).0, 1);
    }

    /// Rank by plain rational Gauss-Jordan, used as an independent check.
    fn rational_rank(rows: &[Vec<BigRational>]) -> usize {
        let mut a = rows.to_vec();
        let cols = a.first().map_or(0, Vec::len);
        let mut r = 0;
        for c in 0..cols {
            if let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) {
                a.swap(r, p);
                let pivot = a[r][c].clone();
                for i in 0..a.len() {
                    if i != r && !a[i][c].is_zero() {
                        let f = &a[i][c] / &pivot;
                        for j in 0..cols {
                            let delta = &f * &a[r][j];
                            a[i][j] -= delta;
                        }
                    }
                }
                r += 1;
            }
        }
        r
    }

    proptest! {
        #[test]
        fn bareiss_matches_gauss_jordan(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in prop::collection::vec((-3i64..4, 1i64..4), 36),
        ) {
            let m: Vec<Vec<BigRational>> = (0..rows)
                .map(|i| (0..cols).map(|j| {
                    let (n, d) = seed[i * 6 + j];
                    BigRational::new(n.into(), d.into())
                }).collect())
                .collect();
            let (rank, pivots) = bareiss_rank(integer_rows(&m));
            prop_assert_eq!(rank, rational_rank(&m));
            prop_assert_eq!(pivots.len(), rank);
            prop_assert_eq!(content_rank(integer_rows(&m)), (rank, pivots));
        }

        #[test]
        fn low_rank_products(
            inner in 1usize..4,
            left in prop::collection::vec(-3i64..4, 24),
            right in prop::collection::vec(-3i64..4, 24),
        ) {
            // 6 x inner times inner x 6 has rank <= inner.
            let m: Vec<Vec<BigRational>> = (0..6)
                .map(|i| (0..6).map(|j| {
                    let v: i64 = (0..inner).map(|t| left[i * 4 + t] * right[t * 6 + j]).sum();
                    BigRational::from_integer(v.into())
                }).collect())
                .collect();
            let expected = rational_rank(&m);
            prop_assert!(expected <= inner);
            prop_assert_eq!(content_rank(integer_rows(&m)).0, expected);
            prop_assert_eq!(bareiss_rank(integer_rows(&m)).0, expected);
        }

        #[test]
        fn rank_invariant_under_transpose_and_permutation(
            seed in prop::collection::vec(-2i64..3, 20),
            shift in 0usize..4,
        ) {
            let m: Vec<Vec<BigRational>> = (0..4)
                .map(|i| (0..5).map(|j| BigRational::from_integer(seed[i * 5 + j].into())).collect())
                .collect();
            let t: Vec<Vec<BigRational>> = (0..5).map(|j| (0..4).map(|i| m[i][j].clone()).collect()).collect();
            let mut p = m.clone();
            p.rotate_left(shift);
            let r = bareiss_rank(integer_rows(&m)).0;
            prop_assert_eq!(r, bareiss_rank(integer_rows(&t)).0);
            prop_assert_eq!(r, bareiss_rank(integer_rows(&p)).0);
            prop_assert_eq!(r, content_rank(integer_rows(&t)).0);
        }
    }
}
