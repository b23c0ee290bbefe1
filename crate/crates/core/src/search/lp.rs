//! Phase-one revised simplex with an explicit basis inverse and delayed column
//! generation, generic over the number field.

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arithmetic needed by the simplex. Sign tests absorb the float tolerance.
pub trait LpField: Clone + Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// Exactly zero, ignoring the tolerance.
    fn is_exact_zero(&self) -> bool;
    fn is_zero_value(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
}

/// Sign tolerance of the float simplex.
pub const FLOAT_LP_TOL: f64 = 1e-9;

impl LpField for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_LP_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -FLOAT_LP_TOL
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

impl LpField for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_exact_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Outcome of phase one on `A lam = b, lam >= 0`.
#[derive(Clone, Debug)]
pub struct PhaseOneResult<F, K> {
    pub feasible: bool,
    /// Sum of artificial variables at termination.
    pub infeasibility: F,
    /// Positive structural variables, keyed by their generator key.
    pub solution: Vec<(K, F)>,
    pub pivots: usize,
    pub columns_generated: usize,
}

/// Supplies columns with negative reduced cost. Given the duals `y`, returns a
/// column `a` (and its key) with `y . a > 0`, or `None` if there is none.
pub trait ColumnOracle<F, K> {
    fn price(&mut self, duals: &[F]) -> Result<Option<(K, Vec<F>)>>;
}

const MAX_PIVOTS: usize = 50_000;
const DEGENERATE_STREAK_FOR_BLAND: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    Artificial(usize),
    Structural(usize),
}

/// Minimizes the sum of artificials for `A lam = b` with `b >= 0`. Columns of `A`
/// are requested from `oracle` as needed.
pub fn phase_one<F: LpField, K: Clone + PartialEq, O: ColumnOracle<F, K>>(
    b: &[F],
    oracle: &mut O,
) -> Result<PhaseOneResult<F, K>> {
    let rows = b.len();
    if b.iter().any(LpField::is_neg) {
        return Err(Error::Solver("right-hand side must be nonnegative".into()));
    }
    let mut cols: Vec<Vec<F>> = Vec::new();
    let mut keys: Vec<K> = Vec::new();
    let mut basis: Vec<Var> = (0..rows).map(Var::Artificial).collect();
    let mut binv: Vec<Vec<F>> = (0..rows)
        .map(|i| (0..rows).map(|j| if i == j { F::one() } else { F::zero() }).collect())
        .collect();
    let mut xb: Vec<F> = b.to_vec();
    let mut pivots = 0;
    let mut degenerate_streak = 0;

    let objective = |basis: &[Var], xb: &[F]| -> F {
        basis
            .iter()
            .zip(xb)
            .filter(|(v, _)| matches!(v, Var::Artificial(_)))
            .fold(F::zero(), |acc, (_, x)| acc.add(x))
    };

    loop {
        let obj = objective(&basis, &xb);
        if !obj.is_pos() {
            break;
        }
        if pivots >= MAX_PIVOTS {
            return Err(Error::Solver(format!("no convergence within {MAX_PIVOTS} pivots")));
        }
        // y_i = sum over artificial basics of Binv[k][i]
        let duals: Vec<F> = (0..rows)
            .map(|i| {
                basis
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| matches!(v, Var::Artificial(_)))
                    .fold(F::zero(), |acc, (k, _)| acc.add(&binv[k][i]))
            })
            .collect();
        let score = |a: &[F]| a.iter().zip(&duals).fold(F::zero(), |acc, (ai, yi)| acc.add(&ai.mul(yi)));
        let in_basis = |j: usize, basis: &[Var]| basis.contains(&Var::Structural(j));

        let bland = degenerate_streak >= DEGENERATE_STREAK_FOR_BLAND;
        let mut entering: Option<usize> = None;
        let mut best: Option<F> = None;
        for j in 0..cols.len() {
            if in_basis(j, &basis) {
                continue;
            }
            let s = score(&cols[j]);
            if s.is_pos() {
                if bland {
                    entering = Some(j);
                    break;
                }
                if best.as_ref().is_none_or(|b| s.sub(b).is_pos()) {
                    best = Some(s);
                    entering = Some(j);
                }
            }
        }
        if entering.is_none() {
            match oracle.price(&duals)? {
                Some((key, col)) => {
                    if col.len() != rows {
                        return Err(Error::Solver("column oracle returned a column of the wrong length".into()));
                    }
                    if !score(&col).is_pos() {
                        return Err(Error::Solver("column oracle returned a column that does not improve".into()));
                    }
                    if let Some(j) = keys.iter().position(|k| *k == key) {
                        if in_basis(j, &basis) {
                            return Err(Error::Solver("column oracle returned a basic column".into()));
                        }
                        entering = Some(j);
                    } else {
                        cols.push(col);
                        keys.push(key);
                        entering = Some(cols.len() - 1);
                    }
                }
                None => break,
            }
        }
        let j = entering.expect("entering column chosen");
        let dir: Vec<F> = binv
            .iter()
            .map(|row| row.iter().zip(&cols[j]).fold(F::zero(), |acc, (r, a)| acc.add(&r.mul(a))))
            .collect();
        let mut leave: Option<(usize, F)> = None;
        for k in 0..rows {
            if !dir[k].is_pos() {
                continue;
            }
            let ratio = xb[k].div(&dir[k]);
            let better = match &leave {
                None => true,
                Some((l, r)) => {
                    let diff = ratio.sub(r);
                    diff.is_neg() || (!diff.is_pos() && prefer_leaving(basis[k], basis[*l]))
                }
            };
            if better {
                leave = Some((k, ratio));
            }
        }
        let (r, theta) = leave.ok_or_else(|| Error::Solver("phase one is unbounded".into()))?;
        if theta.is_zero_value() {
            degenerate_streak += 1;
        } else {
            degenerate_streak = 0;
        }
        let piv = dir[r].clone();
        let pivot_row: Vec<F> = binv[r].iter().map(|v| v.div(&piv)).collect();
        let x_r = xb[r].div(&piv);
        for k in 0..rows {
            if k == r || dir[k].is_exact_zero() {
                continue;
            }
            let f = dir[k].clone();
            for (dst, src) in binv[k].iter_mut().zip(&pivot_row) {
                *dst = dst.sub(&f.mul(src));
            }
            xb[k] = xb[k].sub(&f.mul(&x_r));
        }
        binv[r] = pivot_row;
        xb[r] = x_r;
        basis[r] = Var::Structural(j);
        pivots += 1;
    }

    let infeasibility = objective(&basis, &xb);
    let solution = basis
        .iter()
        .zip(&xb)
        .filter_map(|(v, x)| match v {
            Var::Structural(j) if x.is_pos() => Some((keys[*j].clone(), x.clone())),
            _ => None,
        })
        .collect();
    Ok(PhaseOneResult {
        feasible: !infeasibility.is_pos(),
        infeasibility,
        solution,
        pivots,
        columns_generated: cols.len(),
    })
}

/// Ratio-test tie break: drive artificials out first, then lowest index.
fn prefer_leaving(a: Var, b: Var) -> bool {
    match (a, b) {
        (Var::Artificial(i), Var::Artificial(j)) => i < j,
        (Var::Artificial(_), Var::Structural(_)) => true,
        (Var::Structural(_), Var::Artificial(_)) => false,
        (Var::Structural(i), Var::Structural(j)) => i < j,
    }
}
