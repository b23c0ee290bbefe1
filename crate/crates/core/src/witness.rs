//! Rank-based dimension lower bounds.
//!
//! A classical message of dimension `d` yields a behaviour matrix of rank at
//! most `d`; a quantum one of rank at most `d^2`. Bell behaviours from states of
//! local dimension `d` likewise have rank at most `d^2`.

use serde::Serialize;

use crate::behaviour::{
    bell_matrix, pm_matrix, validate_bell, validate_pm, w_matrix, BellBehaviour, PmBehaviour,
    DEFAULT_VALIDATION_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{rank, RankMethod, RankMode};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSource {
    PmRank,
    WRank,
    BellRank,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessVerdict {
    pub classical_lb: Option<usize>,
    pub quantum_lb: Option<usize>,
    pub source: WitnessSource,
    pub rank: usize,
    pub mode: RankMode,
    /// Only exact-mode verdicts are certificates.
    pub certified: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessOptions {
    pub rank: RankMethod,
    pub validation_tol: f64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions { rank: RankMethod::default(), validation_tol: DEFAULT_VALIDATION_TOL }
    }
}

/// Smallest `q` with `q * q >= r`, by integer search.
pub fn ceil_sqrt(r: usize) -> usize {
    let mut lo = 0usize;
    let mut hi = r.max(1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if mid.checked_mul(mid).is_some_and(|sq| sq >= r) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

fn verdict(rank_used: usize, mode: RankMode, source: WitnessSource, classical_offset: Option<usize>) -> WitnessVerdict {
    let bound = |r: usize| r.max(1);
    WitnessVerdict {
        classical_lb: classical_offset.map(|off| bound(rank_used + off)),
        quantum_lb: Some(bound(ceil_sqrt(rank_used + classical_offset.unwrap_or(0)))),
        source,
        rank: rank_used,
        mode,
        certified: mode == RankMode::Exact,
    }
}

fn require_valid_pm(beh: &PmBehaviour, tol: f64) -> Result<()> {
    let report = validate_pm(beh, tol);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidBehaviour(report.messages().join("; ")))
    }
}

/// Bounds from the rank of the `|X| x 2|Y|` behaviour matrix.
pub fn witness_pm(beh: &PmBehaviour, opts: &WitnessOptions) -> Result<WitnessVerdict> {
    require_valid_pm(beh, opts.validation_tol)?;
    let r = rank(&pm_matrix(beh), opts.rank)?;
    Ok(verdict(r.rank, r.mode, WitnessSource::PmRank, Some(0)))
}

/// Bounds from `rank W + 1` (requires `|X| = 2|Y|`).
pub fn witness_w(beh: &PmBehaviour, opts: &WitnessOptions) -> Result<WitnessVerdict> {
    let w = w_matrix(beh)?;
    require_valid_pm(beh, opts.validation_tol)?;
    let r = rank(&w, opts.rank)?;
    Ok(verdict(r.rank, r.mode, WitnessSource::WRank, Some(1)))
}

/// Quantum bound from the rank of the `mn x mn` Bell matrix. Signaling inputs are refused.
pub fn witness_bell(beh: &BellBehaviour, opts: &WitnessOptions) -> Result<WitnessVerdict> {
    let report = validate_bell(beh, opts.validation_tol);
    if !report.is_valid() {
        return Err(Error::InvalidBehaviour(report.messages().join("; ")));
    }
    let r = rank(&bell_matrix(beh), opts.rank)?;
    Ok(verdict(r.rank, r.mode, WitnessSource::BellRank, None))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WRankRelation {
    pub rank_w: usize,
    pub rank_p: usize,
    /// `rank_w <= rank_p`.
    pub holds: bool,
    /// Rank of `E P` after the row operations, before any deletion.
    pub rank_after_row_ops: usize,
    /// Whether deleting rows and columns from `E P` reproduced `W^T`.
    pub deletion_gives_w: bool,
    pub mode: RankMode,
}

/// Elementary row operation: identity with `-1` at `(i, i + 1)`.
pub fn row_op_matrix(n: usize, i: usize) -> Matrix {
    Matrix::from_fn(n, n, |r, c| {
        if r == c {
            Scalar::int(1)
        } else if r == i && c == i + 1 {
            Scalar::int(-1)
        } else {
            Scalar::int(0)
        }
    })
}

/// Compares `rank W` with `rank P` and replays the elimination that turns `P`
/// into `W`: subtract each odd (1-based) row's successor, check the rank is
/// unchanged, then delete even rows and `b = 1` columns.
pub fn w_rank_relation(beh: &PmBehaviour, method: RankMethod) -> Result<WRankRelation> {
    let w = w_matrix(beh)?;
    let p = pm_matrix(beh);
    let rank_p = rank(&p, method)?;
    let rank_w = rank(&w, method)?;
    let n = p.rows();
    let mut ep = p.clone();
    for i in (0..n).step_by(2) {
        let e = row_op_matrix(n, i);
        ep = e.matmul(&ep)?;
    }
    let rank_after = rank(&ep, method)?;
    let keep_rows: Vec<usize> = (0..n).step_by(2).collect();
    let keep_cols: Vec<usize> = (0..p.cols()).step_by(2).collect();
    let reduced = ep.select(&keep_rows, &keep_cols);
    let wt = w.transpose();
    let deletion_gives_w = if p.is_exact() {
        reduced == wt
    } else {
        reduced.max_abs_diff(&wt) <= 1e-12
    };
    Ok(WRankRelation {
        rank_w: rank_w.rank,
        rank_p: rank_p.rank,
        holds: rank_w.rank <= rank_p.rank,
        rank_after_row_ops: rank_after.rank,
        deletion_gives_w,
        mode: rank_p.mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviour::{PmScenario, BellScenario};
    use crate::constructions::{d_block, l_star, ldb, p_k};
    use crate::scalar::ScalarKind;

    #[test]
    fn ceil_sqrt_exact_at_squares() {
        let expect = [(0, 0), (1, 1), (2, 2), (3, 2), (4, 2), (5, 3), (9, 3), (10, 4), (16, 4), (17, 5)];
        for (r, q) in expect {
            assert_eq!(ceil_sqrt(r), q, "r={r}");
        }
        for r in 0..2000usize {
            let q = ceil_sqrt(r);
            assert!(q * q >= r && (q == 0 || (q - 1) * (q - 1) < r));
        }
    }

    #[test]
    fn pk8_bounds() {
        let v = witness_pm(&p_k(9, 8).unwrap(), &WitnessOptions::default()).unwrap();
        assert_eq!((v.classical_lb, v.quantum_lb, v.rank), (Some(9), Some(3), 9));
        assert!(v.certified);
    }

    #[test]
    fn product_behaviour_bounds() {
        let s = PmScenario::new(4, 3).unwrap();
        let q = [Scalar::ratio(1, 3), Scalar::ratio(3, 4), Scalar::ratio(0, 1)];
        let beh = PmBehaviour::from_p0(s, |_, y| q[y].clone()).unwrap();
        let v = witness_pm(&beh, &WitnessOptions::default()).unwrap();
        assert_eq!((v.classical_lb, v.quantum_lb), (Some(1), Some(1)));
    }

    #[test]
    fn rank_five_gives_quantum_three() {
        let v = verdict(5, RankMode::Exact, WitnessSource::PmRank, Some(0));
        assert_eq!(v.quantum_lb, Some(3));
    }

    #[test]
    fn w_witness_uniform() {
        let s = PmScenario::new(4, 2).unwrap();
        let beh = PmBehaviour::from_p0(s, |_, _| Scalar::ratio(1, 2)).unwrap();
        let v = witness_w(&beh, &WitnessOptions::default()).unwrap();
        assert_eq!((v.rank, v.classical_lb, v.quantum_lb), (0, Some(1), Some(1)));
        let bad = PmBehaviour::from_p0(PmScenario::new(3, 2).unwrap(), |_, _| Scalar::ratio(1, 2)).unwrap();
        assert!(matches!(witness_w(&bad, &WitnessOptions::default()), Err(Error::UnsupportedScenario(_))));
    }

    #[test]
    fn bell_witness_cases() {
        let opts = WitnessOptions::default();
        let v = witness_bell(&l_star(2, 3).unwrap(), &opts).unwrap();
        assert_eq!((v.rank, v.quantum_lb, v.classical_lb), (5, Some(3), None));
        let v = witness_bell(&l_star(4, 2).unwrap(), &opts).unwrap();
        assert_eq!((v.rank, v.quantum_lb), (5, Some(3)));
        let v = witness_bell(&ldb(3, 2, &[1, 0, 1], &[0, 0, 1]).unwrap(), &opts).unwrap();
        assert_eq!((v.rank, v.quantum_lb), (1, Some(1)));

        let s = BellScenario::new(2, 2).unwrap();
        let signaling = BellBehaviour::from_fn(s, |a, _, _, y| Scalar::ratio((a == y) as i64, 2)).unwrap();
        assert!(matches!(witness_bell(&signaling, &opts), Err(Error::InvalidBehaviour(_))));
    }

    #[test]
    fn invalid_pm_refused() {
        let s = PmScenario::new(2, 1).unwrap();
        let beh = PmBehaviour::from_p0(s, |_, _| Scalar::ratio(3, 2)).unwrap();
        assert!(matches!(witness_pm(&beh, &WitnessOptions::default()), Err(Error::InvalidBehaviour(_))));
    }

    #[test]
    fn w_rank_relation_uniform() {
        let s = PmScenario::new(4, 2).unwrap();
        let beh = PmBehaviour::from_p0(s, |_, _| Scalar::ratio(1, 2)).unwrap();
        let rel = w_rank_relation(&beh, RankMethod::default()).unwrap();
        assert_eq!((rel.rank_w, rel.rank_p, rel.holds), (0, 1, true));
        assert!(rel.deletion_gives_w);
        assert_eq!(rel.rank_after_row_ops, rel.rank_p);
    }

    #[test]
    fn w_rank_relation_on_embedded_pk() {
        // P_k in the |X| = 2k scenario.
        for k in 1..6 {
            let beh = p_k(2 * k, k).unwrap();
            let rel = w_rank_relation(&beh, RankMethod::Exact).unwrap();
            assert!(rel.holds && rel.deletion_gives_w);
            assert_eq!(rel.rank_p, k + 1);
            assert_eq!(rel.rank_after_row_ops, k + 1);
        }
        let d = d_block(6, 3, 2, 1).unwrap().to_kind(ScalarKind::Float).unwrap();
        let rel = w_rank_relation(&d, RankMethod::default()).unwrap();
        assert_eq!(rel.mode, RankMode::Float);
        assert!(rel.holds && rel.deletion_gives_w);
    }
}
