//! Membership in the shared-randomness classical set: is a behaviour a convex
//! combination of deterministic `d`-message strategies?
//!
//! A deterministic strategy is a sender map `x -> m` and a responder map
//! `(m, y) -> b`. The LP is solved by column generation: for fixed responder
//! map the best sender choice decouples over `x`, so pricing enumerates the
//! `2^(d|Y|)` responder maps only. The enumeration cap applies to that count.

use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::lp::{phase_one, ColumnOracle, LpField};
use crate::behaviour::{validate_pm, PmBehaviour, PmScenario, DEFAULT_VALIDATION_TOL};
use crate::constructions::DEFAULT_LDB_CAP;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpMode {
    Float,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MembershipOptions {
    pub mode: LpMode,
    pub lp_tolerance: f64,
    /// Maximum number of responder maps `2^(d|Y|)` to enumerate during pricing.
    pub cap: u128,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions { mode: LpMode::Float, lp_tolerance: super::lp::FLOAT_LP_TOL, cap: DEFAULT_LDB_CAP }
    }
}

/// Deterministic `d`-message strategy. `index` packs the sender map as base-`d`
/// digits (input 0 most significant) followed by the responder bits
/// `b(m, y)` in order `m * |Y| + y`, most significant first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    pub index: u128,
    pub sender: Vec<usize>,
    /// `responder[m][y]` is the output bit.
    pub responder: Vec<Vec<u8>>,
}

impl DeterministicStrategy {
    pub fn new(d: usize, n_inputs_b: usize, sender: Vec<usize>, responder: Vec<Vec<u8>>) -> DeterministicStrategy {
        let mut idx_s: u128 = 0;
        for &m in &sender {
            idx_s = idx_s * d as u128 + m as u128;
        }
        let mut idx_r: u128 = 0;
        for row in &responder {
            for &bit in row {
                idx_r = (idx_r << 1) | bit as u128;
            }
        }
        let index = (idx_s << (d * n_inputs_b)) | idx_r;
        DeterministicStrategy { index, sender, responder }
    }

    /// Inverse of the index packing.
    pub fn from_index(d: usize, scenario: PmScenario, index: u128) -> DeterministicStrategy {
        let (nx, ny) = (scenario.n_inputs_a(), scenario.n_inputs_b());
        let bits = d * ny;
        let mut idx_r = index & ((1u128 << bits) - 1);
        let mut idx_s = index >> bits;
        let mut responder = vec![vec![0u8; ny]; d];
        for pos in (0..bits).rev() {
            responder[pos / ny][pos % ny] = (idx_r & 1) as u8;
            idx_r >>= 1;
        }
        let mut sender = vec![0; nx];
        for slot in sender.iter_mut().rev() {
            *slot = (idx_s % d as u128) as usize;
            idx_s /= d as u128;
        }
        DeterministicStrategy { index, sender, responder }
    }

    /// Exact 0/1 behaviour of the strategy.
    pub fn behaviour(&self, scenario: PmScenario) -> Result<PmBehaviour> {
        PmBehaviour::from_fn(scenario, |b, x, y| Scalar::int((self.responder[self.sender[x]][y] as usize == b) as i64))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateTerm {
    pub strategy: DeterministicStrategy,
    pub weight: Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipCertificate {
    pub feasible: bool,
    pub d: usize,
    pub weights: Option<Vec<CertificateTerm>>,
    pub lp_tolerance: f64,
    pub mode: LpMode,
    /// Largest entrywise gap between the reconstructed mixture and the behaviour.
    pub max_deviation: Option<f64>,
    /// Reconstruction is exactly equal (exact mode only).
    pub exact_match: Option<bool>,
    /// Phase-one objective at termination (0 when feasible).
    pub infeasibility: f64,
    pub responder_maps: u128,
    /// `d^|X| * 2^(d|Y|)`, if it fits in 128 bits.
    pub deterministic_strategies: Option<u128>,
    pub pivots: usize,
    pub columns_generated: usize,
}

struct Pricer {
    d: usize,
    nx: usize,
    ny: usize,
    /// Try float pricing before the exact enumeration.
    exact: bool,
}

/// `val[x][pattern] = sum over y with bit(pattern, y) = 0 of pi[x][y]`.
fn pattern_values<F: LpField>(duals: &[F], nx: usize, ny: usize) -> Vec<Vec<F>> {
    (0..nx)
        .map(|x| {
            (0..1usize << ny)
                .map(|p| {
                    (0..ny)
                        .filter(|&y| (p >> (ny - 1 - y)) & 1 == 0)
                        .fold(F::zero(), |acc, y| acc.add(&duals[x * ny + y]))
                })
                .collect()
        })
        .collect()
}

/// Best responder map and its induced sender map: `(r, score, sender)`.
fn best_strategy<F: LpField>(val: &[Vec<F>], d: usize, ny: usize) -> (u128, F, Vec<usize>) {
    let mask = (1u128 << ny) - 1;
    let total = 1u128 << (d * ny);
    let mut best: Option<(u128, F)> = None;
    let mut patterns = vec![0usize; d];
    for r in 0..total {
        for (m, p) in patterns.iter_mut().enumerate() {
            *p = ((r >> (ny * (d - 1 - m))) & mask) as usize;
        }
        let mut score = F::zero();
        for row in val {
            let mut top = &row[patterns[0]];
            for &p in &patterns[1..] {
                if row[p].sub(top).is_pos() {
                    top = &row[p];
                }
            }
            score = score.add(top);
        }
        if best.as_ref().is_none_or(|(_, b)| score.sub(b).is_pos()) {
            best = Some((r, score));
        }
    }
    let (r, score) = best.expect("at least one responder map");
    for (m, p) in patterns.iter_mut().enumerate() {
        *p = ((r >> (ny * (d - 1 - m))) & mask) as usize;
    }
    let sender = val
        .iter()
        .map(|row| {
            let mut arg = 0;
            for m in 1..d {
                if row[patterns[m]].sub(&row[patterns[arg]]).is_pos() {
                    arg = m;
                }
            }
            arg
        })
        .collect();
    (r, score, sender)
}

impl Pricer {
    fn strategy(&self, r: u128, sender: Vec<usize>) -> DeterministicStrategy {
        let responder = (0..self.d)
            .map(|m| (0..self.ny).map(|y| ((r >> (self.d * self.ny - 1 - (m * self.ny + y))) & 1) as u8).collect())
            .collect();
        DeterministicStrategy::new(self.d, self.ny, sender, responder)
    }

    fn column<F: LpField>(&self, st: &DeterministicStrategy) -> Vec<F> {
        let mut col: Vec<F> = (0..self.nx * self.ny)
            .map(|i| if st.responder[st.sender[i / self.ny]][i % self.ny] == 0 { F::one() } else { F::zero() })
            .collect();
        col.push(F::one());
        col
    }

    fn reduced_score<F: LpField>(&self, duals: &[F], col: &[F]) -> F {
        col.iter().zip(duals).fold(F::zero(), |acc, (a, y)| acc.add(&a.mul(y)))
    }

    fn price_generic<F: LpField>(&self, duals: &[F]) -> Option<DeterministicStrategy> {
        let val = pattern_values(duals, self.nx, self.ny);
        let (r, score, sender) = best_strategy(&val, self.d, self.ny);
        let mu = &duals[self.nx * self.ny];
        score.add(mu).is_pos().then(|| self.strategy(r, sender))
    }
}

impl<F: LpField> ColumnOracle<F, u128> for Pricer {
    fn price(&mut self, duals: &[F]) -> Result<Option<(u128, Vec<F>)>> {
        if self.exact {
            let approx: Vec<f64> = duals.iter().map(LpField::to_f64).collect();
            if let Some(st) = self.price_generic(&approx) {
                let col: Vec<F> = self.column(&st);
                if self.reduced_score(duals, &col).is_pos() {
                    return Ok(Some((st.index, col)));
                }
            }
        }
        Ok(self.price_generic(duals).map(|st| (st.index, self.column(&st))))
    }
}

/// LP feasibility of `beh` in the convex hull of deterministic `d`-message strategies.
pub fn membership_shared_randomness(beh: &PmBehaviour, d: usize, opts: &MembershipOptions) -> Result<MembershipCertificate> {
    if d == 0 {
        return Err(Error::Precondition("message dimension must be at least 1".into()));
    }
    if !(opts.lp_tolerance > 0.0) {
        return Err(Error::Precondition(format!("LP tolerance must be positive, got {}", opts.lp_tolerance)));
    }
    let report = validate_pm(beh, DEFAULT_VALIDATION_TOL);
    if !report.is_valid() {
        return Err(Error::InvalidBehaviour(report.messages().join("; ")));
    }
    let scenario = beh.scenario();
    let (nx, ny) = (scenario.n_inputs_a(), scenario.n_inputs_b());
    let bits = d * ny;
    let responder_maps = if bits >= 128 { u128::MAX } else { 1u128 << bits };
    if bits >= 128 || responder_maps > opts.cap {
        return Err(Error::CapExceeded { required: responder_maps, cap: opts.cap });
    }
    let deterministic_strategies = (d as u128).checked_pow(nx as u32).and_then(|s| s.checked_mul(responder_maps));
    let pricer = |exact| Pricer { d, nx, ny, exact };

    let mut cert = MembershipCertificate {
        feasible: false,
        d,
        weights: None,
        lp_tolerance: opts.lp_tolerance,
        mode: opts.mode,
        max_deviation: None,
        exact_match: None,
        infeasibility: 0.0,
        responder_maps,
        deterministic_strategies,
        pivots: 0,
        columns_generated: 0,
    };
    let terms: Vec<(u128, Scalar)> = match opts.mode {
        LpMode::Exact => {
            if beh.kind() != ScalarKind::Exact {
                return Err(Error::WrongMode("exact LP mode needs an exact behaviour".into()));
            }
            let mut b: Vec<BigRational> = Vec::with_capacity(nx * ny + 1);
            for x in 0..nx {
                for y in 0..ny {
                    b.push(beh.get(0, x, y).as_rational().expect("exact").clone());
                }
            }
            b.push(<BigRational as One>::one());
            let res = phase_one(&b, &mut pricer(true))?;
            cert.pivots = res.pivots;
            cert.columns_generated = res.columns_generated;
            cert.infeasibility = LpField::to_f64(&res.infeasibility);
            if !res.feasible {
                return Ok(cert);
            }
            res.solution.into_iter().map(|(k, w)| (k, Scalar::Exact(w))).collect()
        }
        LpMode::Float => {
            let mut b: Vec<f64> = Vec::with_capacity(nx * ny + 1);
            for x in 0..nx {
                for y in 0..ny {
                    b.push(beh.get(0, x, y).to_f64());
                }
            }
            b.push(1.0);
            let res = phase_one(&b, &mut pricer(false))?;
            cert.pivots = res.pivots;
            cert.columns_generated = res.columns_generated;
            cert.infeasibility = res.infeasibility;
            if !res.feasible {
                return Ok(cert);
            }
            res.solution.into_iter().map(|(k, w)| (k, Scalar::Float(w))).collect()
        }
    };
    let mut terms: Vec<CertificateTerm> = terms
        .into_iter()
        .map(|(index, weight)| CertificateTerm { strategy: DeterministicStrategy::from_index(d, scenario, index), weight })
        .collect();
    terms.sort_by_key(|t| t.strategy.index);

    let recon = reconstruct(&terms, scenario)?;
    let deviation = recon
        .iter()
        .zip(beh.probs())
        .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
        .fold(0.0, f64::max);
    cert.max_deviation = Some(deviation);
    if opts.mode == LpMode::Exact {
        let exact = recon.iter().zip(beh.probs()).all(|(a, b)| a == b);
        if !exact {
            return Err(Error::Solver("exact LP solution does not reproduce the behaviour".into()));
        }
        cert.exact_match = Some(true);
    } else if deviation > opts.lp_tolerance {
        return Err(Error::Solver(format!(
            "float LP solution misses the behaviour by {deviation:e}, above tolerance {:e}",
            opts.lp_tolerance
        )));
    }
    cert.feasible = true;
    cert.weights = Some(terms);
    Ok(cert)
}

/// `sum_j w_j P_j`, in the scalar kind of the weights.
pub fn reconstruct(terms: &[CertificateTerm], scenario: PmScenario) -> Result<Vec<Scalar>> {
    let kind = terms.first().map_or(ScalarKind::Exact, |t| t.weight.kind());
    let mut acc = vec![Scalar::zero(kind); 2 * scenario.n_inputs_a() * scenario.n_inputs_b()];
    for t in terms {
        let beh = t.strategy.behaviour(scenario)?;
        for (a, p) in acc.iter_mut().zip(beh.probs()) {
            if !p.is_zero() {
                *a = &*a + &t.weight;
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{d_block, p_k};
    use crate::sampling::{sample_behaviour, PmLaw, Seed};

    #[test]
    fn index_roundtrip() {
        let sc = PmScenario::new(3, 2).unwrap();
        let st = DeterministicStrategy::new(2, 2, vec![1, 0, 1], vec![vec![0, 1], vec![1, 1]]);
        assert_eq!(st.index, (0b101 << 4) | 0b0111);
        assert_eq!(DeterministicStrategy::from_index(2, sc, st.index), st);
        let st3 = DeterministicStrategy::from_index(3, sc, 1000);
        assert_eq!(DeterministicStrategy::new(3, 2, st3.sender.clone(), st3.responder.clone()).index, 1000);
    }

    #[test]
    fn pk_in_shared_randomness_two() {
        let beh = p_k(3, 2).unwrap();
        let opts = MembershipOptions { mode: LpMode::Exact, ..Default::default() };
        let cert = membership_shared_randomness(&beh, 2, &opts).unwrap();
        assert!(cert.feasible);
        assert_eq!(cert.exact_match, Some(true));
        let terms = cert.weights.unwrap();
        let total = terms.iter().fold(Scalar::int(0), |a, t| &a + &t.weight);
        assert_eq!(total, Scalar::int(1));
        let float = membership_shared_randomness(&beh, 2, &MembershipOptions::default()).unwrap();
        assert!(float.feasible);
        assert!(float.max_deviation.unwrap() <= 1e-9);
    }

    #[test]
    fn pk_not_in_one_dimension() {
        let beh = p_k(3, 2).unwrap();
        for mode in [LpMode::Float, LpMode::Exact] {
            let cert = membership_shared_randomness(&beh, 1, &MembershipOptions { mode, ..Default::default() }).unwrap();
            assert!(!cert.feasible);
            assert!(cert.weights.is_none());
        }
    }

    #[test]
    fn full_dimension_always_feasible() {
        let sc = PmScenario::new(3, 2).unwrap();
        for i in 0..5 {
            let beh = sample_behaviour(sc, PmLaw::Dyadic { bits: 5 }, Seed(3).child(i)).unwrap();
            let cert = membership_shared_randomness(&beh, 3, &MembershipOptions { mode: LpMode::Exact, ..Default::default() }).unwrap();
            assert!(cert.feasible);
        }
    }

    #[test]
    fn d_block_is_single_vertex_mixture() {
        let beh = d_block(3, 2, 1, 0).unwrap();
        let cert = membership_shared_randomness(&beh, 2, &MembershipOptions { mode: LpMode::Exact, ..Default::default() }).unwrap();
        assert_eq!(cert.weights.unwrap().len(), 1);
    }

    #[test]
    fn errors() {
        let beh = p_k(3, 2).unwrap();
        assert!(matches!(membership_shared_randomness(&beh, 0, &MembershipOptions::default()), Err(Error::Precondition(_))));
        let cap = MembershipOptions { cap: 15, ..Default::default() };
        assert_eq!(
            membership_shared_randomness(&beh, 2, &cap),
            Err(Error::CapExceeded { required: 16, cap: 15 })
        );
        let float = crate::constructions::as_float(&beh);
        assert!(matches!(
            membership_shared_randomness(&float, 2, &MembershipOptions { mode: LpMode::Exact, ..Default::default() }),
            Err(Error::WrongMode(_))
        ));
    }
}
