//! The shared-randomness separation: `P_k` is a mixture of two-message
//! deterministic strategies, yet its rank forces `k + 1` classical or
//! `ceil(sqrt(k + 1))` quantum levels without shared randomness.

use serde::Serialize;

use super::membership::{membership_shared_randomness, reconstruct, LpMode, MembershipCertificate, MembershipOptions};
use crate::behaviour::pm_matrix;
use crate::constructions::p_k;
use crate::error::{Error, Result};
use crate::linalg::rank_exact;
use crate::witness::ceil_sqrt;

/// Message dimension of the shared-randomness certificate.
pub const SEPARATION_D: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub k: usize,
    pub m: usize,
    pub rank: usize,
    pub classical_lb: usize,
    pub quantum_lb: usize,
    pub d: usize,
    pub certificate: MembershipCertificate,
    /// The certificate's mixture equals `P_k` exactly.
    pub reconstructs_exactly: bool,
    /// Feasible at `d` while the rank exceeds `d`: the `d`-message set is not convex.
    pub nonconvexity_witnessed: bool,
    /// Feasible at `d` while even quantum messages need more than `d` levels.
    pub beats_quantum: bool,
}

pub fn separation_report(k: usize, m: usize) -> Result<SeparationReport> {
    if k == 0 || m < k + 1 {
        return Err(Error::Precondition(format!("need k >= 1 and m >= k + 1, got k={k}, m={m}")));
    }
    let beh = p_k(m, k)?;
    let rank = rank_exact(&pm_matrix(&beh))?.rank;
    let quantum_lb = ceil_sqrt(rank);
    let opts = MembershipOptions { mode: LpMode::Exact, ..Default::default() };
    let certificate = membership_shared_randomness(&beh, SEPARATION_D, &opts)?;
    let reconstructs_exactly = match &certificate.weights {
        Some(terms) => reconstruct(terms, beh.scenario())?.as_slice() == beh.probs(),
        None => false,
    };
    Ok(SeparationReport {
        k,
        m,
        rank,
        classical_lb: rank,
        quantum_lb,
        d: SEPARATION_D,
        nonconvexity_witnessed: certificate.feasible && rank > SEPARATION_D,
        beats_quantum: certificate.feasible && quantum_lb > SEPARATION_D,
        certificate,
        reconstructs_exactly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let r = separation_report(3, 4).unwrap();
        assert_eq!((r.rank, r.classical_lb, r.quantum_lb), (4, 4, 2));
        assert!(r.certificate.feasible && r.reconstructs_exactly);
        assert!(r.nonconvexity_witnessed && !r.beats_quantum);

        let r = separation_report(1, 2).unwrap();
        assert_eq!((r.rank, r.quantum_lb), (2, 2));
        assert!(r.certificate.feasible && !r.nonconvexity_witnessed);
        assert!(separation_report(3, 3).is_err());
    }
}
