//! Realizing a behaviour at a target message dimension.

pub mod factorize;
pub mod lp;
pub mod membership;
pub mod separation;

pub use factorize::{factorize_classical, FactorizationResult, FactorizeOptions, SearchStatus};
pub use membership::{
    membership_shared_randomness, CertificateTerm, DeterministicStrategy, LpMode, MembershipCertificate,
    MembershipOptions, reconstruct,
};
pub use separation::{separation_report, SeparationReport};
