//! Rank-based dimension witnesses for prepare-and-measure and Bell behaviours.
//!
//! A behaviour's matrix rank lower-bounds the dimension needed to produce it:
//! at least `rank` classical levels or `ceil(sqrt(rank))` quantum levels for
//! prepare-and-measure, and `ceil(sqrt(rank))` local levels for Bell tables.
//! These bounds hold even when the parties share randomness.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks

pub mod behaviour;
pub mod constructions;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod noise;
pub mod par;
pub mod quantum;
pub mod sampling;
pub mod scalar;
pub mod search;
pub mod strategy;
pub mod witness;

pub use behaviour::{BellBehaviour, BellScenario, Behaviour, PmBehaviour, PmScenario};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use scalar::{Scalar, ScalarKind};
