//! Entanglement classification of multi-qubit GHZ-diagonal mixed states.
//!
//! The library covers the GHZ basis and the `ρ_N` family, the exact
//! depolarization channel onto it, analytic PPT conditions for every
//! bipartite split, hierarchic k-separability reports, explicit separable
//! witnesses, and the multi-copy purification protocol.

pub mod classify;
pub mod cli;
pub mod depolarize;
pub mod error;
pub mod ghz;
pub mod mixture;
pub mod purify;
pub mod qstate;
pub mod splits;

pub use classify::{classification_report, sufficient_report, ClassificationReport};
pub use error::{Error, Result};
pub use ghz::{params_from_state, rho_from_params, RhoNParams};
pub use qstate::DensityMatrix;
pub use splits::{Split, SplitIndex};
