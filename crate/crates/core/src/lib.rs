//! Fisher-information bookkeeping for weak-measurement metrology.
//!
//! A two-level system is pre-selected, coupled to a meter with strength `g`,
//! and post-selected. The information about `g` is split between the
//! success/failure statistic and the two conditional meter states:
//!
//! ```text
//! F_tot = p_d Q_d + (1 - p_d) Q_r + F_p  <=  Q_j
//! ```
//!
//! Two couplings are covered: a configuration-space pointer shift
//! ([`config_space`]) and a conditional phase rotation of a coherent state
//! ([`phase_space`]). Every closed form is cross-checked against the
//! finite-difference machinery in [`fisher`], and [`estimation`] simulates the
//! post-selection statistic to check Cramér–Rao attainment by maximum
//! likelihood.

pub mod breakdown;
pub mod config_space;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod par;
pub mod phase_space;
pub mod qubit;

pub use breakdown::{Branch, Diagnostic, FisherBreakdown};
pub use error::{Error, Result};
pub use par::Execution;
pub use qubit::{QubitState, SelectionCoefficients, SelectionPair};

/// Branch probability below which `1/p` divisions are avoided.
pub const EPS_PROB: f64 = 1e-12;
