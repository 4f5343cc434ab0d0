//! Beamspace MIMO link simulation and multi-beam tracking.
//!
//! The crate models a narrowband mmWave MIMO link seen through lens antenna
//! arrays: geometric multipath channels are transformed into the beam domain
//! by unitary DFT matrices, one-hot beam selectors stand in for the lens
//! switch network, and the per-slot pilot observations feed an unscented
//! Kalman filter (with an EKF baseline) that tracks complex path gains and
//! angles of arrival/departure. A Monte Carlo harness aggregates angle and
//! gain MSE curves over many independent episodes.

pub mod channel;
pub mod error;
pub mod filter;
pub mod link;
pub mod selftest;
pub mod sim;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
