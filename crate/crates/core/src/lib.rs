//! Jamming covariance estimation for an IRS-aided directional-modulation
//! link attacked by a full-duplex jammer.
//!
//! The crate builds the line-of-sight scenario ([`scenario`]), draws
//! silent-period observations at the legitimate receiver ([`signal`]),
//! estimates the jamming covariance with four estimators ([`estimators`]),
//! scores the estimates ([`metrics`]) and runs seeded Monte-Carlo sweeps
//! ([`harness`]).

pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod scenario;
pub mod signal;

pub use error::{JcmError, Result};
pub use estimators::{JcmEstimate, Method};
pub use scenario::{build_channels, ArraySpec, ChannelSet, NodeLayout};
pub use signal::{JcmTruth, ObservationBatch, ScenarioConfig, TransmitSide};
