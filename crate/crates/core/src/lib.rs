//! Secure directional modulation aided by a rotatable active RIS.

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod rl;
pub mod sensing;

pub use error::{Error, Result};
