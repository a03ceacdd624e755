//! Artificial-noise-alignment transmission schemes for wireless X networks,
//! built as explicit complex matrices and measured numerically.
//!
//! The crate covers the full pipeline:
//!
//! - [`network`]: scenario declarations and the two channel regimes
//!   (time/frequency-varying diagonals, reconfigurable-antenna switching).
//! - [`scheme`]: the three beamforming layouts and effective-channel
//!   composition.
//! - [`verify`]: the independent numerical referee (ranks, span containment,
//!   alignment audits, aligned-Gram rank preservation).
//! - [`metrics`]: Gaussian rates, leakage, equivocation, and high-SNR slope
//!   fits.
//! - [`bounds`]: closed-form sum-SDOF bounds in exact rational arithmetic.
//! - [`scenario`]: the end-to-end runner behind the CLI.

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod sampling;
pub mod scenario;
pub mod scheme;
mod sermat;
pub mod verify;

pub use error::{Error, Result};
