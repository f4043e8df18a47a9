//! Simulator and analytics toolkit for a self-referenced continuous-variable
//! QKD protocol in which each Gaussian-modulated signal pulse is accompanied
//! by reference pulses used to estimate and compensate the drifting phase
//! between Alice's and Bob's measurement frames.
//!
//! The crate provides:
//! - closed-form secret-key-rate bounds against individual and collective
//!   Gaussian attacks, including the penalty from the quantum-limited phase
//!   estimate ([`keyrate`]);
//! - the two-mode Gaussian covariance machinery behind those bounds
//!   ([`gaussian`]);
//! - a Monte-Carlo prepare-and-measure session engine with a drifting frame
//!   phase, reference-pulse estimation and compensation ([`sim`]);
//! - the reference-pulse based electro-optic phase-modulator calibration
//!   workflow ([`calibration`]).
//!
//! All variances are expressed in shot-noise units (vacuum variance = 1) and
//! all quadrature values in units of sqrt(N0).

// Index loops mirror the written-out matrix algebra.
#![allow(clippy::needless_range_loop)]

pub mod calibration;
pub mod error;
pub mod gaussian;
pub mod keyrate;
mod linalg;
pub mod phase;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
