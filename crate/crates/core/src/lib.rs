//! Secure strong coordination over discrete memoryless wiretap channels.
//!
//! The crate is organised in four layers:
//!
//! - [`prob`]: finite distributions, kernels and the information functionals.
//! - [`region`]: numerical search for the minimal common-randomness rate.
//! - [`codec`]: dual random-binning codes, the bin decoder and exact induced distributions.
//! - [`verify`]: coordination and secrecy metrics, Monte Carlo estimation and property checks.
//!
//! Every randomized routine takes an explicit `u64` seed and is a pure function of its inputs.

#![forbid(unsafe_code)]

pub mod codec;
pub mod error;
pub mod prob;
pub mod region;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
