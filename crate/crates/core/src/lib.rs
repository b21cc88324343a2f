//! Secrecy analysis of multi-antenna transmitters with nonlinear power
//! amplifiers.
//!
//! A uniform linear array serves a legitimate user over a line-of-sight
//! channel while an eavesdropper may sit at any angle. The amplifier
//! distortion is described through a Bussgang decomposition, and the
//! library measures how precoding (MRT, Z3RO, MRT with artificial noise)
//! shapes where that distortion is radiated and what secrecy rate results.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod bussgang;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod pa;
pub mod precoder;

pub use error::{Error, Result};
