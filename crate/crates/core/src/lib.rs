//! Simulation and analysis toolkit for two-phase unsourced random access over
//! a massive MIMO uplink.
//!
//! The second phase of the scheme reduces, after despreading with an
//! orthonormal codebook, to the equivalent model `Y = S·X + Ξ` where each row
//! of `X` is one-hot. The crate provides
//!
//! * [`system`]: channels, messages, received blocks and metrics,
//! * [`amp`]: the message-passing decoder with EM noise tuning,
//! * [`replica`]: the free-entropy predictor of decoder and Bayes-optimal MSE,
//! * [`experiments`]: seeded Monte Carlo sweeps and CSV output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amp;
pub mod error;
pub mod experiments;
pub mod replica;
pub mod rng;
pub mod system;

pub use error::{Error, Result};
