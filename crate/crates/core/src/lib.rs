//! Support recovery for sparse principal components.
//!
//! The crate implements the spiked covariance sampling model
//! `sigma = beta * z z^T + gamma` with a k-sparse leading component `z`,
//! two decoders that try to recover the signed support of `z` from `n`
//! samples (diagonal thresholding and an l1-penalised semidefinite
//! relaxation solved by operator splitting), the information-theoretic and
//! chi-squared tail bounds that govern when recovery is possible, and a
//! seeded Monte Carlo harness that maps empirical phase transitions as a
//! function of the rescaled sample sizes `n / (k^2 ln(p-k))` and
//! `n / (k ln(p-k))`.

pub mod decoders;
pub mod ensemble;
mod error;
pub mod harness;
pub mod numerics;
pub mod sdp;
pub mod theory;

pub use error::{Error, Result};
