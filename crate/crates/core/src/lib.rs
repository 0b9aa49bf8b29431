//! Downlink SCMA-OFDM link-level simulation and union-bound BER analysis
//! under carrier frequency offset.
//!
//! The crate is organised bottom-up:
//!
//! * [`scma`]: indicator matrix, factor graph, codebooks and codebook files.
//! * [`ofdm`]: subcarrier allocation, CP-OFDM modem, CFO and the ICI matrix.
//! * [`channel`]: multipath Rayleigh channel, frequency covariance, AWGN.
//! * [`detect`]: exhaustive ML and message-passing SCMA detectors.
//! * [`specfun`]: Gamma, Kummer U, Whittaker W, Gaussian Q and quadrature.
//! * [`analysis`]: ICI statistics, pairwise error probabilities, union bound.
//! * [`harness`]: scenarios, deterministic seeded sweeps and CSV output.
//! * [`plot`]: SVG BER figures from sweep CSV files.

// Tables of constants are kept at full printed precision, and `!(x >= 0.0)`
// is the idiom used to reject NaN along with negative values.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod detect;
mod error;
pub mod harness;
pub mod ofdm;
pub mod plot;
pub mod scma;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;
