//! Multiuser detection for one SCMA block.
//!
//! Every detector sees the block's `K` received samples `z_k`, the effective
//! per-RE gains `g_k` (typically `phi_nn lambda_n`) and the per-RE
//! disturbance variance used in the Gaussian likelihood.

mod ml;
mod mpa;

pub use ml::MlDetector;
pub use mpa::{MpaDetector, MpaOutput, DEFAULT_MPA_ITERATIONS};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Observation of one SCMA block.
#[derive(Debug, Clone, Copy)]
pub struct DetectorInput<'a> {
    pub received: &'a [Complex64],
    pub gains: &'a [Complex64],
    /// Effective noise variance per RE; must be positive.
    pub noise_var: &'a [f64],
}

impl DetectorInput<'_> {
    pub(crate) fn check(&self, resources: usize) -> Result<()> {
        if self.received.len() != resources
            || self.gains.len() != resources
            || self.noise_var.len() != resources
        {
            return Err(Error::input(format!(
                "detector input must have {resources} REs, got {}/{}/{}",
                self.received.len(),
                self.gains.len(),
                self.noise_var.len()
            )));
        }
        if self.noise_var.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::input("detector noise variances must be positive"));
        }
        Ok(())
    }
}

/// Hard decision: one codeword index per user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub indices: Vec<usize>,
}
