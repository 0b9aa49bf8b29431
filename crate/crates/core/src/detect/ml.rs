use super::{Decision, DetectorInput};
use crate::error::Result;
use crate::scma::{Codebook, SuperimposedTable};

/// Exhaustive maximum-likelihood detector over all `M^J` superimposed
/// codewords. The metric is `sum_k |z_k - g_k w_k|^2 / s_k^2`; ties resolve
/// to the first tuple in enumeration order.
#[derive(Debug, Clone)]
pub struct MlDetector {
    table: SuperimposedTable,
    users: usize,
}

impl MlDetector {
    /// Fails with [`crate::Error::TooLarge`] when `M^J` exceeds `cap`.
    pub fn new(codebook: &Codebook, cap: u128) -> Result<Self> {
        Ok(Self {
            table: codebook.enumerate_superimposed(cap)?,
            users: codebook.config().users(),
        })
    }

    pub fn detect(&self, input: &DetectorInput<'_>) -> Result<Decision> {
        let k_res = self.table.resources();
        input.check(k_res)?;
        let inv: Vec<f64> = input.noise_var.iter().map(|v| 1.0 / v).collect();
        let mut best = (f64::INFINITY, 0);
        for t in 0..self.table.len() {
            let w = self.table.word(t);
            let mut metric = 0.0;
            for k in 0..k_res {
                metric += (input.received[k] - input.gains[k] * w[k]).norm_sqr() * inv[k];
            }
            if metric < best.0 {
                best = (metric, t);
            }
        }
        let tuple = self.table.tuple(best.1);
        Ok(Decision {
            indices: tuple[..self.users].iter().map(|&i| i as usize).collect(),
        })
    }
}
