//! Special functions used by the error-probability analysis.

mod gamma;
mod hyperg;
mod normal;
pub mod quad;

pub use gamma::{gamma, ln_gamma};
pub use hyperg::{kummer_u, ln_kummer_u, ln_whittaker_w, whittaker_w};
pub use normal::{q_approx, q_function};
pub use quad::{integrate, Quadrature};
