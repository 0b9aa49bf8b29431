use std::f64::consts::PI;

use crate::channel::PowerDelayProfile;
use crate::ofdm::{diagonal_power, IciOperator};

/// Second-order statistics of the ICI seen on one subcarrier, conditioned on
/// that subcarrier's own channel coefficient `lambda_n`.
///
/// Given `lambda_n`, the ICI term has variance
/// `|lambda_n|^2 sigma_alpha2 + sigma_beta2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IciStats {
    pub sigma_alpha2: f64,
    pub sigma_beta2: f64,
    /// `c(n, n) = E|lambda_n|^2`.
    pub c_nn: f64,
}

/// ICI power on an AWGN channel:
/// `(J/K) (1 - sin^2(pi eps) / (N^2 sin^2(pi eps / N)))`.
pub fn awgn_ici_variance(eps: f64, subcarriers: usize, overloading: f64) -> f64 {
    if eps == 0.0 {
        return 0.0;
    }
    overloading * (1.0 - diagonal_power(eps, subcarriers))
}

/// Conditional ICI moments on subcarrier `n` (0-based) of a Rayleigh channel.
///
/// With `c(m, n)` the frequency covariance,
///
/// ```text
/// sigma_alpha2 = (J/K) / c_nn^2 * sum_{m != n} |phi_{n,m} c(m,n)|^2
/// sigma_beta2  = (J/K) * sum_{m != n} |phi_{n,m}|^2 (c_mm - |c(m,n)|^2 / c_nn)
/// ```
///
/// Both are the same for every `n`; the argument is kept so the invariance
/// can be checked. At `eps = 0` the result is exactly zero.
pub fn conditional_ici_moments(
    n: usize,
    pdp: &PowerDelayProfile,
    eps: f64,
    subcarriers: usize,
    overloading: f64,
) -> IciStats {
    let c_nn: f64 = pdp.powers().iter().sum();
    if eps == 0.0 {
        return IciStats {
            sigma_alpha2: 0.0,
            sigma_beta2: 0.0,
            c_nn,
        };
    }
    let phi = IciOperator::new(eps, subcarriers);
    let nf = subcarriers as f64;
    let mut alpha = 0.0;
    let mut beta = 0.0;
    for m in (0..subcarriers).filter(|&m| m != n) {
        let p2 = phi.coefficient(n, m).norm_sqr();
        // c(m, n) as a direct sum; with c_mm = c_nn for a stationary channel
        let diff = m as i64 - n as i64;
        let (mut re, mut im) = (0.0, 0.0);
        for (&d, &s) in pdp.delays().iter().zip(pdp.powers()) {
            let k = (diff * d as i64).rem_euclid(subcarriers as i64) as f64;
            let ang = -2.0 * PI * k / nf;
            re += s * ang.cos();
            im += s * ang.sin();
        }
        let c2 = re * re + im * im;
        alpha += p2 * c2;
        beta += p2 * (c_nn - c2 / c_nn);
    }
    IciStats {
        sigma_alpha2: overloading * alpha / (c_nn * c_nn),
        sigma_beta2: overloading * beta,
        c_nn,
    }
}
