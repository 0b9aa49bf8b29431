//! Multipath Rayleigh block-fading channel and additive noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::OfdmModem;

/// Discrete power-delay profile. Delays are in samples, strictly increasing;
/// powers are normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDelayProfile {
    delays: Vec<usize>,
    powers: Vec<f64>,
}

impl PowerDelayProfile {
    pub fn new(delays: Vec<usize>, powers: Vec<f64>) -> Result<Self> {
        if delays.is_empty() || delays.len() != powers.len() {
            return Err(Error::config(format!(
                "power-delay profile needs matching non-empty delays and powers, got {} and {}",
                delays.len(),
                powers.len()
            )));
        }
        if delays.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("tap delays must be strictly increasing"));
        }
        if powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::config("tap powers must be finite and non-negative"));
        }
        let total: f64 = powers.iter().sum();
        if total <= 0.0 {
            return Err(Error::config("tap powers sum to zero"));
        }
        if (total - 1.0).abs() > 1e-12 {
            log::info!("normalizing power-delay profile (sum was {total})");
        }
        Ok(Self {
            delays,
            powers: powers.into_iter().map(|p| p / total).collect(),
        })
    }

    /// Eight-tap profile with delays 1..20 samples; the listed powers sum to
    /// 0.992 and are renormalized.
    pub fn eight_tap() -> Self {
        Self::new(
            vec![1, 2, 4, 6, 9, 11, 15, 20],
            vec![0.36, 0.24, 0.15, 0.10, 0.06, 0.04, 0.025, 0.017],
        )
        .expect("built-in profile is valid")
    }

    /// Single tap at delay zero (flat Rayleigh fading).
    pub fn flat() -> Self {
        Self {
            delays: vec![0],
            powers: vec![1.0],
        }
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn max_delay(&self) -> usize {
        *self.delays.last().expect("non-empty")
    }

    /// Fails if a tap falls outside the cyclic prefix.
    pub fn check_cp(&self, cp_len: usize) -> Result<()> {
        if self.max_delay() > cp_len {
            return Err(Error::config(format!(
                "maximum tap delay {} exceeds the cyclic prefix length {cp_len}",
                self.max_delay()
            )));
        }
        Ok(())
    }

    /// Frequency-domain covariance `c(m, n) = E[lambda_m conj(lambda_n)]`.
    pub fn freq_covariance(&self, m: usize, n: usize, subcarriers: usize) -> Complex64 {
        let nn = subcarriers as i64;
        let d = m as i64 - n as i64;
        self.delays
            .iter()
            .zip(&self.powers)
            .map(|(&dp, &p)| {
                let k = (d * dp as i64).rem_euclid(nn);
                Complex64::from_polar(p, -2.0 * PI * k as f64 / subcarriers as f64)
            })
            .sum()
    }
}

/// One block-fading realization: the taps and the per-subcarrier response.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub taps: Vec<(usize, Complex64)>,
    /// `lambda_n`, the unnormalized DFT of the tap vector.
    pub response: Vec<Complex64>,
}

impl ChannelRealization {
    /// Computes the response of explicit taps with the modem's transform.
    pub fn from_taps(taps: Vec<(usize, Complex64)>, modem: &OfdmModem) -> Result<Self> {
        let n = modem.subcarriers();
        let mut response = vec![Complex64::new(0.0, 0.0); n];
        for &(d, h) in &taps {
            if d >= n {
                return Err(Error::input(format!("tap delay {d} is not below N = {n}")));
            }
            response[d] += h;
        }
        modem.dft_unnormalized(&mut response);
        Ok(Self { taps, response })
    }

    /// A unit-gain channel (AWGN only).
    pub fn identity(subcarriers: usize) -> Self {
        Self {
            taps: vec![(0, Complex64::new(1.0, 0.0))],
            response: vec![Complex64::new(1.0, 0.0); subcarriers],
        }
    }
}

/// Draws `CN(0, var)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws independent taps `h_p ~ CN(0, sigma_p^2)` and their response.
pub fn draw_channel<R: Rng + ?Sized>(
    pdp: &PowerDelayProfile,
    modem: &OfdmModem,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let taps = pdp
        .delays
        .iter()
        .zip(&pdp.powers)
        .map(|(&d, &p)| (d, complex_normal(rng, p)))
        .collect();
    ChannelRealization::from_taps(taps, modem)
}

/// Linear convolution of a CP-prefixed symbol with the taps, truncated to
/// the input length. With every delay inside the CP this equals circular
/// convolution of the payload.
pub fn apply_channel_time(
    x: &[Complex64],
    taps: &[(usize, Complex64)],
    cp_len: usize,
) -> Result<Vec<Complex64>> {
    if let Some(&(d, _)) = taps.iter().find(|(d, _)| *d > cp_len) {
        return Err(Error::input(format!(
            "tap delay {d} exceeds the cyclic prefix length {cp_len}"
        )));
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    for &(d, h) in taps {
        for i in d..x.len() {
            y[i] += h * x[i - d];
        }
    }
    Ok(y)
}

/// Adds `CN(0, variance)` noise in place.
pub fn add_awgn<R: Rng + ?Sized>(x: &mut [Complex64], variance: f64, rng: &mut R) -> Result<()> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::input(format!(
            "noise variance must be >= 0, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(());
    }
    for v in x.iter_mut() {
        *v += complex_normal(rng, variance);
    }
    Ok(())
}

/// `sigma_0^2 = P / 10^(SNR/10)` for average per-subcarrier signal power `P`.
pub fn snr_to_noise_variance(snr_db: f64, signal_power: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}
