//! One OFDM symbol through the full transmit/receive chain.

use num_complex::Complex64;
use rand::Rng;

use super::scenario::{ChannelKind, DetectorKind, NoiseModel, Scenario};
use crate::analysis::{awgn_ici_variance, conditional_ici_moments, IciStats};
use crate::channel::{
    add_awgn, apply_channel_time, draw_channel, ChannelRealization, PowerDelayProfile,
};
use crate::detect::{DetectorInput, MlDetector, MpaDetector};
use crate::error::{Error, Result};
use crate::ofdm::{apply_cfo_with_cp, CfoPhaseOrigin, IciOperator, OfdmConfig, OfdmModem};
use crate::scma::Codebook;

// keeps the detector likelihood finite in the noiseless limit
const MIN_DETECTOR_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Detector {
    Mpa(MpaDetector),
    Ml(MlDetector),
}

/// Error count of one frame (one OFDM symbol).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameOutcome {
    pub bit_errors: u64,
    pub bits: u64,
}

impl std::ops::Add for FrameOutcome {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            bit_errors: self.bit_errors + o.bit_errors,
            bits: self.bits + o.bits,
        }
    }
}

/// Link parameters shared by every point of a sweep.
#[derive(Debug, Clone)]
pub struct LinkSetup {
    codebook: Codebook,
    ofdm: OfdmConfig,
    modem: OfdmModem,
    pdp: Option<PowerDelayProfile>,
    detector: Detector,
    cfo_aware: bool,
    noise_model: NoiseModel,
    cfo_phase: CfoPhaseOrigin,
}

impl LinkSetup {
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        let codebook = s.load_codebook()?;
        let ofdm = OfdmConfig::new(
            s.subcarriers,
            s.cp_len,
            codebook.config().resources(),
            s.allocation,
        )?;
        let pdp = s.pdp()?;
        if let Some(p) = &pdp {
            p.check_cp(s.cp_len)?;
        }
        let detector = match s.detector {
            DetectorKind::Mpa => Detector::Mpa(MpaDetector::new(&codebook, s.mpa_iterations)?),
            DetectorKind::Ml => {
                Detector::Ml(MlDetector::new(&codebook, s.enumeration_cap as u128)?)
            }
        };
        debug_assert!(matches!(s.channel, ChannelKind::Awgn) == pdp.is_none());
        Ok(Self {
            modem: OfdmModem::for_config(&ofdm),
            codebook,
            ofdm,
            pdp,
            detector,
            cfo_aware: s.cfo_aware,
            noise_model: s.noise_model,
            cfo_phase: s.cfo_phase,
        })
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn ofdm(&self) -> &OfdmConfig {
        &self.ofdm
    }

    pub fn pdp(&self) -> Option<&PowerDelayProfile> {
        self.pdp.as_ref()
    }

    /// Binds the setup to one CFO and thermal-noise level.
    pub fn at(&self, eps: f64, noise_var: f64) -> Result<LinkPoint<'_>> {
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(Error::input(format!(
                "noise variance must be >= 0, got {noise_var}"
            )));
        }
        let n = self.ofdm.subcarriers();
        let overloading = self.codebook.config().overloading();
        let phi_nn = IciOperator::new(eps, n).diagonal();
        let (scma_ici, oma_ici) = match &self.pdp {
            None => (
                IciStats {
                    sigma_alpha2: 0.0,
                    sigma_beta2: awgn_ici_variance(eps, n, overloading),
                    c_nn: 1.0,
                },
                IciStats {
                    sigma_alpha2: 0.0,
                    sigma_beta2: awgn_ici_variance(eps, n, 1.0),
                    c_nn: 1.0,
                },
            ),
            Some(p) => (
                conditional_ici_moments(0, p, eps, n, overloading),
                conditional_ici_moments(0, p, eps, n, 1.0),
            ),
        };
        Ok(LinkPoint {
            setup: self,
            eps,
            noise_var,
            phi_nn,
            scma_ici,
            oma_ici,
        })
    }
}

/// A [`LinkSetup`] at a fixed CFO and noise level.
#[derive(Debug, Clone)]
pub struct LinkPoint<'a> {
    setup: &'a LinkSetup,
    eps: f64,
    noise_var: f64,
    phi_nn: Complex64,
    scma_ici: IciStats,
    oma_ici: IciStats,
}

impl LinkPoint<'_> {
    fn channel<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        match &self.setup.pdp {
            None => Ok(ChannelRealization::identity(self.setup.ofdm.subcarriers())),
            Some(p) => draw_channel(p, &self.setup.modem, rng),
        }
    }

    /// Modulate, pass through channel, CFO and noise, demodulate.
    fn transmit<R: Rng + ?Sized>(
        &self,
        s: &[Complex64],
        ch: &ChannelRealization,
        rng: &mut R,
    ) -> Result<Vec<Complex64>> {
        let setup = self.setup;
        let x = setup.modem.modulate(s)?;
        let mut y = match setup.pdp {
            None => x,
            Some(_) => apply_channel_time(&x, &ch.taps, setup.ofdm.cp_len())?,
        };
        apply_cfo_with_cp(
            &mut y,
            self.eps,
            setup.ofdm.subcarriers(),
            setup.ofdm.cp_len(),
            setup.cfo_phase,
        );
        add_awgn(&mut y, self.noise_var, rng)?;
        setup.modem.demodulate(&y)
    }

    fn detector_variance(&self, stats: &IciStats, lambda: Complex64) -> f64 {
        let v = match self.setup.noise_model {
            NoiseModel::Thermal => self.noise_var,
            NoiseModel::Ici => {
                self.noise_var + lambda.norm_sqr() * stats.sigma_alpha2 + stats.sigma_beta2
            }
        };
        v.max(MIN_DETECTOR_VARIANCE)
    }

    fn gain(&self, lambda: Complex64) -> Complex64 {
        if self.setup.cfo_aware {
            self.phi_nn * lambda
        } else {
            lambda
        }
    }

    /// Random data for all users and blocks through the SCMA-OFDM chain.
    pub fn simulate_frame<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FrameOutcome> {
        let setup = self.setup;
        let cfg = setup.codebook.config();
        let (j_users, k_res, m_size) = (cfg.users(), cfg.resources(), cfg.codebook_size());
        let q_blocks = setup.ofdm.blocks();

        let tx: Vec<usize> = (0..q_blocks * j_users)
            .map(|_| rng.random_range(0..m_size))
            .collect();
        let mut blocks = vec![Complex64::new(0.0, 0.0); q_blocks * k_res];
        for q in 0..q_blocks {
            setup.codebook.superimpose_indices_into(
                &tx[q * j_users..(q + 1) * j_users],
                &mut blocks[q * k_res..(q + 1) * k_res],
            );
        }
        let s = setup.ofdm.allocate(&blocks)?;
        let ch = self.channel(rng)?;
        let z = setup.ofdm.deallocate(&self.transmit(&s, &ch, rng)?)?;

        let mut errors = 0u64;
        let mut gains = vec![Complex64::new(0.0, 0.0); k_res];
        let mut nv = vec![0.0; k_res];
        for q in 0..q_blocks {
            for k in 0..k_res {
                let lambda = ch.response[setup.ofdm.subcarrier(q, k)];
                gains[k] = self.gain(lambda);
                nv[k] = self.detector_variance(&self.scma_ici, lambda);
            }
            let input = DetectorInput {
                received: &z[q * k_res..(q + 1) * k_res],
                gains: &gains,
                noise_var: &nv,
            };
            let decided = match &setup.detector {
                Detector::Mpa(d) => d.detect(&input)?.decision,
                Detector::Ml(d) => d.detect(&input)?,
            };
            for (a, b) in tx[q * j_users..(q + 1) * j_users]
                .iter()
                .zip(&decided.indices)
            {
                errors += (a ^ b).count_ones() as u64;
            }
        }
        Ok(FrameOutcome {
            bit_errors: errors,
            bits: (q_blocks * j_users * cfg.bits_per_user()) as u64,
        })
    }

    /// Single-user Gray-mapped QPSK on every subcarrier through the same chain.
    pub fn simulate_oma_frame<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FrameOutcome> {
        let n = self.setup.ofdm.subcarriers();
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        let bits: Vec<(bool, bool)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
        let s: Vec<Complex64> = bits
            .iter()
            .map(|&(b0, b1)| {
                Complex64::new(if b0 { -amp } else { amp }, if b1 { -amp } else { amp })
            })
            .collect();
        let ch = self.channel(rng)?;
        let z = self.transmit(&s, &ch, rng)?;
        let mut errors = 0u64;
        for i in 0..n {
            let y = z[i] * self.gain(ch.response[i]).conj();
            errors += ((y.re < 0.0) != bits[i].0) as u64 + ((y.im < 0.0) != bits[i].1) as u64;
        }
        Ok(FrameOutcome {
            bit_errors: errors,
            bits: 2 * n as u64,
        })
    }

    pub fn scma_ici(&self) -> &IciStats {
        &self.scma_ici
    }

    pub fn oma_ici(&self) -> &IciStats {
        &self.oma_ici
    }

    pub fn phi_nn(&self) -> Complex64 {
        self.phi_nn
    }
}
