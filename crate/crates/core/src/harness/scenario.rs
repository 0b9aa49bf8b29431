use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{PepConvention, SeriesControls};
use crate::channel::PowerDelayProfile;
use crate::detect::DEFAULT_MPA_ITERATIONS;
use crate::error::{Error, Result};
use crate::ofdm::{Allocation, CfoPhaseOrigin};
use crate::scma::{read_codebook, Codebook, DEFAULT_ENUMERATION_CAP};

/// One row source of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// SCMA-OFDM link simulation.
    Sim,
    /// Single-user QPSK OFDM simulation (orthogonal baseline).
    Oma,
    /// Union bound with the Whittaker series (Rayleigh).
    Series,
    /// Union bound with sampled per-RE factors (Rayleigh).
    Mc,
    /// Union bound with ICI as Gaussian noise (AWGN).
    Awgn,
}

impl Method {
    pub fn is_simulation(self) -> bool {
        matches!(self, Method::Sim | Method::Oma)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sim => "sim",
            Method::Oma => "oma",
            Method::Series => "series",
            Method::Mc => "mc",
            Method::Awgn => "awgn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim" => Ok(Method::Sim),
            "oma" => Ok(Method::Oma),
            "series" => Ok(Method::Series),
            "mc" => Ok(Method::Mc),
            "awgn" => Ok(Method::Awgn),
            _ => Err(Error::config(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Mpa,
    Ml,
}

/// What the detector takes as the per-RE disturbance variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// Thermal noise plus the Gaussian-approximated ICI power.
    Ici,
    /// Thermal noise only.
    Thermal,
}

/// A sweep description. Every key is optional in the TOML file and falls
/// back to the value of [`Scenario::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Codebook file; the bundled 6-user, 4-RE codebook when absent.
    pub codebook: Option<PathBuf>,
    pub subcarriers: usize,
    pub cp_len: usize,
    pub allocation: Allocation,
    pub channel: ChannelKind,
    /// Tap delays in samples (Rayleigh only).
    pub pdp_delays: Vec<usize>,
    /// Tap powers; normalized to unit sum.
    pub pdp_powers: Vec<f64>,
    pub eps: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub methods: Vec<Method>,
    pub detector: DetectorKind,
    pub mpa_iterations: usize,
    /// Detect with `phi_nn lambda_n` as the RE gain; otherwise with `lambda_n`.
    pub cfo_aware: bool,
    pub noise_model: NoiseModel,
    pub cfo_phase: CfoPhaseOrigin,
    pub min_errors: u64,
    pub max_frames: u64,
    pub frames_per_batch: u64,
    /// Skip higher SNRs for a simulated curve once its BER drops below this.
    pub stop_below_ber: Option<f64>,
    pub seed: u64,
    pub pep_convention: PepConvention,
    pub series_tol: f64,
    pub series_max_terms: usize,
    pub mc_samples: usize,
    pub mc_replicates: usize,
    pub enumeration_cap: u64,
    /// Write wall-clock seconds per row (disable for byte-comparable output).
    pub record_timing: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        let pdp = PowerDelayProfile::eight_tap();
        let series = SeriesControls::default();
        Self {
            name: "custom".into(),
            codebook: None,
            subcarriers: 1024,
            cp_len: 32,
            allocation: Allocation::Interleaved,
            channel: ChannelKind::Awgn,
            pdp_delays: pdp.delays().to_vec(),
            pdp_powers: vec![0.36, 0.24, 0.15, 0.10, 0.06, 0.04, 0.025, 0.017],
            eps: vec![0.0],
            snr_db: (0..=20).step_by(2).map(f64::from).collect(),
            methods: vec![Method::Sim],
            detector: DetectorKind::Mpa,
            mpa_iterations: DEFAULT_MPA_ITERATIONS,
            cfo_aware: true,
            noise_model: NoiseModel::Ici,
            cfo_phase: CfoPhaseOrigin::Payload,
            min_errors: 200,
            max_frames: 100_000,
            frames_per_batch: 16,
            stop_below_ber: None,
            seed: 1,
            pep_convention: PepConvention::CircularNoise,
            series_tol: series.tol,
            series_max_terms: series.max_terms,
            mc_samples: 2048,
            mc_replicates: 8,
            enumeration_cap: DEFAULT_ENUMERATION_CAP as u64,
            record_timing: true,
        }
    }
}

/// Names accepted by [`Scenario::preset`].
pub const PRESETS: [&str; 3] = ["fig3", "fig4", "fig5"];

impl Scenario {
    /// Built-in scenarios for the three result figures: BER vs SNR on AWGN,
    /// BER vs SNR on the 8-tap Rayleigh channel, and BER vs CFO at a fixed
    /// SNR including the QPSK OMA baseline.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Scenario {
            name: name.to_string(),
            eps: vec![0.0, 0.01, 0.02, 0.04],
            ..Scenario::default()
        };
        match name {
            "fig3" => Ok(Scenario {
                channel: ChannelKind::Awgn,
                snr_db: (0..=20).step_by(2).map(f64::from).collect(),
                methods: vec![Method::Sim, Method::Awgn],
                stop_below_ber: Some(1e-4),
                ..base
            }),
            "fig4" => Ok(Scenario {
                channel: ChannelKind::Rayleigh,
                snr_db: (0..=32).step_by(2).map(f64::from).collect(),
                methods: vec![Method::Sim, Method::Series, Method::Mc],
                stop_below_ber: Some(1e-4),
                ..base
            }),
            "fig5" => Ok(Scenario {
                channel: ChannelKind::Rayleigh,
                eps: vec![0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1],
                snr_db: vec![22.0],
                methods: vec![Method::Sim, Method::Oma],
                ..base
            }),
            _ => Err(Error::config(format!(
                "unknown preset {name:?}; expected one of {}",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| Error::config(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s: Scenario =
            toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        // relative codebook paths are relative to the scenario file
        if let (Some(cb), Some(dir)) = (&s.codebook, path.parent()) {
            if cb.is_relative() {
                s.codebook = Some(dir.join(cb));
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.eps.iter().find(|e| !(-0.5..=0.5).contains(*e)) {
            return Err(Error::config(format!("eps = {e} is outside [-0.5, 0.5]")));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("SNR values must be finite"));
        }
        if self.snr_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("SNR grid must be strictly increasing"));
        }
        if self.min_errors < 100 {
            return Err(Error::config("min_errors must be at least 100"));
        }
        if self.max_frames == 0 || self.frames_per_batch == 0 {
            return Err(Error::config(
                "max_frames and frames_per_batch must be positive",
            ));
        }
        if self.mpa_iterations == 0 {
            return Err(Error::config("mpa_iterations must be positive"));
        }
        if !(self.series_tol > 0.0) || self.series_max_terms == 0 {
            return Err(Error::config(
                "series_tol and series_max_terms must be positive",
            ));
        }
        if self.mc_samples == 0 || self.mc_replicates < 2 {
            return Err(Error::config(
                "mc_samples must be positive and mc_replicates >= 2",
            ));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::config("methods must not repeat"));
        }
        for m in &self.methods {
            let ok = match m {
                Method::Sim | Method::Oma => true,
                Method::Awgn => self.channel == ChannelKind::Awgn,
                Method::Series | Method::Mc => self.channel == ChannelKind::Rayleigh,
            };
            if !ok {
                return Err(Error::config(format!(
                    "method {m} does not apply to the {:?} channel",
                    self.channel
                )));
            }
        }
        if let Some(p) = self.pdp()? {
            p.check_cp(self.cp_len)?;
        }
        // a custom codebook's K is only known once it is loaded
        let k_res = if self.codebook.is_none() { 4 } else { 1 };
        crate::ofdm::OfdmConfig::new(self.subcarriers, self.cp_len, k_res, self.allocation)?;
        Ok(())
    }

    /// The power-delay profile, or `None` for the AWGN channel.
    pub fn pdp(&self) -> Result<Option<PowerDelayProfile>> {
        match self.channel {
            ChannelKind::Awgn => Ok(None),
            ChannelKind::Rayleigh => Ok(Some(PowerDelayProfile::new(
                self.pdp_delays.clone(),
                self.pdp_powers.clone(),
            )?)),
        }
    }

    pub fn load_codebook(&self) -> Result<Codebook> {
        match &self.codebook {
            Some(p) => read_codebook(p),
            None => Ok(Codebook::default_6x4()),
        }
    }

    pub fn series_controls(&self) -> SeriesControls {
        SeriesControls {
            tol: self.series_tol,
            max_terms: self.series_max_terms,
        }
    }
}
