//! OFDM modulation chain, subcarrier allocation and the CFO model.
//!
//! Subcarriers are stored 0-based: internal index `i` is subcarrier `i + 1`
//! in the 1-based numbering used by the analysis and by external reports.
//! Transforms are unitary (`1/sqrt(N)` in both directions), so the
//! frequency response of a tap vector `h` is `lambda = sqrt(N) F h`, i.e.
//! the plain unnormalized DFT of `h`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the `K` REs of each SCMA block are spread over the OFDM subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allocation {
    /// RE `k` of block `q` goes to subcarrier `Q(k-1) + q` (1-based).
    Interleaved,
    /// Block `q` occupies the `K` consecutive subcarriers `K(q-1)+1 ..= Kq`.
    Localized,
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Allocation::Interleaved => "interleaved",
            Allocation::Localized => "localized",
        })
    }
}

impl FromStr for Allocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interleaved" => Ok(Allocation::Interleaved),
            "localized" => Ok(Allocation::Localized),
            _ => Err(Error::config(format!("unknown allocation {s:?}"))),
        }
    }
}

/// Where the CFO phase ramp starts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfoPhaseOrigin {
    /// Phase 0 at the first payload sample; the CP carries the negative part
    /// of the ramp. This reproduces `y = D H F^H s + n` exactly.
    #[default]
    Payload,
    /// Free-running oscillator: phase 0 at the first CP sample, so the
    /// payload picks up an extra common rotation of `2 pi eps N_cp / N`.
    Continuous,
}

/// OFDM numerology and SCMA block layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OfdmConfig {
    subcarriers: usize,
    cp_len: usize,
    resources: usize,
    allocation: Allocation,
}

impl OfdmConfig {
    pub fn new(
        subcarriers: usize,
        cp_len: usize,
        resources: usize,
        allocation: Allocation,
    ) -> Result<Self> {
        if subcarriers < 2 {
            return Err(Error::config("need at least two subcarriers"));
        }
        if resources == 0 || subcarriers % resources != 0 {
            return Err(Error::config(format!(
                "K = {resources} must divide N = {subcarriers}"
            )));
        }
        if cp_len >= subcarriers {
            return Err(Error::config(
                "cyclic prefix must be shorter than the symbol",
            ));
        }
        Ok(Self {
            subcarriers,
            cp_len,
            resources,
            allocation,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    /// `Q = N / K`, SCMA blocks per OFDM symbol.
    pub fn blocks(&self) -> usize {
        self.subcarriers / self.resources
    }

    pub fn allocation(&self) -> Allocation {
        self.allocation
    }

    /// 0-based subcarrier carrying RE `k` of block `q` (both 0-based).
    pub fn subcarrier(&self, q: usize, k: usize) -> usize {
        match self.allocation {
            Allocation::Interleaved => self.blocks() * k + q,
            Allocation::Localized => self.resources * q + k,
        }
    }

    /// Maps `Q` blocks of `K` symbols (block-major: block `q` entry `k` at
    /// `q*K + k`) onto the `N` subcarriers.
    pub fn allocate(&self, blocks: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut s = vec![Complex64::new(0.0, 0.0); self.subcarriers];
        self.allocate_into(blocks, &mut s)?;
        Ok(s)
    }

    pub fn allocate_into(&self, blocks: &[Complex64], s: &mut [Complex64]) -> Result<()> {
        self.check_len(blocks.len(), "allocate input")?;
        self.check_len(s.len(), "allocate output")?;
        let k_res = self.resources;
        for q in 0..self.blocks() {
            for k in 0..k_res {
                s[self.subcarrier(q, k)] = blocks[q * k_res + k];
            }
        }
        Ok(())
    }

    /// Inverse of [`OfdmConfig::allocate`].
    pub fn deallocate(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut blocks = vec![Complex64::new(0.0, 0.0); self.subcarriers];
        self.deallocate_into(s, &mut blocks)?;
        Ok(blocks)
    }

    pub fn deallocate_into(&self, s: &[Complex64], blocks: &mut [Complex64]) -> Result<()> {
        self.check_len(s.len(), "deallocate input")?;
        self.check_len(blocks.len(), "deallocate output")?;
        let k_res = self.resources;
        for q in 0..self.blocks() {
            for k in 0..k_res {
                blocks[q * k_res + k] = s[self.subcarrier(q, k)];
            }
        }
        Ok(())
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.subcarriers {
            return Err(Error::input(format!(
                "{what}: expected {} samples, got {len}",
                self.subcarriers
            )));
        }
        Ok(())
    }
}

/// CP-OFDM modulator/demodulator with cached transform plans.
///
/// Cloning shares the plans; each worker can hold its own clone.
#[derive(Clone)]
pub struct OfdmModem {
    n: usize,
    cp: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OfdmModem")
            .field("n", &self.n)
            .field("cp", &self.cp)
            .finish()
    }
}

impl OfdmModem {
    pub fn new(subcarriers: usize, cp_len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n: subcarriers,
            cp: cp_len,
            forward: planner.plan_fft_forward(subcarriers),
            inverse: planner.plan_fft_inverse(subcarriers),
            scale: 1.0 / (subcarriers as f64).sqrt(),
        }
    }

    pub fn for_config(cfg: &OfdmConfig) -> Self {
        Self::new(cfg.subcarriers(), cfg.cp_len())
    }

    pub fn subcarriers(&self) -> usize {
        self.n
    }

    pub fn cp_len(&self) -> usize {
        self.cp
    }

    /// Unitary IDFT of `s` followed by CP insertion; output length `N + N_cp`.
    pub fn modulate(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        if s.len() != self.n {
            return Err(Error::input(format!(
                "modulate: expected {} subcarriers, got {}",
                self.n,
                s.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.n + self.cp];
        let payload = &mut out[self.cp..];
        payload.copy_from_slice(s);
        self.inverse.process(payload);
        for v in payload.iter_mut() {
            *v *= self.scale;
        }
        let (head, tail) = out.split_at_mut(self.cp);
        head.copy_from_slice(&tail[self.n - self.cp..]);
        Ok(out)
    }

    /// CP removal followed by the unitary DFT.
    pub fn demodulate(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.n + self.cp {
            return Err(Error::input(format!(
                "demodulate: expected {} samples, got {}",
                self.n + self.cp,
                y.len()
            )));
        }
        let mut z = y[self.cp..].to_vec();
        self.forward.process(&mut z);
        for v in z.iter_mut() {
            *v *= self.scale;
        }
        Ok(z)
    }

    /// Unnormalized forward DFT, in place. Used for `lambda = sqrt(N) F h`.
    pub fn dft_unnormalized(&self, x: &mut [Complex64]) {
        self.forward.process(x);
    }
}

/// Multiplies sample `i` by `exp(j 2 pi eps (i - origin) / N)`.
///
/// With `origin = 0` on an `N`-sample payload this is the diagonal matrix `D`.
pub fn apply_cfo_from(x: &mut [Complex64], eps: f64, n: usize, origin: usize) {
    if eps == 0.0 {
        return;
    }
    let w = 2.0 * PI * eps / n as f64;
    for (i, v) in x.iter_mut().enumerate() {
        let t = i as f64 - origin as f64;
        *v *= Complex64::cis(w * t);
    }
}

/// Applies the CFO to an `N`-sample payload (CP already removed).
pub fn apply_cfo(x: &mut [Complex64], eps: f64) {
    let n = x.len();
    apply_cfo_from(x, eps, n, 0);
}

/// Applies the CFO to a CP-prefixed OFDM symbol of length `N + N_cp`.
pub fn apply_cfo_with_cp(
    x: &mut [Complex64],
    eps: f64,
    n: usize,
    cp: usize,
    origin: CfoPhaseOrigin,
) {
    match origin {
        CfoPhaseOrigin::Payload => apply_cfo_from(x, eps, n, cp),
        CfoPhaseOrigin::Continuous => apply_cfo_from(x, eps, n, 0),
    }
}

/// Entry `(n, m)` of the ICI matrix `Phi = F D F^H` for 0-based subcarriers.
///
/// Only `(m - n) mod N` matters. The numerator uses
/// `sin(pi (d + eps)) = (-1)^d sin(pi eps)`, so off-diagonal entries vanish
/// exactly at `eps = 0`.
pub fn ici_coefficient(n: usize, m: usize, eps: f64, subcarriers: usize) -> Complex64 {
    let d = (m as i64 - n as i64).rem_euclid(subcarriers as i64) as usize;
    ici_coefficient_offset(d, eps, subcarriers)
}

fn ici_coefficient_offset(d: usize, eps: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    let x = d as f64 + eps;
    let den = nf * (PI * x / nf).sin();
    let amp = if d == 0 && eps == 0.0 {
        1.0
    } else {
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        sign * (PI * eps).sin() / den
    };
    Complex64::from_polar(amp, PI * (nf - 1.0) / nf * x)
}

/// `|phi_{n,n}|^2 = sin^2(pi eps) / (N^2 sin^2(pi eps / N))`.
pub fn diagonal_power(eps: f64, n: usize) -> f64 {
    if eps == 0.0 {
        return 1.0;
    }
    let nf = n as f64;
    let r = (PI * eps).sin() / (nf * (PI * eps / nf).sin());
    r * r
}

/// The ICI operator `Phi` for one CFO value, stored as its first row.
#[derive(Debug, Clone)]
pub struct IciOperator {
    eps: f64,
    row: Vec<Complex64>,
}

impl IciOperator {
    pub fn new(eps: f64, subcarriers: usize) -> Self {
        Self {
            eps,
            row: (0..subcarriers)
                .map(|d| ici_coefficient_offset(d, eps, subcarriers))
                .collect(),
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn subcarriers(&self) -> usize {
        self.row.len()
    }

    /// `phi_{n,m}` for 0-based indices.
    pub fn coefficient(&self, n: usize, m: usize) -> Complex64 {
        let len = self.row.len() as i64;
        self.row[(m as i64 - n as i64).rem_euclid(len) as usize]
    }

    /// `phi_{n,n}`, the common attenuation and rotation.
    pub fn diagonal(&self) -> Complex64 {
        self.row[0]
    }

    /// `phi_{n, n+d}` for `d = 0..N`.
    pub fn by_offset(&self) -> &[Complex64] {
        &self.row
    }

    /// `sum_m |phi_{n,m}|^2` (identical for every row).
    pub fn row_power(&self) -> f64 {
        self.row.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Applies `Phi` to a frequency-domain vector (dense, `O(N^2)`).
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.row.len();
        (0..n)
            .map(|i| (0..n).map(|m| self.coefficient(i, m) * v[m]).sum())
            .collect()
    }
}
