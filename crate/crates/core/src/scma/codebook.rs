use num_complex::Complex64;

use super::{FactorGraph, ScmaConfig};
use crate::error::{Error, Result};

/// Refuse to enumerate more than this many superimposed codewords by default.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

const ZERO_TOL: f64 = 1e-12;

/// Per-user SCMA codebooks.
///
/// Codeword `m` of user `j` is a length-`K` complex vector whose support is
/// exactly the support of column `j` of the indicator matrix. Bits map to
/// codeword indices in natural binary, most significant bit first.
#[derive(Debug, Clone)]
pub struct Codebook {
    config: ScmaConfig,
    graph: FactorGraph,
    // data[j][m * K + k]
    data: Vec<Vec<Complex64>>,
}

impl Codebook {
    /// `codewords[j][m]` is the length-`K` codeword `m` of user `j`.
    pub fn new(config: ScmaConfig, codewords: Vec<Vec<Vec<Complex64>>>) -> Result<Self> {
        let (j_users, k_res, m_size) = (config.users(), config.resources(), config.codebook_size());
        if codewords.len() != j_users {
            return Err(Error::config(format!(
                "expected codebooks for {j_users} users, got {}",
                codewords.len()
            )));
        }
        let mut data = Vec::with_capacity(j_users);
        for (j, book) in codewords.into_iter().enumerate() {
            if book.len() != m_size {
                return Err(Error::config(format!(
                    "user {} has {} codewords, expected {m_size}",
                    j + 1,
                    book.len()
                )));
            }
            let mut flat = Vec::with_capacity(m_size * k_res);
            for (m, cw) in book.into_iter().enumerate() {
                if cw.len() != k_res {
                    return Err(Error::config(format!(
                        "user {} codeword {} has length {}, expected {k_res}",
                        j + 1,
                        m + 1,
                        cw.len()
                    )));
                }
                flat.extend(cw);
            }
            for k in 0..k_res {
                let row_zero = (0..m_size).all(|m| flat[m * k_res + k].norm() <= ZERO_TOL);
                if row_zero == config.indicator().get(k, j) {
                    return Err(Error::config(format!(
                        "user {} RE {}: codebook row sparsity does not match the indicator matrix",
                        j + 1,
                        k + 1
                    )));
                }
            }
            data.push(flat);
        }
        Ok(Self {
            graph: config.factor_graph(),
            config,
            data,
        })
    }

    /// The bundled 4-point, 4-RE, 6-user codebook, normalized to unit
    /// average codeword energy.
    pub fn default_6x4() -> Self {
        let raw = super::parse_codebook(DEFAULT_CODEBOOK, "<default codebook>")
            .expect("bundled codebook parses");
        raw.normalized()
    }

    pub fn config(&self) -> &ScmaConfig {
        &self.config
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn codeword(&self, user: usize, index: usize) -> &[Complex64] {
        let k = self.config.resources();
        &self.data[user][index * k..(index + 1) * k]
    }

    /// `(1/M) sum_m ||x_{j,m}||^2`.
    pub fn average_energy(&self, user: usize) -> f64 {
        self.data[user].iter().map(|c| c.norm_sqr()).sum::<f64>()
            / self.config.codebook_size() as f64
    }

    /// Scales every user's codebook to unit average codeword energy.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for (j, book) in out.data.iter_mut().enumerate() {
            let e = self.average_energy(j);
            let scale = 1.0 / e.sqrt();
            if (scale - 1.0).abs() > 1e-15 {
                log::debug!(
                    "user {}: codebook energy {e:.6} rescaled by {scale:.6}",
                    j + 1
                );
            }
            for c in book.iter_mut() {
                *c *= scale;
            }
        }
        out
    }

    /// Codeword index addressed by a bit label (MSB first).
    pub fn index_of_bits(&self, bits: &[u8]) -> Result<usize> {
        let nb = self.config.bits_per_user();
        if bits.len() != nb {
            return Err(Error::input(format!(
                "expected {nb} bits per user, got {}",
                bits.len()
            )));
        }
        bits.iter().try_fold(0usize, |acc, &b| match b {
            0 | 1 => Ok((acc << 1) | b as usize),
            _ => Err(Error::input("bits must be 0 or 1")),
        })
    }

    /// Bit label (MSB first) of codeword `index`.
    pub fn bits_of_index(&self, index: usize) -> Vec<u8> {
        let nb = self.config.bits_per_user();
        (0..nb)
            .map(|i| ((index >> (nb - 1 - i)) & 1) as u8)
            .collect()
    }

    /// Maps `log2(M)` bits of user `user` (0-based) to its codeword.
    pub fn map_bits(&self, bits: &[u8], user: usize) -> Result<&[Complex64]> {
        if user >= self.config.users() {
            return Err(Error::input(format!(
                "user index {} out of range 1..={}",
                user + 1,
                self.config.users()
            )));
        }
        let m = self.index_of_bits(bits)?;
        Ok(self.codeword(user, m))
    }

    /// Inverse of [`Codebook::map_bits`] restricted to exact codewords.
    pub fn lookup(&self, user: usize, codeword: &[Complex64]) -> Option<usize> {
        (0..self.config.codebook_size()).find(|&m| {
            self.codeword(user, m)
                .iter()
                .zip(codeword)
                .all(|(a, b)| (a - b).norm() <= ZERO_TOL)
        })
    }

    /// Sums one codeword per user after checking each respects its support.
    pub fn superimpose(&self, codewords: &[&[Complex64]]) -> Result<Vec<Complex64>> {
        let k_res = self.config.resources();
        if codewords.len() != self.config.users() {
            return Err(Error::input(format!(
                "expected {} codewords, got {}",
                self.config.users(),
                codewords.len()
            )));
        }
        let mut w = vec![Complex64::new(0.0, 0.0); k_res];
        for (j, cw) in codewords.iter().enumerate() {
            if cw.len() != k_res {
                return Err(Error::input(format!(
                    "codeword of user {} has length {}, expected {k_res}",
                    j + 1,
                    cw.len()
                )));
            }
            for (k, (acc, &x)) in w.iter_mut().zip(cw.iter()).enumerate() {
                if !self.config.indicator().get(k, j) && x.norm() > ZERO_TOL {
                    return Err(Error::input(format!(
                        "codeword of user {} is nonzero outside its support (RE {})",
                        j + 1,
                        k + 1
                    )));
                }
                *acc += x;
            }
        }
        Ok(w)
    }

    /// Superimposed codeword for one codeword index per user, written into `out`.
    pub fn superimpose_indices_into(&self, indices: &[usize], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for (j, &m) in indices.iter().enumerate() {
            let cw = self.codeword(j, m);
            for &k in &self.graph.user_resources[j] {
                out[k] += cw[k];
            }
        }
    }

    pub fn superimpose_indices(&self, indices: &[usize]) -> Vec<Complex64> {
        let mut w = vec![Complex64::new(0.0, 0.0); self.config.resources()];
        self.superimpose_indices_into(indices, &mut w);
        w
    }

    /// Enumerates all `M^J` user tuples in odometer order, user 1 fastest.
    pub fn enumerate_superimposed(&self, cap: u128) -> Result<SuperimposedTable> {
        let count = self.config.combinations().unwrap_or(u128::MAX);
        if count > cap {
            return Err(Error::TooLarge {
                what: "superimposed codeword enumeration",
                count,
                cap,
                hint: "use the message passing detector or reduce M^J",
            });
        }
        let nb = self.config.bits_per_user();
        if self.config.users() * nb > 64 {
            return Err(Error::config(
                "bit labels wider than 64 bits are not supported",
            ));
        }
        let count = count as usize;
        let (j_users, k_res, m_size) = (
            self.config.users(),
            self.config.resources(),
            self.config.codebook_size(),
        );
        let mut indices = Vec::with_capacity(count * j_users);
        let mut words = vec![Complex64::new(0.0, 0.0); count * k_res];
        let mut labels = Vec::with_capacity(count);
        let mut tuple = vec![0usize; j_users];
        for t in 0..count {
            self.superimpose_indices_into(&tuple, &mut words[t * k_res..(t + 1) * k_res]);
            let mut label = 0u64;
            for (j, &m) in tuple.iter().enumerate() {
                indices.push(m as u16);
                label |= (m as u64) << (j * nb);
            }
            labels.push(label);
            for m in tuple.iter_mut() {
                *m += 1;
                if *m < m_size {
                    break;
                }
                *m = 0;
            }
        }
        Ok(SuperimposedTable {
            users: j_users,
            resources: k_res,
            indices,
            words,
            labels,
        })
    }
}

/// All superimposed codewords of a system with their user tuples and bit labels.
#[derive(Debug, Clone)]
pub struct SuperimposedTable {
    users: usize,
    resources: usize,
    indices: Vec<u16>,
    words: Vec<Complex64>,
    labels: Vec<u64>,
}

impl SuperimposedTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    /// Codeword index per user for entry `t`.
    pub fn tuple(&self, t: usize) -> &[u16] {
        &self.indices[t * self.users..(t + 1) * self.users]
    }

    pub fn word(&self, t: usize) -> &[Complex64] {
        &self.words[t * self.resources..(t + 1) * self.resources]
    }

    /// Packed bit label: user `j`'s codeword index occupies bits
    /// `j*log2(M) .. (j+1)*log2(M)`. Hamming distance between labels is the
    /// number of bit errors between the two tuples.
    pub fn label(&self, t: usize) -> u64 {
        self.labels[t]
    }

    pub fn bit_errors(&self, a: usize, b: usize) -> u32 {
        (self.labels[a] ^ self.labels[b]).count_ones()
    }
}

/// Default 4-point codebook. Users are ordered so that their supports follow
/// the canonical indicator matrix; energies are normalized at load time.
const DEFAULT_CODEBOOK: &str = include_str!("../../data/default_codebook.txt");
