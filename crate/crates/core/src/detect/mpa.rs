use num_complex::Complex64;

use super::{Decision, DetectorInput};
use crate::error::{Error, Result};
use crate::scma::Codebook;

pub const DEFAULT_MPA_ITERATIONS: usize = 6;

// Normalized log-messages are floored here so that differences of
// log-probabilities never meet -inf - (-inf).
const LOG_FLOOR: f64 = -700.0;

/// Log-domain sum-product detector on the SCMA factor graph.
#[derive(Debug, Clone)]
pub struct MpaDetector {
    users: usize,
    resources: usize,
    m_size: usize,
    bits: usize,
    iterations: usize,
    // widest RE degree; message buffers use a stride of `max_degree * M` per RE
    max_degree: usize,
    resource_users: Vec<Vec<usize>>,
    // per RE: superimposed noiseless value of each local combination of the
    // colliding users' codeword indices (first user least significant)
    combos: Vec<Vec<Complex64>>,
    // per RE: row-major `combos x degree` table of message offsets
    // `pos * M + digit`, one per colliding user
    offsets: Vec<Vec<u32>>,
    // per user: (RE, position of the user in that RE's list)
    user_edges: Vec<Vec<(usize, usize)>>,
}

/// Soft and hard outputs of the MPA.
#[derive(Debug, Clone)]
pub struct MpaOutput {
    pub decision: Decision,
    /// Per user, the normalized posterior over its `M` codewords.
    pub marginals: Vec<Vec<f64>>,
    /// Per user, `log2(M)` LLRs `ln P(b = 0) / P(b = 1)`, MSB first.
    pub llrs: Vec<Vec<f64>>,
}

impl MpaDetector {
    pub fn new(codebook: &Codebook, iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::config("MPA needs at least one iteration"));
        }
        let cfg = codebook.config();
        let graph = codebook.graph();
        let m_size = cfg.codebook_size();
        let mut combos = Vec::with_capacity(cfg.resources());
        let mut offsets = Vec::with_capacity(cfg.resources());
        for (k, users) in graph.resource_users.iter().enumerate() {
            let n = m_size.pow(users.len() as u32);
            let mut values = Vec::with_capacity(n);
            let mut table = Vec::with_capacity(n * users.len());
            for c in 0..n {
                let mut rem = c;
                let mut sum = Complex64::new(0.0, 0.0);
                for (pos, &j) in users.iter().enumerate() {
                    let i = rem % m_size;
                    sum += codebook.codeword(j, i)[k];
                    table.push((pos * m_size + i) as u32);
                    rem /= m_size;
                }
                values.push(sum);
            }
            combos.push(values);
            offsets.push(table);
        }
        let user_edges = graph
            .user_resources
            .iter()
            .enumerate()
            .map(|(j, res)| {
                res.iter()
                    .map(|&k| {
                        let pos = graph.resource_users[k]
                            .iter()
                            .position(|&u| u == j)
                            .expect("edge");
                        (k, pos)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            users: cfg.users(),
            resources: cfg.resources(),
            m_size,
            bits: cfg.bits_per_user(),
            iterations,
            max_degree: graph.resource_users.iter().map(Vec::len).max().unwrap_or(0),
            resource_users: graph.resource_users.clone(),
            combos,
            offsets,
            user_edges,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn detect(&self, input: &DetectorInput<'_>) -> Result<MpaOutput> {
        self.run(input, |_, _| {})
    }

    /// Runs the detector and reports the user marginals after every iteration.
    pub fn run<F: FnMut(usize, &[Vec<f64>])>(
        &self,
        input: &DetectorInput<'_>,
        mut observe: F,
    ) -> Result<MpaOutput> {
        input.check(self.resources)?;
        let m = self.m_size;
        let stride = self.max_degree * m;
        let uniform = -(m as f64).ln();

        // to_res: user -> RE messages, to_user: RE -> user messages, both at
        // [k * stride + pos * m + i]
        let mut to_res = vec![uniform; self.resources * stride];
        let mut to_user = vec![0.0; self.resources * stride];
        let max_combos = self.combos.iter().map(Vec::len).max().unwrap_or(0);
        let mut loglik = vec![0.0; self.resources * max_combos];
        let mut weights = vec![0.0; max_combos];
        let mut total = vec![0.0; m];
        let mut marginals = vec![vec![0.0; m]; self.users];

        for k in 0..self.resources {
            let (z, g, s2) = (input.received[k], input.gains[k], input.noise_var[k]);
            let ll = &mut loglik[k * max_combos..];
            for (l, &w) in ll.iter_mut().zip(&self.combos[k]) {
                *l = -(z - g * w).norm_sqr() / s2;
            }
        }

        for iter in 0..self.iterations {
            for k in 0..self.resources {
                let d = self.resource_users[k].len();
                let n = self.combos[k].len();
                let offsets = &self.offsets[k];
                let ll = &loglik[k * max_combos..k * max_combos + n];
                let incoming = &to_res[k * stride..k * stride + d * m];
                let out = &mut to_user[k * stride..k * stride + d * m];
                // literal degrees let the inner loops unroll
                let peak = match d {
                    2 => accumulate(2, ll, offsets, incoming, &mut weights[..n], out),
                    3 => accumulate(3, ll, offsets, incoming, &mut weights[..n], out),
                    _ => accumulate(d, ll, offsets, incoming, &mut weights[..n], out),
                };
                // Summing the full products and removing the recipient's own
                // incoming message afterwards is exact in the log domain.
                for p in 0..d {
                    let o = &mut out[p * m..(p + 1) * m];
                    for i in 0..m {
                        o[i] = o[i].ln() + peak - incoming[p * m + i];
                    }
                    shift_to_peak(o);
                }
            }
            for j in 0..self.users {
                total.fill(uniform);
                for &(k, pos) in &self.user_edges[j] {
                    let msg = &to_user[k * stride + pos * m..k * stride + (pos + 1) * m];
                    for i in 0..m {
                        total[i] += msg[i];
                    }
                }
                for &(k, pos) in &self.user_edges[j] {
                    let at = k * stride + pos * m;
                    for i in 0..m {
                        to_res[at + i] = total[i] - to_user[at + i];
                    }
                    shift_to_peak(&mut to_res[at..at + m]);
                }
                normalize_log(&mut total);
                for i in 0..m {
                    marginals[j][i] = total[i].exp();
                }
                let s: f64 = marginals[j].iter().sum();
                marginals[j].iter_mut().for_each(|p| *p /= s);
            }
            observe(iter + 1, &marginals);
        }

        let indices: Vec<usize> = marginals
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                        if v > best.1 {
                            (i, v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect();
        let llrs = marginals
            .iter()
            .map(|p| {
                (0..self.bits)
                    .map(|b| {
                        let mask = 1 << (self.bits - 1 - b);
                        let (mut p0, mut p1) = (0.0, 0.0);
                        for (i, &v) in p.iter().enumerate() {
                            if i & mask == 0 {
                                p0 += v;
                            } else {
                                p1 += v;
                            }
                        }
                        p0.max(f64::MIN_POSITIVE).ln() - p1.max(f64::MIN_POSITIVE).ln()
                    })
                    .collect()
            })
            .collect();
        Ok(MpaOutput {
            decision: Decision { indices },
            marginals,
            llrs,
        })
    }
}

/// Fills `out[pos * M + i]` with the sum over local combinations having user
/// `pos` at codeword `i` of `exp(loglik + incoming - peak)` and returns the peak.
#[inline(always)]
fn accumulate(
    d: usize,
    loglik: &[f64],
    offsets: &[u32],
    incoming: &[f64],
    weights: &mut [f64],
    out: &mut [f64],
) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    for ((w, &l), off) in weights.iter_mut().zip(loglik).zip(offsets.chunks_exact(d)) {
        let mut t = l;
        for &o in off {
            t += incoming[o as usize];
        }
        if t > peak {
            peak = t;
        }
        *w = t;
    }
    out.fill(0.0);
    for (&t, off) in weights.iter().zip(offsets.chunks_exact(d)) {
        let w = (t - peak).exp();
        for &o in off {
            out[o as usize] += w;
        }
    }
    peak
}

/// Shifts log-messages so their largest entry is zero, then applies the
/// floor. Messages are only defined up to a constant factor.
fn shift_to_peak(v: &mut [f64]) {
    let peak = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for x in v.iter_mut() {
        *x = (*x - peak).max(LOG_FLOOR);
    }
}

/// Shifts log-probabilities so they sum to one, then applies the floor.
fn normalize_log(v: &mut [f64]) {
    let peak = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = peak + v.iter().map(|x| (x - peak).exp()).sum::<f64>().ln();
    for x in v.iter_mut() {
        *x = (*x - lse).max(LOG_FLOOR);
    }
}
