//! Union bound on the BER over all ordered pairs of superimposed codewords.
//!
//! There are `M^J (M^J - 1)` ordered pairs (about 16.8 million for the 6x4
//! system), but the PEP only depends on the multiset of per-RE squared
//! distances. [`PairProfiles`] enumerates the pairs once and groups them by
//! that multiset, accumulating the bit-error weight of each group.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ici::{awgn_ici_variance, IciStats};
use super::pep::{FadingLink, PepConvention, ReFactorSeries, SeriesControls, Q_APPROX_WEIGHTS};
use crate::error::{Error, Result};
use crate::scma::Codebook;
use crate::specfun::q_approx;

const MAX_GROUPED_RESOURCES: usize = 8;

/// Codeword pairs sharing one sorted per-RE distance profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGroup {
    /// Indices into [`PairProfiles::values`], ascending.
    pub ids: Vec<u16>,
    /// Sum of bit errors over the pairs in the group.
    pub weight: f64,
    pub pairs: u64,
}

/// Distance profiles of every ordered pair of distinct superimposed codewords.
#[derive(Debug, Clone)]
pub struct PairProfiles {
    values: Vec<f64>,
    groups: Vec<ProfileGroup>,
    normalization: f64,
    pairs: u64,
}

impl PairProfiles {
    /// Enumerates all ordered pairs. `cap` limits the number of superimposed
    /// codewords (the pair count is its square).
    pub fn build(codebook: &Codebook, cap: u128) -> Result<Self> {
        let cfg = codebook.config();
        let k_res = cfg.resources();
        if k_res > MAX_GROUPED_RESOURCES {
            return Err(Error::config(format!(
                "pair grouping supports at most {MAX_GROUPED_RESOURCES} REs, got {k_res}"
            )));
        }
        let table = codebook.enumerate_superimposed(cap)?;
        let m_size = cfg.codebook_size();
        let graph = codebook.graph();

        // Per RE, the superimposed value depends only on the colliding users.
        // Index those local combinations and intern their pairwise distances.
        let local: Vec<Vec<u32>> = (0..k_res)
            .map(|k| {
                (0..table.len())
                    .map(|t| {
                        let tuple = table.tuple(t);
                        graph.resource_users[k]
                            .iter()
                            .rev()
                            .fold(0u32, |acc, &j| acc * m_size as u32 + tuple[j] as u32)
                    })
                    .collect()
            })
            .collect();
        let n_local = m_size.pow(cfg.users_per_resource() as u32);
        let mut values: Vec<f64> = Vec::new();
        let mut intern: HashMap<u64, u16> = HashMap::new();
        let mut dist_id: Vec<Vec<u16>> = Vec::with_capacity(k_res);
        for k in 0..k_res {
            let mut point = vec![None; n_local];
            for t in 0..table.len() {
                point[local[k][t] as usize].get_or_insert(table.word(t)[k]);
            }
            let mut ids = vec![0u16; n_local * n_local];
            for (c1, p1) in point.iter().enumerate() {
                for (c2, p2) in point.iter().enumerate() {
                    let (Some(p1), Some(p2)) = (p1, p2) else {
                        continue;
                    };
                    let d = (p1 - p2).norm_sqr();
                    let next = values.len();
                    let id = *intern.entry(d.to_bits()).or_insert_with(|| {
                        values.push(d);
                        next as u16
                    });
                    if values.len() > u16::MAX as usize {
                        return Err(Error::config("too many distinct per-RE distances to group"));
                    }
                    ids[c1 * n_local + c2] = id;
                }
            }
            dist_id.push(ids);
        }

        let mut acc: HashMap<u128, (u64, u64)> = HashMap::new();
        let mut key_ids = vec![0u16; k_res];
        for a in 0..table.len() {
            for b in 0..table.len() {
                if a == b {
                    continue;
                }
                for k in 0..k_res {
                    let (ca, cb) = (local[k][a] as usize, local[k][b] as usize);
                    key_ids[k] = dist_id[k][ca * n_local + cb];
                }
                key_ids.sort_unstable();
                let key = key_ids
                    .iter()
                    .fold(0u128, |acc, &id| (acc << 16) | id as u128);
                let e = acc.entry(key).or_insert((0, 0));
                e.0 += table.bit_errors(a, b) as u64;
                e.1 += 1;
            }
        }
        let mut keyed: Vec<(u128, (u64, u64))> = acc.into_iter().collect();
        keyed.sort_unstable_by_key(|(k, _)| *k);
        let groups: Vec<ProfileGroup> = keyed
            .into_iter()
            .map(|(key, (weight, pairs))| ProfileGroup {
                ids: (0..k_res)
                    .map(|i| ((key >> (16 * (k_res - 1 - i))) & 0xffff) as u16)
                    .collect(),
                weight: weight as f64,
                pairs,
            })
            .collect();
        let total = table.len() as u64;
        log::debug!(
            "grouped {} pairs into {} profiles over {} distinct distances",
            total * (total - 1),
            groups.len(),
            values.len()
        );
        Ok(Self {
            values,
            groups,
            normalization: table.len() as f64 * cfg.users() as f64 * cfg.bits_per_user() as f64,
            pairs: total * (total - 1),
        })
    }

    /// Distinct per-RE squared distances.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn groups(&self) -> &[ProfileGroup] {
        &self.groups
    }

    /// The squared-distance profile of a group.
    pub fn profile(&self, group: &ProfileGroup) -> Vec<f64> {
        group.ids.iter().map(|&i| self.values[i as usize]).collect()
    }

    /// `M^J J log2(M)`: total transmitted bits over all reference tuples.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn pairs(&self) -> u64 {
        self.pairs
    }
}

/// Channel assumed by the analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalysisChannel {
    /// AWGN with the CFO-induced ICI treated as extra Gaussian noise.
    Awgn { eps: f64, subcarriers: usize },
    /// Independent Rayleigh REs with conditional ICI statistics.
    Rayleigh { stats: IciStats, phi_nn2: f64 },
}

/// How to average the PEP over the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundMethod {
    /// Closed form with the approximated Q function (AWGN channel only).
    Awgn,
    /// Whittaker-series evaluation of each per-RE factor.
    Series(SeriesControls),
    /// Stratified sampling of each per-RE factor; the standard error comes
    /// from independent replicates.
    MonteCarlo { samples: usize, replicates: usize },
}

/// Union-bound BER and its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionBound {
    pub ber: f64,
    pub std_err: Option<f64>,
    /// False if any series factor hit its term budget (those factors were
    /// estimated by sampling instead).
    pub converged: bool,
    pub max_terms: usize,
}

/// Compensated summation, so the result does not depend on group order
/// beyond the last bit.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.c
    }
}

/// Evaluates the union bound on the BER.
///
/// `rng` feeds the Monte-Carlo method and the fallback for series factors
/// that do not converge; the other paths are deterministic.
pub fn union_bound_ber<R: Rng + ?Sized>(
    profiles: &PairProfiles,
    channel: &AnalysisChannel,
    noise_var: f64,
    overloading: f64,
    method: &BoundMethod,
    convention: PepConvention,
    rng: &mut R,
) -> Result<UnionBound> {
    if !(noise_var >= 0.0) {
        return Err(Error::input(format!(
            "noise variance must be >= 0, got {noise_var}"
        )));
    }
    match (channel, method) {
        (AnalysisChannel::Awgn { eps, subcarriers }, BoundMethod::Awgn) => {
            let denom = awgn_ici_variance(*eps, *subcarriers, overloading) + noise_var;
            if !(denom > 0.0) {
                return Err(Error::input("noise plus ICI variance must be positive"));
            }
            let gamma = 1.0 / denom;
            let rho = convention.projection();
            let mut acc = Neumaier::default();
            for g in &profiles.groups {
                let s: f64 = g.ids.iter().map(|&i| profiles.values[i as usize]).sum();
                acc.add(g.weight * q_approx((rho * gamma * s).sqrt()));
            }
            Ok(UnionBound {
                ber: acc.total() / profiles.normalization,
                std_err: None,
                converged: true,
                max_terms: 0,
            })
        }
        (AnalysisChannel::Rayleigh { stats, phi_nn2 }, BoundMethod::Series(controls)) => {
            let link = FadingLink {
                stats: *stats,
                phi_nn2: *phi_nn2,
                noise_var,
            };
            series_bound(profiles, &link, convention, *controls, rng)
        }
        (
            AnalysisChannel::Rayleigh { stats, phi_nn2 },
            BoundMethod::MonteCarlo {
                samples,
                replicates,
            },
        ) => {
            let link = FadingLink {
                stats: *stats,
                phi_nn2: *phi_nn2,
                noise_var,
            };
            mc_bound(profiles, &link, convention, *samples, *replicates, rng)
        }
        _ => Err(Error::config(
            "the awgn method needs an AWGN channel; series and mc need a Rayleigh channel",
        )),
    }
}

fn check_link(link: &FadingLink) -> Result<()> {
    if !(link.stats.sigma_beta2 + link.noise_var > 0.0) {
        return Err(Error::input("noise plus ICI variance must be positive"));
    }
    Ok(())
}

/// Stratified estimate of `E[exp(-a mu u / (1 + upsilon u))]` for every
/// distinct distance, sharing one stratified `u` sample across distances.
fn sampled_factors<R: Rng + ?Sized>(
    profiles: &PairProfiles,
    link: &FadingLink,
    a: f64,
    samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    let ups = link.upsilon();
    let n = samples as f64;
    let u: Vec<f64> = (0..samples)
        .map(|i| {
            let p = (i as f64 + rng.random::<f64>()) / n;
            -(-p).ln_1p()
        })
        .collect();
    profiles
        .values
        .iter()
        .map(|&d| {
            let mu = link.mu(d);
            u.iter()
                .map(|&x| (-a * mu * x / (1.0 + ups * x)).exp())
                .sum::<f64>()
                / n
        })
        .collect()
}

fn accumulate(profiles: &PairProfiles, factors: &[Vec<Vec<f64>>; 2]) -> f64 {
    // factors[term][position][value id]
    let mut acc = Neumaier::default();
    for g in &profiles.groups {
        let mut pep = 0.0;
        for (t, w) in Q_APPROX_WEIGHTS.iter().enumerate() {
            let mut prod = *w;
            for (pos, &id) in g.ids.iter().enumerate() {
                // a single row is shared by every position
                prod *= factors[t][pos.min(factors[t].len() - 1)][id as usize];
            }
            pep += prod;
        }
        acc.add(g.weight * pep);
    }
    acc.total() / profiles.normalization
}

fn series_bound<R: Rng + ?Sized>(
    profiles: &PairProfiles,
    link: &FadingLink,
    convention: PepConvention,
    controls: SeriesControls,
    rng: &mut R,
) -> Result<UnionBound> {
    check_link(link)?;
    let mut series = ReFactorSeries::new(link.upsilon(), controls)?;
    let mut converged = true;
    let mut max_terms = 0;
    let exps = convention.exponents();
    let mut factors: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    for (t, &a) in exps.iter().enumerate() {
        let mut row = Vec::with_capacity(profiles.values.len());
        let mut fallback = None;
        for &d in &profiles.values {
            let f = series.factor(a, link.mu(d))?;
            max_terms = max_terms.max(f.terms);
            if f.converged {
                row.push(f.value);
            } else {
                converged = false;
                let sampled = fallback
                    .get_or_insert_with(|| sampled_factors(profiles, link, a, 1 << 16, rng));
                row.push(sampled[row.len()]);
            }
        }
        factors[t] = vec![row];
    }
    if !converged {
        log::warn!(
            "series did not converge within {} terms for some distances; used sampling",
            controls.max_terms
        );
    }
    Ok(UnionBound {
        ber: accumulate(profiles, &factors),
        std_err: None,
        converged,
        max_terms,
    })
}

fn mc_bound<R: Rng + ?Sized>(
    profiles: &PairProfiles,
    link: &FadingLink,
    convention: PepConvention,
    samples: usize,
    replicates: usize,
    rng: &mut R,
) -> Result<UnionBound> {
    check_link(link)?;
    if samples == 0 || replicates < 2 {
        return Err(Error::input(
            "Monte-Carlo bound needs samples > 0 and at least two replicates",
        ));
    }
    let k_res = profiles.groups.first().map_or(0, |g| g.ids.len());
    let exps = convention.exponents();
    let mut estimates = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        // independent sample sets per profile position keep the product unbiased
        let factors: [Vec<Vec<f64>>; 2] = exps.map(|a| {
            (0..k_res)
                .map(|_| sampled_factors(profiles, link, a, samples, rng))
                .collect()
        });
        estimates.push(accumulate(profiles, &factors));
    }
    let r = replicates as f64;
    let mean = estimates.iter().sum::<f64>() / r;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Ok(UnionBound {
        ber: mean,
        std_err: Some((var / r).sqrt()),
        converged: true,
        max_terms: 0,
    })
}
