//! Conditional and average pairwise error probabilities.
//!
//! For a pair of superimposed codewords with per-RE squared distances
//! `D_k = |w_k - w'_k|^2` and per-RE SINR `gamma_k`, the conditional PEP is
//! `Q(sqrt(rho * sum_k gamma_k D_k))`. The projection factor `rho` is set by
//! [`PepConvention`]. Replacing `Q` by its two-exponential approximation
//! turns the average over independent Rayleigh REs into a product of per-RE
//! factors `I(a, mu_k, upsilon) = E[exp(-a mu_k u / (1 + upsilon u))]`,
//! `u ~ Exp(1)`, which [`ReFactorSeries`] evaluates as a Whittaker series.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::ici::IciStats;
use crate::error::{Error, Result};
use crate::specfun::{ln_gamma, ln_whittaker_w, q_approx, q_function};

/// Weights of the two exponentials in the Q-function approximation.
pub const Q_APPROX_WEIGHTS: [f64; 2] = [1.0 / 12.0, 1.0 / 4.0];

/// Scaling between the decision distance and the argument of `Q`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PepConvention {
    /// `rho = 1/2`: the real part of circular noise of variance `s^2`
    /// projected on a unit direction has variance `s^2 / 2`.
    #[default]
    CircularNoise,
    /// `rho = 1/4`, as written in the original derivation. Kept for
    /// comparison; it overstates the error probability.
    Literal,
}

impl PepConvention {
    pub fn projection(self) -> f64 {
        match self {
            PepConvention::CircularNoise => 0.5,
            PepConvention::Literal => 0.25,
        }
    }

    /// Exponent coefficients `a` of the two terms: `rho/2` and `2 rho/3`.
    pub fn exponents(self) -> [f64; 2] {
        let r = self.projection();
        [r / 2.0, 2.0 * r / 3.0]
    }
}

/// Conditional PEP with the exact `Q` and with its approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalPep {
    pub exact: f64,
    pub approx: f64,
}

/// PEP of one codeword pair given the per-RE SINRs.
pub fn conditional_pep(
    profile: &[f64],
    gamma: &[f64],
    convention: PepConvention,
) -> Result<ConditionalPep> {
    if profile.len() != gamma.len() {
        return Err(Error::input(format!(
            "distance profile has {} REs but {} SINRs were given",
            profile.len(),
            gamma.len()
        )));
    }
    if profile.iter().chain(gamma).any(|v| !(*v >= 0.0)) {
        return Err(Error::input("distances and SINRs must be non-negative"));
    }
    if profile.iter().all(|&d| d == 0.0) {
        return Err(Error::input(
            "all-zero distance profile: the two codewords are identical",
        ));
    }
    let s: f64 = profile.iter().zip(gamma).map(|(d, g)| d * g).sum();
    let x = (convention.projection() * s).sqrt();
    Ok(ConditionalPep {
        exact: q_function(x),
        approx: q_approx(x),
    })
}

/// Rayleigh link seen by the analysis on one SNR/CFO point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingLink {
    pub stats: IciStats,
    /// `|phi_{n,n}|^2`.
    pub phi_nn2: f64,
    /// Thermal noise variance `sigma_0^2`.
    pub noise_var: f64,
}

impl FadingLink {
    /// SINR of an RE with channel power `|lambda|^2`.
    pub fn sinr(&self, lambda2: f64) -> f64 {
        lambda2 * self.phi_nn2
            / (lambda2 * self.stats.sigma_alpha2 + self.stats.sigma_beta2 + self.noise_var)
    }

    fn denominator(&self) -> f64 {
        self.stats.sigma_beta2 + self.noise_var
    }

    /// `mu = c_nn |phi_nn|^2 D / (sigma_beta2 + sigma_0^2)`.
    pub fn mu(&self, distance2: f64) -> f64 {
        self.stats.c_nn * self.phi_nn2 * distance2 / self.denominator()
    }

    /// `upsilon = c_nn sigma_alpha2 / (sigma_beta2 + sigma_0^2)`.
    pub fn upsilon(&self) -> f64 {
        self.stats.c_nn * self.stats.sigma_alpha2 / self.denominator()
    }

    fn check(&self) -> Result<()> {
        if !(self.denominator() > 0.0) {
            return Err(Error::input(
                "noise plus ICI variance must be positive for the fading analysis",
            ));
        }
        Ok(())
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
}

/// Smallest sample count accepted by [`pep_montecarlo`].
pub const MIN_MC_SAMPLES: usize = 10_000;

/// Averages the approximated conditional PEP over independent
/// `|lambda_k|^2 ~ c_nn Exp(1)` draws.
///
/// With independent REs each exponential term of the PEP is a product of
/// per-RE expectations, so every RE gets its own `samples` draws and the
/// estimate is the product of the per-RE sample means. Averaging the joint
/// integrand instead would need the rare simultaneous fades of all REs to
/// show up in the sample, which they do not once the PEP is far below
/// `1 / samples`. The standard error follows from the delta method.
pub fn pep_montecarlo<R: Rng + ?Sized>(
    profile: &[f64],
    link: &FadingLink,
    samples: usize,
    convention: PepConvention,
    rng: &mut R,
) -> Result<McEstimate> {
    link.check()?;
    if samples < MIN_MC_SAMPLES {
        return Err(Error::input(format!(
            "Monte-Carlo PEP needs at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    let [a1, a2] = convention.exponents();
    let n = samples as f64;
    // per RE: means of the two exponentials and their covariance matrix
    let mut means = Vec::with_capacity(profile.len());
    let mut covs = Vec::with_capacity(profile.len());
    for &d in profile {
        if d == 0.0 {
            means.push([1.0, 1.0]);
            covs.push([0.0; 3]);
            continue;
        }
        let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..samples {
            let u: f64 = rng.sample(Exp1);
            let g = link.sinr(link.stats.c_nn * u) * d;
            let (v1, v2) = ((-a1 * g).exp(), (-a2 * g).exp());
            s1 += v1;
            s2 += v2;
            s11 += v1 * v1;
            s22 += v2 * v2;
            s12 += v1 * v2;
        }
        let (m1, m2) = (s1 / n, s2 / n);
        let c = |sxy: f64, mx: f64, my: f64| ((sxy - n * mx * my) / (n - 1.0)).max(0.0);
        means.push([m1, m2]);
        covs.push([
            c(s11, m1, m1),
            c(s22, m2, m2),
            (s12 - n * m1 * m2) / (n - 1.0),
        ]);
    }
    let product = |t: usize, skip: Option<usize>| -> f64 {
        means
            .iter()
            .enumerate()
            .filter(|(k, _)| Some(*k) != skip)
            .map(|(_, m)| m[t])
            .product()
    };
    let value = Q_APPROX_WEIGHTS[0] * product(0, None) + Q_APPROX_WEIGHTS[1] * product(1, None);
    let mut var = 0.0;
    for (k, c) in covs.iter().enumerate() {
        let g1 = Q_APPROX_WEIGHTS[0] * product(0, Some(k));
        let g2 = Q_APPROX_WEIGHTS[1] * product(1, Some(k));
        var += g1 * g1 * c[0] + g2 * g2 * c[1] + 2.0 * g1 * g2 * c[2];
    }
    Ok(McEstimate {
        value,
        std_err: (var.max(0.0) / n).sqrt(),
    })
}

/// Stopping rule for the per-RE series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControls {
    /// Stop once a term falls below `tol` times the running sum (past the peak).
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControls {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 50_000,
        }
    }
}

/// Result of a series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOutcome {
    pub value: f64,
    /// Largest number of series terms used by any factor.
    pub terms: usize,
    pub converged: bool,
}

/// Below this `upsilon` the ICI term is negligible and `I = 1 / (1 + a mu)`.
pub const UPSILON_CLOSED_FORM: f64 = 1e-12;

/// Evaluator for `I(a, mu, upsilon)` at a fixed `upsilon`.
///
/// ```text
/// I = 1 - (a/u) e^{(1/2 - a mu)/u} sum_m (a/u)^m / m! (mu/u)^{m/2} mu^{(m+2)/2}
///         W_{-(m+2)/2, (m+1)/2}(1/u)
/// ```
///
/// The Whittaker values do not depend on `a` or `mu`, so they are computed
/// once (lazily, in the log domain) and shared by every factor.
#[derive(Debug, Clone)]
pub struct ReFactorSeries {
    upsilon: f64,
    controls: SeriesControls,
    ln_w: Vec<f64>,
    ln_fact: Vec<f64>,
}

impl ReFactorSeries {
    pub fn new(upsilon: f64, controls: SeriesControls) -> Result<Self> {
        if !(upsilon >= 0.0) || !upsilon.is_finite() {
            return Err(Error::input(format!("upsilon must be >= 0, got {upsilon}")));
        }
        if !(controls.tol > 0.0) || controls.max_terms == 0 {
            return Err(Error::input(
                "series tolerance and term budget must be positive",
            ));
        }
        Ok(Self {
            upsilon,
            controls,
            ln_w: Vec::new(),
            ln_fact: Vec::new(),
        })
    }

    pub fn upsilon(&self) -> f64 {
        self.upsilon
    }

    fn extend_to(&mut self, m: usize) -> Result<()> {
        let z = 1.0 / self.upsilon;
        while self.ln_w.len() <= m {
            let k = self.ln_w.len() as f64;
            self.ln_w
                .push(ln_whittaker_w(-(k + 2.0) / 2.0, (k + 1.0) / 2.0, z)?);
            self.ln_fact.push(ln_gamma(k + 1.0)?);
        }
        Ok(())
    }

    /// `I(a, mu, upsilon)` for one RE.
    pub fn factor(&mut self, a: f64, mu: f64) -> Result<SeriesOutcome> {
        if !(a > 0.0) || !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::input(format!(
                "invalid series arguments a = {a}, mu = {mu}"
            )));
        }
        if mu == 0.0 {
            return Ok(SeriesOutcome {
                value: 1.0,
                terms: 0,
                converged: true,
            });
        }
        let u = self.upsilon;
        if u < UPSILON_CLOSED_FORM {
            return Ok(SeriesOutcome {
                value: 1.0 / (1.0 + a * mu),
                terms: 0,
                converged: true,
            });
        }
        let ln_a_u = (a / u).ln();
        let ln_mu = mu.ln();
        let base = ln_a_u + (0.5 - a * mu) / u + ln_mu;
        let step = ln_a_u + ln_mu - 0.5 * u.ln();
        let mut sum = 0.0;
        let mut prev = 0.0;
        for m in 0..self.controls.max_terms {
            self.extend_to(m)?;
            let t = (base + m as f64 * step - self.ln_fact[m] + self.ln_w[m]).exp();
            sum += t;
            if m > 0 && t <= prev && t < self.controls.tol * sum {
                return Ok(SeriesOutcome {
                    value: (1.0 - sum).max(0.0),
                    terms: m + 1,
                    converged: true,
                });
            }
            prev = t;
        }
        Ok(SeriesOutcome {
            value: (1.0 - sum).max(0.0),
            terms: self.controls.max_terms,
            converged: false,
        })
    }
}

/// Average PEP of one pair over independent Rayleigh REs, via the series.
pub fn pep_series(
    profile: &[f64],
    link: &FadingLink,
    convention: PepConvention,
    controls: SeriesControls,
) -> Result<SeriesOutcome> {
    link.check()?;
    let mut series = ReFactorSeries::new(link.upsilon(), controls)?;
    let mut value = 0.0;
    let mut terms = 0;
    let mut converged = true;
    for (w, a) in Q_APPROX_WEIGHTS.iter().zip(convention.exponents()) {
        let mut prod = *w;
        for &d in profile {
            let f = series.factor(a, link.mu(d))?;
            prod *= f.value;
            terms = terms.max(f.terms);
            converged &= f.converged;
        }
        value += prod;
    }
    Ok(SeriesOutcome {
        value,
        terms,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Direct quadrature of E[exp(-a mu u / (1 + upsilon u))] over u ~ Exp(1),
    // mapped to t in [0, 1) with u = t / (1 - t).
    fn factor_quadrature(a: f64, mu: f64, ups: f64) -> f64 {
        integrate(
            |t| {
                let u = t / (1.0 - t);
                let v = (-u - a * mu * u / (1.0 + ups * u)).exp() / ((1.0 - t) * (1.0 - t));
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            1e-13,
            0.0,
            500,
        )
        .value
    }

    #[test]
    fn series_matches_quadrature() {
        for &(a, mu, ups) in &[
            (0.25, 3.0, 0.2),
            (1.0 / 3.0, 40.0, 0.05),
            (0.125, 0.7, 1.3),
            (0.25, 200.0, 0.4),
        ] {
            let mut s = ReFactorSeries::new(ups, SeriesControls::default()).unwrap();
            let got = s.factor(a, mu).unwrap();
            let want = factor_quadrature(a, mu, ups);
            assert!(got.converged);
            assert!(
                ((got.value - want) / want).abs() < 1e-9,
                "{a} {mu} {ups}: {} vs {want}",
                got.value
            );
        }
    }

    #[test]
    fn tiny_upsilon_uses_closed_form() {
        let mut s = ReFactorSeries::new(0.0, SeriesControls::default()).unwrap();
        let f = s.factor(0.25, 8.0).unwrap();
        assert_eq!(f.value, 1.0 / 3.0);
        assert_eq!(f.terms, 0);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let controls = SeriesControls {
            tol: 1e-12,
            max_terms: 5,
        };
        let mut s = ReFactorSeries::new(0.01, controls).unwrap();
        let f = s.factor(0.25, 100.0).unwrap();
        assert!(!f.converged);
    }

    #[test]
    fn conditional_pep_values() {
        let p = conditional_pep(&[2.0, 0.0], &[9.0, 4.0], PepConvention::CircularNoise).unwrap();
        assert!((p.exact - q_function(3.0)).abs() < 1e-16);
        assert!((p.approx - q_approx(3.0)).abs() < 1e-16);
        let p = conditional_pep(&[4.0], &[9.0], PepConvention::Literal).unwrap();
        assert!((p.exact - q_function(3.0)).abs() < 1e-16);
        assert!(conditional_pep(&[1.0], &[1.0, 2.0], PepConvention::Literal).is_err());
        assert!(conditional_pep(&[-1.0], &[1.0], PepConvention::Literal).is_err());
        assert!(conditional_pep(&[0.0, 0.0], &[1.0, 2.0], PepConvention::Literal).is_err());
        let p = conditional_pep(&[3.0, 1.0], &[0.0, 0.0], PepConvention::CircularNoise).unwrap();
        assert_eq!(p.exact, 0.5);
        assert!((p.approx - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn montecarlo_agrees_with_series() {
        let link = FadingLink {
            stats: IciStats {
                sigma_alpha2: 0.004,
                sigma_beta2: 0.006,
                c_nn: 1.0,
            },
            phi_nn2: 0.99,
            noise_var: 0.02,
        };
        let profile = [0.3, 0.8, 0.0, 1.1];
        let conv = PepConvention::CircularNoise;
        let s = pep_series(&profile, &link, conv, SeriesControls::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mc = pep_montecarlo(&profile, &link, 200_000, conv, &mut rng).unwrap();
        assert!((s.value - mc.value).abs() < 4.0 * mc.std_err);
    }

    #[test]
    fn montecarlo_matches_closed_form_without_cfo() {
        // eps = 0: each exponential averages to 1 / (1 + a mu) on one RE
        let link = FadingLink {
            stats: IciStats {
                sigma_alpha2: 0.0,
                sigma_beta2: 0.0,
                c_nn: 1.0,
            },
            phi_nn2: 1.0,
            noise_var: 0.1,
        };
        let conv = PepConvention::CircularNoise;
        let mu = link.mu(0.8);
        let [a1, a2] = conv.exponents();
        let exact = Q_APPROX_WEIGHTS[0] / (1.0 + a1 * mu) + Q_APPROX_WEIGHTS[1] / (1.0 + a2 * mu);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mc = pep_montecarlo(&[0.8], &link, 100_000, conv, &mut rng).unwrap();
        assert!(
            (mc.value - exact).abs() < 3.0 * mc.std_err,
            "{} vs {exact}",
            mc.value
        );
        let s = pep_series(&[0.8, 0.0, 0.3], &link, conv, SeriesControls::default()).unwrap();
        let mc = pep_montecarlo(&[0.8, 0.0, 0.3], &link, 100_000, conv, &mut rng).unwrap();
        assert!((mc.value - s.value).abs() < 0.01 * s.value);
    }

    #[test]
    fn montecarlo_error_scales_with_samples() {
        let link = FadingLink {
            stats: IciStats {
                sigma_alpha2: 0.01,
                sigma_beta2: 0.01,
                c_nn: 1.0,
            },
            phi_nn2: 0.97,
            noise_var: 0.05,
        };
        let conv = PepConvention::CircularNoise;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(pep_montecarlo(&[1.0], &link, MIN_MC_SAMPLES - 1, conv, &mut rng).is_err());
        let a = pep_montecarlo(&[0.5, 1.0], &link, 40_000, conv, &mut rng).unwrap();
        let b = pep_montecarlo(&[0.5, 1.0], &link, 80_000, conv, &mut rng).unwrap();
        let r = a.std_err / b.std_err;
        assert!((r - 2f64.sqrt()).abs() < 0.1, "{r}");
    }
}
