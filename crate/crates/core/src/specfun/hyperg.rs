//! Tricomi's confluent hypergeometric function `U(a, b, x)` and Whittaker's
//! `W_{kappa, mu}(z)` for real parameters and positive argument.
//!
//! For `a > 0` the integral
//!
//! ```text
//! U(a, b, x) = 1/Gamma(a) * int_0^inf exp(-x s) s^(a-1) (1+s)^(b-a-1) ds
//! ```
//!
//! is evaluated by adaptive quadrature around the integrand's peak, scaled
//! by the log of the peak value so that huge and tiny results stay
//! representable in the log domain. Non-positive `a` is reduced to positive
//! `a` by Kummer's transformation or by the stable downward recurrence in `a`.

use super::gamma::ln_gamma;
use super::quad::integrate;
use crate::error::{Error, Result};

const REL_TOL: f64 = 1e-13;
const MAX_INTERVALS: usize = 400;

/// Natural log of `U(a, b, x)` for `a > 0`, `x > 0`, where `U > 0`.
pub fn ln_kummer_u(a: f64, b: f64, x: f64) -> Result<f64> {
    check_args("ln_kummer_u", a, b, x)?;
    if a > 0.0 {
        return ln_u_integral(a, b, x);
    }
    let u = kummer_u(a, b, x)?;
    if u <= 0.0 {
        return Err(Error::domain(
            "ln_kummer_u",
            format!("U({a}, {b}, {x}) = {u} is not positive"),
        ));
    }
    Ok(u.ln())
}

/// `U(a, b, x)` for real `a`, `b` and `x > 0`.
pub fn kummer_u(a: f64, b: f64, x: f64) -> Result<f64> {
    check_args("kummer_u", a, b, x)?;
    if a == 0.0 {
        return Ok(1.0);
    }
    if a > 0.0 {
        return exp_checked("kummer_u", ln_u_integral(a, b, x)?);
    }
    // U(a, b, x) = x^(1-b) U(a-b+1, 2-b, x)
    let a2 = a - b + 1.0;
    if a2 > 0.0 {
        let ln = (1.0 - b) * x.ln() + ln_u_integral(a2, 2.0 - b, x)?;
        return exp_checked("kummer_u", ln);
    }
    if a == a.floor() {
        // U(-n, b, x) is a polynomial; reach it from U(0) = 1 and U(1).
        return recur_down(0.0, 1.0, kummer_u(1.0, b, x)?, -a as usize, b, x);
    }
    // start at a0 in (0, 1] and step down n = a0 - a times
    let steps = (-a).ceil();
    let a0 = a + steps;
    let u0 = kummer_u(a0, b, x)?;
    let u1 = kummer_u(a0 + 1.0, b, x)?;
    recur_down(a0, u0, u1, steps as usize, b, x)
}

// U(a-1) = (2a - b + x) U(a) - a (a - b + 1) U(a+1)
fn recur_down(a0: f64, u0: f64, u1: f64, steps: usize, b: f64, x: f64) -> Result<f64> {
    let (mut a, mut cur, mut next) = (a0, u0, u1);
    for _ in 0..steps {
        let prev = (2.0 * a - b + x) * cur - a * (a - b + 1.0) * next;
        next = cur;
        cur = prev;
        a -= 1.0;
    }
    if !cur.is_finite() {
        return Err(Error::domain("kummer_u", "recurrence overflowed"));
    }
    Ok(cur)
}

/// `ln W_{kappa, mu}(z)` for `z > 0` and `mu - kappa + 1/2 > 0`.
pub fn ln_whittaker_w(kappa: f64, mu: f64, z: f64) -> Result<f64> {
    let a = mu - kappa + 0.5;
    let b = 1.0 + 2.0 * mu;
    check_args("ln_whittaker_w", a, b, z)?;
    Ok(-0.5 * z + (mu + 0.5) * z.ln() + ln_kummer_u(a, b, z)?)
}

/// `W_{kappa, mu}(z) = exp(-z/2) z^(mu + 1/2) U(mu - kappa + 1/2, 1 + 2 mu, z)`.
pub fn whittaker_w(kappa: f64, mu: f64, z: f64) -> Result<f64> {
    let a = mu - kappa + 0.5;
    let b = 1.0 + 2.0 * mu;
    check_args("whittaker_w", a, b, z)?;
    if a > 0.0 {
        return exp_checked("whittaker_w", ln_whittaker_w(kappa, mu, z)?);
    }
    let u = kummer_u(a, b, z)?;
    Ok((-0.5 * z).exp() * z.powf(mu + 0.5) * u)
}

fn check_args(function: &'static str, a: f64, b: f64, x: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && x.is_finite()) {
        return Err(Error::domain(function, "parameters must be finite"));
    }
    if x <= 0.0 {
        return Err(Error::domain(
            function,
            format!("argument must be positive, got {x}"),
        ));
    }
    Ok(())
}

fn exp_checked(function: &'static str, ln: f64) -> Result<f64> {
    if ln > f64::MAX.ln() {
        return Err(Error::domain(
            function,
            format!("result exp({ln}) overflows; use the log-domain variant"),
        ));
    }
    Ok(ln.exp())
}

/// Log of the integrand's shape `(a-1) ln s + (b-a-1) ln(1+s) - x s`.
fn log_kernel(a: f64, b: f64, x: f64, s: f64) -> f64 {
    let mut l = (b - a - 1.0) * s.ln_1p() - x * s;
    if a != 1.0 {
        l += (a - 1.0) * s.ln();
    }
    l
}

fn ln_u_integral(a: f64, b: f64, x: f64) -> Result<f64> {
    let c = b - a - 1.0;
    // stationary point: x s^2 - (b - 2 - x) s - (a - 1) = 0
    let p = b - 2.0 - x;
    let disc = p * p + 4.0 * x * (a - 1.0);
    let mode = if disc >= 0.0 {
        let r = (p + disc.sqrt()) / (2.0 * x);
        if r > 0.0 {
            r
        } else {
            0.0
        }
    } else {
        0.0
    };
    let width = if mode > 0.0 {
        let curv = (a - 1.0) / (mode * mode) + c / ((1.0 + mode) * (1.0 + mode));
        if curv > 0.0 {
            1.0 / curv.sqrt()
        } else {
            1.0 / x
        }
    } else {
        1.0 / (x + (-c).max(0.0))
    };
    let split = if mode > 0.0 {
        mode
    } else if a < 1.0 {
        width
    } else {
        0.0
    };
    let lref = if mode > 0.0 {
        log_kernel(a, b, x, mode)
    } else if a < 1.0 {
        c * width.ln_1p() - x * width
    } else {
        0.0
    };

    let mut total = 0.0;
    let mut converged = true;
    if split > 0.0 {
        let left = if a < 1.0 {
            // s = v^(1/a) absorbs the s^(a-1) singularity: s^(a-1) ds = dv / a
            let vmax = split.powf(a);
            integrate(
                |v| {
                    let s = v.powf(1.0 / a);
                    (c * s.ln_1p() - x * s - lref).exp() / a
                },
                0.0,
                vmax,
                REL_TOL,
                0.0,
                MAX_INTERVALS,
            )
        } else {
            integrate(
                |s| (log_kernel(a, b, x, s) - lref).exp(),
                0.0,
                split,
                REL_TOL,
                0.0,
                MAX_INTERVALS,
            )
        };
        total += left.value;
        converged &= left.converged;
    }
    let tail = integrate(
        |t| {
            let u = t / (1.0 - t);
            let s = split + width * u;
            if !s.is_finite() {
                return 0.0;
            }
            let jac = width / ((1.0 - t) * (1.0 - t));
            let v = (log_kernel(a, b, x, s) - lref).exp() * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        REL_TOL,
        0.0,
        MAX_INTERVALS,
    );
    total += tail.value;
    converged &= tail.converged;
    if !converged {
        log::debug!("U({a}, {b}, {x}): quadrature hit its interval budget");
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::domain(
            "kummer_u",
            format!("integral evaluation failed for a = {a}, b = {b}, x = {x}"),
        ));
    }
    Ok(lref + total.ln() - ln_gamma(a)?)
}
