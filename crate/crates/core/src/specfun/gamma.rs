use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_78;

/// `ln |Gamma(x)|`. Fails at the poles `x = 0, -1, -2, ...` and for NaN.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("ln_gamma", "argument is NaN"));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::domain("ln_gamma", format!("pole at x = {x}")));
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        let s = (PI * x).sin().abs();
        return Ok((PI / s).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln())
}

/// `Gamma(x)`; overflows to infinity past `x ~ 171.6`.
pub fn gamma(x: f64) -> Result<f64> {
    let lg = ln_gamma(x)?;
    let sign = if x > 0.0 || (x.floor() as i64).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    Ok(sign * lg.exp())
}
