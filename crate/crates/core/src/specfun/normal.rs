use std::f64::consts::SQRT_2;

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Two-exponential approximation `exp(-x^2/2)/12 + exp(-2x^2/3)/4` of `Q(x)`.
pub fn q_approx(x: f64) -> f64 {
    let x2 = x * x;
    (-0.5 * x2).exp() / 12.0 + (-2.0 * x2 / 3.0).exp() / 4.0
}
