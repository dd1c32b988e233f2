//! Uniform linear array responses.

use std::f64::consts::PI;

use crate::{CVec, C64};

/// Unit-norm ULA steering vector for normalised spatial frequency `theta`:
/// `a[m] = e^{−j2πmθ}/√N`, phase reference at element 0.
pub fn ula_steering(n: usize, theta: f64) -> CVec {
    let s = 1.0 / (n as f64).sqrt();
    CVec::from_fn(n, |m, _| C64::from_polar(s, -2.0 * PI * m as f64 * theta))
}

/// Response of a half-wavelength ULA to a plane wave arriving at `angle`
/// radians from broadside (spatial frequency `sin(angle)/2`).
pub fn ula_response(n: usize, angle: f64) -> CVec {
    ula_steering(n, 0.5 * angle.sin())
}
