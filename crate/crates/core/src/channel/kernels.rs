//! Angular and delay-Doppler smoothing kernels of the virtual channel model.

use std::f64::consts::PI;

use crate::C64;

/// Dirichlet kernel `f_N(θ) = (1/N) Σ_{a=0}^{N−1} e^{−j2πaθ}`.
///
/// Evaluated in closed form, `e^{−jπ(N−1)θ} sin(πNθ) / (N sin(πθ))`, except
/// near integer θ where the direct sum is used.
pub fn dirichlet_kernel(n: usize, theta: f64) -> C64 {
    assert!(n >= 1, "Dirichlet kernel needs N ≥ 1");
    let den = (PI * theta).sin();
    if den.abs() < 1e-3 {
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..n {
            acc += C64::from_polar(1.0, -2.0 * PI * a as f64 * theta);
        }
        return acc / n as f64;
    }
    let mag = (PI * n as f64 * theta).sin() / (n as f64 * den);
    C64::from_polar(1.0, -PI * (n as f64 - 1.0) * theta) * mag
}

/// Normalised sinc, `sin(πx)/(πx)` with value 1 at 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Two-dimensional kernel `e^{−jπx} sin(πx) sin(πy) / (π² x y)`, with the
/// removable singularities on the axes filled by their limits.
pub fn sinc2d(x: f64, y: f64) -> C64 {
    C64::from_polar(1.0, -PI * x) * (sinc(x) * sinc(y))
}
