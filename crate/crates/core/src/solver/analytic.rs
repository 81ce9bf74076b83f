//! Closed-form fully cracked bar on `[-1, 1]` with load `sin(pi x)`.

use std::f64::consts::PI;

pub fn bar_displacement(x: f64) -> f64 {
    let s = (PI * x).sin() / (PI * PI);
    if x < 0.0 {
        s - (1.0 + x) / PI
    } else {
        s + (1.0 - x) / PI
    }
}

pub fn bar_phase(x: f64, l0: f64) -> f64 {
    (-x.abs() / l0).exp()
}

/// `||a - b|| / ||b||` over paired samples.
pub fn relative_l2(approx: &[f64], exact: &[f64]) -> f64 {
    let num: f64 = approx.iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = exact.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

/// Relative L2 errors of `u` and `phi` sampled at `x`.
pub fn bar_errors(x: &[f64], u: &[f64], phi: &[f64], l0: f64) -> (f64, f64) {
    let ue: Vec<f64> = x.iter().map(|&x| bar_displacement(x)).collect();
    let pe: Vec<f64> = x.iter().map(|&x| bar_phase(x, l0)).collect();
    (relative_l2(u, &ue), relative_l2(phi, &pe))
}
