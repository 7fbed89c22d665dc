//! Plain f64 reference computations used as independent oracles.
#![allow(dead_code)]

use std::f64::consts::TAU;

use num_complex::Complex64;

/// `sum_{k<n} ln|1 - m e^{2 pi i (angle + (beta + k) theta)}|` by direct
/// complex arithmetic.
pub fn naive_log_poch(modulus: f64, angle: f64, beta: f64, theta: f64, n: u64) -> f64 {
    (0..n)
        .map(|k| {
            let ph = angle + (beta + k as f64) * theta;
            (Complex64::new(1.0, 0.0) - Complex64::from_polar(modulus, TAU * ph.fract())).norm().ln()
        })
        .sum()
}

/// `min_{1 <= m <= big_m} m ||m theta||` and its argmin, in f64.
pub fn naive_min_scan(theta: f64, big_m: u64) -> (f64, u64) {
    let mut best = (f64::INFINITY, 0);
    for m in 1..=big_m {
        let x = m as f64 * theta;
        let v = m as f64 * (x - x.round()).abs();
        if v < best.0 {
            best = (v, m);
        }
    }
    best
}

/// `int_0^1 ln|1 - r e^{2 pi i x}| dx` by the midpoint rule.
pub fn midpoint_integral(r: f64, panels: usize) -> f64 {
    let h = 1.0 / panels as f64;
    (0..panels)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            (Complex64::new(1.0, 0.0) - Complex64::from_polar(r, TAU * x)).norm().ln()
        })
        .sum::<f64>()
        * h
}
