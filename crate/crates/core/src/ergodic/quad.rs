//! Adaptive Gauss-Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};
use crate::exactnum::EPS;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights at `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 4000;

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    abs: f64,
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        kron += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Panel {
        a,
        b,
        value: kron * h,
        err: ((kron - gauss) * h).abs(),
        abs: abs * h.abs(),
    }
}

/// `int_a^b f` with the summed panel estimates `|K15 - G7|` as error.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut panels = vec![panel(&f, a, b)];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let abs: f64 = panels.iter().map(|p| p.abs).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum::<f64>() + 50.0 * EPS * abs;
        if !value.is_finite() {
            return Err(Error::NoConvergence {
                estimate: value,
                error: f64::INFINITY,
            });
        }
        if err <= tol {
            return Ok((value, err));
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::NoConvergence { estimate: value, error: err });
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("nonempty");
        let p = panels.swap_remove(i);
        let m = 0.5 * (p.a + p.b);
        panels.push(panel(&f, p.a, m));
        panels.push(panel(&f, m, p.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_log() {
        let (v, e) = integrate(|x| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12 && e < 1e-12);
        let (v, _) = integrate(|x: f64| x.ln(), 0.0, 1.0, 1e-9).unwrap();
        assert!((v + 1.0).abs() < 1e-8);
    }
}
