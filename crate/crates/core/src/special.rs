//! Complex log-gamma and the map `|r|^2 -> nu`.

use crate::error::{HsError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

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

/// `log Gamma(z)` on the analytic branch that is real on the positive axis
/// and satisfies `lnG(z+1) = lnG(z) + log z` everywhere off the poles.
///
/// Left of `Re z = 1/2` the argument is shifted up by the recurrence rather
/// than reflected, which keeps the branch continuous across the imaginary
/// axis.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(HsError::Domain(format!("log_gamma of non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(HsError::Domain(format!("log_gamma pole at z = {}", z.re)));
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 0.5 {
        shift += w.ln();
        w += 1.0;
    }
    Ok(lanczos(w) - shift)
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

pub fn gamma(z: Complex64) -> Result<Complex64> {
    Ok(log_gamma(z)?.exp())
}

/// `nu = -log(1 - |r|^2) / (2 pi)`.
pub fn nu_of_modulus(r_sq: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r_sq) {
        return Err(HsError::Domain(format!("|r|^2 = {r_sq} outside [0, 1)")));
    }
    Ok(-(-r_sq).ln_1p() / (2.0 * PI))
}

/// Inverse of [`nu_of_modulus`].
pub fn modulus_of_nu(nu: f64) -> f64 {
    -(-2.0 * PI * nu).exp_m1()
}
