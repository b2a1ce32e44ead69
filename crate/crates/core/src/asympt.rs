//! Parabolic-cylinder coefficients and the leading-order long-time
//! asymptotics in the two space-time regions.

use crate::error::{HsError, Result};
use crate::scattering::{ReflectionInterp, ScatteringData};
use crate::singular::{beta_at_stationary, delta1, BetaValue, NuTable, Point};
use crate::special::log_gamma;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;

pub const XI_MIN: f64 = 0.02;
pub const DEFAULT_P: f64 = 3.0;
pub const DEGENERATE_R: f64 = 1e-12;
pub const PINNING_TOL: f64 = 1e-4;
pub const LOG_BRANCHES: [i32; 5] = [-2, -1, 0, 1, 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryData {
    pub xi: f64,
    pub k1: f64,
    pub k2: f64,
    pub rho0: f64,
}

pub fn stationary_points(xi: f64) -> Result<StationaryData> {
    if !(xi < 0.0) {
        return Err(HsError::Domain(format!("no stationary points for xi = {xi} >= 0")));
    }
    let rho0 = (-1.0 / (2.0 * xi)).sqrt();
    Ok(StationaryData {
        xi,
        k1: -rho0,
        k2: rho0,
        rho0,
    })
}

/// `theta(xi, k) = k xi - 1/(2k)`.
pub fn phase_theta(xi: f64, k: f64) -> Result<f64> {
    if k == 0.0 {
        return Err(HsError::Domain("theta is singular at k = 0".into()));
    }
    Ok(k * xi - 1.0 / (2.0 * k))
}

pub fn phase_theta_complex(xi: f64, k: C) -> C {
    k * xi - 0.5 / k
}

/// Model-problem coefficients at one stationary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcCoefficients {
    pub r_tilde: C,
    pub beta12: C,
    pub beta21: C,
    /// `n` in `Log(-4 t k_j^-3) = ln|.| + i n pi`.
    pub log_branch: i32,
    /// `| |beta12|^2 - nu_j |` for the chosen branch.
    pub modulus_residual: f64,
}

impl PcCoefficients {
    fn zero() -> Self {
        Self {
            r_tilde: C::new(0.0, 0.0),
            beta12: C::new(0.0, 0.0),
            beta21: C::new(0.0, 0.0),
            log_branch: 0,
            modulus_residual: 0.0,
        }
    }
}

fn pc_for_branch(j: Point, k_j: f64, r_kj: C, nu_j: f64, beta_j: C, t: f64, n: i32) -> Result<PcCoefficients> {
    let arg = -4.0 * t / (k_j * k_j * k_j);
    let log = C::new(arg.abs().ln(), PI * n as f64);
    let r_tilde = r_kj * (-2.0 * C::i() * (beta_j + t / k_j)).exp() * (C::i() * nu_j * log).exp();
    let sqrt2pi = (2.0 * PI).sqrt();
    let beta12 = match j {
        Point::K1 => {
            let g = log_gamma(C::new(0.0, -nu_j))?.exp();
            sqrt2pi * (-PI * nu_j / 2.0).exp() * C::from_polar(1.0, PI / 4.0) / (r_tilde * g)
        }
        Point::K2 => {
            let g = log_gamma(C::new(0.0, nu_j))?.exp();
            sqrt2pi * (3.0 * PI * nu_j / 2.0).exp() * C::from_polar(1.0, 3.0 * PI / 4.0) / (r_tilde * g)
        }
    };
    let beta21 = nu_j / beta12;
    Ok(PcCoefficients {
        r_tilde,
        beta12,
        beta21,
        log_branch: n,
        modulus_residual: (beta12.norm_sqr() - nu_j).abs(),
    })
}

/// Coefficients at `k_j`, with the branch of the logarithm chosen by the
/// modulus identity `|beta12|^2 = nu_j`.
pub fn pc_coefficients(j: Point, k_j: f64, r_kj: C, nu_j: f64, beta_j: C, t: f64) -> Result<PcCoefficients> {
    if !(t > 0.0) {
        return Err(HsError::Domain(format!("t must be positive, got {t}")));
    }
    if r_kj.norm() < DEGENERATE_R || nu_j == 0.0 {
        return Ok(PcCoefficients::zero());
    }
    let mut cands = LOG_BRANCHES
        .iter()
        .map(|&n| pc_for_branch(j, k_j, r_kj, nu_j, beta_j, t, n))
        .collect::<Result<Vec<_>>>()?;
    cands.sort_by(|a, b| a.modulus_residual.total_cmp(&b.modulus_residual));
    let best = cands[0];
    if best.modulus_residual > PINNING_TOL {
        return Err(HsError::Fault(format!(
            "log branch pinning failed at {j:?}: best | |beta12|^2 - nu | = {:.3e} (n = {}), nu = {nu_j:.3e}",
            best.modulus_residual, best.log_branch
        )));
    }
    // neighbouring branches scale |beta12|^2 by e^{+-2 pi nu}, so compare
    // residuals relative to nu
    let rel = |c: &PcCoefficients| c.modulus_residual / nu_j;
    if !(rel(&cands[1]) > 1e-6 && rel(&cands[1]) > 100.0 * rel(&best)) {
        return Err(HsError::Fault(format!(
            "log branch pinning ambiguous at {j:?}: n = {} and n = {} both satisfy the modulus identity",
            best.log_branch, cands[1].log_branch
        )));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FCoefficients {
    pub f11: C,
    pub f12: C,
    pub f21: C,
    pub f22: C,
    pub f_hat: C,
}

pub fn f_coefficients(delta1: f64, st: &StationaryData, beta21: [C; 2], beta12: [C; 2]) -> FCoefficients {
    let k = [st.k1, st.k2];
    let sum = |b: &[C; 2], p: i32| b[0] / k[0].powi(p) + b[1] / k[1].powi(p);
    let i = C::i();
    let f11 = delta1 * sum(&beta21, 1) + i * sum(&beta21, 2);
    let f12 = delta1 * sum(&beta12, 1) - i * sum(&beta12, 2);
    let d2 = delta1 * delta1;
    let f21 = 0.5 * i * d2 * sum(&beta21, 1) - delta1 * sum(&beta21, 2) - i * sum(&beta21, 3);
    let f22 = 0.5 * i * d2 * sum(&beta12, 1) - delta1 * sum(&beta12, 2) + i * sum(&beta12, 3);
    let f_hat = -(st.rho0.powf(1.5) / 2.0) * (i * delta1 * (f12 - f11) + f21 + f22);
    FCoefficients { f11, f12, f21, f22, f_hat }
}

/// Every scalar of the slow-region asymptotics for one `(xi, t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlowRegionCoefficients {
    pub xi: f64,
    pub t: f64,
    pub stationary: StationaryData,
    pub nu1: f64,
    pub nu2: f64,
    pub delta1: f64,
    pub delta1_imag: f64,
    pub beta1: BetaValue,
    pub beta2: BetaValue,
    pub r1: C,
    pub r2: C,
    pub pc1: PcCoefficients,
    pub pc2: PcCoefficients,
    pub f: FCoefficients,
}

impl SlowRegionCoefficients {
    /// `|Im f_hat| / |f_hat|` (zero when `f_hat` vanishes).
    pub fn f_hat_imag_ratio(&self) -> f64 {
        let n = self.f.f_hat.norm();
        if n == 0.0 {
            0.0
        } else {
            self.f.f_hat.im.abs() / n
        }
    }

    pub fn f11_imag_ratio(&self) -> f64 {
        let n = self.f.f11.norm();
        if n == 0.0 {
            0.0
        } else {
            self.f.f11.im.abs() / n
        }
    }
}

/// Scattering data prepared for repeated asymptotic evaluation.
#[derive(Debug, Clone)]
pub struct Asymptotics {
    pub data: ScatteringData,
    reflection: ReflectionInterp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSample {
    pub y: f64,
    pub t: f64,
    pub xi: f64,
    pub u_leading: f64,
    pub x_of_y: f64,
    pub error_scale: f64,
}

impl Asymptotics {
    pub fn new(data: ScatteringData) -> Self {
        let reflection = data.reflection();
        Self { data, reflection }
    }

    pub fn reflection_at(&self, k: f64) -> C {
        self.reflection.eval(k)
    }

    pub fn coefficients(&self, xi: f64, t: f64) -> Result<SlowRegionCoefficients> {
        let st = stationary_points(xi)?;
        let table = NuTable::from_scattering(&self.data, st.rho0)?;
        let d1 = delta1(&table);
        let b1 = beta_at_stationary(&table, Point::K1)?;
        let b2 = beta_at_stationary(&table, Point::K2)?;
        let r1 = self.reflection_at(st.k1);
        let r2 = self.reflection_at(st.k2);
        let pc1 = pc_coefficients(Point::K1, st.k1, r1, b1.nu_j, b1.value, t)?;
        let pc2 = pc_coefficients(Point::K2, st.k2, r2, b2.nu_j, b2.value, t)?;
        let f = f_coefficients(d1.delta1, &st, [pc1.beta21, pc2.beta21], [pc1.beta12, pc2.beta12]);
        Ok(SlowRegionCoefficients {
            xi,
            t,
            stationary: st,
            nu1: b1.nu_j,
            nu2: b2.nu_j,
            delta1: d1.delta1,
            delta1_imag: d1.delta1_imag,
            beta1: b1,
            beta2: b2,
            r1,
            r2,
            pc1,
            pc2,
            f,
        })
    }

    pub fn leading_order(&self, y: f64, t: f64, p: f64) -> Result<AsymptoticSample> {
        Ok(self.leading_order_with_coefficients(y, t, p)?.0)
    }

    pub fn leading_order_with_coefficients(
        &self,
        y: f64,
        t: f64,
        p: f64,
    ) -> Result<(AsymptoticSample, Option<SlowRegionCoefficients>)> {
        if !(t > 0.0) {
            return Err(HsError::Domain(format!("t must be positive, got {t}")));
        }
        if !(p > 2.0) {
            return Err(HsError::Domain(format!("p must exceed 2, got {p}")));
        }
        let xi = y / t;
        if xi.abs() < XI_MIN {
            return Err(HsError::Transition {
                xi_abs: xi.abs(),
                xi_min: XI_MIN,
            });
        }
        if xi > 0.0 {
            let s = AsymptoticSample {
                y,
                t,
                xi,
                u_leading: 0.0,
                x_of_y: y,
                error_scale: t.powf(-0.5),
            };
            return Ok((s, None));
        }
        let co = self.coefficients(xi, t)?;
        let st = t.powf(-0.5);
        let s = AsymptoticSample {
            y,
            t,
            xi,
            u_leading: co.f.f_hat.re * st,
            x_of_y: y - co.delta1 / 2.0 + co.stationary.rho0.powf(1.5) / 2.0 * co.f.f11.re * st,
            error_scale: t.powf(-1.0 + 1.0 / (2.0 * p)),
        };
        Ok((s, Some(co)))
    }

    /// Samples along `y_grid` at fixed `t`, skipping the transition band.
    /// The resulting `x` must be increasing.
    pub fn curve(&self, t: f64, y_grid: &[f64], p: f64) -> Result<Vec<AsymptoticSample>> {
        let mut out = Vec::with_capacity(y_grid.len());
        for &y in y_grid {
            match self.leading_order(y, t, p) {
                Ok(s) => out.push(s),
                Err(HsError::Transition { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        if let Some(w) = out.windows(2).find(|w| !(w[1].x_of_y > w[0].x_of_y)) {
            return Err(HsError::Fault(format!(
                "asymptotic x(y) not increasing between y = {} and y = {}",
                w[0].y, w[1].y
            )));
        }
        Ok(out)
    }
}

pub fn leading_order(data: &ScatteringData, y: f64, t: f64, p: f64) -> Result<AsymptoticSample> {
    Asymptotics::new(data.clone()).leading_order(y, t, p)
}

pub fn asymptotic_curve(data: &ScatteringData, t: f64, y_grid: &[f64], p: f64) -> Result<Vec<AsymptoticSample>> {
    Asymptotics::new(data.clone()).curve(t, y_grid, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::modulus_of_nu;

    #[test]
    fn stationary_point_values() {
        let s = stationary_points(-0.5).unwrap();
        assert_eq!((s.k1, s.k2, s.rho0), (-1.0, 1.0, 1.0));
        assert_eq!(stationary_points(-2.0).unwrap().rho0, 0.5);
        assert_eq!(stationary_points(-0.125).unwrap().rho0, 2.0);
        assert!(stationary_points(0.0).is_err());
        for xi in [-0.03, -0.3, -1.7, -9.0] {
            let s = stationary_points(xi).unwrap();
            for k in [s.k1, s.k2] {
                assert!((-1.0 / (2.0 * k * k) - xi).abs() <= 4.0 * f64::EPSILON * xi.abs());
                assert!((phase_theta(xi, k).unwrap() + 1.0 / k).abs() < 1e-14 * (1.0 / k).abs().max(1.0));
            }
        }
    }

    #[test]
    fn theta_values_and_sign() {
        assert_eq!(phase_theta(-0.5, 1.0).unwrap(), -1.0);
        assert!(phase_theta(1.0, 0.0).is_err());
        for xi in [-0.5, 0.5] {
            for k in [C::new(0.3, 0.2), C::new(-1.5, 0.7), C::new(2.0, 0.05)] {
                assert!(phase_theta_complex(xi, k).im > xi * k.im);
            }
        }
    }

    #[test]
    fn degenerate_point_gives_zero() {
        let pc = pc_coefficients(Point::K1, -1.0, C::new(0.0, 0.0), 0.0, C::new(0.0, 0.0), 10.0).unwrap();
        assert_eq!(pc.beta12, C::new(0.0, 0.0));
        assert_eq!(pc.r_tilde, C::new(0.0, 0.0));
    }

    #[test]
    fn unit_nu_gives_unit_beta12() {
        let r = C::new(modulus_of_nu(1.0).sqrt(), 0.0);
        let pc = pc_coefficients(Point::K1, -1.0, r, 1.0, C::new(0.0, 0.0), 1.0).unwrap();
        assert!((pc.beta12.norm() - 1.0).abs() < 1e-10);
        assert!((pc.beta12 * pc.beta21 - 1.0).norm() < 1e-14);
        // r~ = |r| e^{2i} e^{i nu ln 4}
        let expected = r * C::from_polar(1.0, 2.0) * C::from_polar(1.0, 4f64.ln());
        assert!((pc.r_tilde - expected).norm() < 1e-14);
    }

    #[test]
    fn second_point_pins_real_log() {
        // with Im beta2 = pi nu2 the modulus identity selects n = 0
        let nu = 0.3;
        let r = C::from_polar(modulus_of_nu(nu).sqrt(), 0.4);
        let beta = C::new(0.2, PI * nu);
        let pc = pc_coefficients(Point::K2, 1.0, r, nu, beta, 50.0).unwrap();
        assert_eq!(pc.log_branch, 0);
        assert!(pc.modulus_residual < 1e-12);
    }

    #[test]
    fn f_coefficient_spot_values() {
        let st = stationary_points(-0.5).unwrap();
        let zero = [C::new(0.0, 0.0); 2];
        let f = f_coefficients(0.3, &st, zero, zero);
        assert_eq!(f.f_hat, C::new(0.0, 0.0));
        let i = C::i();
        let f = f_coefficients(1.0, &st, [i, i], [-i, -i]);
        assert!((f.f11 - C::new(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn order_one_terms_cancel() {
        // i d1 (-i d1) from i d1 (f12 - f11) against -d1^2/2 from each of
        // f21, f22, with the beta sums set to one
        let d1 = 0.37;
        let i = C::i();
        let total = i * d1 * (-i * d1) + (-(d1 * d1) / 2.0) + (-(d1 * d1) / 2.0);
        assert_eq!(total, C::new(0.0, 0.0));
    }

    #[test]
    fn fast_region_and_transition() {
        let data = ScatteringData {
            k: vec![-8.0, -1.0, 1.0, 8.0],
            a: vec![C::new(1.0, 0.0); 4],
            b: vec![C::new(0.0, 0.0); 4],
            r: vec![C::new(0.0, 0.0); 4],
            c: 0.0,
            c0: 0.0,
        };
        let s = leading_order(&data, 50.0, 100.0, 3.0).unwrap();
        assert_eq!((s.u_leading, s.x_of_y, s.error_scale), (0.0, 50.0, 0.1));
        assert!(matches!(leading_order(&data, 1.0, 100.0, 3.0), Err(HsError::Transition { .. })));
        let s = leading_order(&data, -50.0, 100.0, 3.0).unwrap();
        assert_eq!((s.u_leading, s.x_of_y), (0.0, -50.0));
        let curve = asymptotic_curve(&data, 100.0, &[-60.0, -40.0, -1.0, 0.5, 30.0], 3.0).unwrap();
        assert_eq!(curve.len(), 3);
        assert!(curve.iter().all(|s| s.x_of_y == s.y && s.u_leading == 0.0));
    }
}
