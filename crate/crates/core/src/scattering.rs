//! Jost solutions of the x-part of the Lax pair and the scattering data
//! `a(k)`, `b(k)`, `r(k)`.
//!
//! The ODE `Phi_x + ik q [sigma3, Phi] = U sigma1 Phi`, `q = sqrt(m+1)`,
//! `U = m_x / (4(m+1))`, is integrated in the interaction picture
//! `W = e^{ikp sigma3} Phi e^{-ikp sigma3}` with `p' = q`, which leaves
//! `W' = U [[0, e^{2ikp}], [e^{-2ikp}, 0]] W`. The coefficient lies in
//! su(1,1), so the fourth-order Magnus propagator with an exact 2x2
//! exponential keeps `det W = 1` and `|a|^2 - |b|^2 = 1` to rounding.

use crate::error::{HsError, Result};
use crate::field::{sqrt1p_minus1, DiffMethod, InitialProfile, SpatialGrid};
use crate::numerics::diff::{fd4_first, spectral_derivative};
use crate::numerics::interp::{lagrange_uniform, CubicSpline};
use crate::numerics::quad::cumulative_from_right;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

type C = Complex64;
type Mat = [[C; 2]; 2];

const I2: Mat = [
    [C::new(1.0, 0.0), C::new(0.0, 0.0)],
    [C::new(0.0, 0.0), C::new(1.0, 0.0)],
];

// Gauss-Legendre nodes of the 2-point rule on [0, 1].
const G1: f64 = 0.5 - 0.288_675_134_594_812_9;
const G2: f64 = 0.5 + 0.288_675_134_594_812_9;
const SQRT3_12: f64 = 0.144_337_567_297_406_44;

const INTERP_POINTS: usize = 6;

/// Coefficients of the x-ODE sampled on the grid, plus their values at the
/// two Gauss points of every cell.
#[derive(Debug, Clone)]
pub struct Potential {
    pub grid: SpatialGrid,
    pub q: Vec<f64>,
    pub u_coef: Vec<f64>,
    /// `tail(x) = int_x^L (q - 1)`; the phase primitive is `p = x - tail`.
    pub tail: Vec<f64>,
    gauss_u: Vec<[f64; 2]>,
    gauss_p: Vec<[f64; 2]>,
}

impl Potential {
    pub fn new(m: &[f64], grid: &SpatialGrid, method: DiffMethod) -> Result<Self> {
        if m.len() != grid.node_count {
            return Err(HsError::Domain("sample count does not match grid".into()));
        }
        if let Some(i) = m.iter().position(|&v| !(v + 1.0 > 0.0)) {
            return Err(HsError::Domain(format!(
                "m + 1 <= 0 at x = {}; the Lax pair is singular",
                grid.node(i)
            )));
        }
        let h = grid.spacing();
        let m_x = match method {
            DiffMethod::Spectral => spectral_derivative(m, h, 1),
            DiffMethod::FiniteDifference4 => fd4_first(m, h),
        };
        let q: Vec<f64> = m.iter().map(|v| (1.0 + v).sqrt()).collect();
        let u_coef: Vec<f64> = m.iter().zip(&m_x).map(|(m, mx)| mx / (4.0 * (1.0 + m))).collect();
        let g: Vec<f64> = m.iter().map(|&v| sqrt1p_minus1(v)).collect();
        let tail = cumulative_from_right(&g, h);
        let mut pot = Self {
            grid: *grid,
            q,
            u_coef,
            tail,
            gauss_u: Vec::new(),
            gauss_p: Vec::new(),
        };
        let cells = grid.node_count - 1;
        pot.gauss_u = (0..cells)
            .map(|i| {
                let x = grid.node(i);
                [pot.u_at(x + G1 * h), pot.u_at(x + G2 * h)]
            })
            .collect();
        pot.gauss_p = (0..cells)
            .map(|i| {
                let x = grid.node(i);
                [pot.p_at(x + G1 * h), pot.p_at(x + G2 * h)]
            })
            .collect();
        Ok(pot)
    }

    pub fn from_profile(profile: &InitialProfile) -> Result<Self> {
        Self::new(&profile.m0, &profile.grid, profile.method)
    }

    fn x0(&self) -> f64 {
        -self.grid.half_width
    }

    pub fn u_at(&self, x: f64) -> f64 {
        lagrange_uniform(&self.u_coef, self.x0(), self.grid.spacing(), x, INTERP_POINTS)
    }

    pub fn tail_at(&self, x: f64) -> f64 {
        lagrange_uniform(&self.tail, self.x0(), self.grid.spacing(), x, INTERP_POINTS)
    }

    /// Phase primitive `p(x) = x - int_x^L (q - 1)`, i.e. the t = 0 value of y.
    pub fn p_at(&self, x: f64) -> f64 {
        x - self.tail_at(x)
    }

    /// `c = int (q - 1)` over the grid.
    pub fn total_shift(&self) -> f64 {
        self.tail[0]
    }

    /// `c0 = int_0^L (q - 1)`.
    pub fn half_shift(&self) -> f64 {
        self.tail_at(0.0)
    }

    pub fn is_trivial(&self) -> bool {
        self.u_coef.iter().all(|&v| v == 0.0)
    }
}

/// `H(x) = int_x^L sqrt(m+1)` on the grid nodes.
pub fn phase_primitive(pot: &Potential) -> Vec<f64> {
    let l = pot.grid.half_width;
    (0..pot.grid.node_count)
        .map(|i| (l - pot.grid.node(i)) + pot.tail[i])
        .collect()
}

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let mut c = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `exp(O)` for traceless 2x2 `O`: `cosh(s) I + sinh(s)/s O`, `s^2 = -det O`.
fn expm_traceless(o: &Mat) -> Mat {
    let s2 = o[0][0] * o[0][0] + o[0][1] * o[1][0];
    let (ch, sh) = if s2.norm() < 1e-8 {
        (
            1.0 + s2 / 2.0 + s2 * s2 / 24.0,
            1.0 + s2 / 6.0 + s2 * s2 / 120.0,
        )
    } else {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    };
    [
        [ch + sh * o[0][0], sh * o[0][1]],
        [sh * o[1][0], ch + sh * o[1][1]],
    ]
}

fn coef(u: f64, p: f64, k: f64) -> (C, C) {
    let e = C::from_polar(1.0, 2.0 * k * p);
    (u * e, u * e.conj())
}

/// Magnus step of length `hs` (signed) given the coefficient at the two Gauss
/// points in the direction of travel.
fn magnus_step(k: f64, hs: f64, g1: (f64, f64), g2: (f64, f64)) -> Mat {
    let (b1_12, b1_21) = coef(g1.0, g1.1, k);
    let (b2_12, b2_21) = coef(g2.0, g2.1, k);
    // [B2, B1] for off-diagonal B is diagonal: diag(x, -x), x = b2_12 b1_21 - b1_12 b2_21
    let comm = b2_12 * b1_21 - b1_12 * b2_21;
    let d = SQRT3_12 * hs * hs * comm;
    let o = [
        [d, 0.5 * hs * (b1_12 + b2_12)],
        [0.5 * hs * (b1_21 + b2_21), -d],
    ];
    expm_traceless(&o)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    FromLeft,
    FromRight,
}

/// Interaction-picture propagation from the starting end to node `stop`
/// (inclusive), recording `W` at every node passed.
fn sweep(pot: &Potential, k: f64, side: Side, stop: usize, record: bool) -> (Mat, Vec<Mat>) {
    let h = pot.grid.spacing();
    let n = pot.grid.node_count;
    let mut w = I2;
    let mut traj = Vec::new();
    match side {
        Side::FromLeft => {
            if record {
                traj.push(w);
            }
            for i in 0..stop {
                let g = (pot.gauss_u[i], pot.gauss_p[i]);
                let step = magnus_step(k, h, (g.0[0], g.1[0]), (g.0[1], g.1[1]));
                w = mat_mul(&step, &w);
                if record {
                    traj.push(w);
                }
            }
        }
        Side::FromRight => {
            if record {
                traj.push(w);
            }
            for i in (stop..n - 1).rev() {
                let g = (pot.gauss_u[i], pot.gauss_p[i]);
                let step = magnus_step(k, -h, (g.0[1], g.1[1]), (g.0[0], g.1[0]));
                w = mat_mul(&step, &w);
                if record {
                    traj.push(w);
                }
            }
            traj.reverse();
        }
    }
    (w, traj)
}

/// Single Magnus step between arbitrary points `xa -> xb`.
fn partial_step(pot: &Potential, k: f64, xa: f64, xb: f64) -> Mat {
    let hs = xb - xa;
    if hs == 0.0 {
        return I2;
    }
    let t1 = xa + G1 * hs;
    let t2 = xa + G2 * hs;
    magnus_step(k, hs, (pot.u_at(t1), pot.p_at(t1)), (pot.u_at(t2), pot.p_at(t2)))
}

/// `W` of the Jost solution normalized at the `side` end, evaluated at `x`.
fn jost_w_at(pot: &Potential, k: f64, side: Side, x: f64) -> Mat {
    let grid = &pot.grid;
    let h = grid.spacing();
    let s = ((x + grid.half_width) / h).clamp(0.0, (grid.node_count - 1) as f64);
    match side {
        Side::FromLeft => {
            let i = s.floor() as usize;
            let (w, _) = sweep(pot, k, side, i, false);
            mat_mul(&partial_step(pot, k, grid.node(i), x), &w)
        }
        Side::FromRight => {
            let i = s.ceil() as usize;
            let (w, _) = sweep(pot, k, side, i, false);
            mat_mul(&partial_step(pot, k, grid.node(i), x), &w)
        }
    }
}

fn w_to_phi(w: &Mat, k: f64, p: f64) -> Mat {
    let e = C::from_polar(1.0, 2.0 * k * p);
    [[w[0][0], w[0][1] * e.conj()], [w[1][0] * e, w[1][1]]]
}

/// Jost solution on every grid node.
#[derive(Debug, Clone)]
pub struct JostTrajectory {
    pub k: f64,
    pub side: Side,
    pub values: Vec<Mat>,
}

impl JostTrajectory {
    pub fn max_det_error(&self) -> f64 {
        self.values
            .iter()
            .map(|m| (m[0][0] * m[1][1] - m[0][1] * m[1][0] - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

pub const DET_TOL: f64 = 1e-6;

pub fn jost_solve(pot: &Potential, k: f64, side: Side) -> Result<JostTrajectory> {
    let n = pot.grid.node_count;
    let stop = match side {
        Side::FromLeft => n - 1,
        Side::FromRight => 0,
    };
    let (_, w) = sweep(pot, k, side, stop, true);
    let values: Vec<Mat> = w
        .iter()
        .enumerate()
        .map(|(i, w)| w_to_phi(w, k, pot.grid.node(i) - pot.tail[i]))
        .collect();
    let traj = JostTrajectory { k, side, values };
    let det = traj.max_det_error();
    if !(det <= DET_TOL) {
        return Err(HsError::Scattering {
            k,
            reason: format!("determinant drift {det:.3e}"),
        });
    }
    Ok(traj)
}

/// Scattering coefficients at one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringPoint {
    pub k: f64,
    pub a: C,
    pub b: C,
    pub r: C,
}

/// Same quantities evaluated through the column Wronskians, used as a
/// consistency check on the bilinear formulas.
#[derive(Debug, Clone, Copy)]
pub struct WronskianCheck {
    pub a: C,
    pub b: C,
}

pub const DEFAULT_EVAL_POINT: f64 = 0.0;
pub const A_FLOOR: f64 = 1e-8;

fn coefficients(wl: &Mat, wr: &Mat) -> (C, C) {
    // Both expressions are x-independent: the first is the su(1,1)-invariant
    // pairing of the two first columns, the second their determinant.
    let a = wl[0][0] * wr[0][0].conj() - wl[1][0] * wr[1][0].conj();
    let b_bar = wl[0][0] * wr[1][0] - wl[1][0] * wr[0][0];
    (a, b_bar.conj())
}

/// `(a, b, r)` with both Jost solutions matched at `x_eval`.
pub fn scattering_at_point(pot: &Potential, k: f64, x_eval: f64) -> Result<(ScatteringPoint, WronskianCheck)> {
    let wl = jost_w_at(pot, k, Side::FromLeft, x_eval);
    let wr = jost_w_at(pot, k, Side::FromRight, x_eval);
    let (a, b) = coefficients(&wl, &wr);
    if !(a.norm() >= A_FLOOR) {
        return Err(HsError::Scattering {
            k,
            reason: format!("|a| = {:.3e} below floor", a.norm()),
        });
    }
    let r = -b.conj() / a;
    let wa = wl[0][0] * wr[1][1] - wl[1][0] * wr[0][1];
    let wb = wr[0][1] * wl[1][1] - wr[1][1] * wl[0][1];
    Ok((ScatteringPoint { k, a, b, r }, WronskianCheck { a: wa, b: wb }))
}

pub fn scattering_at(pot: &Potential, k: f64) -> Result<ScatteringPoint> {
    Ok(scattering_at_point(pot, k, DEFAULT_EVAL_POINT)?.0)
}

/// Symmetric spectral grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    pub k: Vec<f64>,
}

pub const DEFAULT_K_COUNT: usize = 1024;
pub const DEFAULT_K_MAX: f64 = 8.0;

impl KGrid {
    /// `count` cell-centred points on `[-k_max, k_max]`; zero is excluded for
    /// even counts and included for odd ones.
    pub fn symmetric(count: usize, k_max: f64) -> Result<Self> {
        if count < 2 || !(k_max > 0.0) {
            return Err(HsError::Domain("k-grid needs two or more points and k_max > 0".into()));
        }
        let dk = 2.0 * k_max / count as f64;
        let k = (0..count).map(|j| -k_max + (j as f64 + 0.5) * dk).collect();
        Ok(Self { k })
    }

    /// Adds `factor`-times finer points within `half_width` of each `+-centre`,
    /// keeping the grid symmetric.
    pub fn refined(&self, centres: &[f64], half_width: f64, factor: usize) -> Self {
        let mut k = self.k.clone();
        let base = self.spacing();
        let dk = base / factor as f64;
        for &c in centres {
            let c = c.abs();
            let n = (2.0 * half_width / dk).round() as usize;
            for j in 0..=n {
                let s = c - half_width + j as f64 * dk;
                if s > 0.0 {
                    k.push(s);
                    k.push(-s);
                }
            }
        }
        k.sort_by(f64::total_cmp);
        k.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        Self { k }
    }

    pub fn spacing(&self) -> f64 {
        let n = self.k.len();
        (self.k[n - 1] - self.k[0]) / (n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

/// Sampled scattering data on a symmetric k-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringData {
    pub k: Vec<f64>,
    pub a: Vec<C>,
    pub b: Vec<C>,
    pub r: Vec<C>,
    pub c: f64,
    pub c0: f64,
}

impl ScatteringData {
    /// Reflection coefficient at an arbitrary real `k` by cubic splines of the
    /// real and imaginary parts; zero outside the sampled band.
    pub fn reflection(&self) -> ReflectionInterp {
        ReflectionInterp::new(&self.k, &self.r)
    }

    pub fn max_abs_r(&self) -> f64 {
        self.r.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ReflectionInterp {
    lo: f64,
    hi: f64,
    re: CubicSpline,
    im: CubicSpline,
}

impl ReflectionInterp {
    pub fn new(k: &[f64], r: &[C]) -> Self {
        Self {
            lo: k[0],
            hi: k[k.len() - 1],
            re: CubicSpline::new(k.to_vec(), r.iter().map(|z| z.re).collect()),
            im: CubicSpline::new(k.to_vec(), r.iter().map(|z| z.im).collect()),
        }
    }

    pub fn eval(&self, k: f64) -> C {
        if k < self.lo || k > self.hi {
            return C::new(0.0, 0.0);
        }
        C::new(self.re.eval(k), self.im.eval(k))
    }

    pub fn band(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

pub fn scattering_table(pot: &Potential, grid: &KGrid) -> Result<ScatteringData> {
    let pts: Vec<Result<ScatteringPoint>> = grid.k.par_iter().map(|&k| scattering_at(pot, k)).collect();
    let mut a = Vec::with_capacity(pts.len());
    let mut b = Vec::with_capacity(pts.len());
    let mut r = Vec::with_capacity(pts.len());
    for p in pts {
        let p = p?;
        a.push(p.a);
        b.push(p.b);
        r.push(p.r);
    }
    Ok(ScatteringData {
        k: grid.k.clone(),
        a,
        b,
        r,
        c: pot.total_shift(),
        c0: pot.half_shift(),
    })
}

pub const UNITARITY_TOL: f64 = 1e-8;
pub const SYMMETRY_TOL: f64 = 1e-9;
pub const SLOPE_MIN: f64 = 2.7;
pub const SMALL_K_BAND: (f64, f64) = (0.01, 0.2);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringReport {
    pub unitarity_residual: f64,
    pub symmetry_residual: f64,
    /// Fitted log-log slope of the cubic remainder, `None` if fewer than
    /// three samples fall into the small-k band or the remainder vanishes.
    pub small_k_slope: Option<f64>,
    pub max_abs_r: f64,
    pub gap: f64,
    pub unitarity_ok: bool,
    pub symmetry_ok: bool,
    pub slope_ok: bool,
    pub gap_ok: bool,
}

impl ScatteringReport {
    pub fn passed(&self) -> bool {
        self.unitarity_ok && self.symmetry_ok && self.slope_ok && self.gap_ok
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Cubic remainder `|a(k) - (1 + ikc - k^2 c^2 / 2)|`.
pub fn small_k_remainder(a: C, k: f64, c: f64) -> f64 {
    let ik = C::new(0.0, k);
    (a - (1.0 + ik * c + ik * ik * c * c / 2.0)).norm()
}

pub fn validate_scattering(data: &ScatteringData) -> ScatteringReport {
    let unitarity_residual = data
        .a
        .iter()
        .zip(&data.b)
        .map(|(a, b)| (a.norm_sqr() - 1.0 - b.norm_sqr()).abs())
        .fold(0.0, f64::max);
    let n = data.k.len();
    let mut symmetry_residual = 0.0f64;
    for i in 0..n / 2 {
        let j = n - 1 - i;
        if (data.k[i] + data.k[j]).abs() < 1e-12 {
            symmetry_residual = symmetry_residual
                .max((data.a[i] - data.a[j].conj()).norm())
                .max((data.r[i].norm() - data.r[j].norm()).abs());
        }
    }
    let (ks, rem): (Vec<f64>, Vec<f64>) = data
        .k
        .iter()
        .zip(&data.a)
        .filter(|(k, _)| (SMALL_K_BAND.0..=SMALL_K_BAND.1).contains(&k.abs()))
        .map(|(k, a)| (k.abs(), small_k_remainder(*a, *k, data.c)))
        .unzip();
    let small_k_slope = if ks.len() >= 3 { loglog_slope(&ks, &rem) } else { None };
    let max_abs_r = data.max_abs_r();
    let gap = 1.0 - max_abs_r * max_abs_r;
    ScatteringReport {
        unitarity_residual,
        symmetry_residual,
        small_k_slope,
        max_abs_r,
        gap,
        unitarity_ok: unitarity_residual <= UNITARITY_TOL,
        symmetry_ok: symmetry_residual <= SYMMETRY_TOL,
        // vacuous when the remainder is identically zero
        slope_ok: small_k_slope.map_or(true, |s| s >= SLOPE_MIN),
        gap_ok: gap > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_profile, Gaussian, ProfileSpec};
    use crate::numerics::quad::composite_gauss;

    fn gaussian_pot(a: f64, n: usize) -> Potential {
        let p = build_profile(&ProfileSpec::gaussian(a, 1.0, 0.0, 12.0, n)).unwrap();
        Potential::from_profile(&p).unwrap()
    }

    #[test]
    fn zero_profile_is_reflectionless() {
        let p = build_profile(&ProfileSpec::zero(12.0, 512)).unwrap();
        let pot = Potential::from_profile(&p).unwrap();
        for k in [-3.0, 0.0, 0.7] {
            let s = scattering_at(&pot, k).unwrap();
            assert_eq!(s.a, C::new(1.0, 0.0));
            assert_eq!(s.b, C::new(0.0, 0.0));
            let t = jost_solve(&pot, k, Side::FromLeft).unwrap();
            assert!(t.values.iter().all(|m| *m == I2));
        }
        let phase = phase_primitive(&pot);
        for (i, h) in phase.iter().enumerate() {
            assert!((h - (12.0 - pot.grid.node(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn determinant_is_conserved() {
        let pot = gaussian_pot(0.1, 2048);
        for side in [Side::FromLeft, Side::FromRight] {
            let t = jost_solve(&pot, 2.0, side).unwrap();
            assert!(t.max_det_error() <= 1e-9, "{}", t.max_det_error());
        }
    }

    #[test]
    fn trajectory_satisfies_the_ode() {
        let pot = gaussian_pot(0.1, 2048);
        let k = 1.3;
        let t = jost_solve(&pot, k, Side::FromLeft).unwrap();
        let h = pot.grid.spacing();
        let sig = |i: usize| -> f64 {
            let mut worst = 0.0f64;
            let phi = &t.values[i];
            let d = |a: usize, b: usize| (t.values[i + 1][a][b] - t.values[i - 1][a][b]) / (2.0 * h);
            let kq = C::new(0.0, k * pot.q[i]);
            let u = pot.u_coef[i];
            // rhs = -ik q [sigma3, Phi] + U sigma1 Phi
            let rhs = [
                [u * phi[1][0], -2.0 * kq * phi[0][1] + u * phi[1][1]],
                [2.0 * kq * phi[1][0] + u * phi[0][0], u * phi[0][1]],
            ];
            for a in 0..2 {
                for b in 0..2 {
                    worst = worst.max((d(a, b) - rhs[a][b]).norm());
                }
            }
            worst
        };
        let res = (1..pot.grid.node_count - 1).map(sig).fold(0.0, f64::max);
        // central differences are O(h^2) with constant ~ |Phi'''| / 6
        assert!(res < 10.0 * h * h, "{res} vs h^2 = {}", h * h);
    }

    #[test]
    fn unitarity_and_wronskian_agree() {
        let pot = gaussian_pot(0.1, 2048);
        let (s, w) = scattering_at_point(&pot, 1.0, 0.0).unwrap();
        assert!((s.a.norm_sqr() - 1.0 - s.b.norm_sqr()).abs() <= 1e-8);
        assert!((s.a - w.a).norm() <= 1e-8);
        assert!((s.b - w.b).norm() <= 1e-8);
    }

    #[test]
    fn evaluation_point_does_not_matter() {
        let p = build_profile(&ProfileSpec::new(
            crate::field::ProfileKind::GaussianSum(vec![
                Gaussian::new(0.1, 1.0, 0.4),
                Gaussian::new(-0.05, 0.7, -1.1),
            ]),
            12.0,
            2048,
        ))
        .unwrap();
        let pot = Potential::from_profile(&p).unwrap();
        for k in [-2.5, 0.3, 1.0, 4.0] {
            let (s0, _) = scattering_at_point(&pot, k, 0.0).unwrap();
            let (s1, _) = scattering_at_point(&pot, k, 0.5).unwrap();
            assert!((s0.a - s1.a).norm() <= 1e-7);
            assert!((s0.b - s1.b).norm() <= 1e-7);
        }
    }

    #[test]
    fn born_approximation_for_weak_data() {
        let a_amp = 0.01;
        let pot = gaussian_pot(a_amp, 2048);
        let g = Gaussian::new(a_amp, 1.0, 0.0);
        // h(y) - h(0) = -(y + tail(0) - tail(y)) from the analytic integrand
        let q = |x: f64| (g.m(x) + 1.0).sqrt();
        let h_diff = |y: f64| -composite_gauss(q, 0.0, y, 64, 8);
        let u = |x: f64| {
            let z = x;
            let mx = a_amp * (-12.0 * z + 8.0 * z * z * z) * (-z * z).exp();
            mx / (4.0 * (g.m(x) + 1.0))
        };
        for &k in &[-4.0, -2.2, -0.5, 0.25, 1.0, 3.0, 4.0] {
            let born = -composite_gauss(
                |y: f64| C::from_polar(u(y), 2.0 * k * h_diff(y)),
                -10.0,
                10.0,
                400,
                8,
            )
            .conj();
            let s = scattering_at(&pot, k).unwrap();
            let rel = (s.b - born).norm() / born.norm();
            assert!(rel <= 1e-2, "k = {k}: rel {rel}");
        }
    }

    #[test]
    fn table_symmetry_and_small_k() {
        let pot = gaussian_pot(0.1, 2048);
        let grid = KGrid::symmetric(256, 8.0).unwrap().refined(&[0.1], 0.1, 4);
        let data = scattering_table(&pot, &grid).unwrap();
        let rep = validate_scattering(&data);
        assert!(rep.unitarity_ok, "{}", rep.unitarity_residual);
        assert!(rep.symmetry_ok, "{}", rep.symmetry_residual);
        assert!(rep.slope_ok, "{:?}", rep.small_k_slope);
    }

    #[test]
    fn larger_amplitude_keeps_a_gap() {
        let pot = gaussian_pot(0.5, 2048);
        let grid = KGrid::symmetric(128, 8.0).unwrap();
        let rep = validate_scattering(&scattering_table(&pot, &grid).unwrap());
        assert!(rep.gap >= 0.01, "{}", rep.gap);
    }
}
