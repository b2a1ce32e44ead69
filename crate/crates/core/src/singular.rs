//! The scalar function `delta(k) = exp(i int_{Gamma1} nu(s)/(s-k) ds)`, its
//! small-k coefficient `delta1`, and the regularized values `beta_j(k_j)`.
//!
//! `Gamma1 = (-inf, -rho0) U (rho0, inf)`; `nu` vanishes outside the sampled
//! band `|s| <= K`, so both half-lines are truncated there.

use crate::error::{HsError, Result};
use crate::numerics::quad::adaptive_with_breaks;
use crate::scattering::{ReflectionInterp, ScatteringData};
use crate::special::nu_of_modulus;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

type C = Complex64;

pub const QUAD_ABS_TOL: f64 = 1e-13;
pub const QUAD_REL_TOL: f64 = 1e-12;
pub const QUAD_MAX_PANELS: usize = 4000;
pub const EPSILONS: [f64; 2] = [1e-5, 1e-6];
pub const MIN_GAP: f64 = 1e-3;
pub const DECAY_TOL: f64 = 1e-8;
pub const DEFAULT_RADIUS: f64 = 1.0;

/// `nu` on `Gamma1` together with the sampling nodes it came from.
#[derive(Clone)]
pub struct NuTable {
    pub rho0: f64,
    /// Truncation of `Gamma1` at `|s| = cutoff`.
    pub cutoff: f64,
    /// Nodes on `Gamma1` (sorted) and `nu` there.
    pub nodes: Vec<f64>,
    pub nu_nodes: Vec<f64>,
    nu_fn: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    breaks: Vec<f64>,
}

impl std::fmt::Debug for NuTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NuTable")
            .field("rho0", &self.rho0)
            .field("cutoff", &self.cutoff)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl NuTable {
    /// Table from scattering data: `nu = -log(1 - |r|^2) / (2 pi)` with `r`
    /// interpolated by cubic splines between the k-grid samples.
    pub fn from_scattering(data: &ScatteringData, rho0: f64) -> Result<Self> {
        if !(rho0 > 0.0) {
            return Err(HsError::Domain(format!("rho0 must be positive, got {rho0}")));
        }
        let (lo, hi) = (data.k[0], data.k[data.k.len() - 1]);
        let cutoff = hi.min(-lo);
        if rho0 >= cutoff {
            return Err(HsError::Domain(format!(
                "stationary radius {rho0} outside the sampled band {cutoff}"
            )));
        }
        let mut nodes = Vec::new();
        let mut nu_nodes = Vec::new();
        for (k, r) in data.k.iter().zip(&data.r) {
            if k.abs() > rho0 && k.abs() <= cutoff {
                let r2 = r.norm_sqr();
                if 1.0 - r2 < MIN_GAP {
                    return Err(HsError::Domain(format!(
                        "1 - |r|^2 = {:.3e} below gap {MIN_GAP} at k = {k}",
                        1.0 - r2
                    )));
                }
                nodes.push(*k);
                nu_nodes.push(nu_of_modulus(r2)?);
            }
        }
        let edge = nu_nodes
            .first()
            .copied()
            .unwrap_or(0.0)
            .max(nu_nodes.last().copied().unwrap_or(0.0));
        if edge >= DECAY_TOL {
            return Err(HsError::Truncation {
                field: "nu",
                value: edge,
                tol: DECAY_TOL,
            });
        }
        let interp: ReflectionInterp = data.reflection();
        let nu_fn = move |s: f64| -> f64 {
            let r2 = interp.eval(s).norm_sqr();
            nu_of_modulus(r2.min(1.0 - MIN_GAP)).unwrap_or(0.0)
        };
        Ok(Self {
            rho0,
            cutoff,
            nodes,
            nu_nodes,
            nu_fn: Arc::new(nu_fn),
            breaks: Vec::new(),
        })
    }

    /// Table from an analytic `nu`; `breaks` lists points where `nu` is not
    /// smooth so quadrature panels can be aligned with them.
    pub fn from_fn<F>(rho0: f64, cutoff: f64, nu: F, breaks: &[f64]) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let n = 200;
        let mut nodes = Vec::new();
        for i in 0..=n {
            let s = rho0 + (cutoff - rho0) * (i as f64 + 0.5) / (n as f64 + 1.0);
            nodes.push(s);
            nodes.push(-s);
        }
        nodes.sort_by(f64::total_cmp);
        let nu_nodes = nodes.iter().map(|&s| nu(s)).collect();
        Self {
            rho0,
            cutoff,
            nodes,
            nu_nodes,
            nu_fn: Arc::new(nu),
            breaks: breaks.to_vec(),
        }
    }

    /// `nu(s)` on `Gamma1`, zero in the gap and beyond the cutoff.
    pub fn nu(&self, s: f64) -> f64 {
        if s.abs() < self.rho0 || s.abs() > self.cutoff {
            0.0
        } else {
            (self.nu_fn)(s)
        }
    }

    /// One-sided value at the gap edge `s = +-rho0`.
    pub fn nu_at_edge(&self, s: f64) -> f64 {
        (self.nu_fn)(s)
    }

    pub fn intervals(&self) -> [(f64, f64); 2] {
        [(-self.cutoff, -self.rho0), (self.rho0, self.cutoff)]
    }

    pub fn evenness_residual(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| (self.nu(s) - self.nu(-s)).abs())
            .fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.intervals()
            .iter()
            .map(|&(a, b)| self.integrate_real(|s| self.nu(s), a, b, &[]))
            .sum()
    }

    fn panel_breaks(&self, a: f64, b: f64, extra: &[f64]) -> Vec<f64> {
        let mut br: Vec<f64> = vec![a, b];
        br.extend(self.breaks.iter().chain(extra).copied().filter(|&x| x > a && x < b));
        br.sort_by(f64::total_cmp);
        br.dedup();
        br
    }

    fn integrate_real<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, extra: &[f64]) -> f64 {
        adaptive_with_breaks(f, &self.panel_breaks(a, b, extra), QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_MAX_PANELS).value
    }

    fn integrate_complex<F: Fn(f64) -> C>(&self, f: F, a: f64, b: f64, extra: &[f64]) -> C {
        adaptive_with_breaks(f, &self.panel_breaks(a, b, extra), QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_MAX_PANELS).value
    }

    /// `int_a^b nu(s)/(s-k) ds` with the value at the nearest point of
    /// `[a, b]` subtracted and added back in closed form.
    fn cauchy_piece(&self, a: f64, b: f64, k: C) -> Result<C> {
        let x = k.re.clamp(a, b);
        if k.im == 0.0 && x > a && x < b {
            return Err(HsError::Domain(format!("k = {} lies on Gamma1", k.re)));
        }
        let nu_x = self.nu_fn_clamped(x, a, b);
        let smooth = self.integrate_complex(|s| (self.nu(s) - nu_x) / (s - k), a, b, &[x]);
        Ok(smooth + nu_x * log_ratio(b, a, k))
    }

    // nu at x taken from inside [a, b] (matters at the gap edge)
    fn nu_fn_clamped(&self, x: f64, a: f64, b: f64) -> f64 {
        if x <= a || x >= b {
            let inner = if x <= a { a } else { b };
            if inner.abs() >= self.cutoff {
                return 0.0;
            }
            return (self.nu_fn)(inner);
        }
        self.nu(x)
    }

    /// `int_{Gamma1} nu(s)/(s-k) ds` for `k` off `Gamma1`.
    pub fn cauchy(&self, k: C) -> Result<C> {
        let mut acc = C::new(0.0, 0.0);
        for (a, b) in self.intervals() {
            acc += self.cauchy_piece(a, b, k)?;
        }
        Ok(acc)
    }
}

/// `int_a^b ds/(s-k)` for `k` not on the open segment.
fn log_ratio(b: f64, a: f64, k: C) -> C {
    (C::new(b, 0.0) - k).ln() - (C::new(a, 0.0) - k).ln()
}

pub fn delta_eval(table: &NuTable, k: C) -> Result<C> {
    Ok((C::i() * table.cauchy(k)?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySide {
    Plus,
    Minus,
}

/// Boundary value `delta_+-(s)` for real `s`, from `s +- i eps` with
/// `eps` in [`EPSILONS`] and linear extrapolation to `eps = 0`.
pub fn delta_boundary(table: &NuTable, s: f64, side: BoundarySide) -> Result<C> {
    let sign = match side {
        BoundarySide::Plus => 1.0,
        BoundarySide::Minus => -1.0,
    };
    let [e1, e2] = EPSILONS;
    let f1 = table.cauchy(C::new(s, sign * e1))?;
    let f2 = table.cauchy(C::new(s, sign * e2))?;
    let f0 = f2 - (f1 - f2) * (e2 / (e1 - e2));
    Ok((C::i() * f0).exp())
}

/// `|delta_+(s)/delta_-(s) - (1 - |r(s)|^2)|`, with `1 - |r|^2 = e^{-2 pi nu}`.
pub fn jump_residual(table: &NuTable, s: f64) -> Result<f64> {
    let p = delta_boundary(table, s, BoundarySide::Plus)?;
    let m = delta_boundary(table, s, BoundarySide::Minus)?;
    let expected = (-2.0 * PI * table.nu(s)).exp();
    Ok((p / m - expected).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaExpansion {
    pub delta1: f64,
    /// Imaginary part left by a complex-valued evaluation of the same
    /// integral; zero up to quadrature error.
    pub delta1_imag: f64,
}

/// `delta1 = int_{Gamma1} nu(s)/s^2 ds`.
pub fn delta1(table: &NuTable) -> DeltaExpansion {
    let mut re = 0.0;
    let mut im = C::new(0.0, 0.0);
    for (a, b) in table.intervals() {
        re += table.integrate_real(|s| table.nu(s) / (s * s), a, b, &[]);
        im += table.integrate_complex(|s| C::new(table.nu(s), 0.0) / (C::new(s, 0.0) * s), a, b, &[]);
    }
    DeltaExpansion {
        delta1: re,
        delta1_imag: im.im,
    }
}

/// Stationary point index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Point {
    /// `k1 = -rho0`, `Gamma1` lies to its left.
    K1,
    /// `k2 = +rho0`, `Gamma1` lies to its right.
    K2,
}

impl Point {
    pub fn location(&self, rho0: f64) -> f64 {
        match self {
            Point::K1 => -rho0,
            Point::K2 => rho0,
        }
    }

    /// Sign of the power in `delta(k) = (k - k_j)^{i s_j nu_j} e^{i beta_j(k)}`.
    pub fn power_sign(&self) -> f64 {
        match self {
            Point::K1 => 1.0,
            Point::K2 => -1.0,
        }
    }
}

/// Regularized `beta_j`, evaluated either at `k_j` itself or at a probe `k`
/// in the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaValue {
    pub value: C,
    pub nu_j: f64,
    /// Multiple of `i pi` selected by the pinning rule.
    pub branch: i32,
    pub radius: f64,
}

pub const BRANCH_CANDIDATES: [i32; 5] = [-2, -1, 0, 1, 2];

fn near_far(table: &NuTable, j: Point, radius: f64) -> ((f64, f64), (f64, f64)) {
    let kj = j.location(table.rho0);
    match j {
        // Gamma1 near k1 is [k1 - R, k1]; the rest of the left half-line is far
        Point::K1 => ((kj - radius, kj), (-table.cutoff, kj - radius)),
        Point::K2 => ((kj, kj + radius), (kj + radius, table.cutoff)),
    }
}

fn clip_radius(table: &NuTable, radius: f64) -> f64 {
    radius.min(table.rho0).min(table.cutoff - table.rho0)
}

/// The real-axis part of `beta_j(k_j)`: near integral of the difference
/// quotient, far integral, and the `-+ log R` term. The branch constant
/// `i pi n` is added by the caller.
fn beta_regular(table: &NuTable, j: Point, radius: f64) -> (f64, f64) {
    let kj = j.location(table.rho0);
    let nu_j = table.nu_at_edge(kj);
    let (near, far) = near_far(table, j, radius);
    let mut acc = table.integrate_real(|s| (table.nu_interior(s, j) - nu_j) / (s - kj), near.0, near.1, &[]);
    acc += table.integrate_real(|s| table.nu(s) / (s - kj), far.0, far.1, &[]);
    // opposite half-line
    let (oa, ob) = match j {
        Point::K1 => (table.rho0, table.cutoff),
        Point::K2 => (-table.cutoff, -table.rho0),
    };
    acc += table.integrate_real(|s| table.nu(s) / (s - kj), oa, ob, &[]);
    let log_r = match j {
        Point::K1 => -radius.ln(),
        Point::K2 => radius.ln(),
    };
    (acc + nu_j * log_r, nu_j)
}

impl NuTable {
    // nu on the closed half-line adjacent to k_j (edge value included)
    fn nu_interior(&self, s: f64, j: Point) -> f64 {
        let kj = j.location(self.rho0);
        if s == kj {
            self.nu_at_edge(kj)
        } else {
            self.nu(s)
        }
    }
}

/// `beta_j(k)` for `k` off the real axis, computed from the near/far split
/// (independent of the unsubtracted Cauchy integral used by `delta_eval`).
pub fn beta_at(table: &NuTable, j: Point, k: C) -> Result<C> {
    if k.im == 0.0 {
        return Err(HsError::Domain("beta_at needs Im k != 0".into()));
    }
    let radius = clip_radius(table, DEFAULT_RADIUS);
    let kj = j.location(table.rho0);
    let nu_j = table.nu_at_edge(kj);
    let (near, far) = near_far(table, j, radius);
    let near_smooth = table.integrate_complex(|s| (table.nu_interior(s, j) - nu_j) / (s - k), near.0, near.1, &[]);
    let far_part = table.integrate_complex(|s| C::new(table.nu(s), 0.0) / (s - k), far.0, far.1, &[]);
    let (oa, ob) = match j {
        Point::K1 => (table.rho0, table.cutoff),
        Point::K2 => (-table.cutoff, -table.rho0),
    };
    let other = table.integrate_complex(|s| C::new(table.nu(s), 0.0) / (s - k), oa, ob, &[]);
    let log_term = log_ratio(near.1, near.0, k) - j.power_sign() * (k - kj).ln();
    Ok(near_smooth + far_part + other + nu_j * log_term)
}

/// Probe offsets `|k - k_j| / rho0` used by the pinning rule and the
/// representation check.
pub const PROBE_OFFSETS: [f64; 2] = [0.01, 0.05];

fn probe(table: &NuTable, j: Point, frac: f64) -> C {
    // straight up from k_j: inside the upper half-plane, away from Gamma1
    C::new(j.location(table.rho0), frac * table.rho0)
}

/// `beta_j(k_j)` with the branch multiple of `i pi` pinned so that the value
/// is the limit of [`beta_at`] from the upper half-plane. Fails if two
/// candidates are equally consistent.
pub fn beta_at_stationary(table: &NuTable, j: Point) -> Result<BetaValue> {
    beta_at_stationary_with_radius(table, j, DEFAULT_RADIUS)
}

pub fn beta_at_stationary_with_radius(table: &NuTable, j: Point, radius: f64) -> Result<BetaValue> {
    let radius = clip_radius(table, radius);
    let (re, nu_j) = beta_regular(table, j, radius);
    if nu_j == 0.0 {
        return Ok(BetaValue {
            value: C::new(re, 0.0),
            nu_j,
            branch: 0,
            radius,
        });
    }
    let target = beta_at(table, j, probe(table, j, PROBE_OFFSETS[0]))?;
    let mut scored: Vec<(f64, i32)> = BRANCH_CANDIDATES
        .iter()
        .map(|&n| ((C::new(re, PI * n as f64 * nu_j) - target).norm(), n))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (best, n) = scored[0];
    let runner_up = scored[1].0;
    // the branch is unique if its residual is well below the spacing pi*nu_j
    if !(best < 0.25 * PI * nu_j && runner_up > 0.5 * PI * nu_j) {
        return Err(HsError::Fault(format!(
            "beta branch pinning ambiguous at {j:?}: residuals {best:.3e}, {runner_up:.3e}"
        )));
    }
    Ok(BetaValue {
        value: C::new(re, PI * n as f64 * nu_j),
        nu_j,
        branch: n,
        radius,
    })
}

/// `|delta(k) - (k - k_j)^{i s_j nu_j} e^{i beta_j(k)}|` at a probe point.
pub fn representation_residual(table: &NuTable, j: Point, k: C) -> Result<f64> {
    let kj = j.location(table.rho0);
    let nu_j = table.nu_at_edge(kj);
    let beta = beta_at(table, j, k)?;
    let rep = (C::i() * j.power_sign() * nu_j * (k - kj).ln() + C::i() * beta).exp();
    Ok((delta_eval(table, k)? - rep).norm())
}

/// Residuals at the standard probes `k_j + i f rho0`, `f` in [`PROBE_OFFSETS`].
pub fn representation_residuals(table: &NuTable, j: Point) -> Result<Vec<f64>> {
    PROBE_OFFSETS
        .iter()
        .map(|&f| representation_residual(table, j, probe(table, j, f)))
        .collect()
}

/// Rows of the diagnostic table: `(s, nu(s), jump residual)` over interior
/// nodes of `Gamma1`.
pub fn delta_diagnostics(table: &NuTable, stride: usize) -> Result<Vec<(f64, f64, f64)>> {
    let n = table.nodes.len();
    let stride = stride.max(1);
    (0..n)
        .step_by(stride)
        .filter(|&i| i > 0 && i + 1 < n)
        .map(|i| {
            let s = table.nodes[i];
            Ok((s, table.nu(s), jump_residual(table, s)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::composite_gauss;

    fn box_nu(nu0: f64, lo: f64, hi: f64) -> impl Fn(f64) -> f64 + Send + Sync {
        move |s: f64| if s.abs() >= lo && s.abs() <= hi { nu0 } else { 0.0 }
    }

    fn smooth_table(rho0: f64) -> NuTable {
        // bump with nu(rho0) != 0, decaying well before the cutoff
        NuTable::from_fn(rho0, 8.0, |s: f64| 0.02 * (-(s * s - 1.0).powi(2)).exp(), &[])
    }

    #[test]
    fn vanishing_nu_is_trivial() {
        let t = NuTable::from_fn(1.0, 8.0, |_| 0.0, &[]);
        assert_eq!(delta_eval(&t, C::new(0.3, 0.7)).unwrap(), C::new(1.0, 0.0));
        assert_eq!(delta1(&t).delta1, 0.0);
        for j in [Point::K1, Point::K2] {
            assert_eq!(beta_at_stationary(&t, j).unwrap().value, C::new(0.0, 0.0));
        }
    }

    #[test]
    fn delta1_of_a_box() {
        let nu0 = 0.3;
        let t = NuTable::from_fn(1.0, 8.0, box_nu(nu0, 1.0, 2.0), &[-2.0, 2.0]);
        assert!((delta1(&t).delta1 - nu0).abs() < 1e-12);
    }

    #[test]
    fn beta_of_a_detached_box() {
        let nu0 = 0.2;
        let t = NuTable::from_fn(1.0, 8.0, box_nu(nu0, 2.0, 3.0), &[-3.0, -2.0, 2.0, 3.0]);
        let b = beta_at_stationary(&t, Point::K1).unwrap();
        assert!((b.value - C::new(nu0 * (2.0f64 / 3.0).ln(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn jump_relation_holds() {
        let t = smooth_table(0.8);
        for s in [-2.0, -1.1, 0.9, 1.3, 2.4] {
            let res = jump_residual(&t, s).unwrap();
            assert!(res <= 1e-6, "s = {s}: {res}");
        }
    }

    #[test]
    fn large_k_tail_bound() {
        let t = NuTable::from_fn(1.0, 8.0, box_nu(0.4, 1.5, 3.0), &[-3.0, -1.5, 1.5, 3.0]);
        let l1 = t.l1_norm();
        assert!((l1 - 1.2).abs() < 1e-12);
        let d = delta_eval(&t, C::new(100.0, 0.0)).unwrap();
        assert!((d - 1.0).norm() <= 1.1 * l1 / 99.0);
        let d = delta_eval(&t, C::new(0.0, 100.0)).unwrap();
        assert!((d - 1.0).norm() <= 2.0 * l1 / 100.0);
    }

    #[test]
    fn conjugate_symmetry_of_modulus() {
        let t = smooth_table(0.7);
        for k in [C::new(0.3, 0.4), C::new(-1.7, 0.05), C::new(2.2, 1.5)] {
            let p = delta_eval(&t, k).unwrap().norm() * delta_eval(&t, k.conj()).unwrap().norm();
            assert!((p - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn small_k_expansion() {
        let t = smooth_table(0.7);
        let d1 = delta1(&t);
        assert!(d1.delta1 > 0.0 && d1.delta1_imag.abs() <= 1e-10);
        let oracle: f64 = composite_gauss(|s: f64| 2.0 * t.nu(s) / (s * s), 0.7, 8.0, 200, 10);
        assert!((d1.delta1 - oracle).abs() < 1e-8);
        for sgn in [1.0, -1.0] {
            let k = C::new(0.0, sgn * 0.01 * t.rho0);
            let d = delta_eval(&t, k).unwrap();
            let lin = 1.0 + C::i() * d1.delta1 * k;
            assert!((d - lin).norm() < 10.0 * k.norm_sqr());
        }
    }

    #[test]
    fn branch_pinning_and_representation() {
        let t = smooth_table(1.0);
        let b1 = beta_at_stationary(&t, Point::K1).unwrap();
        let b2 = beta_at_stationary(&t, Point::K2).unwrap();
        assert_eq!(b1.branch, 0);
        assert_eq!(b2.branch, 1);
        for j in [Point::K1, Point::K2] {
            for r in representation_residuals(&t, j).unwrap() {
                assert!(r <= 1e-4, "{j:?}: {r}");
            }
        }
    }

    #[test]
    fn radius_independence() {
        let t = smooth_table(1.0);
        for j in [Point::K1, Point::K2] {
            let a = beta_at_stationary_with_radius(&t, j, 1.0).unwrap();
            let b = beta_at_stationary_with_radius(&t, j, 0.5).unwrap();
            assert!((a.value - b.value).norm() < 1e-8, "{j:?}");
        }
    }

    #[test]
    fn holder_continuity_at_stationary_points() {
        let t = smooth_table(1.0);
        for j in [Point::K1, Point::K2] {
            let bj = beta_at_stationary(&t, j).unwrap().value;
            let mut worst = 0.0f64;
            for f in [1e-4, 1e-3, 1e-2, 5e-2] {
                let k = C::new(j.location(1.0), f);
                let d = (beta_at(&t, j, k).unwrap() - bj).norm();
                worst = worst.max(d / f.sqrt());
            }
            assert!(worst < 1.0, "{j:?}: C = {worst}");
        }
    }
}
