//! Direct solver for the HS equation at unit frequency, used as ground truth.
//!
//! `m = -u_xx` is advanced in transport form `m_t + u m_x + 2 u_x (m + 1) = 0`
//! with classical RK4; `u` and `u_x` are recovered every stage by integrating
//! from the right edge, where both vanish.

use crate::error::{HsError, Result};
use crate::field::{sqrt1p_minus1, DiffMethod, InitialProfile, SpatialGrid};
use crate::numerics::diff::{fd4_first, spectral_derivative};
use crate::numerics::interp::lagrange4;
use crate::numerics::quad::{cumulative_from_right, integrate_samples};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const CFL: f64 = 0.5;
pub const U_FLOOR: f64 = 1e-3;
/// Largest `|lambda dt|` allowed for the nonlocal dispersive part.
pub const DISPERSION_MARGIN: f64 = 2.0;
pub const DEFAULT_CHECK_EVERY: usize = 50;
/// Above this, the recovered `u` or `u_x` at the left edge is reported as degraded.
pub const LEFT_RESIDUAL_WARN: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolverState {
    pub grid: SpatialGrid,
    pub t: f64,
    pub m: Vec<f64>,
    pub u: Vec<f64>,
    pub u_x: Vec<f64>,
    pub c_initial: f64,
    /// `int_0^t u q` at the left edge: what has left the box through `x = -L`.
    pub left_flux: f64,
    pub method: DiffMethod,
}

/// `u_x = int_x^L m`, `u = -int_x^L u_x`.
pub fn recover_u(m: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let u_x = cumulative_from_right(m, h);
    let u = cumulative_from_right(&u_x, h).into_iter().map(|v| -v).collect();
    (u, u_x)
}

/// `int (sqrt(m + 1) - 1)` over the box.
pub fn box_shift(m: &[f64], h: f64) -> f64 {
    let g: Vec<f64> = m.iter().map(|&v| sqrt1p_minus1(v)).collect();
    integrate_samples(&g, h)
}

pub fn init_state(profile: &InitialProfile) -> Result<EvolverState> {
    init_state_with(profile, DiffMethod::FiniteDifference4)
}

pub fn init_state_with(profile: &InitialProfile, method: DiffMethod) -> Result<EvolverState> {
    let h = profile.grid.spacing();
    let m = profile.m0.clone();
    let (u, u_x) = recover_u(&m, h);
    Ok(EvolverState {
        grid: profile.grid,
        t: 0.0,
        c_initial: box_shift(&m, h),
        m,
        u,
        u_x,
        left_flux: 0.0,
        method,
    })
}

impl EvolverState {
    /// Box shift corrected by the flux through the left edge; constant under the flow.
    pub fn shift(&self) -> f64 {
        box_shift(&self.m, self.grid.spacing()) - self.left_flux
    }

    pub fn box_shift(&self) -> f64 {
        box_shift(&self.m, self.grid.spacing())
    }

    pub fn drift(&self) -> f64 {
        (self.shift() - self.c_initial).abs()
    }

    pub fn min_m_plus_1(&self) -> f64 {
        self.m.iter().fold(f64::INFINITY, |a, &v| a.min(v + 1.0))
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    /// `(|u(-L)|, |u_x(-L)|)`: nonzero once long waves reach the left edge.
    pub fn left_residuals(&self) -> (f64, f64) {
        (self.u[0].abs(), self.u_x[0].abs())
    }

    /// Largest stable step at the current state.
    pub fn dt_limit(&self) -> f64 {
        dt_limit(&self.grid, self.max_abs_u())
    }
}

/// `min(CFL h / max(|u|, u_floor), margin / omega_max)` with
/// `omega_max = 4 L / pi` the largest frequency of `m -> 2 int_x^L m` on the box.
pub fn dt_limit(grid: &SpatialGrid, max_abs_u: f64) -> f64 {
    let advect = CFL * grid.spacing() / max_abs_u.max(U_FLOOR);
    let omega_max = 4.0 * grid.half_width / PI;
    advect.min(DISPERSION_MARGIN / omega_max)
}

struct Stage {
    rate: Vec<f64>,
    flux: f64,
}

fn stage(m: &[f64], h: f64, method: DiffMethod) -> Stage {
    let (u, u_x) = recover_u(m, h);
    let m_x = match method {
        DiffMethod::FiniteDifference4 => fd4_first(m, h),
        DiffMethod::Spectral => spectral_derivative(m, h, 1),
    };
    let n = m.len();
    let mut rate: Vec<f64> = (0..n)
        .map(|i| -(u[i] * m_x[i] + 2.0 * u_x[i] * (m[i] + 1.0)))
        .collect();
    rate[n - 1] = 0.0;
    Stage {
        rate,
        flux: u[0] * (m[0] + 1.0).sqrt(),
    }
}

fn axpy(m: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    m.iter().zip(k).map(|(m, k)| m + a * k).collect()
}

/// One RK4 step; `dt` may be negative.
pub fn step(state: &EvolverState, dt: f64) -> Result<EvolverState> {
    let limit = state.dt_limit();
    if dt.abs() > limit * (1.0 + 1e-12) {
        return Err(HsError::Cfl { dt: dt.abs(), limit });
    }
    let h = state.grid.spacing();
    let s1 = stage(&state.m, h, state.method);
    let s2 = stage(&axpy(&state.m, 0.5 * dt, &s1.rate), h, state.method);
    let s3 = stage(&axpy(&state.m, 0.5 * dt, &s2.rate), h, state.method);
    let s4 = stage(&axpy(&state.m, dt, &s3.rate), h, state.method);
    let m: Vec<f64> = (0..state.m.len())
        .map(|i| {
            state.m[i]
                + dt / 6.0 * (s1.rate[i] + 2.0 * s2.rate[i] + 2.0 * s3.rate[i] + s4.rate[i])
        })
        .collect();
    let t = state.t + dt;
    let min = m.iter().fold(f64::INFINITY, |a, &v| a.min(v + 1.0));
    if !(min > 0.0) {
        return Err(HsError::BlowUp { t, min_m_plus_1: min });
    }
    let (u, u_x) = recover_u(&m, h);
    Ok(EvolverState {
        grid: state.grid,
        t,
        m,
        u,
        u_x,
        c_initial: state.c_initial,
        left_flux: state.left_flux + dt / 6.0 * (s1.flux + 2.0 * s2.flux + 2.0 * s3.flux + s4.flux),
        method: state.method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtControl {
    /// Fixed step; `None` picks the stable limit at the start of each call.
    pub dt: Option<f64>,
    pub check_every: usize,
    pub conservation_tol: f64,
}

impl DtControl {
    pub fn auto(conservation_tol: f64) -> Self {
        Self {
            dt: None,
            check_every: DEFAULT_CHECK_EVERY,
            conservation_tol,
        }
    }

    pub fn fixed(dt: f64, conservation_tol: f64) -> Self {
        Self {
            dt: Some(dt),
            check_every: DEFAULT_CHECK_EVERY,
            conservation_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationSample {
    pub t: f64,
    pub box_shift: f64,
    pub left_flux: f64,
    pub drift: f64,
    pub min_m_plus_1: f64,
    pub left_u: f64,
}

impl ConservationSample {
    fn of(state: &EvolverState) -> Self {
        Self {
            t: state.t,
            box_shift: state.box_shift(),
            left_flux: state.left_flux,
            drift: state.drift(),
            min_m_plus_1: state.min_m_plus_1(),
            left_u: state.u[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveLog {
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<ConservationSample>,
}

impl EvolveLog {
    pub fn max_drift(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |a, s| a.max(s.drift))
    }
}

/// Steps to `target` with a uniform step no larger than the requested or
/// stable one, checking conservation every `check_every` steps.
pub fn evolve_to(state: &EvolverState, target: f64, control: &DtControl) -> Result<(EvolverState, EvolveLog)> {
    if !(target >= state.t) {
        return Err(HsError::Domain(format!("target time {target} precedes state time {}", state.t)));
    }
    let span = target - state.t;
    let mut log = EvolveLog {
        dt: 0.0,
        steps: 0,
        samples: vec![ConservationSample::of(state)],
    };
    if span == 0.0 {
        return Ok((state.clone(), log));
    }
    let requested = match control.dt {
        Some(dt) => {
            if !(dt > 0.0) {
                return Err(HsError::Config(format!("dt must be positive, got {dt}")));
            }
            dt
        }
        None => 0.9 * state.dt_limit(),
    };
    let steps = (span / requested).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    log.dt = dt;
    log.steps = steps;
    let every = control.check_every.max(1);
    let mut cur = state.clone();
    for i in 1..=steps {
        cur = step(&cur, dt)?;
        if i == steps {
            cur.t = target;
        }
        if i % every == 0 || i == steps {
            let sample = ConservationSample::of(&cur);
            let tol = control.conservation_tol;
            log.samples.push(sample);
            if sample.drift > tol {
                return Err(HsError::Conservation {
                    drift: sample.drift,
                    tol,
                    t: cur.t,
                });
            }
        }
    }
    Ok((cur, log))
}

/// Local cubic interpolation of `u`.
pub fn sample_u(state: &EvolverState, xs: &[f64]) -> Result<Vec<f64>> {
    let l = state.grid.half_width;
    let h = state.grid.spacing();
    xs.iter()
        .map(|&x| {
            if !(x.abs() <= l) {
                return Err(HsError::Domain(format!("query x = {x} outside [-{l}, {l}]")));
            }
            let s = (x + l) / h;
            let i = s.round();
            if (s - i).abs() < 1e-9 {
                return Ok(state.u[i as usize]);
            }
            Ok(lagrange4(&state.u, -l, h, x))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_profile, ProfileSpec};
    use crate::scattering::Potential;
    use proptest::prelude::*;

    fn gaussian(l: f64, n: usize) -> EvolverState {
        let p = build_profile(&ProfileSpec::gaussian(0.1, 1.0, 0.0, l, n)).unwrap();
        init_state(&p).unwrap()
    }

    fn sup(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
    }

    #[test]
    fn zero_state_stays_zero() {
        let p = build_profile(&ProfileSpec::zero(12.0, 512)).unwrap();
        let s = init_state(&p).unwrap();
        assert_eq!(s.c_initial, 0.0);
        assert!(s.u.iter().chain(&s.u_x).all(|&v| v == 0.0));
        let (e, _) = evolve_to(&s, 10.0, &DtControl::auto(1e-6)).unwrap();
        assert!(e.m.iter().chain(&e.u).all(|&v| v == 0.0));
        assert_eq!(sample_u(&e, &[0.3, -2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn recover_u_matches_analytic_gaussian() {
        let s = gaussian(12.0, 2048);
        let x = s.grid.nodes();
        let exact: Vec<f64> = x.iter().map(|x| 0.1 * (-x * x).exp()).collect();
        assert!(sup(&s.u, &exact) < 1e-7);
        let exact_x: Vec<f64> = x.iter().map(|x| -0.2 * x * (-x * x).exp()).collect();
        assert!(sup(&s.u_x, &exact_x) < 1e-7);
    }

    #[test]
    fn initial_shift_matches_scattering_c() {
        let p = build_profile(&ProfileSpec::gaussian(0.1, 1.0, 0.0, 12.0, 2048)).unwrap();
        let s = init_state(&p).unwrap();
        let pot = Potential::from_profile(&p).unwrap();
        assert!((s.c_initial - pot.total_shift()).abs() < 1e-8);
    }

    #[test]
    fn reversed_step_returns() {
        let s = gaussian(12.0, 1024);
        let dt = 0.01;
        let back = step(&step(&s, dt).unwrap(), -dt).unwrap();
        let err = sup(&back.m, &s.m);
        // O(dt^5) with an O(1) constant
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn fourth_order_in_time() {
        let s = gaussian(12.0, 1024);
        let big = 0.04;
        let reference = {
            let mut r = s.clone();
            for _ in 0..64 {
                r = step(&r, big / 64.0).unwrap();
            }
            r
        };
        let err = |n: usize| {
            let mut r = s.clone();
            for _ in 0..n {
                r = step(&r, big / n as f64).unwrap();
            }
            sup(&r.m, &reference.m)
        };
        let ratio = err(1) / err(2);
        assert!((10.0..24.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn shift_conserved_to_t1() {
        let s = gaussian(48.0, 4096);
        let (e, log) = evolve_to(&s, 1.0, &DtControl::auto(1e-6)).unwrap();
        assert!(e.drift() <= 1e-6 * s.c_initial.abs().max(1.0), "{}", e.drift());
        assert!(log.samples.len() >= 2);
        assert!(e.min_m_plus_1() > 0.5);
    }

    #[test]
    fn cfl_rejection() {
        let s = gaussian(12.0, 1024);
        let limit = s.dt_limit();
        assert!(matches!(step(&s, 2.0 * limit), Err(HsError::Cfl { .. })));
        assert!(matches!(
            evolve_to(&s, 1.0, &DtControl::fixed(2.0 * limit, 1e-6)),
            Err(HsError::Cfl { .. })
        ));
    }

    #[test]
    fn sampling_is_exact_on_nodes_and_accurate_between() {
        let s = gaussian(12.0, 2048);
        let x5 = s.grid.node(777);
        assert_eq!(sample_u(&s, &[x5]).unwrap()[0], s.u[777]);
        for x in [-1.2345, 0.01, 0.777, 2.5] {
            let v = sample_u(&s, &[x]).unwrap()[0];
            assert!((v - 0.1 * (-x * x as f64).exp()).abs() < 1e-8);
        }
        assert!(sample_u(&s, &[13.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn recover_u_is_linear(alpha in -5.0f64..5.0) {
            let s = gaussian(12.0, 512);
            let h = s.grid.spacing();
            let scaled: Vec<f64> = s.m.iter().map(|v| alpha * v).collect();
            let (u, ux) = recover_u(&scaled, h);
            for i in 0..u.len() {
                prop_assert!((u[i] - alpha * s.u[i]).abs() <= 1e-14 * (1.0 + alpha.abs()));
                prop_assert!((ux[i] - alpha * s.u_x[i]).abs() <= 1e-14 * (1.0 + alpha.abs()));
            }
        }
    }
}
