//! Initial data on a truncated line and the `x <-> y` coordinate machinery.

use crate::error::{HsError, Result};
use crate::numerics::diff::{fd4_first, fd4_second, spectral_derivative};
use crate::numerics::interp::{lagrange_uniform, CubicSpline, Pchip};
use crate::numerics::quad::cumulative_from_right;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Uniform grid on `[-L, L]` with `N` nodes, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub half_width: f64,
    pub node_count: usize,
}

pub const MIN_NODES: usize = 256;

impl SpatialGrid {
    pub fn new(half_width: f64, node_count: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(HsError::Domain(format!("grid half-width must be positive, got {half_width}")));
        }
        if node_count < MIN_NODES {
            return Err(HsError::Domain(format!(
                "grid needs at least {MIN_NODES} nodes, got {node_count}"
            )));
        }
        Ok(Self { half_width, node_count })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.node_count - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.node_count).map(|i| self.node(i)).collect()
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let s = ((x + self.half_width) / self.spacing()).round();
        s.clamp(0.0, (self.node_count - 1) as f64) as usize
    }

    /// Number of nodes in the outer 1% band at each end (at least one).
    pub fn edge_band(&self) -> usize {
        (self.node_count / 100).max(1)
    }
}

/// How derivatives of sampled data were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffMethod {
    Spectral,
    FiniteDifference4,
}

impl DiffMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DiffMethod::Spectral => "spectral",
            DiffMethod::FiniteDifference4 => "fd4",
        }
    }
}

/// One bump `A exp(-((x - x0)/sigma)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub amplitude: f64,
    pub sigma: f64,
    pub center: f64,
}

impl Gaussian {
    pub fn new(amplitude: f64, sigma: f64, center: f64) -> Self {
        Self { amplitude, sigma, center }
    }

    pub fn value(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.sigma;
        self.amplitude * (-z * z).exp()
    }

    /// Closed-form `-u''`.
    pub fn m(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.sigma;
        self.amplitude * (2.0 - 4.0 * z * z) * (-z * z).exp() / (self.sigma * self.sigma)
    }
}

/// Families of initial data understood by [`build_profile`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Zero,
    Gaussian(Gaussian),
    GaussianSum(Vec<Gaussian>),
    /// Samples `(x, u0)` read from a file; `x` must be uniform and symmetric.
    Samples { x: Vec<f64>, u0: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    pub half_width: f64,
    pub node_count: usize,
    pub epsilon0: f64,
    pub tail_tol: f64,
}

pub const DEFAULT_EPSILON0: f64 = 1e-3;
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

impl ProfileSpec {
    pub fn new(kind: ProfileKind, half_width: f64, node_count: usize) -> Self {
        Self {
            kind,
            half_width,
            node_count,
            epsilon0: DEFAULT_EPSILON0,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    pub fn zero(half_width: f64, node_count: usize) -> Self {
        Self::new(ProfileKind::Zero, half_width, node_count)
    }

    pub fn gaussian(amplitude: f64, sigma: f64, center: f64, half_width: f64, node_count: usize) -> Self {
        Self::new(
            ProfileKind::Gaussian(Gaussian::new(amplitude, sigma, center)),
            half_width,
            node_count,
        )
    }

    /// Reads a `x,u0` CSV. The grid is taken from the file.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| HsError::Config("empty profile file".into()))?;
        if header.trim() != "x,u0" {
            return Err(HsError::Config(format!("profile header must be `x,u0`, got `{header}`")));
        }
        let (mut x, mut u0) = (Vec::new(), Vec::new());
        for (n, line) in lines.enumerate() {
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| HsError::Config(format!("bad profile row {}: `{line}`", n + 2)))
            };
            x.push(parse(parts.next())?);
            u0.push(parse(parts.next())?);
        }
        if x.len() < 2 {
            return Err(HsError::Config("profile file has fewer than two rows".into()));
        }
        let half_width = 0.5 * (x[x.len() - 1] - x[0]);
        let n = x.len();
        Ok(Self::new(ProfileKind::Samples { x, u0 }, half_width, n))
    }
}

/// Initial data together with its derivatives and `m0 = -u0''`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialProfile {
    pub grid: SpatialGrid,
    pub u0: Vec<f64>,
    pub u0_x: Vec<f64>,
    pub u0_xx: Vec<f64>,
    pub m0: Vec<f64>,
    pub epsilon0: f64,
    pub method: DiffMethod,
}

impl InitialProfile {
    pub fn min_m_plus_1(&self) -> f64 {
        self.m0.iter().fold(f64::INFINITY, |a, &m| a.min(m + 1.0))
    }

    pub fn is_zero(&self) -> bool {
        self.u0.iter().all(|&v| v == 0.0)
    }
}

/// Checks `min(m + 1) >= epsilon0` and returns the minimum.
pub fn check_hypothesis(m: &[f64], grid: &SpatialGrid, epsilon0: f64) -> Result<f64> {
    let (imin, mmin) = m
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v + 1.0 < acc.1 { (i, v + 1.0) } else { acc });
    if mmin < epsilon0 {
        return Err(HsError::Hypothesis {
            min_m_plus_1: mmin,
            epsilon0,
            at_x: grid.node(imin),
        });
    }
    Ok(mmin)
}

fn check_tail(field: &'static str, v: &[f64], band: usize, tol: f64) -> Result<()> {
    let n = v.len();
    let worst = v[..band]
        .iter()
        .chain(&v[n - band..])
        .fold(0.0f64, |a, &x| a.max(x.abs()));
    if worst >= tol {
        return Err(HsError::Truncation { field, value: worst, tol });
    }
    Ok(())
}

pub fn build_profile(spec: &ProfileSpec) -> Result<InitialProfile> {
    if !(spec.epsilon0 > 0.0) || !(spec.tail_tol > 0.0) {
        return Err(HsError::Domain("epsilon0 and tail_tol must be positive".into()));
    }
    let (grid, u0, method) = match &spec.kind {
        ProfileKind::Samples { x, u0 } => {
            let grid = SpatialGrid::new(spec.half_width, x.len())?;
            let h = grid.spacing();
            let centre = 0.5 * (x[0] + x[x.len() - 1]);
            if centre.abs() > 1e-9 * spec.half_width {
                return Err(HsError::Config(format!(
                    "profile grid must be symmetric about 0 (midpoint {centre})"
                )));
            }
            for w in x.windows(2) {
                if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
                    return Err(HsError::Config(format!(
                        "profile grid not uniform near x = {}",
                        w[0]
                    )));
                }
            }
            (grid, u0.clone(), DiffMethod::FiniteDifference4)
        }
        analytic => {
            let grid = SpatialGrid::new(spec.half_width, spec.node_count)?;
            let x = grid.nodes();
            let u0 = match analytic {
                ProfileKind::Zero => vec![0.0; x.len()],
                ProfileKind::Gaussian(g) => x.iter().map(|&x| g.value(x)).collect(),
                ProfileKind::GaussianSum(gs) => {
                    x.iter().map(|&x| gs.iter().map(|g| g.value(x)).sum()).collect()
                }
                ProfileKind::Samples { .. } => unreachable!(),
            };
            (grid, u0, DiffMethod::Spectral)
        }
    };
    let h = grid.spacing();
    let (u0_x, u0_xx) = match method {
        DiffMethod::Spectral => (spectral_derivative(&u0, h, 1), spectral_derivative(&u0, h, 2)),
        DiffMethod::FiniteDifference4 => (fd4_first(&u0, h), fd4_second(&u0, h)),
    };
    let band = grid.edge_band();
    check_tail("u0", &u0, band, spec.tail_tol)?;
    check_tail("u0_x", &u0_x, band, spec.tail_tol)?;
    check_tail("u0_xx", &u0_xx, band, spec.tail_tol)?;
    let m0: Vec<f64> = u0_xx.iter().map(|v| -v).collect();
    check_hypothesis(&m0, &grid, spec.epsilon0)?;
    Ok(InitialProfile {
        grid,
        u0,
        u0_x,
        u0_xx,
        m0,
        epsilon0: spec.epsilon0,
        method,
    })
}

/// The same initial data on `[-half_width, half_width]` with `node_count`
/// nodes. Analytic families are re-evaluated; sampled data are interpolated
/// (six-point Lagrange) and extended by zero outside the original grid.
pub fn resample_spec(spec: &ProfileSpec, half_width: f64, node_count: usize) -> Result<ProfileSpec> {
    let kind = match &spec.kind {
        ProfileKind::Samples { x, u0 } => {
            let grid = SpatialGrid::new(half_width, node_count)?;
            let (x0, h) = (x[0], x[1] - x[0]);
            let (lo, hi) = (x[0], x[x.len() - 1]);
            let v = grid
                .nodes()
                .into_iter()
                .map(|t| if t < lo || t > hi { 0.0 } else { lagrange_uniform(u0, x0, h, t, 6) })
                .collect();
            ProfileKind::Samples { x: grid.nodes(), u0: v }
        }
        other => other.clone(),
    };
    Ok(ProfileSpec {
        kind,
        half_width,
        node_count,
        epsilon0: spec.epsilon0,
        tail_tol: spec.tail_tol,
    })
}

/// Absolute level above which samples at the grid edge count as non-decaying.
pub const DECAY_TOL: f64 = 1e-8;

/// `m = -u''` for samples that decay at both edges.
pub fn derive_m(u: &[f64], grid: &SpatialGrid, method: DiffMethod) -> Result<Vec<f64>> {
    if u.len() != grid.node_count {
        return Err(HsError::Domain("sample count does not match grid".into()));
    }
    check_tail("u", u, grid.edge_band(), DECAY_TOL)?;
    let h = grid.spacing();
    let d2 = match method {
        DiffMethod::Spectral => spectral_derivative(u, h, 2),
        DiffMethod::FiniteDifference4 => fd4_second(u, h),
    };
    Ok(d2.into_iter().map(|v| -v).collect())
}

/// Rescales data for frequency `omega` to the unit-frequency problem:
/// `u~(x~) = omega^3 u(x~ / omega^2)` on the grid stretched by `omega^2`.
pub fn scale_omega(profile: &InitialProfile, omega: f64) -> Result<InitialProfile> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(HsError::Domain(format!("omega must be positive, got {omega}")));
    }
    if omega == 1.0 {
        return Ok(profile.clone());
    }
    let w2 = omega * omega;
    let grid = SpatialGrid::new(profile.grid.half_width * w2, profile.grid.node_count)?;
    let scale = |v: &[f64], f: f64| -> Vec<f64> { v.iter().map(|x| x * f).collect() };
    let u0 = scale(&profile.u0, omega * w2);
    let u0_x = scale(&profile.u0_x, omega);
    let u0_xx = scale(&profile.u0_xx, 1.0 / omega);
    let m0 = scale(&profile.m0, 1.0 / omega);
    check_hypothesis(&m0, &grid, profile.epsilon0)?;
    Ok(InitialProfile {
        grid,
        u0,
        u0_x,
        u0_xx,
        m0,
        epsilon0: profile.epsilon0,
        method: profile.method,
    })
}

/// `y(x) = x - int_x^L (sqrt(m+1) - 1)` with a monotone inverse.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    pub grid: SpatialGrid,
    pub y_of_x: Vec<f64>,
    forward: CubicSpline,
    inverse: Pchip,
}

impl CoordinateMap {
    pub fn y_at(&self, x: f64) -> f64 {
        self.forward.eval(x)
    }

    pub fn x_at(&self, y: f64) -> f64 {
        self.inverse.eval(y)
    }

    /// `int (sqrt(m+1) - 1)` over the whole grid.
    pub fn total_shift(&self) -> f64 {
        self.grid.node(0) - self.y_of_x[0]
    }
}

pub fn coordinate_map(m: &[f64], grid: &SpatialGrid) -> Result<CoordinateMap> {
    if m.len() != grid.node_count {
        return Err(HsError::Domain("sample count does not match grid".into()));
    }
    if let Some(bad) = m.iter().position(|&v| !(v + 1.0 > 0.0)) {
        return Err(HsError::Domain(format!(
            "m + 1 must be positive for the coordinate map (x = {})",
            grid.node(bad)
        )));
    }
    let x = grid.nodes();
    let g: Vec<f64> = m.iter().map(|&v| sqrt1p_minus1(v)).collect();
    let tail = cumulative_from_right(&g, grid.spacing());
    let y: Vec<f64> = x.iter().zip(&tail).map(|(x, t)| x - t).collect();
    if let Some(i) = y.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(HsError::Fault(format!(
            "coordinate map not increasing near x = {}",
            x[i]
        )));
    }
    Ok(CoordinateMap {
        grid: *grid,
        forward: CubicSpline::new(x.clone(), y.clone()),
        inverse: Pchip::new(y.clone(), x),
        y_of_x: y,
    })
}

/// `sqrt(1 + m) - 1` without cancellation for small `m`.
pub fn sqrt1p_minus1(m: f64) -> f64 {
    m / ((1.0 + m).sqrt() + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::adaptive;

    #[test]
    fn zero_profile_is_trivial() {
        let p = build_profile(&ProfileSpec::zero(12.0, 1024)).unwrap();
        assert!(p.m0.iter().all(|&v| v == 0.0));
        assert!(p.u0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_m_at_origin() {
        let p = build_profile(&ProfileSpec::gaussian(0.1, 1.0, 0.0, 12.0, 1025)).unwrap();
        let i = p.grid.nearest(0.0);
        assert!(p.grid.node(i).abs() < 1e-14);
        assert!((p.m0[i] - 0.2).abs() < 1e-10);
    }

    #[test]
    fn large_gaussian_violates_hypothesis() {
        let err = build_profile(&ProfileSpec::gaussian(2.0, 1.0, 0.0, 12.0, 1024)).unwrap_err();
        match err {
            HsError::Hypothesis { min_m_plus_1, .. } => {
                let expected = 1.0 - 8.0 * (-1.5f64).exp();
                assert!((min_m_plus_1 - expected).abs() < 1e-3, "{min_m_plus_1}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn narrow_domain_trips_truncation() {
        let err = build_profile(&ProfileSpec::gaussian(0.1, 1.0, 0.0, 3.0, 512)).unwrap_err();
        assert!(matches!(err, HsError::Truncation { .. }));
    }

    #[test]
    fn derive_m_matches_analytic() {
        let grid = SpatialGrid::new(12.0, 1024).unwrap();
        let x = grid.nodes();
        let u: Vec<f64> = x.iter().map(|x| 0.1 * (-x * x).exp()).collect();
        let m = derive_m(&u, &grid, DiffMethod::Spectral).unwrap();
        let g = Gaussian::new(0.1, 1.0, 0.0);
        let err = x.iter().zip(&m).map(|(x, m)| (m - g.m(*x)).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-8, "{err}");

        let u: Vec<f64> = x.iter().map(|x| x * (-x * x).exp()).collect();
        let m = derive_m(&u, &grid, DiffMethod::Spectral).unwrap();
        let err = x
            .iter()
            .zip(&m)
            .map(|(x, m)| (m + (4.0 * x * x * x - 6.0 * x) * (-x * x).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn derive_m_rejects_non_decaying() {
        let grid = SpatialGrid::new(12.0, 512).unwrap();
        let u = vec![1.0; 512];
        assert!(derive_m(&u, &grid, DiffMethod::FiniteDifference4).is_err());
    }

    #[test]
    fn omega_scaling() {
        let p = build_profile(&ProfileSpec::gaussian(1.0 / 16.0, 1.0, 0.0, 12.0, 1024)).unwrap();
        assert_eq!(scale_omega(&p, 1.0).unwrap(), p);
        let s = scale_omega(&p, 2.0).unwrap();
        assert_eq!(s.grid.half_width, 48.0);
        for i in [100, 400, 512, 700] {
            let xt = s.grid.node(i);
            let exact = 8.0 / 16.0 * (-xt * xt / 16.0).exp();
            assert!((s.u0[i] - exact).abs() < 1e-14);
        }
        let back = scale_omega(&s, 0.5).unwrap();
        for (a, b) in back.u0.iter().zip(&p.u0) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(scale_omega(&p, 0.0).is_err());
    }

    #[test]
    fn coordinate_map_identity_for_zero() {
        let grid = SpatialGrid::new(12.0, 512).unwrap();
        let cm = coordinate_map(&vec![0.0; 512], &grid).unwrap();
        for i in 0..512 {
            assert_eq!(cm.y_of_x[i], grid.node(i));
        }
        assert!((cm.x_at(1.2345) - 1.2345).abs() < 1e-12);
    }

    #[test]
    fn coordinate_map_against_adaptive_quadrature() {
        let p = build_profile(&ProfileSpec::gaussian(0.1, 1.0, 0.0, 12.0, 2048)).unwrap();
        let cm = coordinate_map(&p.m0, &p.grid).unwrap();
        let g = Gaussian::new(0.1, 1.0, 0.0);
        let oracle = adaptive(|x: f64| (g.m(x) + 1.0).sqrt() - 1.0, 0.0, 12.0, 1e-14, 1e-13, 500);
        assert!((cm.y_at(0.0) + oracle.value).abs() < 1e-9);
        let h = p.grid.spacing();
        let floor = p.min_m_plus_1().sqrt() * h * (1.0 - 1e-6);
        assert!(cm.y_of_x.windows(2).all(|w| w[1] - w[0] >= floor));
        for i in (50..2000).step_by(37) {
            let x = p.grid.node(i);
            assert!((cm.x_at(cm.y_of_x[i]) - x).abs() < 1e-9);
        }
    }

    #[test]
    fn resampled_samples_extend_by_zero() {
        let g = Gaussian::new(0.1, 1.0, 0.0);
        let grid = SpatialGrid::new(12.0, 1024).unwrap();
        let x = grid.nodes();
        let u0 = x.iter().map(|&t| g.value(t)).collect();
        let spec = ProfileSpec::new(ProfileKind::Samples { x, u0 }, 12.0, 1024);
        let wide = build_profile(&resample_spec(&spec, 48.0, 4096).unwrap()).unwrap();
        for (t, u) in wide.grid.nodes().iter().zip(&wide.u0) {
            assert!((u - g.value(*t)).abs() < 1e-9, "x = {t}");
        }
        let analytic = resample_spec(&ProfileSpec::gaussian(0.1, 1.0, 0.0, 12.0, 1024), 48.0, 4096).unwrap();
        assert_eq!(analytic.kind, ProfileKind::Gaussian(g));
        assert_eq!(analytic.half_width, 48.0);
    }
}
