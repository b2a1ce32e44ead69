//! Batch front end: scattering runs, asymptotic evaluation, PDE evolution and
//! the numerical-versus-asymptotic comparison, with file outputs.

pub mod config;
pub mod output;

use crate::asympt::{stationary_points, Asymptotics, XI_MIN};
use crate::error::{HsError, Result};
use crate::evolve::{evolve_to, init_state_with, sample_u, ConservationSample, DtControl, EvolverState};
use crate::field::{build_profile, coordinate_map, resample_spec, InitialProfile};
use crate::scattering::{loglog_slope, scattering_table, validate_scattering, KGrid, Potential, ScatteringData};
use crate::singular::{delta_diagnostics, NuTable};
use config::RunConfig;
use output::OutputSet;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

/// Files written by a command and the validation checks that failed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_VALIDATION
        }
    }
}

pub fn exit_code(err: &HsError) -> i32 {
    match err {
        HsError::Config(_) | HsError::Cfl { .. } => EXIT_CONFIG,
        HsError::Hypothesis { .. } | HsError::Truncation { .. } | HsError::Transition { .. } | HsError::Domain(_) => {
            EXIT_VALIDATION
        }
        HsError::BlowUp { .. }
        | HsError::Conservation { .. }
        | HsError::Fault(_)
        | HsError::Scattering { .. }
        | HsError::Io(_)
        | HsError::Json(_) => EXIT_ABORT,
    }
}

/// Window of `xi` around each compared ray over which the fast-region sup is taken.
pub const SUP_WINDOW: f64 = 0.1;
pub const SUP_SAMPLES: usize = 41;
/// Below this, `sup |u| t^(1/2)` is rounding noise and counts as bounded.
pub const NOISE_FLOOR: f64 = 1e-12;
/// Rows with `t` below this are excluded from the ratio monotonicity check.
pub const MONOTONE_FROM: f64 = 50.0;

fn scattering_for(cfg: &RunConfig, profile: &InitialProfile, xis: &[f64]) -> Result<ScatteringData> {
    let pot = Potential::from_profile(profile)?;
    let mut grid = KGrid::symmetric(cfg.k.count, cfg.k.max)?;
    if cfg.k.refine_factor > 1 {
        let centres: Vec<f64> = xis
            .iter()
            .filter(|&&xi| xi <= -XI_MIN)
            .map(|&xi| (-1.0 / (2.0 * xi)).sqrt())
            .filter(|&rho| rho < cfg.k.max)
            .collect();
        if !centres.is_empty() {
            grid = grid.refined(&centres, cfg.k.refine_width, cfg.k.refine_factor);
        }
    }
    scattering_table(&pot, &grid)
}

#[derive(Debug, Serialize)]
pub struct ScatterSummary {
    pub c: f64,
    pub c0: f64,
    pub unitarity_residual: f64,
    pub symmetry_residual: f64,
    pub max_abs_r: f64,
    pub small_k_slope: Option<f64>,
    pub gap: f64,
    pub k_count: usize,
    pub failures: Vec<String>,
}

pub fn cmd_scatter(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let profile = build_profile(&cfg.profile)?;
    let pot = Potential::from_profile(&profile)?;
    let data = scattering_table(&pot, &KGrid::symmetric(cfg.k.count, cfg.k.max)?)?;
    let report = validate_scattering(&data);
    let tol = &cfg.tol;
    let mut failures = Vec::new();
    if report.unitarity_residual > tol.unitarity {
        failures.push(format!(
            "unitarity residual {:.3e} exceeds {:.1e}",
            report.unitarity_residual, tol.unitarity
        ));
    }
    if report.symmetry_residual > tol.symmetry {
        failures.push(format!(
            "symmetry residual {:.3e} exceeds {:.1e}",
            report.symmetry_residual, tol.symmetry
        ));
    }
    match report.small_k_slope {
        Some(s) if s < tol.slope_min => {
            failures.push(format!("small-k remainder slope {s:.3} below {}", tol.slope_min))
        }
        None if !pot.is_trivial() => failures.push("small-k remainder slope undetermined".into()),
        _ => {}
    }
    if !report.gap_ok {
        failures.push(format!("reflection gap closed: max |r| = {:.6}", report.max_abs_r));
    }

    let mut set = OutputSet::new(out, "scatter", cfg)?;
    let rows: Vec<Vec<f64>> = (0..data.k.len())
        .map(|i| {
            vec![
                data.k[i], data.a[i].re, data.a[i].im, data.b[i].re, data.b[i].im, data.r[i].re, data.r[i].im,
            ]
        })
        .collect();
    let params = json!({ "k_count": cfg.k.count, "k_max": cfg.k.max, "derivatives": profile.method.name() });
    set.csv("scattering.csv", "k,re_a,im_a,re_b,im_b,re_r,im_r", &rows, params.clone())?;
    let summary = ScatterSummary {
        c: data.c,
        c0: data.c0,
        unitarity_residual: report.unitarity_residual,
        symmetry_residual: report.symmetry_residual,
        max_abs_r: report.max_abs_r,
        small_k_slope: report.small_k_slope,
        gap: report.gap,
        k_count: data.k.len(),
        failures: failures.clone(),
    };
    set.json("scattering_summary.json", &summary, params)?;
    Ok(Outcome {
        files: set.files,
        failures,
    })
}

#[derive(Debug, Serialize)]
pub struct AsymptEntry {
    pub xi: f64,
    pub t: f64,
    pub region: &'static str,
    pub error: Option<String>,
    pub coefficients: Option<crate::asympt::SlowRegionCoefficients>,
    pub f_hat_imag_ratio: Option<f64>,
    pub f11_imag_ratio: Option<f64>,
    pub reality_ok: Option<bool>,
}

pub fn cmd_asympt(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let profile = build_profile(&cfg.profile)?;
    let data = scattering_for(cfg, &profile, &cfg.xi)?;
    let asy = Asymptotics::new(data);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for &xi in &cfg.xi {
        for &t in &cfg.t {
            let y = xi * t;
            match asy.leading_order_with_coefficients(y, t, cfg.p) {
                Ok((s, co)) => {
                    rows.push(vec![s.y, s.t, s.xi, s.x_of_y, s.u_leading, s.error_scale]);
                    let (fr, f11r) = co
                        .as_ref()
                        .map_or((None, None), |c| (Some(c.f_hat_imag_ratio()), Some(c.f11_imag_ratio())));
                    entries.push(AsymptEntry {
                        xi,
                        t,
                        region: if xi < 0.0 { "slow" } else { "fast" },
                        error: None,
                        coefficients: co,
                        f_hat_imag_ratio: fr,
                        f11_imag_ratio: f11r,
                        reality_ok: fr.map(|r| r <= cfg.tol.reality),
                    });
                }
                Err(e @ (HsError::Transition { .. } | HsError::Domain(_) | HsError::Fault(_))) => {
                    rows.push(vec![y, t, xi, f64::NAN, f64::NAN, f64::NAN]);
                    failures.push(format!("xi = {xi}, t = {t}: {e}"));
                    entries.push(AsymptEntry {
                        xi,
                        t,
                        region: if xi.abs() < XI_MIN { "transition" } else if xi < 0.0 { "slow" } else { "fast" },
                        error: Some(e.to_string()),
                        coefficients: None,
                        f_hat_imag_ratio: None,
                        f11_imag_ratio: None,
                        reality_ok: None,
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
    let mut set = OutputSet::new(out, "asympt", cfg)?;
    let params = json!({ "xi": cfg.xi, "t": cfg.t, "p": cfg.p, "k_points": asy.data.k.len() });
    set.csv("asympt.csv", "y,t,xi,x,u_leading,error_scale", &rows, params.clone())?;
    set.json("asympt_coefficients.json", &entries, params)?;

    if let Some(&xi) = cfg.xi.iter().find(|&&xi| xi <= -XI_MIN) {
        let rho0 = stationary_points(xi)?.rho0;
        match NuTable::from_scattering(&asy.data, rho0).and_then(|t| delta_diagnostics(&t, cfg.delta_stride)) {
            Ok(diag) => {
                let rows: Vec<Vec<f64>> = diag.iter().map(|&(s, nu, j)| vec![s, nu, j]).collect();
                let params = json!({ "xi": xi, "rho0": rho0, "stride": cfg.delta_stride });
                set.csv("delta_diag.csv", "s,nu,jump_residual", &rows, params)?;
            }
            Err(e) => failures.push(format!("delta diagnostics at xi = {xi}: {e}")),
        }
    }
    Ok(Outcome {
        files: set.files,
        failures,
    })
}

/// Evolver start state on the enlarged domain.
pub fn evolver_start(cfg: &RunConfig, reach: f64) -> Result<EvolverState> {
    let l = cfg.profile.half_width;
    let half_width = cfg.evolve.half_width.unwrap_or_else(|| (4.0 * l).max(1.25 * reach + 2.0 * l));
    let spec = resample_spec(&cfg.profile, half_width, cfg.evolve.node_count)?;
    init_state_with(&build_profile(&spec)?, cfg.evolve.method)
}

fn dt_control(cfg: &RunConfig, c0: f64) -> DtControl {
    DtControl {
        dt: cfg.evolve.dt,
        check_every: cfg.evolve.check_every,
        conservation_tol: cfg.tol.conservation * c0.abs().max(1.0),
    }
}

#[derive(Debug, Serialize)]
pub struct EvolveRunLog {
    pub half_width: f64,
    pub node_count: usize,
    pub method: &'static str,
    pub c_initial: f64,
    pub conservation_tol: f64,
    pub dt: f64,
    pub steps: usize,
    pub max_drift: f64,
    pub snapshots: Vec<f64>,
    pub left_u: f64,
    pub left_u_x: f64,
    pub drift_series: Vec<ConservationSample>,
    pub aborted: Option<String>,
}

fn snapshot_name(t: f64) -> String {
    format!("evolve_t{t}.csv")
}

pub fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let start = evolver_start(cfg, 0.0)?;
    let control = dt_control(cfg, start.c_initial);
    let mut times = cfg.evolve.times.clone();
    times.sort_by(f64::total_cmp);
    let mut set = OutputSet::new(out, "evolve", cfg)?;
    let mut log = EvolveRunLog {
        half_width: start.grid.half_width,
        node_count: start.grid.node_count,
        method: cfg.evolve.method.name(),
        c_initial: start.c_initial,
        conservation_tol: control.conservation_tol,
        dt: 0.0,
        steps: 0,
        max_drift: 0.0,
        snapshots: Vec::new(),
        left_u: 0.0,
        left_u_x: 0.0,
        drift_series: Vec::new(),
        aborted: None,
    };
    let mut state = start;
    let mut result = Ok(());
    for &t in &times {
        match evolve_to(&state, t, &control) {
            Ok((next, l)) => {
                state = next;
                log.dt = l.dt;
                log.steps += l.steps;
                log.max_drift = log.max_drift.max(l.max_drift());
                log.drift_series.extend(l.samples);
                let x = state.grid.nodes();
                let rows: Vec<Vec<f64>> = (0..x.len()).map(|i| vec![x[i], state.u[i], state.m[i]]).collect();
                let params = json!({ "t": t, "dt": l.dt, "half_width": state.grid.half_width, "nodes": state.grid.node_count });
                set.csv(&snapshot_name(t), "x,u,m", &rows, params)?;
                log.snapshots.push(t);
            }
            Err(e) => {
                log.aborted = Some(format!("{e} (last valid t = {})", state.t));
                result = Err(e);
                break;
            }
        }
    }
    (log.left_u, log.left_u_x) = state.left_residuals();
    set.json("evolve_log.json", &log, json!({ "times": times }))?;
    result?;
    Ok(Outcome {
        files: set.files,
        failures: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub xi: f64,
    pub t: f64,
    pub y: f64,
    pub x_num: f64,
    pub x_asympt: f64,
    pub u_num: f64,
    pub u_asympt: f64,
    pub ratio: f64,
    pub abs_err: f64,
    /// `sup |u_num| t^(1/2)` over rays within the window around `xi`.
    pub sup_scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RayReport {
    pub xi: f64,
    pub region: &'static str,
    pub decay_slope: Option<f64>,
    pub final_ratio_deviation: Option<f64>,
    pub ratio_nonincreasing: Option<bool>,
    pub sup_variation: Option<f64>,
    pub below_noise_floor: bool,
    /// `max |x(y,t) - y| t^(1/2)` for fast rays.
    pub x_shift_constant: Option<f64>,
    pub passed: bool,
    pub rows: Vec<CompareRow>,
}

#[derive(Debug, Serialize)]
pub struct CompareSummary {
    pub evolver_half_width: f64,
    pub evolver_nodes: usize,
    pub max_drift: f64,
    pub rays: Vec<RayReport>,
    pub failures: Vec<String>,
}

/// Evaluates the comparison for one ray once all rows are collected.
pub fn assess_ray(xi: f64, rows: Vec<CompareRow>, tol: &config::Tolerances) -> RayReport {
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let mags: Vec<f64> = rows.iter().map(|r| r.u_num.abs()).collect();
    let decay_slope = if ts.len() >= 2 { loglog_slope(&ts, &mags) } else { None };
    if xi < 0.0 {
        let dev: Vec<f64> = rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
        let final_dev = dev.last().copied();
        let late: Vec<f64> = rows
            .iter()
            .zip(&dev)
            .filter(|(r, _)| r.t >= MONOTONE_FROM)
            .map(|(_, d)| *d)
            .collect();
        let nonincreasing = late.windows(2).all(|w| w[1] <= w[0]);
        let slope_ok = decay_slope.is_some_and(|s| (tol.decay_slope_lo..=tol.decay_slope_hi).contains(&s));
        let passed = final_dev.is_some_and(|d| d <= tol.ratio) && nonincreasing && slope_ok;
        RayReport {
            xi,
            region: "slow",
            decay_slope,
            final_ratio_deviation: final_dev,
            ratio_nonincreasing: Some(nonincreasing),
            sup_variation: None,
            below_noise_floor: false,
            x_shift_constant: None,
            passed,
            rows,
        }
    } else {
        let sups: Vec<f64> = rows.iter().map(|r| r.sup_scaled).collect();
        let max = sups.iter().copied().fold(0.0, f64::max);
        let min = sups.iter().copied().fold(f64::INFINITY, f64::min);
        let below = max < NOISE_FLOOR;
        let variation = if min > 0.0 { max / min } else { f64::INFINITY };
        let c = rows
            .iter()
            .map(|r| (r.x_num - r.y).abs() * r.t.sqrt())
            .fold(0.0, f64::max);
        RayReport {
            xi,
            region: "fast",
            decay_slope,
            final_ratio_deviation: None,
            ratio_nonincreasing: None,
            sup_variation: Some(variation),
            below_noise_floor: below,
            x_shift_constant: Some(c),
            passed: below || variation <= tol.fast_variation,
            rows,
        }
    }
}

/// Runs the evolver through the compare times and samples every ray.
pub fn compare_rays(cfg: &RunConfig, asy: &Asymptotics) -> Result<(EvolverState, f64, Vec<RayReport>, Vec<String>)> {
    let mut times = cfg.compare_t.clone();
    times.sort_by(f64::total_cmp);
    let tmax = *times.last().expect("compare.t is non-empty");
    let reach = cfg.compare_xi.iter().fold(0.0f64, |a, xi| a.max(xi.abs())) * (1.0 + SUP_WINDOW) * tmax;
    let mut state = evolver_start(cfg, reach)?;
    let control = dt_control(cfg, state.c_initial);
    let mut max_drift = 0.0f64;
    let mut per_ray: Vec<Vec<CompareRow>> = vec![Vec::new(); cfg.compare_xi.len()];
    let mut failures = Vec::new();
    let l = state.grid.half_width;
    for &t in &times {
        let (next, log) = evolve_to(&state, t, &control)?;
        state = next;
        max_drift = max_drift.max(log.max_drift());
        let map = coordinate_map(&state.m, &state.grid)?;
        for (ray, &xi) in cfg.compare_xi.iter().enumerate() {
            let y = xi * t;
            let x_num = map.x_at(y);
            if !(x_num.abs() < l) {
                return Err(HsError::Domain(format!("ray xi = {xi} leaves the evolver domain at t = {t}")));
            }
            let u_num = sample_u(&state, &[x_num])?[0];
            let (x_asympt, u_asympt) = match asy.leading_order(y, t, cfg.p) {
                Ok(s) => (s.x_of_y, s.u_leading),
                Err(e @ (HsError::Transition { .. } | HsError::Domain(_) | HsError::Fault(_))) => {
                    failures.push(format!("xi = {xi}, t = {t}: {e}"));
                    (f64::NAN, f64::NAN)
                }
                Err(e) => return Err(e),
            };
            let lo = xi - SUP_WINDOW * xi.abs() / 2.0;
            let span = SUP_WINDOW * xi.abs();
            let xs: Vec<f64> = (0..SUP_SAMPLES)
                .map(|i| map.x_at((lo + span * i as f64 / (SUP_SAMPLES - 1) as f64) * t).clamp(-l, l))
                .collect();
            let sup = sample_u(&state, &xs)?.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            per_ray[ray].push(CompareRow {
                xi,
                t,
                y,
                x_num,
                x_asympt,
                u_num,
                u_asympt,
                ratio: if u_asympt == 0.0 { f64::NAN } else { u_num / u_asympt },
                abs_err: (u_num - u_asympt).abs(),
                sup_scaled: sup * t.sqrt(),
            });
        }
    }
    let reports = cfg
        .compare_xi
        .iter()
        .zip(per_ray)
        .map(|(&xi, rows)| assess_ray(xi, rows, &cfg.tol))
        .collect();
    Ok((state, max_drift, reports, failures))
}

pub fn cmd_compare(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let profile = build_profile(&cfg.profile)?;
    let data = scattering_for(cfg, &profile, &cfg.compare_xi)?;
    let asy = Asymptotics::new(data);
    let (state, max_drift, rays, mut failures) = compare_rays(cfg, &asy)?;
    for r in &rays {
        if !r.passed {
            failures.push(format!("ray xi = {} failed the {} region check", r.xi, r.region));
        }
    }
    let mut rows = Vec::new();
    for r in &rays {
        let slope = r.decay_slope.unwrap_or(f64::NAN);
        for c in &r.rows {
            rows.push(vec![c.xi, c.t, c.u_num, c.u_asympt, c.ratio, c.abs_err, slope]);
        }
    }
    let mut set = OutputSet::new(out, "compare", cfg)?;
    let params = json!({
        "xi": cfg.compare_xi,
        "t": cfg.compare_t,
        "p": cfg.p,
        "evolver_half_width": state.grid.half_width,
        "evolver_nodes": state.grid.node_count,
    });
    set.csv("compare.csv", "xi,t,u_num,u_asympt,ratio,abs_err,decay_slope", &rows, params.clone())?;
    let summary = CompareSummary {
        evolver_half_width: state.grid.half_width,
        evolver_nodes: state.grid.node_count,
        max_drift,
        rays,
        failures: failures.clone(),
    };
    set.json("compare_summary.json", &summary, params)?;
    Ok(Outcome {
        files: set.files,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Scatter,
    Asympt,
    Evolve,
    Compare,
}

impl Command {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "scatter" => Some(Self::Scatter),
            "asympt" => Some(Self::Asympt),
            "evolve" => Some(Self::Evolve),
            "compare" => Some(Self::Compare),
            _ => None,
        }
    }
}

pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    match command {
        Command::Scatter => cmd_scatter(cfg, out),
        Command::Asympt => cmd_asympt(cfg, out),
        Command::Evolve => cmd_evolve(cfg, out),
        Command::Compare => cmd_compare(cfg, out),
    }
}
