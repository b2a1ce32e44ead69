//! Command-level tests of the batch harness.

use hslab_core::harness::config::RunConfig;
use hslab_core::harness::{
    cmd_asympt, cmd_compare, cmd_evolve, cmd_scatter, exit_code, EXIT_CONFIG, EXIT_OK, EXIT_VALIDATION,
};
use hslab_core::HsError;
use std::fs;
use std::path::Path;

fn config(text: &str) -> RunConfig {
    RunConfig::parse(text, None).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn scatter_writes_one_row_per_k_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let text = "profile.A = 0.1\nk.count = 256\n";
    let out = cmd_scatter(&config(text), dir.path()).unwrap();
    assert_eq!(out.exit_code(), EXIT_OK, "{:?}", out.failures);
    let csv = dir.path().join("scattering.csv");
    assert_eq!(header(&csv), "k,re_a,im_a,re_b,im_b,re_r,im_r");
    assert_eq!(csv_rows(&csv).len(), 256);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("scattering_summary.json")).unwrap()).unwrap();
    for key in ["c", "c0", "unitarity_residual", "symmetry_residual", "max_abs_r"] {
        assert!(summary[key].is_number(), "{key}");
    }
    for f in &out.files {
        if !f.to_string_lossy().ends_with(".meta.json") {
            let meta: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(format!("{}.meta.json", f.display())).unwrap()).unwrap();
            assert_eq!(meta["config_hash"].as_str().unwrap(), config(text).hash);
            assert_eq!(meta["tolerances"]["unitarity"].as_f64().unwrap(), 1e-8);
        }
    }
}

#[test]
fn runs_are_bit_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config("profile.A = 0.1\nk.count = 128\nasympt.xi = -0.5, 1\nasympt.t = 25, 100\n");
    for d in [&a, &b] {
        cmd_scatter(&cfg, d.path()).unwrap();
        cmd_asympt(&cfg, d.path()).unwrap();
    }
    for name in ["scattering.csv", "scattering_summary.json", "asympt.csv", "asympt_coefficients.json", "delta_diag.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn hypothesis_violation_maps_to_validation_exit() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_scatter(&config("profile.A = 2\n"), dir.path()).unwrap_err();
    assert!(matches!(err, HsError::Hypothesis { .. }));
    assert_eq!(exit_code(&err), EXIT_VALIDATION);
    assert!(err.to_string().contains("min(m0 + 1)"));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn zero_profile_asymptotics_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("profile.kind = zero\nk.count = 128\nasympt.xi = -1, -0.5, 0.5\nasympt.t = 10, 100\n");
    let out = cmd_asympt(&cfg, dir.path()).unwrap();
    assert_eq!(out.exit_code(), EXIT_OK, "{:?}", out.failures);
    let csv = dir.path().join("asympt.csv");
    assert_eq!(header(&csv), "y,t,xi,x,u_leading,error_scale");
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[4] == 0.0));
}

#[test]
fn fast_region_rows_and_transition_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("profile.A = 0.1\nk.count = 256\nasympt.xi = 1, 0.01\nasympt.t = 25, 100\n");
    let out = cmd_asympt(&cfg, dir.path()).unwrap();
    assert_eq!(out.exit_code(), EXIT_VALIDATION);
    assert_eq!(out.failures.len(), 2);
    let rows = csv_rows(&dir.path().join("asympt.csv"));
    for r in &rows[..2] {
        assert_eq!(r[4], 0.0);
        assert_eq!(r[3], r[0]);
        assert_eq!(r[5], r[1].powf(-0.5));
    }
    assert!(rows[2..].iter().all(|r| r[4].is_nan()));
}

#[test]
fn slow_region_row_is_re_f_hat_over_sqrt_t() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("profile.A = 0.1\nasympt.xi = -0.5\nasympt.t = 100\n");
    cmd_asympt(&cfg, dir.path()).unwrap();
    let rows = csv_rows(&dir.path().join("asympt.csv"));
    let coeffs: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("asympt_coefficients.json")).unwrap()).unwrap();
    let f_hat_re = coeffs[0]["coefficients"]["f"]["f_hat"][0].as_f64().unwrap();
    assert!((rows[0][4] - f_hat_re / 10.0).abs() <= 1e-15 * f_hat_re.abs().max(1e-300));
    assert_eq!(header(&dir.path().join("delta_diag.csv")), "s,nu,jump_residual");
}

/// The leading term scales like `t^(-1/2)` between consecutive doublings of `t`.
#[test]
fn slow_region_leading_term_scales_with_inverse_sqrt_t() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("profile.A = 0.1\nasympt.xi = -0.5\nasympt.t = 25, 50, 100, 200\n");
    cmd_asympt(&cfg, dir.path()).unwrap();
    let u: Vec<f64> = csv_rows(&dir.path().join("asympt.csv")).iter().map(|r| r[4]).collect();
    let ratios: Vec<f64> = u.windows(2).map(|w| w[1] / w[0]).collect();
    let target = 0.5f64.sqrt();
    assert!(
        ratios.iter().all(|r| (r / target - 1.0).abs() <= 0.05),
        "u_leading {u:?}, ratios {ratios:?} vs {target}"
    );
}

#[test]
fn zero_profile_evolves_to_zero_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("profile.kind = zero\nevolve.t = 0.5, 2\nevolve.N = 1024\n");
    let out = cmd_evolve(&cfg, dir.path()).unwrap();
    assert_eq!(out.exit_code(), EXIT_OK);
    for name in ["evolve_t0.5.csv", "evolve_t2.csv"] {
        let path = dir.path().join(name);
        assert_eq!(header(&path), "x,u,m");
        assert!(csv_rows(&path).iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
    }
}

#[test]
fn gaussian_evolution_conserves_shift() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_evolve(&config("profile.A = 0.1\nevolve.t = 1\n"), dir.path()).unwrap();
    assert_eq!(out.exit_code(), EXIT_OK);
    let log: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("evolve_log.json")).unwrap()).unwrap();
    let c0 = log["c_initial"].as_f64().unwrap();
    let drift = log["max_drift"].as_f64().unwrap();
    assert!(drift <= 1e-6 * c0.abs().max(1.0), "{drift}");
    assert!(log["drift_series"].as_array().unwrap().len() >= 2);
}

#[test]
fn oversized_dt_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_evolve(&config("profile.A = 0.1\nevolve.dt = 1\n"), dir.path()).unwrap_err();
    assert!(matches!(err, HsError::Cfl { .. }));
    assert_eq!(exit_code(&err), EXIT_CONFIG);
}

#[test]
fn zero_profile_comparison_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("profile.kind = zero\nk.count = 64\nevolve.N = 1024\ncompare.xi = -0.5, 0.5\ncompare.t = 2, 4\n");
    cmd_compare(&cfg, dir.path()).unwrap();
    let csv = dir.path().join("compare.csv");
    assert_eq!(header(&csv), "xi,t,u_num,u_asympt,ratio,abs_err,decay_slope");
    let text = fs::read_to_string(&csv).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[4], "nan");
        assert_eq!(cols[5].parse::<f64>().unwrap(), 0.0);
    }
}
