use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum HsError {
    #[error("hypothesis violated: min(m0 + 1) = {min_m_plus_1:.6e} < epsilon0 = {epsilon0:.3e} (at x = {at_x:.4})")]
    Hypothesis {
        min_m_plus_1: f64,
        epsilon0: f64,
        at_x: f64,
    },
    #[error("truncation: |{field}| = {value:.3e} exceeds tail tolerance {tol:.1e} near the grid edge")]
    Truncation {
        field: &'static str,
        value: f64,
        tol: f64,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal fault: {0}")]
    Fault(String),
    #[error("transition region unsupported: |xi| = {xi_abs:.4} < xi_min = {xi_min}")]
    Transition { xi_abs: f64, xi_min: f64 },
    #[error("CFL violation: dt = {dt:.3e} exceeds the stable limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("blow-up at t = {t:.6}: min(m + 1) = {min_m_plus_1:.3e}")]
    BlowUp { t: f64, min_m_plus_1: f64 },
    #[error("conservation drift {drift:.3e} exceeds {tol:.1e} at t = {t:.4}")]
    Conservation { drift: f64, tol: f64, t: f64 },
    #[error("scattering fault at k = {k}: {reason}")]
    Scattering { k: f64, reason: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HsError>;
