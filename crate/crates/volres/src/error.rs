//! Error type shared across the library.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameter value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Domain-level violation (empty mesh, origin not covered, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Degenerate mesh detected during operator assembly.
    #[error("assembly error: {0}")]
    Assembly(String),

    /// Numerical failure (non-convergence, breakdown).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Nonlinear solver did not converge.
    #[error("solver error: {msg} (last residual {residual:.3e})")]
    Solver { msg: String, residual: f64 },

    /// Converged resonance on the wrong sheet.
    #[error("sheet error: converged kappa = {kappa} has Im > 0 at eps > 0")]
    Sheet { kappa: Complex64 },

    /// Eigenvalue path continuation failed (collision or branch jump).
    #[error("path error: {0}")]
    Path(String),

    /// Ball-oracle root finding failed.
    #[error("oracle error: {0}")]
    Oracle(String),

    /// Operation precondition not satisfied.
    #[error("precondition error: {0}")]
    Precondition(String),

    /// Localization hypothesis eps <= eps_max not met; check skipped.
    #[error("hypothesis not met: eps = {eps:.3e} exceeds eps_max = {eps_max:.3e}")]
    HypothesisNotMet { eps: f64, eps_max: f64 },

    /// Contour moment rank test inconclusive.
    #[error("contour rank inconclusive: {0}; increase max_rank")]
    IncreaseMaxRank(String),

    /// Linear solve too close to a characteristic point.
    #[error("resonance proximity: {0}")]
    NearSingular(String),

    /// Geometric violation (observation point inside the inclusion, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
