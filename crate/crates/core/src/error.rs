//! Error type shared by all library modules.

use thiserror::Error;

/// Errors produced by the numerical routines.
///
/// `ResourceLimit` signals a request outside the supported problem sizes;
/// everything else reports either invalid input or a numerical failure.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid argument or model parameter.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model is valid but the requested operation does not support it.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    /// A quantity is degenerate and the result would be ill-defined.
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    /// Beam geometry cannot realize the requested wavevector.
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    /// An iterative numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Too few usable data points for a fit.
    #[error("insufficient support: {0}")]
    InsufficientSupport(String),

    /// The band gap closed where a gapped spectrum is required.
    #[error("gapless spectrum: {0}")]
    GaplessSpectrum(String),

    /// A lattice sum did not converge within the distance cap.
    #[error("truncation failure: {0}")]
    TruncationFailure(String),

    /// Fit inputs do not span enough of the parameter range.
    #[error("fit domain: {0}")]
    FitDomain(String),

    /// Problem size exceeds the supported limit.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Perturbation theory hit a degenerate denominator with nonzero coupling.
    #[error("degenerate perturbation: {0}")]
    DegeneratePerturbation(String),

    /// The adaptive integrator could not keep the norm drift within budget.
    #[error("step size failure: {0}")]
    StepSizeFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
