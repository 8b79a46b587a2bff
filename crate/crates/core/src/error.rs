use thiserror::Error;

/// Failures raised by the geometric and dynamical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the chart domain: {0}")]
    Domain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("degenerate vector: {0}")]
    DegenerateVector(String),
    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("inconsistent Lie algebra: {0}")]
    Inconsistent(String),
    #[error("adjoint orbit does not span the Lie algebra: {0}")]
    OrbitDoesNotSpan(String),
    #[error("step size underflow at t = {t:e} (stiff or singular system): {detail}")]
    StepUnderflow { t: f64, detail: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("gauge map left the group: {0}")]
    Gauge(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("normal coordinate radius too large: {0}")]
    RadiusTooLarge(String),
    #[error("ill-conditioned recovery system: {0}")]
    DegenerateOrbit(String),
    #[error("lens data error: {0}")]
    Data(String),
    #[error("index out of range: {0}")]
    Index(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Dimension(format!(
            "{what}: expected length {expected}, got {got}"
        )));
    }
    Ok(())
}
