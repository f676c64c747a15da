//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Quantity undefined on the singularity line K = 0.
    #[error("operation undefined on the singularity line K = 0")]
    SingularityLine,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Level set spans more than one connected component.
    #[error("level set at E1 = {e1} is not a single closed curve: {detail}")]
    ComponentAmbiguity { e1: f64, detail: String },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// Adaptive integrator step underflow; reports where it happened.
    #[error("step size underflow at t = {t} (q1 = {q1}, q2 = {q2})")]
    StepSizeUnderflow { t: f64, q1: f64, q2: f64 },

    #[error("maximum integration time {t_max} exceeded before event")]
    MaxTimeExceeded { t_max: f64 },

    /// More than one impact between consecutive section crossings signals an
    /// integrator or tolerance bug.
    #[error("{count} impacts detected in a single return segment")]
    MultipleImpacts { count: u32 },

    #[error("both bracket endpoints classify as {class}; bad initial bracket")]
    ClassificationFailure { class: &'static str },

    /// Window with coincident band extrema makes the normalized distance
    /// undefined.
    #[error("window {index} has K_max = K_min; boundary distance undefined")]
    UndefinedWindow { index: usize },

    #[error("angle {theta} outside the interpolation grid")]
    Extrapolation { theta: f64 },

    #[error("unsupported potential: {0}")]
    UnsupportedPotential(String),
}
