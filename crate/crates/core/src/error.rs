use thiserror::Error;

/// Errors raised by the physics modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{quantity} = {value:.6e} {unit} is outside the validity window [{min:.6e}, {max:.6e}] {unit}")]
    OutOfWindow {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
        unit: &'static str,
    },
    #[error("not phasematchable: Δk(θ) does not change sign on [0, π/2] (Δk(0) = {at_zero:.6e} rad/m, Δk(π/2) = {at_right_angle:.6e} rad/m)")]
    NotPhasematchable { at_zero: f64, at_right_angle: f64 },
    #[error("{0} diverges for a unit reflectivity")]
    Divergent(&'static str),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("under-resolved grid: {0}")]
    UnderResolved(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no peaks above {threshold:.3e} (fraction {fraction:.3e} of the maximum)")]
    NoPeaks { threshold: f64, fraction: f64 },
    #[error("infeasible design: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
