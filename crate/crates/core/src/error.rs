use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the numerical core.
///
/// Blow-up is deliberately absent: a run that exceeds its L∞ cap terminates
/// normally with [`crate::dynamics::Termination::BlowupSuspected`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sample count {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite field")]
    NonFinite,

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("NaN in tendency (component {component})")]
    NanInTendency { component: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("history does not cover t = {t} (available [{start}, {end}])")]
    OutsideHistory { t: f64, start: f64, end: f64 },

    #[error("under-resolved mollifier: sigma = {sigma} < 2 * spacing = {limit}")]
    UnderResolvedMollifier { sigma: f64, limit: f64 },

    #[error("insufficient data: {have} samples, window needs {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("test function support [{lo}, {hi}] wraps the periodic seam of [0, {length})")]
    SupportWrapsSeam { lo: f64, hi: f64, length: f64 },

    #[error("observer `{name}` failed: {message}")]
    Observer { name: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
