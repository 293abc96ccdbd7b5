use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidGrid(String),
    IncompatibleMask { left: String, right: String },
    DegenerateSpectrum,
    InvalidArgument(String),
    Uncalibrated(String),
    CalibrationFailed { system: String, best_ratio: f64 },
    OutOfRange(String),
    InvalidPolicy(String),
    InvalidConfig(String),
    /// Evaluator produced a non-finite fitness.
    Evaluation { generation: usize, index: usize, value: f64 },
    DegenerateNormalization(f64),
    DegenerateLandscape,
    EmptySpectrum,
    MissingCompound(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(m) => write!(f, "invalid grid: {m}"),
            Error::IncompatibleMask { left, right } => {
                write!(f, "incompatible masks: grid {left} vs {right}")
            }
            Error::DegenerateSpectrum => write!(f, "degenerate spectrum: all amplitudes are zero"),
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::Uncalibrated(s) => write!(f, "system {s} has no TL reference"),
            Error::CalibrationFailed { system, best_ratio } => write!(
                f,
                "calibration of {system} failed: best TPA ratio {best_ratio:.5} below 0.99"
            ),
            Error::OutOfRange(m) => write!(f, "out of range: {m}"),
            Error::InvalidPolicy(m) => write!(f, "invalid transfer policy: {m}"),
            Error::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            Error::Evaluation { generation, index, value } => write!(
                f,
                "evaluator returned {value} for individual {index} of generation {generation}"
            ),
            Error::DegenerateNormalization(v) => {
                write!(f, "cannot normalize by non-positive TL yield {v}")
            }
            Error::DegenerateLandscape => write!(f, "landscape is constant"),
            Error::EmptySpectrum => write!(f, "ion spectrum is empty"),
            Error::MissingCompound(c) => write!(f, "reagent bank has no entry for {c}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
