use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("signal contains no energy: {0}")]
    ZeroEnergySignal(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("region out of bounds: {0}")]
    RegionOutOfBounds(String),

    #[error("wavelet is not admissible: {0}")]
    NotAdmissible(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("degenerate variances: {0}")]
    DegenerateVariances(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("single-class input: {0}")]
    SingleClassInput(String),

    #[error("invalid band: {0}")]
    InvalidBand(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable class name, used in `error_class=...` output.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid-params",
            Error::ZeroEnergySignal(_) => "zero-energy-signal",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::RegionOutOfBounds(_) => "region-out-of-bounds",
            Error::NotAdmissible(_) => "not-admissible",
            Error::EmptyInput(_) => "empty-input",
            Error::DegenerateVariances(_) => "degenerate-variances",
            Error::InsufficientSamples(_) => "insufficient-samples",
            Error::SingleClassInput(_) => "single-class-input",
            Error::InvalidBand(_) => "invalid-band",
            Error::Parse(_) => "parse-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
