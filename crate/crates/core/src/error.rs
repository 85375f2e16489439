use std::io;

use thiserror::Error;

/// Broad failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Format,
    Numeric,
    Param,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("truncated data: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("dimension overflow: {0:?}")]
    DimensionOverflow(Vec<u64>),

    #[error("index {index} does not fit in {bitwidth} bits")]
    IndexOutOfRange { index: u32, bitwidth: u32 },

    #[error("conjugate-symmetry violation: deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    SymmetryViolation { deviation: f64, tolerance: f64 },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("singular value decomposition did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("cholesky factorization failed at pivot {0}")]
    Cholesky(usize),

    #[error("odd column count {0}; pass the permissive flag to zero-pad")]
    OddWidth(usize),

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("calibration matrix has negative entry {value} at ({row}, {col})")]
    NegativeCalibration { row: usize, col: usize, value: f64 },

    #[error("calibration diagonal has zero norm")]
    ZeroDiagonal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_) => ErrorKind::Io,
            Error::BadMagic { .. }
            | Error::UnsupportedVersion(_)
            | Error::UnsupportedDtype(_)
            | Error::Truncated { .. }
            | Error::Malformed(_)
            | Error::DimensionOverflow(_) => ErrorKind::Format,
            Error::SymmetryViolation { .. }
            | Error::NonFinite
            | Error::NoConvergence { .. }
            | Error::Cholesky(_) => ErrorKind::Numeric,
            Error::IndexOutOfRange { .. }
            | Error::OddWidth(_)
            | Error::RankOutOfRange { .. }
            | Error::ShapeMismatch { .. }
            | Error::InvalidParam(_)
            | Error::NegativeCalibration { .. }
            | Error::ZeroDiagonal => ErrorKind::Param,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
