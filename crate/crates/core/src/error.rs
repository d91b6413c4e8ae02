use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("image must have at least one row and one column (got {rows}x{cols})")]
    EmptyImage { rows: usize, cols: usize },

    #[error("data length {len} does not match {rows}x{cols}")]
    LengthMismatch { rows: usize, cols: usize, len: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("malformed PGM header: {0}")]
    PgmHeader(String),

    #[error("unsupported PGM maxval {0} (only 1..=255 is supported)")]
    PgmMaxval(u32),

    #[error("truncated PGM data: expected {expected} bytes, found {found}")]
    PgmTruncated { expected: usize, found: usize },

    #[error("bad RAWF64 magic or header")]
    RawMagic,

    #[error("RAWF64 size mismatch: header needs {expected} body bytes, found {found}")]
    RawSize { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("PSF diameter {diameter} exceeds the smallest image side {side}")]
    PsfTooLarge { diameter: f64, side: usize },

    #[error("SNR is undefined for an all-zero signal")]
    UndefinedSnr,

    #[error("true image is identically zero")]
    ZeroReference,

    #[error("conjugate gradient breakdown at iteration {iteration}: zero curvature with nonzero residual")]
    CgBreakdown { iteration: usize },
}

impl Error {
    pub(crate) fn mismatch(a: (usize, usize), b: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            left_rows: a.0,
            left_cols: a.1,
            right_rows: b.0,
            right_cols: b.1,
        }
    }
}
