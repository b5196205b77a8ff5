use thiserror::Error;

/// Errors surfaced by the tensor algebra, solver, and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("imaginary residue {got:.3e} exceeds {limit:.3e} relative; upstream produced a non-conjugate-symmetric spectrum")]
    ImaginaryResidueTooLarge { got: f64, limit: f64 },

    #[error("rank {r} out of range, must satisfy 1 <= r <= {max}")]
    RankOutOfRange { r: usize, max: usize },

    #[error("non-finite value encountered in {0}; solver diverged")]
    NonFinite(&'static str),

    #[error("sequence has {got} frames but a window needs {need}")]
    TooFewFrames { got: usize, need: usize },

    #[error("window plan and target list do not align: {0}")]
    AlignmentMismatch(String),

    #[error("bad magic {0:?}, expected binary PGM (\"P5\")")]
    BadMagic(String),

    #[error("truncated PGM payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("unsupported PGM maxval {0}, expected 255 or 65535")]
    UnsupportedMaxval(u32),

    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),

    #[error("x coordinates must be sorted ascending")]
    UnsortedInput,

    #[error("coordinate lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{0} selftest check(s) failed")]
    SelftestFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
