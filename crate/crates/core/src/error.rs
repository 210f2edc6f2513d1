use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank deficient: column {column} has residual norm {norm:e} below tolerance {tolerance:e}")]
    RankDeficient {
        column: usize,
        norm: f64,
        tolerance: f64,
    },

    #[error("invalid constellation size {0}: square QAM needs M = 4, 16, 64 or 256")]
    InvalidConstellationSize(usize),

    #[error("rotated constellation has repeated {component} parts; coordinate interleaving would lose rank")]
    RotationCollision { component: &'static str },

    #[error("{0}")]
    ConstellationKind(String),

    #[error("unknown code `{0}` (expected one of ciod2, proposed2x2, ciod4, proposed4x2, alamouti, golden)")]
    UnknownCode(String),

    #[error("wrong number of symbols for {code}: expected {expected}, got {got}")]
    SymbolCount {
        code: String,
        expected: usize,
        got: usize,
    },

    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    SearchTooLarge { size: f64, limit: f64 },

    #[error("coding gain is undefined for a rank-deficient code")]
    RankDeficientCode,

    #[error("invalid configuration: {0}")]
    Config(String),
}
