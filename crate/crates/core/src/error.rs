use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must lie in (0, 1/2], got {0}")]
    AlphaOutOfRange(f64),
    #[error("scale constant c must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("subsample size k = {k} must be odd and at most n = {n}")]
    InvalidSubsample { n: u64, k: u64 },
    #[error("median requested of an even-length sample (len {0})")]
    EvenSample(usize),
    #[error("rank {rank} outside 1..={n}")]
    RankOutOfRange { rank: u64, n: u64 },
    #[error("cascade depth {depth} outside 1..={max}")]
    DepthOutOfRange { depth: u32, max: u32 },
    #[error("point {0} is not on the dyadic grid of the path")]
    OffGrid(String),
    #[error("invalid dyadic rational {numerator}/2^{level}")]
    InvalidDyadic { numerator: u64, level: u32 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
