use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record at line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },
    #[error("timestamps not strictly increasing at line {line}: {prev} then {next}")]
    NonMonotoneTimestamps { line: usize, prev: i64, next: i64 },
    #[error("timestamp gap: expected {expected}, found {found} (interval {interval}s)")]
    TimestampGap {
        expected: i64,
        found: i64,
        interval: u64,
    },
    #[error("negative qps {value} at line {line}")]
    NegativeQps { line: usize, value: f64 },
    #[error("non-finite qps at line {line}")]
    NonFiniteQps { line: usize },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("window size {window}s must be a positive multiple of the sample interval {interval}s")]
    InvalidWindow { window: u64, interval: u64 },
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("trace spans {span}s, need at least {needed}s")]
    TraceTooShort { span: u64, needed: u64 },

    #[error("lag offset set is empty")]
    EmptyLagSet,
    #[error("trace has {len} windows, shorter than max lag {max_lag}")]
    TraceShorterThanLag { len: usize, max_lag: usize },
    #[error("feature rows are empty")]
    EmptyRows,
    #[error("grid dimension `{dim}` is empty")]
    EmptyGrid { dim: &'static str },
    #[error("{rows} rows cannot be split into {folds} cross-validation folds")]
    TooFewRowsForFolds { rows: usize, folds: usize },
    #[error("forecast horizon must be positive")]
    InvalidHorizon,
    #[error("length mismatch: {actual} actuals vs {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("all actual values are zero, MAPE undefined")]
    AllActualsZero,

    #[error("capacity threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),

    #[error("slot {slot} demands {demand} replicas, above max_replicas {max}")]
    InfeasibleSlot { slot: usize, demand: u32, max: u32 },
    #[error("plan graph has no slots")]
    EmptyGraph,
    #[error("sink unreachable in plan graph")]
    UnreachableSink,
    #[error("baseline plan has zero replica-hours")]
    BaselineZero,
    #[error("plans cover different durations: {left}s vs {right}s")]
    DurationMismatch { left: u64, right: u64 },

    #[error("metric sample window is empty")]
    EmptyMetricWindow,
    #[error("scaling threshold t* must be positive, got {0}")]
    NonPositiveTarget(f64),

    #[error("histogram bin edges differ")]
    HistogramBinMismatch,
    #[error("histogram smoothing epsilon must be positive")]
    NonPositiveSmoothing,
    #[error("no samples left after the active-hours filter")]
    EmptyAfterFilter,
    #[error("policy emitted {0} replicas, minimum is 1")]
    ReplicasBelowOne(u32),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported schema_version {0}, expected 1")]
    SchemaVersion(u32),
    #[error("{path}: {source}")]
    FileIo {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Usage and configuration mistakes exit with code 2; everything else
    /// (infeasibility, internal failures) exits with code 1.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::MalformedRecord { .. }
                | Error::NonMonotoneTimestamps { .. }
                | Error::TimestampGap { .. }
                | Error::NegativeQps { .. }
                | Error::NonFiniteQps { .. }
                | Error::EmptyTrace
                | Error::InvalidWindow { .. }
                | Error::TooFewSamples { .. }
                | Error::TraceTooShort { .. }
                | Error::EmptyLagSet
                | Error::TraceShorterThanLag { .. }
                | Error::EmptyRows
                | Error::EmptyGrid { .. }
                | Error::TooFewRowsForFolds { .. }
                | Error::InvalidHorizon
                | Error::LengthMismatch { .. }
                | Error::NonPositiveThreshold(_)
                | Error::NonPositiveTarget(_)
                | Error::NonPositiveSmoothing
                | Error::InvalidConfig(_)
                | Error::SchemaVersion(_)
                | Error::FileIo { .. }
                | Error::Toml(_)
        )
    }
}
