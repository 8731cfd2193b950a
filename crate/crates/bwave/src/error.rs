//! Crate-wide error type.

use thiserror::Error;

use crate::geometry::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A user-supplied matrix failed the unitarity check.
    #[error("matrix is not unitary (max elementwise deviation of M\u{2020}M from I is {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    /// A state vector is not normalized within tolerance.
    #[error("state is not normalized (\u{2211}|amp|\u{00b2} = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    /// A state amplitude is NaN or infinite.
    #[error("non-finite amplitude in state")]
    NonFiniteAmplitude,

    /// Conditioning on a branch whose Born probability is zero.
    #[error("degenerate collapse: branch probability {probability:.3e} leaves no conditional state")]
    DegenerateBranch { probability: f64 },

    #[error("qubit count {n} unsupported (1..=3)")]
    UnsupportedQubitCount { n: usize },

    #[error("qubit index {index} out of range for {n}-qubit state")]
    QubitIndexOutOfRange { index: usize, n: usize },

    /// An operation that needs a finite carrier speed was called in
    /// `instantaneous` or `none` mode.
    #[error("b-wave transit time undefined: mode `{mode}` has no finite speed")]
    NoFiniteBWaveSpeed { mode: &'static str },

    /// The scenario fails one or more feasibility conditions.
    #[error("infeasible scenario: {}", format_violations(.violations))]
    Infeasible { violations: Vec<Violation> },

    #[error("counts table is empty (n = 0)")]
    EmptyCounts,

    #[error("no blocks to decode")]
    NoBlocks,

    #[error("ground truth has {truth} bits but {blocks} blocks were supplied")]
    TruthLengthMismatch { truth: usize, blocks: usize },

    #[error("degenerate pooled variance: every trial on both sides fell in the same channel")]
    DegenerateVariance,

    #[error("invalid test parameter {name} = {value} (must lie strictly inside (0, 1))")]
    InvalidProportion { name: &'static str, value: f64 },

    #[error("effect |p_on - p_off| = {effect:.3e} requires more than {cap} trials per condition")]
    EffectTooSmall { effect: f64, cap: u64 },

    #[error("scenario file error: {0}")]
    ScenarioFile(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
