use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    /// A factor in a denominator vanished. `factor` names it.
    #[error("pole at frequency {frequency}: factor {factor} vanishes")]
    Pole { factor: &'static str, frequency: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {dimension} exceeds cap {cap}")]
    DimensionCap { dimension: usize, cap: usize },

    #[error("Fock cutoff {n_max} exceeds hard cap {cap} (tail probability {tail:e})")]
    TruncationCap { n_max: usize, cap: usize, tail: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("state is mixed (purity {0}); the fluctuation test gives no separability verdict")]
    MixedState(f64),

    #[error("root finding failed: {0}")]
    Root(String),
}
