use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain parameters: {0}")]
    InvalidParams(String),

    #[error("site {site} out of range 1..={l}")]
    SiteOutOfRange { site: usize, l: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NonHermitian { defect: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("segment index {index} out of range for {segments}-pulse schedule")]
    SegmentOutOfRange { index: usize, segments: usize },

    #[error("sign profile requires pi-pulses, got angle {angle}")]
    UnsupportedPulseAngle { angle: f64 },

    #[error("schedule is not cyclic: pulse product deviates from identity by {defect:.3e}")]
    NonCyclic { defect: f64 },

    #[error("state is not normalized (norm deviation {defect:.3e})")]
    Unnormalized { defect: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
