use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice geometry: {0}")]
    InvalidGeometry(String),

    #[error("states live on different lattice geometries")]
    GeometryMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (max |U^dag U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid coin: {0}")]
    InvalidCoin(String),

    #[error("inconsistent intervention phases: {0}")]
    InconsistentPhases(String),

    #[error("invalid intervention plan: {0}")]
    InvalidPlan(String),

    #[error("coin and intervention do not satisfy the conjugation relation")]
    NotAdmissible,

    #[error("torus of size {size} is too small, need more than {required} sites per axis")]
    TorusTooSmall { size: usize, required: usize },

    #[error("series value {value} at index {index} is outside [0, 1]")]
    SeriesOutOfRange { index: usize, value: f64 },
}
