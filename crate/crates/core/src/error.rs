use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("particle count must be at least 2, got {0}")]
    TooFewParticles(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate temperature T_{particle} = {value:e} (floor {floor:e})", particle = particle + 1)]
    DegenerateTemperature {
        particle: usize,
        value: f64,
        floor: f64,
    },

    #[error("index {index} out of range for {n} particles")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("matrix is not symmetric at ({row}, {col})", row = row + 1, col = col + 1)]
    NotSymmetric { row: usize, col: usize },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "integration failed at t = {time} (stage {stage}): T_{particle} = {value:e}",
        particle = particle + 1
    )]
    Integration {
        time: f64,
        stage: usize,
        particle: usize,
        value: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
