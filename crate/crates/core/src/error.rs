use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid deformation: {0}")]
    Deformation(String),

    #[error("path is not closed (max endpoint mismatch {mismatch:.3e})")]
    OpenPath { mismatch: f64 },

    #[error("invalid base flow: {0}")]
    BaseFlow(String),

    #[error("point ({x:.6}, {y:.6}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("complex indicial exponents for mode {mode}: discriminant {discriminant:.3e}")]
    ComplexExponents { mode: i32, discriminant: f64 },

    #[error("near-singular radial operator ({label}, mode {mode}): condition number {condition:.3e}")]
    IllConditioned {
        label: String,
        mode: i32,
        condition: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("particle left the domain at t = {t:.6}: (x, y) = ({x:.6}, {y:.6}), r = {r:.6}, boundary = {boundary:.6}")]
    ParticleEscaped {
        t: f64,
        x: f64,
        y: f64,
        r: f64,
        boundary: f64,
    },

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
