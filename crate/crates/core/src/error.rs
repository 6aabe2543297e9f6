use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("control {0} lies outside its admissible set")]
    Inadmissible(&'static str),
    #[error("degenerate diffusion: min eigenvalue of sigma sigma^T is {0:e}")]
    DegenerateDiffusion(f64),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("finite-difference solve became unstable at t = {t}: max |v| = {max_abs:e}")]
    Unstable { t: f64, max_abs: f64 },
    #[error("query out of range: {0}")]
    OutOfRange(String),
    #[error("unsupported problem: {0}")]
    Unsupported(String),
    #[error("malformed data: {0}")]
    Parse(String),
    #[error("missing input file {0}")]
    MissingInput(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
