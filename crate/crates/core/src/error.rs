use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("subdivision violation: {0}")]
    Subdivision(String),

    #[error("constraint construction error: {0}")]
    Constraint(String),

    #[error("matrix not positive definite: pivot {pivot} has value {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("indefinite operator at iteration {iteration}: curvature {curvature:e}")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
