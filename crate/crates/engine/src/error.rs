use thiserror::Error;

use crate::jetalg::ParseError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid jet space: {0}")]
    Space(String),
    #[error("nonlocal variable `{0}` has no total derivative outside a covering")]
    NonlocalPresent(String),
    #[error("nonlocal obstruction: {0}")]
    NonlocalObstruction(String),
    #[error("helmholtz condition fails: {0}")]
    Helmholtz(String),
    #[error("laurent obstruction: {0}")]
    Laurent(String),
    #[error("form of degree {degree} has no differential in dimension {n}")]
    TopDegree { degree: usize, n: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("presentation: {0}")]
    Presentation(String),
    #[error("confluence failure for {jet}: {left} vs {right}")]
    Confluence {
        jet: String,
        left: String,
        right: String,
    },
    #[error("prolongation limit {limit} exceeded while reducing {jet}")]
    ProlongationLimit { jet: String, limit: usize },
    #[error("empty ansatz")]
    EmptyAnsatz,
    #[error("no solution within the ansatz: {0}")]
    NoSolution(String),
    #[error("covering: {0}")]
    Covering(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<String> for Error {
    fn from(msg: String) -> Self {
        Error::Unsupported(msg)
    }
}
