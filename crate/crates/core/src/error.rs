use thiserror::Error;

use crate::lattice_qan::LatticePoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid cell: {0}")]
    InvalidCell(String),
    #[error("invalid direction: {0}")]
    InvalidDirection(String),
    #[error("{point} is not a vertex of {cell}")]
    NotAVertex { cell: String, point: LatticePoint },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("singular evaluation of {what}")]
    SingularEvaluation { what: String },
    #[error("no field value at {0}")]
    MissingField(LatticePoint),
    #[error("missing parameter alpha for direction {0}")]
    MissingParameter(usize),
    #[error("Gauss-Newton did not converge after {iterations} iterations (max residual {max_residual:e})")]
    ConvergenceFailure {
        iterations: usize,
        max_residual: f64,
    },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("degenerate linear coefficient on face {face}")]
    DegenerateCoefficient { face: String },
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),
    #[error("{0} is not an interior vertex")]
    NotInterior(LatticePoint),
    #[error("invalid flower: {0}")]
    InvalidFlower(String),
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
