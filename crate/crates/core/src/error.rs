use std::fmt;

use thiserror::Error;

/// A single failed check on a configuration field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn join_fields(errors: &[FieldError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("axiom violation: {0}")]
    AxiomViolation(String),

    #[error("certificate failure: {0}")]
    CertificateFailure(String),

    #[error("boundary condition violated: {0}")]
    BoundaryViolation(String),

    #[error("singular state: {0}")]
    SingularState(String),

    #[error("no feasible starting configuration: {0}")]
    NoFeasibleStart(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("infeasible profile: {0}")]
    InfeasibleProfile(String),

    #[error("sign of dPhi/du is not constant in w at x = {x} (w = {w1} vs w = {w2})")]
    SignStructureViolation { x: f64, w1: f64, w2: f64 },

    #[error("competitor construction failed: {reason}\n{trace}")]
    ConstructionFailure { reason: String, trace: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid configuration: {}", join_fields(.0))]
    Validation(Vec<FieldError>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
