use thiserror::Error;

use crate::tensor::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not reach tolerance {tol:e}: achieved error {achieved:e} after {evals} evaluations")]
    Quadrature { tol: f64, achieved: f64, evals: usize },

    #[error("integrand returned {value} at ({}, {})", .at.x, .at.y)]
    BadIntegrand { value: f64, at: Point },

    #[error("point ({}, {}) lies outside the mesh", .0.x, .0.y)]
    OutsideMesh(Point),

    #[error("cell {0} is not contained in a single mesh triangle")]
    CellNotResolved(usize),

    #[error("region partition is not resolved by the mesh (triangle {0} straddles an interface)")]
    RegionNotResolved(usize),

    #[error("degenerate triangle {0} (zero area)")]
    DegenerateTriangle(usize),

    #[error("field does not match the mesh: {0}")]
    FieldMismatch(String),

    #[error("k = {k} is not grid-compatible: {reason}")]
    NotGridCompatible { k: usize, reason: String },

    #[error("translated supports overlap: {0}")]
    Overlap(String),

    #[error("plastic strain is not deviatoric (|tr| = {trace:e})")]
    NotDeviatoric { trace: f64 },

    #[error("damage value {0} outside [0, 1]")]
    AlphaOutOfRange(f64),

    #[error("invalid material law: {0}")]
    Material(String),

    #[error("{solver} hit its iteration cap ({iterations}) with residual {residual:e}")]
    IterationCap { solver: &'static str, iterations: usize, residual: f64 },

    #[error("energy increased across an alternating sweep: {before} -> {after}")]
    EnergyIncrease { before: f64, after: f64 },

    #[error("inconclusive fit: {0}")]
    InconclusiveFit(String),

    #[error("declared limit inconsistent with pairings: {0}")]
    InconsistentLimit(String),

    #[error("constraint residual {residual:e} above tolerance at k = {k}")]
    ConstraintResidual { k: usize, residual: f64 },

    #[error("inadmissible competitor: {0}")]
    Inadmissible(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that stem from user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::NotGridCompatible { .. } | Error::Overlap(_) | Error::Invalid(_) | Error::Material(_)
        )
    }
}
