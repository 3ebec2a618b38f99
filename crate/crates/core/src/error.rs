use thiserror::Error;

use crate::multislicing::RobustWitness;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("parameter too small: {0}")]
    ParamTooSmall(String),
    #[error("matrix is not in the Lie algebra (relative residual {0:.3e})")]
    NotInAlgebra(f64),
    #[error("matrix is not in the group (relative defect {0:.3e})")]
    NotInGroup(f64),
    #[error("Cartan subspace is degenerate: {0}")]
    DegenerateCartan(String),
    #[error("ambient dimensions differ: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("radius must lie in (0, 1], got {0}")]
    InvalidRho(f64),
    #[error("bad exponents: {0}")]
    BadExponents(String),
    #[error("bad flag: {0}")]
    BadFlag(String),
    #[error("Lyapunov clusters are ambiguous: gap {gap:.3e} below noise {noise:.3e}")]
    ClusterAmbiguity { gap: f64, noise: f64 },
    #[error("hypothesis fails: sup angle {0:.3e} is below epsilon")]
    HypothesisFail(f64),
    #[error("scale must lie in (0, 1], got {0}")]
    InvalidEta(f64),
    #[error("level mismatch: {0}")]
    LevelMismatch(String),
    #[error("no admissible decomposition: mass {:.4} moved exceeds tau", .0.nu2_mass)]
    Infeasible(Box<RobustWitness>),
    #[error("parameters out of order: {0}")]
    ParamOrder(String),
    #[error("projection data is not perceptive: lhs {lhs:.4} > rhs {rhs:.4}")]
    NotPerceptive { lhs: f64, rhs: f64 },
    #[error("matrix is not unimodular (det {0})")]
    NotUnimodular(f64),
    #[error("empty sample")]
    EmptySample,
    #[error("vector is not orthogonal to the reference frame (component {0:.3e})")]
    NotOrthogonal(f64),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
