use alloc::string::String;
use core::fmt;

/// Errors raised by the core routines.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A matrix that must be symmetric is not (largest deviation reported).
    Asymmetric { deviation: f64 },
    /// Covariance matrix has an eigenvalue below the PSD tolerance.
    NotPsd { min_eigenvalue: f64 },
    /// Cholesky failed: the argument is not positive definite.
    NotPositiveDefinite,
    /// Numeric rank is below what the operation needs.
    RankDeficient { rank: usize, required: usize },
    /// Matrix is (numerically) singular where an inverse is needed.
    Singular,
    DimensionMismatch(String),
    InvalidInput(String),
    /// A scaling component is not a finite positive number.
    NonPositiveScaling { index: usize, value: f64 },
    /// The point lies outside the domain of the objective.
    OutsideDomain,
    /// The feasible polytope is empty.
    Infeasible,
    Unbounded,
    /// Constraint generation could not meet its post-condition.
    SeedExhausted { attempts: usize },
    /// A routine that needs a converged relaxation got an unconverged one.
    NotConverged { gap: f64, tol: f64 },
    /// Line search could not find any admissible step.
    LineSearchFailed,
    /// Iteration cap reached before the stopping test was met.
    IterationLimit { iterations: usize, residual: f64 },
    /// Problem too large for exhaustive enumeration.
    TooLarge { n: usize, cap: usize },
    NoFeasibleSolution,
    InconsistentBounds { ub: f64, lb: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Asymmetric { deviation } => write!(f, "matrix is not symmetric (deviation {deviation:e})"),
            Error::NotPsd { min_eigenvalue } => {
                write!(f, "matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")
            }
            Error::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            Error::RankDeficient { rank, required } => {
                write!(f, "numeric rank {rank} is below the required {required}")
            }
            Error::Singular => write!(f, "matrix is numerically singular"),
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NonPositiveScaling { index, value } => {
                write!(f, "scaling component {index} is not positive and finite ({value})")
            }
            Error::OutsideDomain => write!(f, "point is outside the objective domain"),
            Error::Infeasible => write!(f, "feasible region is empty"),
            Error::Unbounded => write!(f, "linear program is unbounded"),
            Error::SeedExhausted { attempts } => {
                write!(f, "constraint generation failed after {attempts} attempts")
            }
            Error::NotConverged { gap, tol } => {
                write!(f, "relaxation not converged (gap {gap:e} > tol {tol:e})")
            }
            Error::LineSearchFailed => write!(f, "line search found no admissible step"),
            Error::IterationLimit { iterations, residual } => {
                write!(f, "iteration limit {iterations} reached (residual {residual:e})")
            }
            Error::TooLarge { n, cap } => write!(f, "n = {n} exceeds the enumeration cap {cap}"),
            Error::NoFeasibleSolution => write!(f, "no feasible integer solution found"),
            Error::InconsistentBounds { ub, lb } => {
                write!(f, "upper bound {ub} is below lower bound {lb}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
