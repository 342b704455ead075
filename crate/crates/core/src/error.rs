use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },
    #[error("{what} did not converge within {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("function is negative on the whole search interval")]
    NoRoot,
    #[error("input power must be non-negative, got {0:e}")]
    NegativeInput(f64),
    #[error("harvest target {target:e} W exceeds saturation output {saturation:e} W")]
    TargetExceedsSaturation { target: f64, saturation: f64 },
    #[error("channel matrix is rank deficient")]
    RankDeficientChannel,
    #[error("cutting plane stopped at {cuts} cuts with certified bounds [{lower:e}, {upper:e}]")]
    PsiNotConverged { lower: f64, upper: f64, cuts: usize },
    #[error("dominant eigenvalue of the dual matrix is not simple")]
    DegenerateEigenspace,
    #[error("recovered beamformer failed the optimality check: {0}")]
    OptimalityCheckFailed(&'static str),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("brute-force grid found no feasible point")]
    ResolutionTooCoarse,
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}
