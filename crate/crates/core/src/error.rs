use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("initial vector is not a probability vector (sum = {sum})")]
    NonStochasticAlpha { sum: f64 },
    #[error("invalid subintensity matrix: {0}")]
    InvalidSubintensity(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("resolvent sI - T is singular at s = {0}")]
    SingularResolvent(String),
    #[error("heavy-tail law has no finite mean: {0}")]
    InfiniteMean(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid model component: {0}")]
    InvalidComponent(String),
    #[error("safety loading violated: drift margin {margin:.6} <= 0")]
    SafetyLoadingViolated { margin: f64 },
    #[error("transform diverges at s = {0}")]
    TransformDivergence(String),
    #[error("spurious root coincides with a genuine root near {0}")]
    DegenerateCancellation(String),
    #[error("matrix is singular: {0}")]
    SingularMatrix(String),
    #[error("polynomial root polishing failed: {0}")]
    IllConditioned(String),
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),
    #[error("grid step mismatch: {0} vs {1}")]
    StepMismatch(f64, f64),
    #[error("expected {expected} roots with positive real part, found {found}")]
    RootCountMismatch { expected: usize, found: usize },
    #[error("roots are not simple: {0}")]
    NonSimpleRoots(String),
    #[error("left eigen-row vanishes at root {0}")]
    ZeroRow(String),
    #[error("root matrix is singular: {0}")]
    SingularLambda(String),
    #[error("imaginary residue {0:e} exceeds truncation threshold")]
    ImaginaryResidue(f64),
    #[error("derivative of det F_q vanishes at {0}")]
    ZeroDerivative(String),
    #[error("residue sums do not match the initial value: {0}")]
    ResidueImbalance(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("kappa is not integrable: {0}")]
    NonIntegrableKappa(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("Monte Carlo half-width {half_width:e} exceeds tolerance {tolerance:e}")]
    InsufficientPaths { half_width: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
