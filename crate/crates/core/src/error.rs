use thiserror::Error;

/// Errors raised by grid construction and quadrature.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid resolution too small: nr = {nr}, ntheta = {ntheta} (both must be >= 2)")]
    ResolutionTooSmall { nr: usize, ntheta: usize },
    #[error("invalid disk radius {0}")]
    InvalidRadius(f64),
    #[error("region {0} is not a half unit disk")]
    NotHalfDisk(String),
    #[error("region {0} is unbounded")]
    Unbounded(String),
}

/// Errors raised while evaluating norms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),
    #[error("non-finite value at node {node} (|k| = {modulus:e})")]
    NonFinite { node: usize, modulus: f64 },
    #[error("need at least {min} pairs, got {got}")]
    TooFewPairs { min: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Errors raised by the Cauchy transform and its checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CauchyError {
    #[error("target {re} + {im}i coincides with a quadrature node")]
    TargetOnNode { re: f64, im: f64 },
    #[error("oracle resolution {0} below the minimum of 64")]
    OracleTooCoarse(usize),
    #[error("singular exponents must lie in (0, 2): mu = {mu}, nu = {nu}")]
    ExponentOutOfRange { mu: f64, nu: f64 },
    #[error("the two singular points coincide")]
    CoincidentPoints,
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Errors raised by the Dbar operator and the Neumann solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DbarError {
    #[error("x = 0 is not admissible: the half-line indicators are undefined there")]
    ZeroX,
    #[error("target {re} + {im}i coincides with a quadrature node")]
    TargetOnNode { re: f64, im: f64 },
    #[error("exponential factor of modulus {modulus} exceeds 1 inside an active integrand")]
    UnboundedExponential { modulus: f64 },
    #[error("Neumann iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },
    #[error("Divergence: Neumann iterates grew for {streak} consecutive iterations (change {last_change:e} at iteration {iterations})")]
    Divergence {
        iterations: usize,
        streak: usize,
        last_change: f64,
    },
    #[error("invalid solver parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Errors raised by potential reconstruction and its checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AknsError {
    #[error("x grid must exclude 0")]
    ZeroInGrid,
    #[error(
        "finite-difference points must share the sign of x0 and be nonzero: x0 = {x0}, hx = {hx}"
    )]
    StencilCrossesZero { x0: f64, hx: f64 },
    #[error("spectral data norm {norm} is not below B = {bound}")]
    NormAboveBound { norm: f64, bound: f64 },
    #[error("reconstruction failed at x = {x}: {message}")]
    Incomplete { x: f64, message: String },
    #[error(transparent)]
    Dbar(#[from] DbarError),
    #[error(transparent)]
    Norm(#[from] NormError),
}
