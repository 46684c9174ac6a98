use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("resolution N = {0} is below the minimum of 16")]
    ResolutionTooSmall(usize),
    #[error("coincident cone points (cones {0} and {1})")]
    CoincidentCones(usize, usize),
    #[error("cone angle beta = {0} must lie in (0, 1)")]
    BadConeAngle(f64),
    #[error("overlap radius {0} must exceed 1 and stay inside the chart depth")]
    BadOverlap(f64),
    #[error("refinement depth {0} must be positive")]
    BadDepth(f64),
    #[error("field has {got} values, grid has {expected} nodes")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("field is not integrable: {0}")]
    NotIntegrable(String),
    #[error("malformed field document: {0}")]
    Document(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegularizationError {
    #[error("infeasible twist: degree identity gives s = 2 - mu - sum(1 - beta_i) = {0} < 0")]
    Infeasible(f64),
    #[error("twist density s + lap(chi) is negative (min {0})")]
    NegativeTwist(f64),
    #[error("degree bookkeeping broken: right-hand side has mean {0}")]
    NonzeroMean(f64),
    #[error("configured s = {configured} disagrees with degree identity s = {derived}")]
    DegreeMismatch { configured: f64, derived: f64 },
    #[error("quadrature did not converge near cone points")]
    Quadrature,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("initial potential is not admissible (min 1 + lap phi = {0})")]
    NotAdmissible(f64),
    #[error("line search failed to keep 1 + lap phi positive at t = {t}")]
    LineSearch { t: f64 },
    #[error(
        "Newton did not converge in {iterations} iterations at t = {t} (residual {residual:e})"
    )]
    MaxIterations {
        t: f64,
        iterations: usize,
        residual: f64,
    },
    #[error("linear solve failed at t = {t}: {reason}")]
    Linear { t: f64, reason: String },
    #[error("eigenvalue guard violated at t = {t}: lambda1 = {lambda1}")]
    Guard { t: f64, lambda1: f64 },
    #[error("inverse iteration did not converge")]
    Eigen,
    #[error("continuation step underflow; last good t = {last_t}")]
    StepUnderflow { last_t: f64 },
    #[error("delta must be positive, got {0}")]
    BadDelta(f64),
    #[error("extrapolation is not Cauchy: successive differences {0:?}")]
    NotCauchy(Vec<f64>),
    #[error(transparent)]
    Regularization(#[from] RegularizationError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("potential is not admissible (min 1 + lap phi = {0})")]
    NotAdmissible(f64),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("only complex dimension n = 1 is implemented (got {0})")]
    Dimension(usize),
    #[error("trace too coarse: {0}")]
    CoarseTrace(String),
    #[error("integrand overflow at alpha = {0}")]
    Overflow(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("cone {0} is not at a pole; radial analysis needs a polar cone")]
    NotPolar(usize),
    #[error("radius {0} is outside the refined annulus")]
    OutsideAnnulus(f64),
    #[error("epsilon {0} too large")]
    EpsilonTooLarge(f64),
    #[error("metric-weighted graph is disconnected")]
    Disconnected,
    #[error("density is not positive at node {0}")]
    NonPositive(usize),
    #[error("differences are not monotone: {0:?}")]
    NotMonotone(Vec<f64>),
    #[error("Ricci discrepancy {0:e} exceeds the order bound {1:e}")]
    Discrepancy(f64, f64),
    #[error("length quadrature failed: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Regularization(#[from] RegularizationError),
}
