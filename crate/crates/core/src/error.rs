use thiserror::Error;

/// Failure modes of the kernels, solvers and minimizer.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value of {what} at t = {t}")]
    EvaluationDomain { what: &'static str, t: f64 },

    #[error("inverse of {what} unbounded: bracket for target {target} exceeded {guard}")]
    UnboundedInverse { what: &'static str, target: f64, guard: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("stationary start: right-hand side vanishes at anchor {anchor} (anchor must lie strictly between the wells)")]
    StationaryStart { anchor: f64 },

    #[error("step size underflow at t = {t}, y = {y} (h = {h}) before reaching the tail threshold")]
    Stiffness { t: f64, y: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudget { max_steps: usize, t: f64 },

    #[error("decay fit impossible: {0}")]
    FitDomain(String),

    #[error("line search stalled at iteration {iteration}: action {action}, gradient sup-norm {grad_norm}")]
    DescentStall { iteration: usize, action: f64, grad_norm: f64 },

    #[error("normalization failed: profile never crosses the anchor {anchor}")]
    Normalization { anchor: f64 },

    #[error("tail bound unavailable: {0}")]
    TailBound(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
