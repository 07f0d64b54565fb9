use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coherent state |alpha| = {alpha_abs} is not representable with n_max = {n_max}")]
    TruncationUnsafe { alpha_abs: f64, n_max: usize },

    #[error("{}truncation tail population {tail:.3e} exceeds 1e-6; increase n_max", step_prefix(*.step))]
    Leaky { tail: f64, step: Option<usize> },

    #[error("position grid too narrow: integrated mass {mass:.6} < 0.999")]
    GridTooNarrow { mass: f64 },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("model {model} is only defined on the x quadrature (phi_minus in {{0, pi}}), got phi_minus = {phi_minus}")]
    UnsupportedQuadrature { model: &'static str, phi_minus: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("curvature fit failed: {0}")]
    CurvatureFit(String),

    #[error("ill-conditioned carrier fit: {0}")]
    IllConditioned(String),

    #[error("kinetic bound {bound} is infeasible on this grid (smallest attainable Fisher value {minimum:.4e})")]
    InfeasibleBound { bound: f64, minimum: f64 },

    #[error("solver failure: {0}")]
    Solver(String),
}

fn step_prefix(step: Option<usize>) -> String {
    match step {
        Some(s) => format!("step {s}: "),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
