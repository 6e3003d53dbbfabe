//! Error type shared by all solver modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("grid axes must be even and hold at least 8 points, got {n:?}")]
    InvalidGrid { n: [usize; 3] },

    #[error("box lengths must be positive and finite, got {box_len:?}")]
    InvalidBox { box_len: [f64; 3] },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("exponent p = {p} outside the admissible range ({lo}, {hi})")]
    ExponentOutOfRange { p: f64, lo: f64, hi: f64 },

    #[error("p = {p} within {margin:e} of 10/3: derived constants degenerate (p*delta_p -> 2)")]
    ExponentDegenerate { p: f64, margin: f64 },

    #[error("lambda3 must be strictly negative, got {lambda3}")]
    NonNegativeLambda3 { lambda3: f64 },

    #[error("mass must be strictly positive, got {c}")]
    NonPositiveMass { c: f64 },

    #[error("mass c = {c} above the threshold c* = {c_star}: the barrier region is empty")]
    MassAboveThreshold { c: f64, c_star: f64 },

    #[error("no sign change on the bracket [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("shooting bracket not found below height {max_height}")]
    ShootingBracket { max_height: f64 },

    #[error("radial domain r_max = {r_max} too small: no sign-definite decay detected")]
    DomainTooSmall { r_max: f64 },

    #[error("profile mass check failed: expected {expected}, got {got}")]
    MassCheckFailed { expected: f64, got: f64 },

    #[error("profile residual {residual:.3e} above the acceptance tolerance {tol:.3e}")]
    OracleResidual { residual: f64, tol: f64 },

    #[error("cannot normalize the zero field")]
    ZeroField,

    #[error("instance outside the admissible regime: {0}")]
    Regime(String),

    #[error("dilation parameter must be positive, got {s}")]
    NonPositiveDilation { s: f64 },

    #[error(
        "no convergence after {iterations} iterations \
         (residual {residual:.3e}, pohozaev {pohozaev:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        pohozaev: f64,
    },

    #[error(
        "iterate left the well at iteration {iteration}: \
         gradient norm {grad:.6e} reached the cap {cap:.6e}"
    )]
    WellEscape {
        iteration: usize,
        grad: f64,
        cap: f64,
    },

    #[error(
        "mass leaking to the box boundary: fraction {fraction:.6} inside the \
         central half-box is below the required {required}"
    )]
    SupportOverflow { fraction: f64, required: f64 },

    #[error("backtracking exhausted at iteration {iteration}: step underflowed to {step:.3e}")]
    StepUnderflow { iteration: usize, step: f64 },

    #[error("density has no unique peak; cannot recenter")]
    FlatDensity,

    #[error(
        "evolution left the well at t = {t:.4}: gradient norm {grad:.6e} \
         exceeded the blow-up cap {cap:.6e}"
    )]
    BlowUp { t: f64, grad: f64, cap: f64 },

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}
