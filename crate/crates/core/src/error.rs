use thiserror::Error;

/// Errors produced by the series engine, network model, constructors,
/// verifier, planner and trainer.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("series shape mismatch: ({n_left} vars, cap {cap_left}) vs ({n_right} vars, cap {cap_right})")]
    SeriesMismatch {
        n_left: usize,
        cap_left: u32,
        n_right: usize,
        cap_right: u32,
    },

    #[error("degree cap {cap} is below the polynomial degree {degree}")]
    CapTooSmall { cap: u32, degree: u32 },

    #[error("activation `{0}` is not analytic; it has no Taylor expansion here")]
    NonAnalytic(&'static str),

    #[error("activation `{name}` has zero Taylor coefficient of degree {degree}, required by {required_by}")]
    ZeroCoefficient {
        name: &'static str,
        degree: usize,
        required_by: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("non-finite value produced at layer {layer}")]
    NonFinite { layer: usize },

    #[error("activation mismatch: `{0}` vs `{1}`")]
    ActivationMismatch(&'static str, &'static str),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("polynomial parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("delta^{degree} underflows for delta = {delta:e}")]
    DeltaUnderflow { delta: f64, degree: u32 },

    #[error("delta search reached floor {floor:e} without meeting epsilon {epsilon:e}; best error {best:e}")]
    DeltaFloor { floor: f64, epsilon: f64, best: f64 },

    #[error("measured error {measured:e} does not reach epsilon {epsilon:e}")]
    EpsilonNotReached { epsilon: f64, measured: f64 },

    #[error("linear system is singular or ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("recursion domain violated: need n > {min_n} for k = {k} (b1 must exceed {b1_floor})")]
    PlanDomain { k: usize, min_n: f64, b1_floor: f64 },

    #[error("training diverged at step {step}")]
    Diverged { step: usize },

    #[error("network document: {0}")]
    Document(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
