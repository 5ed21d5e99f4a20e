use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dagger| entry = {deviation:e})")]
    NonHermitianInput { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation is only defined for a qubit (N = 2), got N = {0}")]
    DimensionNotTwo(usize),

    #[error("dimension {0} is outside the supported range 1..=8")]
    UnsupportedDimension(usize),

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("state vector has zero norm")]
    ZeroNorm,

    #[error(
        "negative jump rate {min_eigenvalue:e} at t = {t} (threshold -{threshold:e}); \
         the unraveling is invalid at this point"
    )]
    NegativeRate {
        t: f64,
        min_eigenvalue: f64,
        threshold: f64,
        state: Vec<(f64, f64)>,
    },

    #[error("MCWF needs non-negative rates, but c_{channel}({t}) = {value}")]
    NegativeCoefficient { channel: usize, t: f64, value: f64 },

    #[error("total jump probability {probability} per step is too large (dt too coarse)")]
    TimestepTooLarge { probability: f64 },

    #[error("no basis with a real Choi representation was supplied")]
    CondTwoViolated,

    #[error("rates are not P-divisible: gamma1 + gamma3 = {g13}, gamma2 + gamma3 = {g23}")]
    NotPDivisible { g13: f64, g23: f64 },

    #[error("the check needs the explicit GKLS rates, but the representation carries a shift")]
    ExplicitFormRequired,

    #[error("A + PT(B) differs from the Choi matrix by {deviation:e}")]
    ReconstructionMismatch { deviation: f64 },

    #[error("time {0} is not a recorded grid time")]
    OffGridTime(f64),

    #[error("phase is undefined: the Bloch vector has no equatorial component")]
    UndefinedPhase,

    #[error("model is not a Pauli-diagonal qubit model: {0}")]
    NonPauliModel(String),

    #[error("no closed-form solution: {0}")]
    NoClosedForm(String),

    #[error("reference integrator lost trace preservation (drift {drift:e} at t = {t})")]
    StepInstability { t: f64, drift: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("initial state cannot be normalized: {0}")]
    Normalization(String),

    #[error("unknown unraveling `{0}`")]
    UnknownUnraveling(String),

    #[error("trajectory {index} failed: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
