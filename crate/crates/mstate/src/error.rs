//! Error type shared across the crate.
//!
//! Every fallible operation returns [`Result`]. Validation failures name the
//! offending field or cell so that configuration mistakes surface as readable
//! messages rather than as NaNs deep inside a sweep.

/// Crate-wide error enumeration.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration field failed validation.
    #[error("invalid configuration: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    /// The pivot time does not lie on the time grid.
    #[error("pivot time {pivot} is not a grid point (step {step}, max {t_max})")]
    PivotOffGrid { pivot: f64, step: f64, t_max: f64 },

    /// A state label was not found in the state space.
    #[error("unknown state label `{0}`")]
    UnknownState(String),

    /// Total one-step jump probability exceeded one somewhere on the grid.
    /// The single-draw thinning scheme is then invalid; refine the step.
    #[error(
        "total one-step jump probability {prob:.6} exceeds 1 at t={t:.6}, duration {duration:.6}; \
         reduce the step size"
    )]
    StepProbabilityOverflow { t: f64, duration: f64, prob: f64 },

    /// A conditioning cell selected for estimation contains no paths.
    #[error("conditioning cell `{label}` is empty: no simulated path matches it at the pivot")]
    EmptyCell { label: String },

    /// Two objects that must share grid, pivot and state space do not.
    #[error("inconsistent ensemble artifacts: {0}")]
    InconsistentEnsemble(String),

    /// A free-policy scheme declared a transition payment on an exercise
    /// transition, which the product representation cannot carry.
    #[error(
        "free-policy scheme declares a transition payment on the exercise transition {from}->{to}; \
         lump sums at the exercise time are not representable"
    )]
    PaymentOnExerciseTransition { from: String, to: String },

    /// A scheme sojourn atom coincides with the realized exercise time of a
    /// path while the path occupies the paying state, so the scaled and
    /// unscaled readings of that atom disagree.
    #[error(
        "path {path}: sojourn payment atom at t={t:.6} coincides with the realized exercise time; \
         the free-policy representation is ambiguous there"
    )]
    CollisionAtExercise { path: usize, t: f64 },

    /// Discount factors must be strictly positive to form weight ratios.
    #[error("discount factor is not strictly positive at index {index}")]
    NonPositiveDiscount { index: usize },

    /// The second moment fell below the squared first moment by more than
    /// numerical tolerance, indicating inconsistent inputs.
    #[error(
        "conditional variance {variance:.6e} is negative beyond tolerance {tolerance:.6e}; \
         the surfaces and rates are not from one consistent ensemble"
    )]
    NegativeVariance { variance: f64, tolerance: f64 },

    /// Mismatched array dimensions between cooperating objects.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Underlying I/O failure while reading or writing pipeline artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV encoding or decoding failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON encoding or decoding failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
