use thiserror::Error;

pub type Result<T, E = WspError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WspError {
    #[error("step index {step} out of range (k = {k})")]
    StepOutOfRange { step: usize, k: usize },

    #[error("user index {user} out of range (n = {n})")]
    UserOutOfRange { user: usize, n: usize },

    #[error("invalid constraint {constraint}: {reason}")]
    InvalidConstraint { constraint: String, reason: String },

    #[error("authorisation function covers {found} steps, expected {expected}")]
    AuthorisationLength { expected: usize, found: usize },

    #[error("plan assigns {found} steps, expected {expected}")]
    PlanLength { expected: usize, found: usize },

    #[error("bell({0}) is out of range; supported range is 0..=30")]
    BellOutOfRange(usize),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("block label {choice} exceeds the next free label {block_count}")]
    InvalidChoice { choice: usize, block_count: usize },

    #[error("brute force would enumerate {plans} plans, above the cap of {cap}")]
    BruteForceCap { plans: u128, cap: u128 },

    #[error(
        "generic absorption of {constraint} needs {assignments} scope assignments, \
         above the limit of {limit}"
    )]
    AbsorptionLimit {
        constraint: String,
        assignments: u128,
        limit: u128,
    },

    #[error("cannot encode {constraint}: {reason}")]
    Unsupported { constraint: String, reason: String },

    #[error("decode failed: {0}")]
    Decode(String),

    #[error("generator parameter `{param}`: {reason}")]
    Generator { param: &'static str, reason: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
