use thiserror::Error;

pub type Result<T, E = HeraldError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HeraldError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported layout: {0}")]
    UnsupportedLayout(String),

    /// A conditional state carries a Fock term outside the expected branch set.
    #[error("unexpected support term {term} (outcome {outcome})")]
    SupportMismatch { outcome: String, term: String },

    /// The requested (kind, d) combination violates a scheme validity constraint.
    #[error("invalid scheme {kind} with d = {d}: {reason}")]
    InvalidScheme {
        kind: String,
        d: u32,
        reason: String,
    },

    #[error("no closed form for {kind} at d = {d}")]
    NotApplicable { kind: String, d: u32 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HeraldError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        HeraldError::InvalidArgument(msg.into())
    }

    /// Process exit code a command-line front end should use.
    pub fn exit_code(&self) -> i32 {
        match self {
            HeraldError::Config(_) => 2,
            HeraldError::InvalidScheme { .. } | HeraldError::NotApplicable { .. } | HeraldError::Capacity(_) => 3,
            HeraldError::SupportMismatch { .. } => 4,
            _ => 1,
        }
    }

    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            HeraldError::InvalidArgument(_) => "invalid_argument",
            HeraldError::UnsupportedLayout(_) => "unsupported_layout",
            HeraldError::SupportMismatch { .. } => "support_mismatch",
            HeraldError::InvalidScheme { .. } => "invalid_scheme",
            HeraldError::NotApplicable { .. } => "not_applicable",
            HeraldError::Capacity(_) => "capacity",
            HeraldError::Config(_) => "config",
            HeraldError::Io(_) => "io",
            HeraldError::Json(_) => "json",
            HeraldError::Csv(_) => "csv",
        }
    }
}
