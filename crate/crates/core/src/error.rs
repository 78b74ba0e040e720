use thiserror::Error;

/// Errors surfaced by state construction, model evaluation and audits.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state vector is not normalized (squared norm {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("direction is not a unit vector (squared norm {norm_sq})")]
    NotUnitVector { norm_sq: f64 },

    #[error("operator is not Hermitian (max |O - O†| entry {deviation})")]
    NonHermitian { deviation: f64 },

    #[error("operator is not an involution (max |O² - I| entry {deviation})")]
    NotInvolution { deviation: f64 },

    #[error("setting must lie in the x-z plane for model `{model}`")]
    NonPlanarSetting { model: String },

    #[error("malformed model `{model}`: {reason}")]
    MalformedModel { model: String, reason: String },

    #[error("model `{model}` has a joint kernel; per-party factor is undefined")]
    JointKernel { model: String },

    #[error("model `{model}` is ineligible for the joint-table construction: {reason}")]
    IneligibleModel { model: String, reason: String },

    #[error("grid step {step} does not divide 2π")]
    InvalidGridStep { step: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
