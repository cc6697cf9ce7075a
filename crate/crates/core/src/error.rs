use thiserror::Error;

/// Errors raised anywhere in the tuning pipeline.
#[derive(Debug, Error)]
pub enum CrfError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("degenerate analysis window: {0}")]
    DegenerateWindow(String),

    #[error("baseline band power is zero; SNR undefined")]
    DegenerateBaseline,

    #[error("recording `{site}` has no trials at contrast {contrast}")]
    IncompleteRecording { site: String, contrast: f64 },

    #[error("degenerate input range: min ({min}) must be below max ({max})")]
    DegenerateRange { min: f64, max: f64 },

    #[error("all fuzzy membership weights vanished at phi = {0}")]
    DegenerateMembership(f64),

    #[error("{kind} expects {expected} parameters, got {got}")]
    ParamLength {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("no data points")]
    EmptyData,

    #[error("Levenberg-Marquardt step failed: damped normal matrix stayed singular")]
    StepFailure,

    #[error("optimizer diverged (non-finite cost)")]
    Divergence,

    #[error("singular linear system")]
    Singular,

    #[error("targets have zero variance; R^2 undefined")]
    DegenerateVariance,

    #[error("product of target and prediction means is zero; NMSE undefined")]
    DegenerateMean,

    #[error("curve is flat (maximum equals zero-contrast response); MI undefined")]
    FlatCurve,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CrfError> = std::result::Result<T, E>;
