use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("knopf-constant profile has no cap at infinity: the total integral of e^f diverges")]
    NoCapAtInfinity,

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("metric is not positive definite at this point")]
    NotPositiveDefinite,

    #[error("formula only valid on the cap ray r <= -delta (got r = {r})")]
    OutsideCapRay { r: f64 },

    #[error("singular flow equation: phi_r = {value:e} <= 0 at node {node} (r = {r})")]
    SingularEquation { node: usize, r: f64, value: f64 },

    #[error("flow invariant violated at node {node} (r = {r}): {what}")]
    InvariantViolation {
        node: usize,
        r: f64,
        what: &'static str,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least {needed} snapshots, got {got}")]
    NotEnoughSnapshots { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures raised while advancing the flow.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::SingularEquation { .. } | Error::InvariantViolation { .. }
        )
    }
}
