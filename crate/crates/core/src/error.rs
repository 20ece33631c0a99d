use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A Runge–Kutta stage produced a non-finite value.
    #[error("overflow at t = {t}: state = {state:?}")]
    Overflow { t: f64, state: [f64; 3] },

    /// The state left the region `|x|_inf <= DIVERGENCE_CAP`.
    #[error("left expected region at t = {t}: state = {state:?}")]
    LeftRegion { t: f64, state: [f64; 3] },

    #[error("step budget of {max_steps} steps exhausted at t = {t}")]
    StepBudget { max_steps: u64, t: f64 },

    #[error("step size {h:e} below h_min required at t = {t}")]
    Stiffness { t: f64, h: f64 },

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Time at which an integration failure happened, if the error carries one.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            Error::Overflow { t, .. }
            | Error::LeftRegion { t, .. }
            | Error::StepBudget { t, .. }
            | Error::Stiffness { t, .. } => Some(*t),
            _ => None,
        }
    }
}
