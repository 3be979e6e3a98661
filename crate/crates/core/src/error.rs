use thiserror::Error;

/// Errors raised by the dynamics engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate coupling: both well couplings are zero")]
    DegenerateCoupling,

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("non-positive rate gamma = {0}")]
    NonPositiveGamma(f64),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("asymptotic limit undefined: {0}")]
    UndefinedAsymptote(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("integrator failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("survival probability vanished (P0 = {p0:e}) at t = {t}")]
    VanishingSurvival { t: f64, p0: f64 },

    #[error("null-record norm vanished (norm = {norm:e}) at t = {t}")]
    VanishingNorm { t: f64, norm: f64 },

    #[error("initial state is not pure (purity = {purity})")]
    NotPure { purity: f64 },

    #[error("invalid seed: {0}")]
    InvalidSeed(String),

    #[error("recurrence guard violated: horizon {t_max} >= {limit} (0.2 of the revival time)")]
    RecurrenceGuard { t_max: f64, limit: f64 },

    #[error("short-time window violated: dt * bandwidth = {product} > 0.2")]
    ShortTimeWindow { product: f64 },

    #[error("diagonalization failed: {0}")]
    Diagonalization(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
