use thiserror::Error;

/// A single failed identity found while validating input data.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Violation {
    pub identity: String,
    pub residual: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (residual {:.3e})", self.identity, self.residual)
    }
}

#[derive(Debug, Error)]
pub enum NahmError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model solution: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Violation>),

    #[error("su(2) relations violated (residual {0:.3e})")]
    Su2Relations(f64),

    #[error("spectrum points collide modulo the dual lattice: {0}")]
    NonInjectiveSpectrum(String),

    #[error("mode enumeration exceeds the hard limit of {limit} modes")]
    TooManyModes { limit: usize },

    #[error("integration blew up; last valid t = {t_last}")]
    BlowUp { t_last: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("spectral gap {gap:.3e} below threshold {threshold:.3e}")]
    Gap { gap: f64, threshold: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("link rejected: smallest overlap singular value {smin:.3e}")]
    LinkRejected { smin: f64 },

    #[error("S^1 x T^2 split unavailable: {0}")]
    SplitUnavailable(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parabolic weight {0} outside (-1, 0]")]
    ParabolicWeight(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NahmError>;
