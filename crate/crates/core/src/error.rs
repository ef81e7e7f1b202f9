use thiserror::Error;

/// Errors raised while building, checking or serializing cubature rules.
#[derive(Debug, Error)]
pub enum CubatureError {
    #[error("invalid dimension {0}: need n >= 2")]
    InvalidDimension(usize),

    #[error("invalid moment spec: {0}")]
    InvalidSpec(String),

    #[error("monomial of total degree {0} is outside the stored moments (max 3)")]
    DegreeOutOfRange(u32),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid mass split: {0}")]
    InvalidSplit(String),

    #[error("infeasible moments: Hankel determinant m0*m2 - m1^2 = {hankel:e}")]
    InfeasibleMoments { hankel: f64 },

    #[error("inconsistent point mass at {node}: residuals m2 {m2_residual:e}, m3 {m3_residual:e}")]
    InconsistentAtom {
        node: f64,
        m2_residual: f64,
        m3_residual: f64,
    },

    #[error(
        "chain {chain} is infeasible: mass {mass:e} must exceed {lower_bound:e} \
         (Hankel determinant {hankel:e})"
    )]
    InfeasibleChain {
        chain: usize,
        mass: f64,
        lower_bound: f64,
        hankel: f64,
    },

    #[error("node count mismatch: {left} vs {right}")]
    NodeCountMismatch { left: usize, right: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CubatureError {
    /// True for errors caused by a mass split that leaves some chain without
    /// a positive two-point rule.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            CubatureError::InfeasibleChain { .. }
                | CubatureError::InfeasibleMoments { .. }
                | CubatureError::InconsistentAtom { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, CubatureError>;
