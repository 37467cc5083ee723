use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecError {
    #[error("divergence is not defined between a {0} and a {1}")]
    UnsupportedPair(&'static str, &'static str),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("weight vector has length {got}, expected {expected}")]
    WeightDim { expected: usize, got: usize },

    #[error("mixture of {0} outcomes is not representable")]
    MixtureUnsupported(&'static str),

    #[error("models disagree on the number of decisions ({expected} vs {got})")]
    DecisionCountMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("divergence {0} is infinite for some model; the objective would be unbounded below")]
    UnsupportedDivergence(String),

    #[error("every model assigns zero likelihood to the observation")]
    AllZeroLikelihood,

    #[error("active set is empty")]
    EmptyActiveSet,

    #[error("unknown context {0}")]
    UnknownContext(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("gamma {gamma} is below the required threshold {threshold}")]
    GammaTooSmall { gamma: f64, threshold: f64 },

    #[error("spanner did not converge within {0} swaps")]
    NonconvergenceGuard(usize),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
}

impl DecError {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            DecError::UnsupportedPair(..) => "unsupported_pair",
            DecError::InvalidDistribution(_) => "invalid_distribution",
            DecError::WeightDim { .. } => "weight_dim",
            DecError::MixtureUnsupported(_) => "mixture_unsupported",
            DecError::DecisionCountMismatch { .. } => "decision_count_mismatch",
            DecError::IndexOutOfRange { .. } => "index_out_of_range",
            DecError::LpInfeasible => "lp_infeasible",
            DecError::LpUnbounded => "lp_unbounded",
            DecError::NumericFailure(_) => "numeric_failure",
            DecError::UnsupportedDivergence(_) => "unsupported_divergence",
            DecError::AllZeroLikelihood => "all_zero_likelihood",
            DecError::EmptyActiveSet => "empty_active_set",
            DecError::UnknownContext(_) => "unknown_context",
            DecError::InvalidParams(_) => "invalid_params",
            DecError::GammaTooSmall { .. } => "gamma_too_small",
            DecError::NonconvergenceGuard(_) => "nonconvergence_guard",
            DecError::InvalidEmbedding(_) => "invalid_embedding",
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            DecError::LpInfeasible
                | DecError::LpUnbounded
                | DecError::NumericFailure(_)
                | DecError::NonconvergenceGuard(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, DecError>;
