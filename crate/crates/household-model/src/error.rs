use crate::model::RegimeClassification;
use thiserror::Error;

/// Errors produced by the model, the sensitivity engine, the numerical
/// oracle, and the sweep engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A weight or economy parameter is zero or negative.
    #[error("parameter {name} must be strictly positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    /// A weight or economy parameter is NaN or infinite.
    #[error("parameter {name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },

    /// gamma5, gamma6 and gamma7 are discount factors and must lie in (0, 1].
    #[error("discount weight {name} must lie in (0, 1], got {value}")]
    DiscountOutOfRange { name: &'static str, value: f64 },

    /// The instance is Corner or Singular; only Interior instances have a
    /// closed-form allocation.
    #[error("no interior solution: regime is {} (quantity-quality margin {})", .0.regime, .0.margin)]
    NotInterior(RegimeClassification),

    /// The solved fertility level would consume the entire wage.
    #[error("net income share 1 - tau*n = {share} is not positive")]
    NetIncomeNonPositive { share: f64 },

    /// A logarithm argument was zero or negative.
    #[error("log argument {term} must be strictly positive, got {value}")]
    NonPositiveArgument { term: &'static str, value: f64 },

    /// Finite-difference step must be positive and finite.
    #[error("finite-difference step must be positive and finite, got {value}")]
    InvalidStep { value: f64 },

    /// The numerical maximizer could not construct a strictly positive
    /// feasible starting point.
    #[error("no strictly positive feasible starting point")]
    NoFeasibleStart,

    /// Sweep grid contains no points.
    #[error("sweep grid is empty")]
    EmptyGrid,

    /// Sweep grid must be strictly increasing and positive.
    #[error("sweep grid must be strictly increasing and positive (violated at index {index})")]
    GridNotIncreasing { index: usize },

    /// The base instance of a sweep must itself be Interior.
    #[error("sweep base instance is not Interior: regime is {} (quantity-quality margin {})", .0.regime, .0.margin)]
    BaseNotInterior(RegimeClassification),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable tag used in CSV `regime` columns for skipped sweep points.
    pub fn tag(&self) -> String {
        match self {
            Error::NotInterior(class) => class.regime.to_string(),
            Error::NonPositiveParameter { .. } => "NonPositiveParameter".to_string(),
            Error::NotFinite { .. } => "NotFinite".to_string(),
            Error::DiscountOutOfRange { .. } => "DiscountOutOfRange".to_string(),
            Error::NetIncomeNonPositive { .. } => "NetIncomeNonPositive".to_string(),
            Error::NonPositiveArgument { .. } => "NonPositiveArgument".to_string(),
            Error::InvalidStep { .. } => "InvalidStep".to_string(),
            Error::NoFeasibleStart => "NoFeasibleStart".to_string(),
            Error::EmptyGrid => "EmptyGrid".to_string(),
            Error::GridNotIncreasing { .. } => "GridNotIncreasing".to_string(),
            Error::BaseNotInterior(_) => "BaseNotInterior".to_string(),
            Error::Io(_) => "IoError".to_string(),
        }
    }
}
