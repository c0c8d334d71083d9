//! Household resource-allocation model.
//!
//! A household with one period of wage income splits it between consumption,
//! savings, health spending, pension premiums, child-rearing and per-child
//! education, maximizing log utility under a linear budget. The optimum has
//! a closed form; this crate implements it together with everything needed
//! to check it independently:
//!
//! - [`model`]: domain types, validation/regime classification, the
//!   closed-form solver, utility evaluation, and the budget identity;
//! - [`sensitivity`]: the exact 6x7 Jacobian of decisions in the utility
//!   weights, a verbatim reference tabulation, a finite-difference oracle,
//!   executable sign/equality claims, and a discrepancy report;
//! - [`oracle`]: a derivative-free constrained maximizer plus first-order
//!   condition residuals, cross-validating the closed form;
//! - [`sweep`]: parameter sweeps and named scenarios with monotonicity
//!   verdicts and byte-stable CSV export;
//! - [`config`] / [`cli`]: the flat config format and the command-line
//!   surface.

pub mod cli;
pub mod config;
pub mod error;
pub mod model;
pub mod oracle;
pub mod sample;
pub mod sensitivity;
pub mod sweep;

pub use error::Error;
pub use model::{
    budget_residual, evaluate_utility, solve_closed_form, utility_weight_sum, validate,
    Allocation, Decision, EconomyParams, PreferenceWeights, Regime, RegimeClassification,
    UtilityWeightSum, Weight,
};
