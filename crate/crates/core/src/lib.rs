//! Revenue curves for auction agents with non-linear utilities, anonymous
//! pricing, the ex-ante relaxation, and numerical checks of the closeness
//! bounds that relate them.
// Range checks are written `!(x >= lo)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closeness;
pub mod curves;
pub mod distributions;
mod error;
pub mod mechanisms;
pub mod oracle;
pub mod quadrature;

pub use curves::{Agent, AgentModel, OfferCurve, RevenueCurve};
pub use distributions::{BudgetDistribution, Distribution, ValueDistribution};
pub use error::{Error, Result};
