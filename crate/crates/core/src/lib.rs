//! Valuation-adjustment engine for European calls under Black-Scholes
//! dynamics with issuer and counterparty default risk.
//!
//! The quantity computed everywhere is the adjustment `u = V_hat - V`, the gap
//! between the risky value and the default-free price, written in backward
//! coordinates (time to maturity `tau`, log spot `x`). Four collateral
//! regimes feed a common source term, and three independent solvers
//! (finite differences, heat-kernel quadrature, Monte-Carlo) cross-check one
//! another along with an exact closed form available for uncollateralised
//! positions.

pub mod adjustments;
pub mod error;
pub mod harness;
pub mod market;
pub mod numeric;
pub mod solvers;

#[cfg(test)]
pub(crate) mod test_oracles;

pub use error::{Result, XvaError};
pub use market::{bs_call, d12, norm_cdf, v, ContractSpec, EvalPoint, MarketParams};
