//! Exact adjustment for uncollateralised positions.
//!
//! When the position value stays non-negative and no collateral is held
//! against the exposure, the running cost is proportional to the clean value
//! itself and the backward equation integrates in closed form:
//!
//! `u(tau, x) = c_f / (lambda_b + lambda_c) * (e^{-(lambda_b+lambda_c) tau} - 1) * v(tau, x)`
//!
//! with `c_f` the combined default loss rate. For a call payoff this covers
//! the no-CSA regime and the one-way CSA with `alpha = 0`.

use crate::adjustments::CollateralSpec;
use crate::error::{Result, XvaError};
use crate::market::{self, ContractSpec, EvalPoint, MarketParams};

/// Hazard-rate sums below this are treated as zero and the prefactor
/// replaced by its `-tau` limit.
const HAZARD_SUM_FLOOR: f64 = 1e-12;

/// Closed-form adjustment at `point`. Errors for regimes where the
/// derivation does not hold.
pub fn closed_form_u(
    point: EvalPoint,
    spec: &CollateralSpec,
    params: &MarketParams,
    contract: &ContractSpec,
) -> Result<f64> {
    params.validate()?;
    contract.validate()?;
    spec.validate()?;
    if !spec.closed_form_applies() {
        return Err(XvaError::UnsupportedRegime(format!(
            "closed form requires an uncollateralised exposure, got {}",
            spec.label()
        )));
    }
    if point.tau > contract.maturity * (1.0 + 1e-12) {
        return Err(XvaError::InvalidInput(format!(
            "tau {} exceeds contract maturity {}",
            point.tau, contract.maturity
        )));
    }
    let hazard_sum = params.lambda_b + params.lambda_c;
    let factor = if hazard_sum < HAZARD_SUM_FLOOR {
        -point.tau * params.default_loss_rate()
    } else {
        params.default_loss_rate() / hazard_sum * (-hazard_sum * point.tau).exp_m1()
    };
    Ok(factor * market::v(point.tau, point.x, params, contract)?)
}

/// Exact lower-boundary value used by the finite-difference solver: with the
/// spot pinned far out of the money the clean value and its collateral vanish
/// except for the issuer funding leg, leaving
///
/// `u(tau) = lambda_b * eps_h / kappa * (e^{-kappa tau} - 1)`
///
/// for a frozen hedge shortfall `eps_h`. `kappa` must be positive.
pub fn dirichlet_boundary_u(tau: f64, eps_h: f64, params: &MarketParams) -> Result<f64> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(XvaError::InvalidInput(format!(
            "boundary tau must be finite and non-negative, got {tau}"
        )));
    }
    if !eps_h.is_finite() {
        return Err(XvaError::InvalidInput("eps_h must be finite".into()));
    }
    let kappa = params.discount_rate();
    if kappa <= 0.0 {
        return Err(XvaError::Config(format!(
            "boundary formula needs a positive discount rate, got kappa = {kappa}"
        )));
    }
    Ok(params.lambda_b * eps_h / kappa * (-kappa * tau).exp_m1())
}
