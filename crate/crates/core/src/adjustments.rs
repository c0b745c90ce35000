//! Collateral regimes, close-out values and the source term of the
//! adjustment equation.
//!
//! Notation used throughout: `V = v(tau, x)` is the clean value, `X` the
//! collateral balance, and the close-outs on counterparty and issuer default
//! are
//!
//! `g_C = R_C (V - X)^+ - (V - X)^- + X`,
//! `g_B = (V - X)^+ - R_B (V - X)^- + X`.
//!
//! The issuer-default hedge shortfall is `eps_h = (1 - R_B)(V - X)^+` and the
//! running cost entering the backward equation splits as
//!
//! `f = -lambda_c (g_C - V) - lambda_b (g_B - V) + lambda_b eps_h + s_x X`.

use crate::error::{Result, XvaError};
use crate::market::{self, ContractSpec, MarketParams};

/// Collateralisation of the position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollateralSpec {
    /// No CSA, `X = 0`.
    None,
    /// Balance tracking the clean value, `X = alpha V^+ + beta V^-`.
    /// `alpha = 0, beta = -1` is a one-way CSA posted by the issuer,
    /// `alpha = 1, beta = -1` a two-way CSA tracking `V` exactly.
    Linear { alpha: f64, beta: f64 },
    /// Two-way CSA settled with a margin-period lag `t0`: the balance is the
    /// clean value observed `t0` ago. Along the backward characteristics the
    /// past spot is approximated by `S e^{-t0 rho}` with `rho` the log drift,
    /// so `X(tau, x) = v(tau + t0, x - t0 rho)`.
    Delayed { t0: f64 },
}

impl CollateralSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CollateralSpec::None => Ok(()),
            CollateralSpec::Linear { alpha, beta } => {
                if !alpha.is_finite() || !beta.is_finite() {
                    return Err(XvaError::InvalidInput(
                        "linear collateral weights must be finite".into(),
                    ));
                }
                Ok(())
            }
            CollateralSpec::Delayed { t0 } => {
                if !t0.is_finite() || *t0 < 0.0 {
                    return Err(XvaError::InvalidInput(format!(
                        "collateral delay must be finite and non-negative, got {t0}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// True when the closed-form adjustment applies: the position stays
    /// non-negative and unsecured from the counterparty side, which for a
    /// call payoff means no CSA or a one-way CSA with `alpha = 0`.
    pub fn closed_form_applies(&self) -> bool {
        matches!(self, CollateralSpec::None) || matches!(self, CollateralSpec::Linear { alpha, .. } if *alpha == 0.0)
    }

    pub fn label(&self) -> String {
        match self {
            CollateralSpec::None => "none".into(),
            CollateralSpec::Linear { alpha, beta } => format!("linear({alpha},{beta})"),
            CollateralSpec::Delayed { t0 } => format!("delayed({t0})"),
        }
    }
}

/// Splits `phi` into `(phi^+, phi^-)` with `phi^+ = max(phi, 0)`,
/// `phi^- = max(-phi, 0)`, so `phi = phi^+ - phi^-` and both parts are
/// non-negative.
#[inline]
pub fn pos_neg(phi: f64) -> (f64, f64) {
    (phi.max(0.0), (-phi).max(0.0))
}

/// Collateral balance at `(tau, x)` for clean value `value = v(tau, x)`.
#[inline]
pub fn collateral(
    spec: &CollateralSpec,
    tau: f64,
    x: f64,
    value: f64,
    params: &MarketParams,
    contract: &ContractSpec,
) -> f64 {
    match spec {
        CollateralSpec::None => 0.0,
        CollateralSpec::Linear { alpha, beta } => {
            let (vp, vn) = pos_neg(value);
            alpha * vp + beta * (-vn)
        }
        CollateralSpec::Delayed { t0 } => {
            let rho = params.log_drift();
            market::call_price_raw(tau + t0, (x - t0 * rho).exp(), params, contract)
        }
    }
}

/// Close-out toward the counterparty.
#[inline]
pub fn g_c(value: f64, coll: f64, recovery_c: f64) -> f64 {
    let (dp, dn) = pos_neg(value - coll);
    recovery_c * dp - dn + coll
}

/// Close-out toward the issuer.
#[inline]
pub fn g_b(value: f64, coll: f64, recovery_b: f64) -> f64 {
    let (dp, dn) = pos_neg(value - coll);
    dp - recovery_b * dn + coll
}

/// Hedge shortfall on issuer default, `(1 - R_B)(V - X)^+`.
#[inline]
pub fn hedge_error(value: f64, coll: f64, recovery_b: f64) -> f64 {
    (1.0 - recovery_b) * (value - coll).max(0.0)
}

/// The source term split into its four named pieces. `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceBreakdown {
    pub f_cva: f64,
    pub f_dva: f64,
    pub f_fca: f64,
    pub f_colva: f64,
    pub total: f64,
}

/// Evaluates the running cost `f` at `(tau, x)`.
///
/// Everything is derived from the clean value and the regime's collateral
/// balance through the generic close-outs; no regime-specialised shortcuts
/// are taken here.
#[inline]
pub fn source_term(
    spec: &CollateralSpec,
    tau: f64,
    x: f64,
    params: &MarketParams,
    contract: &ContractSpec,
) -> SourceBreakdown {
    debug_assert!(tau >= 0.0 && x.is_finite());
    let value = market::call_price_raw(tau, x.exp(), params, contract);
    let coll = collateral(spec, tau, x, value, params, contract);
    let f_cva = -params.lambda_c * (g_c(value, coll, params.recovery_c) - value);
    let f_dva = -params.lambda_b * (g_b(value, coll, params.recovery_b) - value);
    let f_fca = params.lambda_b * hedge_error(value, coll, params.recovery_b);
    let f_colva = params.s_x * coll;
    SourceBreakdown {
        f_cva,
        f_dva,
        f_fca,
        f_colva,
        total: f_cva + f_dva + f_fca + f_colva,
    }
}
