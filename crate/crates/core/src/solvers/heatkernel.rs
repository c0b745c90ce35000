//! Heat-kernel quadrature solver.
//!
//! Removing the discounting and transporting coordinates along the drift
//! turns the adjustment equation into a pure heat equation, whose Duhamel
//! solution is a Gaussian average of the source over past time slices:
//!
//! `u(tau, x) = -(1/sqrt(pi)) int_0^tau int_R e^{-y^2} e^{-kappa (tau-s)}
//!              f(v(s, x + shift(s) + sqrt(2 (tau-s)) sigma y)) dy ds`.
//!
//! The double integral is evaluated with a tensor-product composite
//! trapezoid rule on a uniform `(s, y)` lattice. Two variants of the drift
//! shift are provided; see [`DriftShiftMode`].

use rayon::prelude::*;

use crate::adjustments::{source_term, CollateralSpec};
use crate::error::{Result, XvaError};
use crate::market::{ContractSpec, MarketParams};
use crate::numeric::{exact_steps, pairwise_sum};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

// Terms with |y| beyond this have Gaussian weight exactly 0 in f64 and are
// skipped without changing the sum.
const Y_LIVE: f64 = 27.5;

/// Spatial transport applied to the source argument of each time slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftShiftMode {
    /// `rho (tau - s)`: the slice-dependent shift the change of variables
    /// actually produces. Default, and the one the cross-solver checks use.
    Corrected,
    /// `rho tau` on every slice: a full-horizon shift kept for comparison
    /// studies. For small `|rho| tau` the two are numerically close.
    AsPrinted,
}

/// Lattice for the double trapezoid rule. `delta_s` must tile the requested
/// `tau` exactly and `delta_y` the interval `[-y_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub delta_s: f64,
    pub delta_y: f64,
    pub y_max: f64,
    pub mode: DriftShiftMode,
}

impl QuadratureSpec {
    /// The reference lattice used as cross-solver benchmark:
    /// `delta_s = 2^-10`, `delta_y = 2^-3`, `y_max = 100`, corrected shift.
    pub fn benchmark() -> Self {
        Self {
            delta_s: 2f64.powi(-10),
            delta_y: 0.125,
            y_max: 100.0,
            mode: DriftShiftMode::Corrected,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("delta_s", self.delta_s),
            ("delta_y", self.delta_y),
            ("y_max", self.y_max),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(XvaError::Config(format!(
                    "quadrature {name} must be positive and finite, got {value}"
                )));
            }
        }
        exact_steps(2.0 * self.y_max, self.delta_y, "quadrature y lattice")?;
        Ok(())
    }
}

/// One lattice term of the Duhamel integrand,
/// `g(s, y) = e^{-y^2 - kappa (tau - s)} f(v(s, x + shift + sqrt(2(tau-s)) sigma y))`.
///
/// Requires `0 <= s <= tau`. When the exponential weight underflows to zero
/// the term is exactly zero and the source is not evaluated.
pub fn integrand_g(
    s: f64,
    y: f64,
    tau: f64,
    x: f64,
    spec: &CollateralSpec,
    params: &MarketParams,
    contract: &ContractSpec,
    mode: DriftShiftMode,
) -> f64 {
    debug_assert!((0.0..=tau).contains(&s));
    let age = tau - s;
    let weight = (-y * y - params.discount_rate() * age).exp();
    if weight == 0.0 {
        return 0.0;
    }
    let shift = match mode {
        DriftShiftMode::Corrected => params.log_drift() * age,
        DriftShiftMode::AsPrinted => params.log_drift() * tau,
    };
    let arg = x + shift + (2.0 * age).sqrt() * params.sigma * y;
    weight * source_term(spec, s, arg, params, contract).total
}

/// Trapezoid evaluation of the Duhamel integral at `(tau, x)`.
///
/// Time slices are independent and evaluated in parallel; each slice is
/// reduced with pairwise summation in a fixed order, so the result does not
/// depend on the number of worker threads.
pub fn quad_u(
    tau: f64,
    x: f64,
    spec: &CollateralSpec,
    params: &MarketParams,
    contract: &ContractSpec,
    qspec: &QuadratureSpec,
) -> Result<f64> {
    params.validate()?;
    contract.validate()?;
    spec.validate()?;
    qspec.validate()?;
    if !tau.is_finite() || tau < 0.0 {
        return Err(XvaError::InvalidInput(format!(
            "quad_u needs non-negative finite tau, got {tau}"
        )));
    }
    if !x.is_finite() || x.abs() > 600.0 {
        return Err(XvaError::InvalidInput(format!(
            "quad_u needs finite log-spot with |x| <= 600, got {x}"
        )));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    if tau > contract.maturity * (1.0 + 1e-12) {
        return Err(XvaError::InvalidInput(format!(
            "tau {tau} exceeds contract maturity {}",
            contract.maturity
        )));
    }
    let n_s = exact_steps(tau, qspec.delta_s, "quadrature time lattice")?;
    let n_y = exact_steps(2.0 * qspec.y_max, qspec.delta_y, "quadrature y lattice")?;

    // Indices of the y window where the Gaussian weight is representable.
    let j_lo = if qspec.y_max > Y_LIVE {
        ((qspec.y_max - Y_LIVE) / qspec.delta_y).floor() as usize
    } else {
        0
    };
    let j_hi = n_y - j_lo;

    let slice_sums: Vec<f64> = (0..=n_s)
        .into_par_iter()
        .map(|i| {
            let s = if i == n_s { tau } else { i as f64 * qspec.delta_s };
            let mut terms = Vec::with_capacity(j_hi - j_lo + 1);
            for j in j_lo..=j_hi {
                let y = -qspec.y_max + j as f64 * qspec.delta_y;
                let w = if j == 0 || j == n_y { 0.5 } else { 1.0 };
                terms.push(w * integrand_g(s, y, tau, x, spec, params, contract, qspec.mode));
            }
            pairwise_sum(&terms)
        })
        .collect();

    let weighted: Vec<f64> = slice_sums
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i == n_s { 0.5 * v } else { *v })
        .collect();
    Ok(-FRAC_1_SQRT_PI * qspec.delta_s * qspec.delta_y * pairwise_sum(&weighted))
}
