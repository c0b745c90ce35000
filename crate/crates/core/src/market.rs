//! Market model: flat-parameter Black-Scholes dynamics with issuer and
//! counterparty hazard rates, plus the European call pricing functions the
//! solvers lean on.

use crate::error::{Result, XvaError};

/// Flat market and credit parameters.
///
/// `sigma` is the log-normal volatility, `r` the risk-free rate, `q_s` the
/// repo/funding rate of the underlying, `gamma_s` its dividend yield.
/// `lambda_b` / `lambda_c` are the hazard rates of the issuer and the
/// counterparty, `recovery_b` / `recovery_c` the corresponding recoveries,
/// and `s_x` the spread paid on posted collateral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub sigma: f64,
    pub r: f64,
    pub q_s: f64,
    pub gamma_s: f64,
    pub lambda_b: f64,
    pub lambda_c: f64,
    pub recovery_b: f64,
    pub recovery_c: f64,
    pub s_x: f64,
}

impl MarketParams {
    /// Checks the admissible ranges: `sigma > 0`, hazard rates non-negative,
    /// recoveries in `[0, 1]`, everything finite.
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("sigma", self.sigma),
            ("r", self.r),
            ("q_s", self.q_s),
            ("gamma_s", self.gamma_s),
            ("lambda_b", self.lambda_b),
            ("lambda_c", self.lambda_c),
            ("recovery_b", self.recovery_b),
            ("recovery_c", self.recovery_c),
            ("s_x", self.s_x),
        ];
        for (name, value) in all {
            if !value.is_finite() {
                return Err(XvaError::InvalidInput(format!("{name} must be finite")));
            }
        }
        if self.sigma <= 0.0 {
            return Err(XvaError::InvalidInput(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.lambda_b < 0.0 || self.lambda_c < 0.0 {
            return Err(XvaError::InvalidInput(
                "hazard rates lambda_b, lambda_c must be non-negative".into(),
            ));
        }
        for (name, rec) in [("recovery_b", self.recovery_b), ("recovery_c", self.recovery_c)] {
            if !(0.0..=1.0).contains(&rec) {
                return Err(XvaError::InvalidInput(format!(
                    "{name} must lie in [0, 1], got {rec}"
                )));
            }
        }
        Ok(())
    }

    /// Log-spot drift of the underlying under the pricing measure,
    /// `q_s - gamma_s - sigma^2 / 2`.
    pub fn log_drift(&self) -> f64 {
        self.q_s - self.gamma_s - 0.5 * self.sigma * self.sigma
    }

    /// Effective discount rate of the adjustment equation,
    /// `r + lambda_b + lambda_c`.
    pub fn discount_rate(&self) -> f64 {
        self.r + self.lambda_b + self.lambda_c
    }

    /// Instantaneous loss rate from both defaults,
    /// `lambda_c (1 - recovery_c) + lambda_b (1 - recovery_b)`.
    pub fn default_loss_rate(&self) -> f64 {
        self.lambda_c * (1.0 - self.recovery_c) + self.lambda_b * (1.0 - self.recovery_b)
    }
}

/// European call contract: strike and maturity (in years).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractSpec {
    pub strike: f64,
    pub maturity: f64,
}

impl ContractSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.strike.is_finite() || self.strike <= 0.0 {
            return Err(XvaError::InvalidInput(format!(
                "strike must be positive and finite, got {}",
                self.strike
            )));
        }
        if !self.maturity.is_finite() || self.maturity <= 0.0 {
            return Err(XvaError::InvalidInput(format!(
                "maturity must be positive and finite, got {}",
                self.maturity
            )));
        }
        Ok(())
    }
}

/// Query point in solver coordinates: `tau` is time to maturity, `x` the log
/// spot, so the spot `e^x` is positive by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub tau: f64,
    pub x: f64,
}

impl EvalPoint {
    // |x| beyond ~700 overflows e^x in f64, reject early.
    pub fn new(tau: f64, x: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(XvaError::InvalidInput(format!(
                "tau must be finite and non-negative, got {tau}"
            )));
        }
        if !x.is_finite() || x.abs() > 700.0 {
            return Err(XvaError::InvalidInput(format!(
                "log-spot x must be finite with |x| <= 700, got {x}"
            )));
        }
        Ok(Self { tau, x })
    }
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal CDF, accurate to about 1e-15 absolute over the whole line.
///
/// Errors on non-finite input; otherwise the result is clamped to `[0, 1]`.
pub fn norm_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(XvaError::InvalidInput(format!(
            "norm_cdf argument must be finite, got {z}"
        )));
    }
    Ok(phi(z))
}

/// Unchecked normal CDF used on hot paths where the argument is finite by
/// construction.
#[inline]
pub(crate) fn phi(z: f64) -> f64 {
    debug_assert!(z.is_finite());
    let p = 0.5 * erfc_cody(-z * FRAC_1_SQRT_2);
    p.clamp(0.0, 1.0)
}

/// Complementary error function via Cody's rational Chebyshev fits.
/// Relative accuracy is near machine precision on the positive axis.
fn erfc_cody(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        return 1.0 - erf_small(x);
    }
    let e = if y <= 4.0 { erfc_mid(y) } else { erfc_large(y) };
    if x < 0.0 {
        2.0 - e
    } else {
        e
    }
}

// |x| <= 0.46875
fn erf_small(x: f64) -> f64 {
    const A: [f64; 5] = [
        3.161_123_743_870_565_6e0,
        1.138_641_541_510_501_56e2,
        3.774_852_376_853_020_2e2,
        3.209_377_589_138_469_47e3,
        1.857_777_061_846_031_53e-1,
    ];
    const B: [f64; 4] = [
        2.360_129_095_234_412_09e1,
        2.440_246_379_344_441_73e2,
        1.282_616_526_077_372_28e3,
        2.844_236_833_439_170_62e3,
    ];
    let z = x * x;
    let mut num = A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + A[i]) * z;
        den = (den + B[i]) * z;
    }
    x * (num + A[3]) / (den + B[3])
}

// 0.46875 < y <= 4
fn erfc_mid(y: f64) -> f64 {
    const C: [f64; 9] = [
        5.641_884_969_886_700_9e-1,
        8.883_149_794_388_375_9e0,
        6.611_919_063_714_163e1,
        2.986_351_381_974_001_3e2,
        8.819_522_212_417_69e2,
        1.712_047_612_634_070_6e3,
        2.051_078_377_826_071_5e3,
        1.230_339_354_797_997_2e3,
        2.153_115_354_744_038_3e-8,
    ];
    const D: [f64; 8] = [
        1.574_492_611_070_983_5e1,
        1.176_939_508_913_125e2,
        5.371_811_018_620_098_6e2,
        1.621_389_574_566_690_2e3,
        3.290_799_235_733_459_7e3,
        4.362_619_090_143_247e3,
        3.439_367_674_143_721_6e3,
        1.230_339_354_803_749_4e3,
    ];
    let mut num = C[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + C[i]) * y;
        den = (den + D[i]) * y;
    }
    exp_neg_sq(y) * (num + C[7]) / (den + D[7])
}

// y > 4
fn erfc_large(y: f64) -> f64 {
    const SQRPI: f64 = 5.641_895_835_477_562_9e-1;
    const P: [f64; 6] = [
        3.053_266_349_612_323_4e-1,
        3.603_448_999_498_044_4e-1,
        1.257_817_261_112_292_46e-1,
        1.608_378_514_874_227_66e-2,
        6.587_491_615_298_378e-4,
        1.631_538_713_730_209_8e-2,
    ];
    const Q: [f64; 5] = [
        2.568_520_192_289_822_4e0,
        1.872_952_849_923_460_4e0,
        5.279_051_029_514_284e-1,
        6.051_834_131_244_132e-2,
        2.335_204_976_268_691_8e-3,
    ];
    if y >= 26.6 {
        return 0.0;
    }
    let z = 1.0 / (y * y);
    let mut num = P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + P[i]) * z;
        den = (den + Q[i]) * z;
    }
    let r = z * (num + P[4]) / (den + Q[4]);
    exp_neg_sq(y) * (SQRPI - r) / y
}

// e^{-y^2} split as e^{-ysq^2} * e^{-(y-ysq)(y+ysq)} with ysq a short float,
// which keeps the argument rounding error out of the result.
fn exp_neg_sq(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// The two Black-Scholes quantiles at calendar time `s` and spot `spot`:
///
/// `d1 = [ln(spot/K) + (q_s - gamma_s + sigma^2/2)(T - s)] / (sigma sqrt(T - s))`
/// and `d2 = d1 - sigma sqrt(T - s)`.
///
/// The forward drift uses the underlying's carry `q_s - gamma_s`, matching
/// the dynamics the solvers discretize.
pub fn d12(s: f64, spot: f64, params: &MarketParams, contract: &ContractSpec) -> Result<(f64, f64)> {
    if !s.is_finite() || !spot.is_finite() || spot <= 0.0 {
        return Err(XvaError::InvalidInput(format!(
            "d12 needs finite s and positive finite spot, got s = {s}, spot = {spot}"
        )));
    }
    let tau = contract.maturity - s;
    if tau <= 0.0 {
        return Err(XvaError::DegenerateExpiry {
            time: s,
            maturity: contract.maturity,
        });
    }
    let sig_sqrt = params.sigma * tau.sqrt();
    let carry = params.q_s - params.gamma_s;
    let d1 = ((spot / contract.strike).ln() + (carry + 0.5 * params.sigma * params.sigma) * tau)
        / sig_sqrt;
    Ok((d1, d1 - sig_sqrt))
}

/// Default-free European call price at calendar time `s` and spot `spot`:
///
/// `V = spot e^{(q_s - gamma_s - r)(T-s)} N(d1) - K e^{-r(T-s)} N(d2)`.
///
/// At `s = T` this is the payoff `(spot - K)^+`; `s > T` or a negative spot
/// is a domain error. A zero spot prices to zero.
pub fn bs_call(s: f64, spot: f64, params: &MarketParams, contract: &ContractSpec) -> Result<f64> {
    if !s.is_finite() || !spot.is_finite() || spot < 0.0 {
        return Err(XvaError::InvalidInput(format!(
            "bs_call needs finite s and non-negative finite spot, got s = {s}, spot = {spot}"
        )));
    }
    let tau = contract.maturity - s;
    if tau < 0.0 {
        return Err(XvaError::InvalidInput(format!(
            "bs_call time {s} lies beyond maturity {}",
            contract.maturity
        )));
    }
    Ok(call_price_raw(tau, spot, params, contract))
}

/// Call value as a function of time to maturity `tau` and log spot `x`,
/// `v(tau, x) = bs_call(T - tau, e^x)`. This is the clean-value surface all
/// four adjustment solvers share; `tau` may exceed the contract maturity,
/// which extends the surface smoothly (used by the delayed-collateral map).
pub fn v(tau: f64, x: f64, params: &MarketParams, contract: &ContractSpec) -> Result<f64> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(XvaError::InvalidInput(format!(
            "v needs non-negative finite tau, got {tau}"
        )));
    }
    if !x.is_finite() || x.abs() > 700.0 {
        return Err(XvaError::InvalidInput(format!(
            "v needs finite log-spot with |x| <= 700, got {x}"
        )));
    }
    Ok(call_price_raw(tau, x.exp(), params, contract))
}

/// Shared unchecked core: price at time-to-maturity `tau >= 0`, spot >= 0.
#[inline]
pub(crate) fn call_price_raw(
    tau: f64,
    spot: f64,
    params: &MarketParams,
    contract: &ContractSpec,
) -> f64 {
    debug_assert!(tau >= 0.0 && spot >= 0.0);
    if tau == 0.0 {
        return (spot - contract.strike).max(0.0);
    }
    if spot == 0.0 {
        return 0.0;
    }
    let sig_sqrt = params.sigma * tau.sqrt();
    let carry = params.q_s - params.gamma_s;
    let d1 = ((spot / contract.strike).ln() + (carry + 0.5 * params.sigma * params.sigma) * tau)
        / sig_sqrt;
    let d2 = d1 - sig_sqrt;
    spot * ((carry - params.r) * tau).exp() * phi(d1)
        - contract.strike * (-params.r * tau).exp() * phi(d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_oracles::{bs_call_quadrature, norm_cdf_oracle};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn base() -> (MarketParams, ContractSpec) {
        (
            MarketParams {
                sigma: 0.25,
                r: 0.03,
                q_s: 0.03,
                gamma_s: 0.0,
                lambda_b: 0.02,
                lambda_c: 0.05,
                recovery_b: 0.4,
                recovery_c: 0.4,
                s_x: 0.012,
            },
            ContractSpec {
                strike: 15.0,
                maturity: 2.0,
            },
        )
    }

    #[test]
    fn derived_rates() {
        let (p, _) = base();
        assert_abs_diff_eq!(p.log_drift(), -0.00125, epsilon = 1e-15);
        assert_abs_diff_eq!(p.discount_rate(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p.default_loss_rate(), 0.042, epsilon = 1e-15);
    }

    #[test]
    fn params_validation() {
        let (p, c) = base();
        p.validate().unwrap();
        c.validate().unwrap();
        let mut bad = p;
        bad.sigma = 0.0;
        assert!(bad.validate().is_err());
        bad = p;
        bad.recovery_c = 1.2;
        assert!(bad.validate().is_err());
        bad = p;
        bad.lambda_b = -0.01;
        assert!(bad.validate().is_err());
        bad = p;
        bad.r = f64::NAN;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn eval_point_domain() {
        assert!(EvalPoint::new(0.0, 0.0).is_ok());
        assert!(EvalPoint::new(-0.1, 0.0).is_err());
        assert!(EvalPoint::new(1.0, f64::INFINITY).is_err());
        assert!(EvalPoint::new(f64::NAN, 0.0).is_err());
        assert!(EvalPoint::new(1.0, 800.0).is_err());
    }

    #[test]
    fn norm_cdf_anchor_values() {
        assert_abs_diff_eq!(norm_cdf(0.0).unwrap(), 0.5, epsilon = 1e-15);
        // Value frozen from the series/continued-fraction oracle.
        assert_abs_diff_eq!(
            norm_cdf(-0.28466).unwrap(),
            0.387952319312882,
            epsilon = 1e-12
        );
        assert!(norm_cdf(f64::NAN).is_err());
        assert!(norm_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn norm_cdf_matches_oracle_on_grid() {
        // 1601 points across [-8, 8], absolute tolerance 1e-12.
        let mut worst = 0.0f64;
        for i in 0..=1600 {
            let z = -8.0 + i as f64 * 0.01;
            let got = norm_cdf(z).unwrap();
            let want = norm_cdf_oracle(z);
            worst = worst.max((got - want).abs());
        }
        assert!(worst <= 1e-12, "worst norm_cdf deviation {worst:e}");
    }

    #[test]
    fn norm_cdf_tails() {
        assert_abs_diff_eq!(norm_cdf(8.0).unwrap(), norm_cdf_oracle(8.0), epsilon = 1e-15);
        assert_abs_diff_eq!(
            norm_cdf(-8.0).unwrap(),
            norm_cdf_oracle(-8.0),
            epsilon = 1e-18
        );
        assert_eq!(norm_cdf(-40.0).unwrap(), 0.0);
        assert_eq!(norm_cdf(40.0).unwrap(), 1.0);
    }

    #[test]
    fn d12_anchor() {
        let (p, c) = base();
        // s = T - 2 with T = 2, spot 12: frozen from direct evaluation of the
        // defining formula in the oracle module.
        let (d1, d2) = d12(0.0, 12.0, &p, &c).unwrap();
        assert_abs_diff_eq!(d1, -0.2846629504678959, epsilon = 1e-13);
        assert_abs_diff_eq!(d2, -0.6382163410611697, epsilon = 1e-13);
    }

    #[test]
    fn d2_vanishes_at_strike_when_carry_is_half_variance() {
        let (mut p, mut c) = base();
        p.q_s = 0.5 * p.sigma * p.sigma;
        p.gamma_s = 0.0;
        c.strike = 12.0;
        let (_, d2) = d12(1.25, 12.0, &p, &c).unwrap();
        assert_abs_diff_eq!(d2, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn d12_domain_errors() {
        let (p, c) = base();
        assert!(matches!(
            d12(2.0, 12.0, &p, &c),
            Err(XvaError::DegenerateExpiry { .. })
        ));
        assert!(matches!(
            d12(2.5, 12.0, &p, &c),
            Err(XvaError::DegenerateExpiry { .. })
        ));
        assert!(d12(0.0, -1.0, &p, &c).is_err());
        assert!(d12(0.0, 0.0, &p, &c).is_err());
        assert!(d12(f64::NAN, 12.0, &p, &c).is_err());
    }

    #[test]
    fn bs_call_anchor() {
        let (p, c) = base();
        // Frozen from the discounted-payoff quadrature oracle.
        let want = 0.9589918074629292;
        assert_abs_diff_eq!(bs_call(0.0, 12.0, &p, &c).unwrap(), want, epsilon = 1e-10);
        assert_abs_diff_eq!(
            bs_call(0.0, 12.0, &p, &c).unwrap(),
            bs_call_quadrature(2.0, 12.0, &p, &c),
            epsilon = 1e-10
        );
    }

    #[test]
    fn bs_call_terminal_and_degenerate() {
        let (p, c) = base();
        assert_eq!(bs_call(2.0, 18.0, &p, &c).unwrap(), 3.0);
        assert_eq!(bs_call(2.0, 9.0, &p, &c).unwrap(), 0.0);
        assert_eq!(bs_call(1.0, 0.0, &p, &c).unwrap(), 0.0);
        assert!(bs_call(2.1, 12.0, &p, &c).is_err());
        assert!(bs_call(0.0, -3.0, &p, &c).is_err());
    }

    #[test]
    fn bs_call_matches_quadrature_across_moneyness() {
        let (p, c) = base();
        for &spot in &[4.0, 9.0, 12.0, 15.0, 19.0, 33.0] {
            for &s in &[0.0, 0.5, 1.25, 1.9] {
                let got = bs_call(s, spot, &p, &c).unwrap();
                let want = bs_call_quadrature(c.maturity - s, spot, &p, &c);
                assert_abs_diff_eq!(got, want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn v_is_bs_call_in_log_coordinates() {
        let (p, c) = base();
        let want = 0.9589918074629292;
        assert_abs_diff_eq!(v(2.0, 12.0f64.ln(), &p, &c).unwrap(), want, epsilon = 1e-10);
        // exp(ln 18) is 18 only up to rounding.
        assert_abs_diff_eq!(v(0.0, 18.0f64.ln(), &p, &c).unwrap(), 3.0, epsilon = 1e-12);
        // Deep out-of-the-money log-spot prices to nothing.
        assert!(v(2.0, -40.0, &p, &c).unwrap() < 1e-12);
        // Extended time to maturity is allowed and smooth.
        assert!(v(2.1, 12.0f64.ln(), &p, &c).is_ok());
        assert!(v(-0.5, 0.0, &p, &c).is_err());
    }

    #[test]
    fn v_convex_in_spot() {
        let (p, c) = base();
        let n = 400;
        for i in 1..n {
            let s0 = 0.2 + (i - 1) as f64 * 0.1;
            let s1 = s0 + 0.1;
            let s2 = s1 + 0.1;
            let second_diff = v(1.5, s2.ln(), &p, &c).unwrap()
                - 2.0 * v(1.5, s1.ln(), &p, &c).unwrap()
                + v(1.5, s0.ln(), &p, &c).unwrap();
            assert!(second_diff >= -1e-9, "convexity violated near spot {s1}");
        }
    }

    // Central-difference residual of the pricing equation
    // v_tau = sigma^2/2 v_xx + (q_s - gamma_s - sigma^2/2) v_x - r v
    // evaluated at (tau, x); shrinks like delta^2.
    fn pde_residual(tau: f64, x: f64, delta: f64, p: &MarketParams, c: &ContractSpec) -> f64 {
        let vv = |t: f64, y: f64| v(t, y, p, c).unwrap();
        let v_tau = (vv(tau + delta, x) - vv(tau - delta, x)) / (2.0 * delta);
        let v_x = (vv(tau, x + delta) - vv(tau, x - delta)) / (2.0 * delta);
        let v_xx = (vv(tau, x + delta) - 2.0 * vv(tau, x) + vv(tau, x - delta)) / (delta * delta);
        v_tau - 0.5 * p.sigma * p.sigma * v_xx - p.log_drift() * v_x + p.r * vv(tau, x)
    }

    #[test]
    fn v_satisfies_pricing_pde_to_second_order() {
        let (p, c) = base();
        for &(tau, x) in &[(1.0, 12.0f64.ln()), (1.5, 15.0f64.ln()), (0.7, 2.0)] {
            let coarse = pde_residual(tau, x, 1e-2, &p, &c).abs();
            let fine = pde_residual(tau, x, 5e-3, &p, &c).abs();
            // Ratio near 4 for a second-order residual; allow slack for
            // higher-order terms and rounding.
            assert!(
                coarse / fine > 2.5 && coarse / fine < 6.0,
                "residual ratio {} at ({tau}, {x})",
                coarse / fine
            );
            assert!(fine < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn norm_cdf_in_unit_interval_and_monotone(z in -37.0f64..37.0) {
            let p = norm_cdf(z).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            let q = norm_cdf(z + 1e-3).unwrap();
            prop_assert!(q >= p);
            // Complement symmetry.
            prop_assert!((p + norm_cdf(-z).unwrap() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn d1_minus_d2_is_sigma_root_tau(
            s in 0.0f64..1.99,
            spot in 0.5f64..60.0,
        ) {
            let (p, c) = base();
            let (d1, d2) = d12(s, spot, &p, &c).unwrap();
            let want = p.sigma * (c.maturity - s).sqrt();
            prop_assert!((d1 - d2 - want).abs() < 1e-12);
        }

        #[test]
        fn bs_call_within_no_arbitrage_bounds(
            s in 0.0f64..=2.0,
            spot in 0.0f64..80.0,
        ) {
            let (p, c) = base();
            let tau = c.maturity - s;
            let price = bs_call(s, spot, &p, &c).unwrap();
            let forward_part = spot * ((p.q_s - p.gamma_s - p.r) * tau).exp();
            let lower = (forward_part - c.strike * (-p.r * tau).exp()).max(0.0);
            prop_assert!(price >= lower - 1e-12);
            prop_assert!(price <= forward_part + 1e-12);
        }

        #[test]
        fn bs_call_monotone_in_spot(
            s in 0.0f64..1.95,
            spot in 0.5f64..50.0,
        ) {
            let (p, c) = base();
            let lo = bs_call(s, spot, &p, &c).unwrap();
            let hi = bs_call(s, spot + 0.25, &p, &c).unwrap();
            prop_assert!(hi >= lo - 1e-12);
        }
    }
}
