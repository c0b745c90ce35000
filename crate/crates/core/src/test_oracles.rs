//! Independent reference implementations used only by the test suites.
//!
//! These deliberately avoid the production code paths: the normal CDF comes
//! from a Maclaurin series plus a continued fraction, and the call price from
//! direct quadrature of the discounted payoff. Expected values frozen in
//! tests were produced by these routines.

use crate::market::{ContractSpec, MarketParams};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// erf by Maclaurin series, reliable for |x| <= 2.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        let nf = n as f64;
        term *= -x2 / nf;
        let contrib = term / (2.0 * nf + 1.0);
        sum += contrib;
        if contrib.abs() < 1e-20 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum * 2.0 / SQRT_PI
}

/// erfc by the classical continued fraction, reliable for x >= 2:
/// erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
fn erfc_cf(x: f64) -> f64 {
    let mut f = x;
    for k in (1..=120).rev() {
        f = x + (k as f64 / 2.0) / f;
    }
    (-x * x).exp() / (SQRT_PI * f)
}

pub fn erf_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return -erf_oracle(-x);
    }
    if x <= 2.0 {
        erf_series(x)
    } else {
        1.0 - erfc_cf(x)
    }
}

pub fn erfc_oracle(x: f64) -> f64 {
    if x >= 2.0 {
        erfc_cf(x)
    } else if x <= -2.0 {
        2.0 - erfc_cf(-x)
    } else {
        1.0 - erf_series(x)
    }
}

pub fn norm_cdf_oracle(z: f64) -> f64 {
    0.5 * erfc_oracle(-z / std::f64::consts::SQRT_2)
}

/// Discounted-payoff quadrature for the European call at time-to-maturity
/// `tau`: integrates (spot e^{mu tau + sigma sqrt(tau) z} - K)^+ phi(z) dz
/// with composite Simpson starting at the payoff kink, then discounts at r.
pub fn bs_call_quadrature(tau: f64, spot: f64, p: &MarketParams, c: &ContractSpec) -> f64 {
    assert!(tau >= 0.0 && spot >= 0.0);
    if tau == 0.0 {
        return (spot - c.strike).max(0.0);
    }
    if spot == 0.0 {
        return 0.0;
    }
    let mu = p.q_s - p.gamma_s - 0.5 * p.sigma * p.sigma;
    let sig = p.sigma * tau.sqrt();
    // Integrate from the payoff kink (or from where phi still has mass,
    // whichever is later) out to the far tail.
    let z_star = (((c.strike / spot).ln() - mu * tau) / sig).max(-40.0);
    let z_end = 40.0f64.max(z_star + 1.0);
    let n = 200_000usize;
    let h = (z_end - z_star) / n as f64;
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let payoff = |z: f64| {
        let s_t = spot * (mu * tau + sig * z).exp();
        (s_t - c.strike).max(0.0) * density(z)
    };
    let mut acc = payoff(z_star) + payoff(z_end);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * payoff(z_star + i as f64 * h);
    }
    (-p.r * tau).exp() * acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn series_and_continued_fraction_agree_at_the_seam() {
        for &x in &[2.0, 2.0 + 1e-9] {
            assert_abs_diff_eq!(1.0 - erf_series(x), erfc_cf(x), epsilon = 1e-15);
        }
    }

    #[test]
    fn oracle_hits_known_constants() {
        assert_eq!(erf_oracle(0.0), 0.0);
        // erf(1) to published precision.
        assert_abs_diff_eq!(erf_oracle(1.0), 0.8427007929497149, epsilon = 1e-15);
        assert_abs_diff_eq!(norm_cdf_oracle(0.0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(
            norm_cdf_oracle(1.0) - norm_cdf_oracle(-1.0),
            0.6826894921370859,
            epsilon = 1e-14
        );
    }

    #[test]
    fn quadrature_reproduces_forward_when_strike_is_free() {
        // With K -> 0 the call is the discounted forward.
        let p = MarketParams {
            sigma: 0.25,
            r: 0.03,
            q_s: 0.03,
            gamma_s: 0.0,
            lambda_b: 0.0,
            lambda_c: 0.0,
            recovery_b: 0.4,
            recovery_c: 0.4,
            s_x: 0.0,
        };
        let c = ContractSpec {
            strike: 1e-12,
            maturity: 2.0,
        };
        let want = 12.0 * ((p.q_s - p.gamma_s - p.r) * 2.0f64).exp();
        assert_abs_diff_eq!(bs_call_quadrature(2.0, 12.0, &p, &c), want, epsilon = 1e-6);
    }
}
