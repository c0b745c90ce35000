//! Mutual agreement of the four solution methods on every collateral
//! regime. The quadrature solver is the reference where no closed form
//! exists; the Monte-Carlo estimate must cover it within three standard
//! errors; the finite-difference surface must sit within its spatial
//! discretisation error.

use xva::adjustments::CollateralSpec;
use xva::market::{ContractSpec, EvalPoint, MarketParams};
use xva::solvers::analytic::closed_form_u;
use xva::solvers::fd::{solve, FdOpts, GridSpec};
use xva::solvers::heatkernel::{quad_u, DriftShiftMode, QuadratureSpec};
use xva::solvers::mc::{estimate, McSpec};

const X_REF: f64 = 2.4849066497880004;
const TAU: f64 = 2.0;

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

fn grid() -> GridSpec {
    GridSpec {
        x_min: -5.0,
        x_max: 5.0,
        delta_x: 0.015625,
        delta_tau: 0.125,
        tau_end: TAU,
    }
}

/// Fast but accurate quadrature: ~5e-4 of the exact value at the
/// reference point.
fn quick_quad() -> QuadratureSpec {
    QuadratureSpec {
        delta_s: 0.00390625,
        delta_y: 0.125,
        y_max: 8.0,
        mode: DriftShiftMode::Corrected,
    }
}

struct Trio {
    fd: f64,
    hk: f64,
    mc: xva::solvers::mc::AdjustmentResult,
}

fn run_all(spec: &CollateralSpec, p: &MarketParams, c: &ContractSpec) -> Trio {
    let fd = solve(&grid(), spec, p, c, &FdOpts::default())
        .unwrap()
        .value_at(TAU, X_REF)
        .unwrap();
    let hk = quad_u(TAU, X_REF, spec, p, c, &quick_quad()).unwrap();
    let mc = estimate(
        TAU,
        X_REF,
        spec,
        p,
        c,
        &McSpec::new(20_000, 0.015625, 71),
    )
    .unwrap();
    Trio { fd, hk, mc }
}

fn assert_trio_consistent(t: &Trio, label: &str) {
    assert!(
        (t.fd - t.hk).abs() < 1.5e-3,
        "{label}: fd {} vs quadrature {}",
        t.fd,
        t.hk
    );
    assert!(
        (t.mc.u_total - t.hk).abs() < 3.0 * t.mc.se_total + 6e-4,
        "{label}: mc {} (se {}) vs quadrature {}",
        t.mc.u_total,
        t.mc.se_total,
        t.hk
    );
}

#[test]
fn uncollateralised_regime_agrees_across_all_four_methods() {
    let (p, c) = base();
    let spec = CollateralSpec::None;
    let exact = closed_form_u(EvalPoint::new(TAU, X_REF).unwrap(), &spec, &p, &c).unwrap();
    let t = run_all(&spec, &p, &c);
    assert_trio_consistent(&t, "uncollateralised");
    assert!((t.fd - exact).abs() < 1e-3, "fd {} vs exact {exact}", t.fd);
    assert!((t.hk - exact).abs() < 6e-4, "quad {} vs exact {exact}", t.hk);
    assert!(
        (t.mc.u_total - exact).abs() <= 3.0 * t.mc.se_total,
        "mc {} (se {}) vs exact {exact}",
        t.mc.u_total,
        t.mc.se_total
    );
}

#[test]
fn one_way_csa_matches_the_uncollateralised_contract_for_calls() {
    let (p, c) = base();
    let one_way = CollateralSpec::Linear {
        alpha: 0.0,
        beta: -1.0,
    };
    // A call never has negative value, so the posted balance is zero and
    // the two regimes share one solution.
    let exact_none =
        closed_form_u(EvalPoint::new(TAU, X_REF).unwrap(), &CollateralSpec::None, &p, &c).unwrap();
    let exact_one_way =
        closed_form_u(EvalPoint::new(TAU, X_REF).unwrap(), &one_way, &p, &c).unwrap();
    assert_eq!(exact_none, exact_one_way);
    let t = run_all(&one_way, &p, &c);
    assert_trio_consistent(&t, "one-way");
    assert!((t.fd - exact_one_way).abs() < 1e-3);
}

#[test]
fn two_way_csa_agrees_with_its_spread_discount_identity() {
    let (p, c) = base();
    let spec = CollateralSpec::Linear {
        alpha: 1.0,
        beta: -1.0,
    };
    // With the balance pinned to the value, the running cost reduces to
    // s_x times the value, so the adjustment is the spread-discount factor
    // applied to the option price.
    let v = xva::market::v(TAU, X_REF, &p, &c).unwrap();
    let hazard = p.lambda_b + p.lambda_c;
    let exact = p.s_x / hazard * ((-hazard * TAU).exp() - 1.0) * v;
    let t = run_all(&spec, &p, &c);
    assert_trio_consistent(&t, "two-way");
    assert!((t.fd - exact).abs() < 1e-4, "fd {} vs identity {exact}", t.fd);
    assert!((t.hk - exact).abs() < 3e-4, "quad {} vs identity {exact}", t.hk);
    assert!(
        (t.mc.u_total - exact).abs() <= 3.0 * t.mc.se_total,
        "mc {} (se {}) vs identity {exact}",
        t.mc.u_total,
        t.mc.se_total
    );
}

#[test]
fn delayed_regime_agrees_across_the_three_numerical_methods() {
    let (mut p, c) = base();
    p.s_x = 0.02;
    let spec = CollateralSpec::Delayed { t0: 10.0 / 252.0 };
    let t = run_all(&spec, &p, &c);
    assert_trio_consistent(&t, "delayed");
}

#[test]
fn drift_shift_modes_straddle_the_same_solution_at_small_drift() {
    let (p, c) = base();
    // At the reference drift the two quadrature conventions must agree to
    // well inside the finite-difference tolerance, so either one
    // cross-validates against the PDE solve.
    let corrected = quad_u(TAU, X_REF, &CollateralSpec::None, &p, &c, &quick_quad()).unwrap();
    let printed = quad_u(
        TAU,
        X_REF,
        &CollateralSpec::None,
        &p,
        &c,
        &QuadratureSpec {
            mode: DriftShiftMode::AsPrinted,
            ..quick_quad()
        },
    )
    .unwrap();
    let fd = solve(&grid(), &CollateralSpec::None, &p, &c, &FdOpts::default())
        .unwrap()
        .value_at(TAU, X_REF)
        .unwrap();
    assert!((corrected - printed).abs() < 1e-3);
    assert!((corrected - fd).abs() < 1.5e-3);
    assert!((printed - fd).abs() < 2e-3);
}
