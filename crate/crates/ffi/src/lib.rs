//! C ABI over the adjustment engine.
//!
//! Conventions of the exported interface:
//!
//! - Every fallible call returns an `int32_t` status code; `XVA_OK` is zero.
//!   Results are written through out-pointers and left untouched on failure.
//! - `xva_last_error()` describes the most recent failure on the calling
//!   thread. The returned pointer stays valid until the next failing call
//!   on that thread.
//! - All pointer arguments must be valid and properly aligned for the
//!   duration of the call; NULLs are rejected with `XVA_ERR_NULL_POINTER`.
//! - The finite-difference solution is an opaque handle released with
//!   `xva_fd_free`.
//!
//! The C header is generated into `include/xva.h` by the build script.

use std::cell::RefCell;
use std::ffi::CString;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use xva::adjustments::{source_term, CollateralSpec};
use xva::error::XvaError;
use xva::market::{bs_call, v, ContractSpec, EvalPoint, MarketParams};
use xva::solvers::analytic::closed_form_u;
use xva::solvers::fd::{solve, FdOpts, FdSolution, GridSpec};
use xva::solvers::heatkernel::{quad_u, DriftShiftMode, QuadratureSpec};
use xva::solvers::mc::{estimate, McSpec};

/// The call completed.
pub const XVA_OK: i32 = 0;
/// A numeric input fell outside its admissible domain.
pub const XVA_ERR_INVALID_INPUT: i32 = 1;
/// A solver or lattice specification failed validation.
pub const XVA_ERR_CONFIG: i32 = 2;
/// The operation is not defined for the requested collateral regime.
pub const XVA_ERR_UNSUPPORTED_REGIME: i32 = 3;
/// The solver gave up.
pub const XVA_ERR_SOLVER: i32 = 4;
/// A required pointer argument was NULL.
pub const XVA_ERR_NULL_POINTER: i32 = 5;
/// An internal invariant was violated; treat the library state as poisoned.
pub const XVA_ERR_PANIC: i32 = 6;

/// Collateral `kind`: uncollateralised, the balance is zero.
pub const XVA_COLLATERAL_NONE: i32 = 0;
/// Collateral `kind`: balance `alpha V^+ + beta V^-` tracking the clean
/// value; `alpha = 0, beta = -1` is a one-way CSA posted by the issuer,
/// `alpha = 1, beta = -1` a two-way CSA.
pub const XVA_COLLATERAL_LINEAR: i32 = 1;
/// Collateral `kind`: two-way balance observed `t0` years ago.
pub const XVA_COLLATERAL_DELAYED: i32 = 2;

/// Market and credit parameters. `sigma` is the volatility, `r` the
/// risk-free rate, `q_s` the repo/funding rate of the underlying,
/// `gamma_s` its dividend yield, `lambda_b`/`lambda_c` the issuer and
/// counterparty hazard rates, `recovery_b`/`recovery_c` the recoveries
/// and `s_x` the spread paid on posted collateral.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct XvaMarketParams {
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

/// European call: strike and maturity in years.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct XvaContract {
    pub strike: f64,
    pub maturity: f64,
}

/// Collateral regime. `kind` selects one of the `XVA_COLLATERAL_*`
/// constants; `alpha`/`beta` are read for the linear kind, `t0` for the
/// delayed kind, the rest is ignored.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct XvaCollateral {
    pub kind: i32,
    pub alpha: f64,
    pub beta: f64,
    pub t0: f64,
}

/// Spatial grid and reporting cadence of the finite-difference solver.
/// The grid spans `[x_min, x_max]` in log-spot with step `delta_x`; the
/// surface is reported every `delta_tau` up to `tau_end`.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct XvaGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub delta_x: f64,
    pub delta_tau: f64,
    pub tau_end: f64,
}

/// Lattice of the heat-kernel quadrature solver. `as_printed` selects the
/// spatial-shift variant: 0 applies the slice-dependent shift, 1 the
/// full-horizon shift kept for comparison studies.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct XvaQuadSpec {
    pub delta_s: f64,
    pub delta_y: f64,
    pub y_max: f64,
    pub as_printed: i32,
}

/// Monte-Carlo controls: path count, time-quadrature step (must tile the
/// horizon exactly), seed, and whether to mirror odd paths around the
/// drift (`antithetic` nonzero).
#[repr(C)]
#[derive(Clone, Copy)]
pub struct XvaMcSpec {
    pub n_paths: u64,
    pub delta_s: f64,
    pub seed: u64,
    pub antithetic: i32,
}

/// Monte-Carlo estimate of the adjustment split into its four terms, with
/// a standard error per term. `se_total` is measured on the per-path
/// totals, so it accounts for correlation between terms.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct XvaMcResult {
    pub u_cva: f64,
    pub u_dva: f64,
    pub u_fca: f64,
    pub u_colva: f64,
    pub u_total: f64,
    pub se_cva: f64,
    pub se_dva: f64,
    pub se_fca: f64,
    pub se_colva: f64,
    pub se_total: f64,
}

/// Source term of the adjustment equation split into its named pieces;
/// `total` is their exact sum.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct XvaSourceTerm {
    pub f_cva: f64,
    pub f_dva: f64,
    pub f_fca: f64,
    pub f_colva: f64,
    pub total: f64,
}

/// Opaque finite-difference solution; query with `xva_fd_value_at` and
/// release with `xva_fd_free`.
pub struct XvaFdSolution {
    inner: FdSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = CString::new(msg.replace('\0', " "))
        .unwrap_or_else(|_| CString::default());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = sanitized);
}

fn fail(err: XvaError) -> i32 {
    let status = match err {
        XvaError::InvalidInput(_) | XvaError::DegenerateExpiry { .. } | XvaError::Dimension { .. } => {
            XVA_ERR_INVALID_INPUT
        }
        XvaError::Config(_) => XVA_ERR_CONFIG,
        XvaError::UnsupportedRegime(_) => XVA_ERR_UNSUPPORTED_REGIME,
        _ => XVA_ERR_SOLVER,
    };
    set_error(&err.to_string());
    status
}

fn fail_null(name: &str) -> i32 {
    set_error(&format!("{name} must not be NULL"));
    XVA_ERR_NULL_POINTER
}

/// Catches panics at the ABI boundary; unwinding into C is undefined.
fn guard<F: FnOnce() -> i32>(body: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            XVA_ERR_PANIC
        }
    }
}

macro_rules! require_non_null {
    ($($ptr:ident),+ $(,)?) => {
        $( if $ptr.is_null() { return fail_null(stringify!($ptr)); } )+
    };
}

fn to_market(p: &XvaMarketParams) -> MarketParams {
    MarketParams {
        sigma: p.sigma,
        r: p.r,
        q_s: p.q_s,
        gamma_s: p.gamma_s,
        lambda_b: p.lambda_b,
        lambda_c: p.lambda_c,
        recovery_b: p.recovery_b,
        recovery_c: p.recovery_c,
        s_x: p.s_x,
    }
}

fn to_contract(c: &XvaContract) -> ContractSpec {
    ContractSpec {
        strike: c.strike,
        maturity: c.maturity,
    }
}

fn to_collateral(c: &XvaCollateral) -> Result<CollateralSpec, XvaError> {
    match c.kind {
        XVA_COLLATERAL_NONE => Ok(CollateralSpec::None),
        XVA_COLLATERAL_LINEAR => Ok(CollateralSpec::Linear {
            alpha: c.alpha,
            beta: c.beta,
        }),
        XVA_COLLATERAL_DELAYED => Ok(CollateralSpec::Delayed { t0: c.t0 }),
        kind => Err(XvaError::InvalidInput(format!(
            "unknown collateral kind {kind}"
        ))),
    }
}

fn to_quad(q: &XvaQuadSpec) -> Result<QuadratureSpec, XvaError> {
    let mode = match q.as_printed {
        0 => DriftShiftMode::Corrected,
        1 => DriftShiftMode::AsPrinted,
        other => {
            return Err(XvaError::InvalidInput(format!(
                "as_printed must be 0 or 1, got {other}"
            )))
        }
    };
    Ok(QuadratureSpec {
        delta_s: q.delta_s,
        delta_y: q.delta_y,
        y_max: q.y_max,
        mode,
    })
}

fn to_mc(m: &XvaMcSpec) -> Result<McSpec, XvaError> {
    let n_paths = usize::try_from(m.n_paths)
        .map_err(|_| XvaError::InvalidInput(format!("n_paths {} overflows", m.n_paths)))?;
    let mut spec = McSpec::new(n_paths, m.delta_s, m.seed);
    spec.antithetic = m.antithetic != 0;
    Ok(spec)
}

fn to_grid(g: &XvaGridSpec) -> GridSpec {
    GridSpec {
        x_min: g.x_min,
        x_max: g.x_max,
        delta_x: g.delta_x,
        delta_tau: g.delta_tau,
        tau_end: g.tau_end,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn xva_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on the calling thread, empty when no
/// call has failed yet. Valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn xva_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// The reference quadrature lattice used as the cross-solver benchmark.
#[no_mangle]
pub extern "C" fn xva_quad_benchmark() -> XvaQuadSpec {
    let q = QuadratureSpec::benchmark();
    XvaQuadSpec {
        delta_s: q.delta_s,
        delta_y: q.delta_y,
        y_max: q.y_max,
        as_printed: 0,
    }
}

/// Default-free European call price at calendar time `s` and spot `spot`.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn xva_bs_call(
    s: f64,
    spot: f64,
    params: *const XvaMarketParams,
    contract: *const XvaContract,
    out: *mut f64,
) -> i32 {
    guard(|| {
        require_non_null!(params, contract, out);
        let (p, c) = unsafe { (to_market(&*params), to_contract(&*contract)) };
        if let Err(e) = p.validate().and_then(|_| c.validate()) {
            return fail(e);
        }
        match bs_call(s, spot, &p, &c) {
            Ok(price) => {
                unsafe { *out = price };
                XVA_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Clean value `v(tau, x)` at time-to-maturity `tau` and log-spot `x`.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn xva_clean_value(
    tau: f64,
    x: f64,
    params: *const XvaMarketParams,
    contract: *const XvaContract,
    out: *mut f64,
) -> i32 {
    guard(|| {
        require_non_null!(params, contract, out);
        let (p, c) = unsafe { (to_market(&*params), to_contract(&*contract)) };
        if let Err(e) = p.validate().and_then(|_| c.validate()) {
            return fail(e);
        }
        match v(tau, x, &p, &c) {
            Ok(value) => {
                unsafe { *out = value };
                XVA_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Closed-form adjustment at `(tau, x)`. Only defined for regimes where
/// the exposure stays unsecured and non-negative; others return
/// `XVA_ERR_UNSUPPORTED_REGIME`.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn xva_closed_form_u(
    tau: f64,
    x: f64,
    collateral: *const XvaCollateral,
    params: *const XvaMarketParams,
    contract: *const XvaContract,
    out: *mut f64,
) -> i32 {
    guard(|| {
        require_non_null!(collateral, params, contract, out);
        let (p, c) = unsafe { (to_market(&*params), to_contract(&*contract)) };
        let spec = match unsafe { to_collateral(&*collateral) } {
            Ok(spec) => spec,
            Err(e) => return fail(e),
        };
        let point = match EvalPoint::new(tau, x) {
            Ok(point) => point,
            Err(e) => return fail(e),
        };
        match closed_form_u(point, &spec, &p, &c) {
            Ok(u) => {
                unsafe { *out = u };
                XVA_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Heat-kernel quadrature evaluation of the adjustment at `(tau, x)`.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn xva_heat_kernel_u(
    tau: f64,
    x: f64,
    collateral: *const XvaCollateral,
    params: *const XvaMarketParams,
    contract: *const XvaContract,
    quad: *const XvaQuadSpec,
    out: *mut f64,
) -> i32 {
    guard(|| {
        require_non_null!(collateral, params, contract, quad, out);
        let (p, c) = unsafe { (to_market(&*params), to_contract(&*contract)) };
        let spec = match unsafe { to_collateral(&*collateral) } {
            Ok(spec) => spec,
            Err(e) => return fail(e),
        };
        let qspec = match unsafe { to_quad(&*quad) } {
            Ok(qspec) => qspec,
            Err(e) => return fail(e),
        };
        match quad_u(tau, x, &spec, &p, &c, &qspec) {
            Ok(u) => {
                unsafe { *out = u };
                XVA_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Monte-Carlo estimate of the adjustment at `(tau, x)`. Deterministic for
/// a fixed spec: the same seed reproduces the same result bit for bit.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn xva_mc_estimate(
    tau: f64,
    x: f64,
    collateral: *const XvaCollateral,
    params: *const XvaMarketParams,
    contract: *const XvaContract,
    mc: *const XvaMcSpec,
    out: *mut XvaMcResult,
) -> i32 {
    guard(|| {
        require_non_null!(collateral, params, contract, mc, out);
        let (p, c) = unsafe { (to_market(&*params), to_contract(&*contract)) };
        let spec = match unsafe { to_collateral(&*collateral) } {
            Ok(spec) => spec,
            Err(e) => return fail(e),
        };
        let mcspec = match unsafe { to_mc(&*mc) } {
            Ok(mcspec) => mcspec,
            Err(e) => return fail(e),
        };
        match estimate(tau, x, &spec, &p, &c, &mcspec) {
            Ok(r) => {
                unsafe {
                    *out = XvaMcResult {
                        u_cva: r.u_cva,
                        u_dva: r.u_dva,
                        u_fca: r.u_fca,
                        u_colva: r.u_colva,
                        u_total: r.u_total,
                        se_cva: r.se_cva,
                        se_dva: r.se_dva,
                        se_fca: r.se_fca,
                        se_colva: r.se_colva,
                        se_total: r.se_total,
                    };
                }
                XVA_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Source term of the adjustment equation at `(tau, x)`.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn xva_source_term(
    tau: f64,
    x: f64,
    collateral: *const XvaCollateral,
    params: *const XvaMarketParams,
    contract: *const XvaContract,
    out: *mut XvaSourceTerm,
) -> i32 {
    guard(|| {
        require_non_null!(collateral, params, contract, out);
        let (p, c) = unsafe { (to_market(&*params), to_contract(&*contract)) };
        if let Err(e) = p.validate().and_then(|_| c.validate()) {
            return fail(e);
        }
        if !tau.is_finite() || tau < 0.0 || !x.is_finite() {
            return fail(XvaError::InvalidInput(format!(
                "source term needs non-negative finite tau and finite x, got tau = {tau}, x = {x}"
            )));
        }
        let spec = match unsafe { to_collateral(&*collateral) } {
            Ok(spec) => spec,
            Err(e) => return fail(e),
        };
        if let Err(e) = spec.validate() {
            return fail(e);
        }
        let f = source_term(&spec, tau, x, &p, &c);
        unsafe {
            *out = XvaSourceTerm {
                f_cva: f.f_cva,
                f_dva: f.f_dva,
                f_fca: f.f_fca,
                f_colva: f.f_colva,
                total: f.total,
            };
        }
        XVA_OK
    })
}

/// Runs the finite-difference solver and hands back an opaque solution.
/// On success `*out` owns the handle; release it with `xva_fd_free`.
///
/// # Safety
/// All pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn xva_fd_solve(
    grid: *const XvaGridSpec,
    collateral: *const XvaCollateral,
    params: *const XvaMarketParams,
    contract: *const XvaContract,
    out: *mut *mut XvaFdSolution,
) -> i32 {
    guard(|| {
        require_non_null!(grid, collateral, params, contract, out);
        let (p, c) = unsafe { (to_market(&*params), to_contract(&*contract)) };
        let g = unsafe { to_grid(&*grid) };
        let spec = match unsafe { to_collateral(&*collateral) } {
            Ok(spec) => spec,
            Err(e) => return fail(e),
        };
        match solve(&g, &spec, &p, &c, &FdOpts::default()) {
            Ok(sol) => {
                unsafe { *out = Box::into_raw(Box::new(XvaFdSolution { inner: sol })) };
                XVA_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Point query on a solved surface. `tau` must be one of the reporting
/// times; `x` is interpolated linearly between grid nodes.
///
/// # Safety
/// `solution` must be a live handle from `xva_fd_solve`.
#[no_mangle]
pub unsafe extern "C" fn xva_fd_value_at(
    solution: *const XvaFdSolution,
    tau: f64,
    x: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        require_non_null!(solution, out);
        match unsafe { &*solution }.inner.value_at(tau, x) {
            Ok(u) => {
                unsafe { *out = u };
                XVA_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a solution handle. NULL is ignored.
///
/// # Safety
/// `solution` must be NULL or a live handle from `xva_fd_solve`, and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn xva_fd_free(solution: *mut XvaFdSolution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}
