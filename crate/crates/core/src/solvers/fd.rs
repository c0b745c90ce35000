//! Method-of-lines finite-difference solver on a truncated log-spot grid.
//!
//! The adjustment equation
//!
//! `u_tau = sigma^2/2 u_xx + rho u_x - kappa u - f(tau, x)`
//!
//! is discretized with second-order central differences on a uniform grid
//! `x_i = x_min + i delta_x`. The far-field row eliminates a ghost point
//! under a zero-curvature condition, the near-field row is pinned to the
//! exact Dirichlet value of the uncovered funding leg, and the resulting ODE
//! system is integrated implicitly in time.

use crate::adjustments::{collateral, hedge_error, source_term, CollateralSpec};
use crate::error::{Result, XvaError};
use crate::market::{self, ContractSpec, MarketParams};
use crate::numeric::{exact_steps, lerp_uniform, solve_tridiagonal};
use crate::solvers::analytic::dirichlet_boundary_u;

/// Spatial grid and output cadence. `delta_tau` is only the reporting step;
/// the adaptive integrator chooses its own internal steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub delta_x: f64,
    pub delta_tau: f64,
    pub tau_end: f64,
}

impl GridSpec {
    pub fn validate(&self, contract: &ContractSpec) -> Result<()> {
        for (name, value) in [
            ("x_min", self.x_min),
            ("x_max", self.x_max),
            ("delta_x", self.delta_x),
            ("delta_tau", self.delta_tau),
            ("tau_end", self.tau_end),
        ] {
            if !value.is_finite() {
                return Err(XvaError::Config(format!("grid {name} must be finite")));
            }
        }
        if !(self.x_min < 0.0 && self.x_max > 0.0) {
            return Err(XvaError::Config(format!(
                "grid must bracket x = 0, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.delta_x <= 0.0 || self.delta_tau <= 0.0 {
            return Err(XvaError::Config("grid steps must be positive".into()));
        }
        let n_x = exact_steps(self.x_max - self.x_min, self.delta_x, "spatial grid")?;
        if n_x < 2 {
            return Err(XvaError::Config(
                "spatial grid needs at least one interior point".into(),
            ));
        }
        if self.tau_end <= 0.0 || self.tau_end > contract.maturity * (1.0 + 1e-12) {
            return Err(XvaError::Config(format!(
                "tau_end must lie in (0, {}], got {}",
                contract.maturity, self.tau_end
            )));
        }
        Ok(())
    }

    /// Number of spatial intervals; the grid has `n_x() + 1` nodes.
    pub fn n_x(&self) -> usize {
        ((self.x_max - self.x_min) / self.delta_x).round() as usize
    }

    pub fn x_at(&self, i: usize) -> f64 {
        if i == self.n_x() {
            self.x_max
        } else {
            self.x_min + i as f64 * self.delta_x
        }
    }
}

/// A time slice of the semi-discrete system: the solution values and the
/// source row, both over the full grid including the two boundary nodes.
/// The source is re-evaluated at every integrator stage, never carried over.
#[derive(Debug, Clone)]
pub struct FdState {
    pub tau: f64,
    pub u: Vec<f64>,
    pub source: Vec<f64>,
}

impl FdState {
    /// Builds a state at `tau` from solution values `u`, evaluating the
    /// source row on the grid.
    pub fn evaluate(
        tau: f64,
        u: Vec<f64>,
        grid: &GridSpec,
        spec: &CollateralSpec,
        params: &MarketParams,
        contract: &ContractSpec,
    ) -> Result<Self> {
        let n = grid.n_x();
        if u.len() != n + 1 {
            return Err(XvaError::Dimension {
                expected: n + 1,
                actual: u.len(),
            });
        }
        let source = (0..=n)
            .map(|i| source_term(spec, tau, grid.x_at(i), params, contract).total)
            .collect();
        Ok(Self { tau, u, source })
    }
}

// Tridiagonal operator over the unknown rows i = 1..=n_x. Row n_x encodes
// the ghost-point elimination; the Dirichlet row 0 enters through the
// inhomogeneity.
struct Operator {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    // Coupling of the first unknown row to the boundary value u(tau, x_min).
    boundary_coeff: f64,
}

impl Operator {
    fn assemble(grid: &GridSpec, params: &MarketParams) -> Self {
        let n = grid.n_x();
        let dx = grid.delta_x;
        let sig2 = params.sigma * params.sigma;
        let rho = params.log_drift();
        let kappa = params.discount_rate();
        let lower = 0.5 * sig2 / (dx * dx) - 0.5 * rho / dx;
        let centre = -sig2 / (dx * dx) - kappa;
        let upper = 0.5 * sig2 / (dx * dx) + 0.5 * rho / dx;
        let mut sub = vec![lower; n];
        let mut diag = vec![centre; n];
        let mut sup = vec![upper; n];
        sub[0] = 0.0; // boundary coupling handled via the inhomogeneity
        sup[n - 1] = 0.0;
        sub[n - 1] = -rho / dx;
        diag[n - 1] = rho / dx - kappa;
        Operator {
            sub,
            diag,
            sup,
            boundary_coeff: lower,
        }
    }

    fn n(&self) -> usize {
        self.diag.len()
    }

    // out = A w.
    fn apply(&self, w: &[f64], out: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut acc = self.diag[i] * w[i];
            if i > 0 {
                acc += self.sub[i] * w[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * w[i + 1];
            }
            out[i] = acc;
        }
    }

    // Solves (I - gamma A) z = rhs.
    fn solve_implicit(&self, gamma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let sub: Vec<f64> = self.sub.iter().map(|&a| -gamma * a).collect();
        let sup: Vec<f64> = self.sup.iter().map(|&a| -gamma * a).collect();
        let diag: Vec<f64> = (0..n).map(|i| 1.0 - gamma * self.diag[i]).collect();
        solve_tridiagonal(&sub, &diag, &sup, rhs)
    }
}

// Everything the time marcher needs to evaluate the inhomogeneity at a
// given tau: boundary value b(tau) and the source row.
struct Inhomogeneity<'a> {
    grid: &'a GridSpec,
    spec: &'a CollateralSpec,
    params: &'a MarketParams,
    contract: &'a ContractSpec,
    boundary_coeff: f64,
    // Small memo keyed by the exact bits of tau; step doubling revisits the
    // same stage times several times per attempt.
    cache: Vec<(u64, BoundaryAndLoad)>,
}

#[derive(Clone)]
struct BoundaryAndLoad {
    boundary: f64,
    load: Vec<f64>,
}

impl<'a> Inhomogeneity<'a> {
    fn new(
        grid: &'a GridSpec,
        spec: &'a CollateralSpec,
        params: &'a MarketParams,
        contract: &'a ContractSpec,
        boundary_coeff: f64,
    ) -> Self {
        Self {
            grid,
            spec,
            params,
            contract,
            boundary_coeff,
            cache: Vec::with_capacity(8),
        }
    }

    fn boundary_value(&self, tau: f64) -> Result<f64> {
        let x = self.grid.x_min;
        let value = market::call_price_raw(tau, x.exp(), self.params, self.contract);
        let coll = collateral(self.spec, tau, x, value, self.params, self.contract);
        let eps_h = hedge_error(value, coll, self.params.recovery_b);
        dirichlet_boundary_u(tau, eps_h, self.params)
    }

    // q(tau) for the unknown rows, including the Dirichlet coupling, plus
    // the boundary value itself.
    fn at(&mut self, tau: f64) -> Result<BoundaryAndLoad> {
        let key = tau.to_bits();
        if let Some((_, hit)) = self.cache.iter().find(|(k, _)| *k == key) {
            return Ok(hit.clone());
        }
        let n = self.grid.n_x();
        let boundary = self.boundary_value(tau)?;
        let mut load = vec![0.0; n];
        for (k, slot) in load.iter_mut().enumerate() {
            let i = k + 1;
            *slot = -source_term(self.spec, tau, self.grid.x_at(i), self.params, self.contract)
                .total;
        }
        load[0] += self.boundary_coeff * boundary;
        let entry = BoundaryAndLoad { boundary, load };
        if self.cache.len() >= 8 {
            self.cache.remove(0);
        }
        self.cache.push((key, entry.clone()));
        Ok(entry)
    }
}

/// Time derivatives of the semi-discrete system at `state`, over the full
/// grid. Rows `1..n_x` follow the central / ghost-point stencils; row 0
/// reports the slope of the Dirichlet constraint it is pinned to.
pub fn rhs(
    state: &FdState,
    grid: &GridSpec,
    spec: &CollateralSpec,
    params: &MarketParams,
    contract: &ContractSpec,
) -> Result<Vec<f64>> {
    params.validate()?;
    contract.validate()?;
    spec.validate()?;
    grid.validate(contract)?;
    let n = grid.n_x();
    if state.u.len() != n + 1 {
        return Err(XvaError::Dimension {
            expected: n + 1,
            actual: state.u.len(),
        });
    }
    if state.source.len() != n + 1 {
        return Err(XvaError::Dimension {
            expected: n + 1,
            actual: state.source.len(),
        });
    }
    let op = Operator::assemble(grid, params);
    let mut out = vec![0.0; n + 1];
    // A w + q, with the source taken from the state itself.
    let w = &state.u[1..];
    let mut aw = vec![0.0; n];
    op.apply(w, &mut aw);
    for k in 0..n {
        out[k + 1] = aw[k] - state.source[k + 1];
    }
    out[1] += op.boundary_coeff * state.u[0];
    // Dirichlet row: d/dtau of lambda_b eps_h / kappa (e^{-kappa tau} - 1)
    // with the shortfall frozen at the current slice.
    let x0 = grid.x_min;
    let value = market::call_price_raw(state.tau, x0.exp(), params, contract);
    let coll = collateral(spec, state.tau, x0, value, params, contract);
    let eps_h = hedge_error(value, coll, params.recovery_b);
    out[0] = -params.lambda_b * eps_h * (-params.discount_rate() * state.tau).exp();
    Ok(out)
}

/// Time integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    /// Trapezoidal rule with step-doubling error control. Default.
    Adaptive,
    /// Crank-Nicolson with the reporting step as the fixed time step; for
    /// convergence studies where the time error should track `delta_tau`.
    FixedCrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOpts {
    pub scheme: TimeScheme,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for FdOpts {
    fn default() -> Self {
        Self {
            scheme: TimeScheme::Adaptive,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
        }
    }
}

impl FdOpts {
    fn validate(&self) -> Result<()> {
        if !self.rel_tol.is_finite() || !self.abs_tol.is_finite() {
            return Err(XvaError::Config("integrator tolerances must be finite".into()));
        }
        if self.rel_tol < 0.0 || self.abs_tol < 0.0 || (self.rel_tol == 0.0 && self.abs_tol == 0.0)
        {
            return Err(XvaError::Config(
                "integrator tolerances must be non-negative and not both zero".into(),
            ));
        }
        Ok(())
    }
}

/// Solved surface over the reporting times, queryable by linear
/// interpolation in `x`.
#[derive(Debug, Clone)]
pub struct FdSolution {
    x_min: f64,
    delta_x: f64,
    taus: Vec<f64>,
    surface: Vec<Vec<f64>>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl FdSolution {
    pub fn reporting_taus(&self) -> &[f64] {
        &self.taus
    }

    /// The grid row at reporting time `tau` (exact match up to round-off).
    pub fn slice(&self, tau: f64) -> Result<&[f64]> {
        let idx = self
            .taus
            .iter()
            .position(|&t| (t - tau).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| {
                XvaError::InvalidInput(format!("tau {tau} is not a reporting time"))
            })?;
        Ok(&self.surface[idx])
    }

    /// Point query at `(tau, x)`: `tau` must be a reporting time, `x` is
    /// interpolated linearly between grid nodes.
    pub fn value_at(&self, tau: f64, x: f64) -> Result<f64> {
        let row = self.slice(tau)?;
        lerp_uniform(self.x_min, self.delta_x, row, x)
    }
}

const MAX_ATTEMPTS: usize = 2_000_000;

/// Integrates the semi-discrete system from `tau = 0` to `grid.tau_end` and
/// returns the surface at the reporting times `0, delta_tau, 2 delta_tau, ...`.
pub fn solve(
    grid: &GridSpec,
    spec: &CollateralSpec,
    params: &MarketParams,
    contract: &ContractSpec,
    opts: &FdOpts,
) -> Result<FdSolution> {
    params.validate()?;
    contract.validate()?;
    spec.validate()?;
    grid.validate(contract)?;
    opts.validate()?;
    if params.discount_rate() <= 0.0 {
        return Err(XvaError::Config(format!(
            "boundary formula needs a positive discount rate, got {}",
            params.discount_rate()
        )));
    }
    let peclet = params.log_drift().abs() * grid.delta_x / (params.sigma * params.sigma);
    if peclet >= 2.0 {
        return Err(XvaError::Config(format!(
            "advection-dominated grid: |rho| delta_x / sigma^2 = {peclet:.3} >= 2; refine delta_x"
        )));
    }

    let n = grid.n_x();
    let op = Operator::assemble(grid, params);
    let mut load = Inhomogeneity::new(grid, spec, params, contract, op.boundary_coeff);

    // Reporting times: multiples of delta_tau, closed off at tau_end.
    let mut taus = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * grid.delta_tau;
        if t >= grid.tau_end * (1.0 - 1e-12) {
            taus.push(grid.tau_end);
            break;
        }
        taus.push(t);
        k += 1;
    }

    let mut surface = Vec::with_capacity(taus.len());
    surface.push(vec![0.0; n + 1]);

    let mut w = vec![0.0; n];
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut h_carry = f64::NAN;

    // One trapezoidal step of length h from tau, starting at w0 with
    // inhomogeneity (b0, q0) already evaluated at tau.
    let tr_step = |w0: &[f64],
                       tau: f64,
                       h: f64,
                       q0: &BoundaryAndLoad,
                       op: &Operator,
                       load: &mut Inhomogeneity|
     -> Result<Vec<f64>> {
        let q1 = load.at(tau + h)?;
        let mut rhs_vec = vec![0.0; w0.len()];
        op.apply(w0, &mut rhs_vec);
        for i in 0..w0.len() {
            rhs_vec[i] = w0[i] + 0.5 * h * (rhs_vec[i] + q0.load[i] + q1.load[i]);
        }
        op.solve_implicit(0.5 * h, &rhs_vec)
    };

    for pair in (0..taus.len() - 1).map(|i| (taus[i], taus[i + 1])) {
        let (t_from, t_to) = pair;
        match opts.scheme {
            TimeScheme::FixedCrankNicolson => {
                let q0 = load.at(t_from)?;
                w = tr_step(&w, t_from, t_to - t_from, &q0, &op, &mut load)?;
                accepted += 1;
            }
            TimeScheme::Adaptive => {
                let mut tau = t_from;
                let mut h = if h_carry.is_finite() {
                    h_carry
                } else {
                    (t_to - t_from).min(1e-3)
                };
                while tau < t_to * (1.0 - 1e-14) - 1e-300 {
                    h = h.min(t_to - tau);
                    if accepted + rejected > MAX_ATTEMPTS {
                        return Err(XvaError::StepUnderflow {
                            last_tau: tau,
                            step: h,
                        });
                    }
                    if h < 1e-13 * grid.tau_end.max(1.0) {
                        return Err(XvaError::StepUnderflow {
                            last_tau: tau,
                            step: h,
                        });
                    }
                    let q0 = load.at(tau)?;
                    let full = tr_step(&w, tau, h, &q0, &op, &mut load)?;
                    let half = tr_step(&w, tau, 0.5 * h, &q0, &op, &mut load)?;
                    let q_mid = load.at(tau + 0.5 * h)?;
                    let two_half = tr_step(&half, tau + 0.5 * h, 0.5 * h, &q_mid, &op, &mut load)?;
                    // Step-doubling estimate for a second-order one-step
                    // scheme: local error of the halved solution is a third
                    // of the gap.
                    let mut err_sq = 0.0;
                    for i in 0..n {
                        let err = (two_half[i] - full[i]) / 3.0;
                        let scale = opts.abs_tol + opts.rel_tol * w[i].abs().max(two_half[i].abs());
                        if err != 0.0 {
                            if scale == 0.0 {
                                err_sq = f64::INFINITY;
                                break;
                            }
                            err_sq += (err / scale) * (err / scale);
                        }
                    }
                    let err_norm = (err_sq / n as f64).sqrt();
                    let factor = if err_norm == 0.0 {
                        5.0
                    } else {
                        (0.9 * err_norm.powf(-1.0 / 3.0)).clamp(0.2, 5.0)
                    };
                    if err_norm <= 1.0 {
                        tau += h;
                        w = two_half;
                        accepted += 1;
                        h *= factor;
                    } else {
                        rejected += 1;
                        h *= factor.min(0.9);
                    }
                }
                h_carry = h;
            }
        }
        let boundary = load.at(t_to)?.boundary;
        let mut row = Vec::with_capacity(n + 1);
        row.push(boundary);
        row.extend_from_slice(&w);
        surface.push(row);
    }

    Ok(FdSolution {
        x_min: grid.x_min,
        delta_x: grid.delta_x,
        taus,
        surface,
        steps_accepted: accepted,
        steps_rejected: rejected,
    })
}
