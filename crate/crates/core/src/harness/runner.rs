//! Sweep execution: resolves each sweep value into a concrete cell, runs
//! the requested solvers at every evaluation point and assembles rows.
//!
//! Rows are ordered sweep-major, point-minor, solver-innermost, and cells
//! are evaluated in that order; the heavy kernels inside a cell fan out on
//! the global thread pool instead. A solver failure is recorded in
//! `failures` and leaves an empty `value` in its row; the run carries on.

use std::collections::HashMap;
use std::time::Instant;

use crate::adjustments::CollateralSpec;
use crate::error::{Result, XvaError};
use crate::harness::config::{ExperimentConfig, RunMode, SolverKind};
use crate::harness::report::ResultRow;
use crate::market::{ContractSpec, EvalPoint, MarketParams};
use crate::solvers::analytic::closed_form_u;
use crate::solvers::fd::{solve, FdOpts, FdSolution, GridSpec};
use crate::solvers::heatkernel::{quad_u, QuadratureSpec};
use crate::solvers::mc::{estimate, McSpec};

/// The rows of a finished run plus any recorded solver failures.
///
/// A non-empty `failures` list means some cells could not be computed; the
/// corresponding rows are present with an empty `value`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<String>,
}

/// One sweep value resolved into concrete solver inputs.
struct Cell {
    params: MarketParams,
    collateral: CollateralSpec,
    grid: GridSpec,
    quad: QuadratureSpec,
    mc: McSpec,
}

fn apply_sweep(cfg: &ExperimentConfig, value: f64) -> Result<Cell> {
    let mut cell = Cell {
        params: cfg.params,
        collateral: cfg.collateral,
        grid: cfg.grid,
        quad: cfg.quad,
        mc: cfg.mc,
    };
    match cfg.sweep.param.as_str() {
        "grid.delta_x" => cell.grid.delta_x = value,
        "grid.delta_tau" => cell.grid.delta_tau = value,
        "grid.x_min" => cell.grid.x_min = value,
        "grid.x_max" => cell.grid.x_max = value,
        "mc.n_paths" => {
            if (value - value.round()).abs() > 1e-9 || value < 2.0 {
                return Err(XvaError::Config(format!(
                    "mc.n_paths sweep value {value} is not an integer of at least 2"
                )));
            }
            cell.mc.n_paths = value.round() as usize;
        }
        "mc.delta_s" => cell.mc.delta_s = value,
        "quad.delta_s" => cell.quad.delta_s = value,
        "collateral.t0" => cell.collateral = CollateralSpec::Delayed { t0: value },
        "market.s_x" => cell.params.s_x = value,
        other => {
            return Err(XvaError::Config(format!("unknown sweep parameter {other:?}")));
        }
    }
    cell.params.validate()?;
    cell.collateral.validate()?;
    cell.grid.validate(&cfg.contract)?;
    cell.quad.validate()?;
    cell.mc.validate()?;
    Ok(cell)
}

/// True when the sweep changes the model itself, so benchmark values cannot
/// be shared across sweep values.
fn sweep_touches_model(param: &str) -> bool {
    param.starts_with("collateral.") || param.starts_with("market.")
}

/// Benchmark for one point: the closed form where it applies, otherwise the
/// heat-kernel quadrature at its reference settings.
fn benchmark_value(
    tau: f64,
    x: f64,
    collateral: &CollateralSpec,
    params: &MarketParams,
    contract: &ContractSpec,
) -> Result<f64> {
    if collateral.closed_form_applies() {
        closed_form_u(EvalPoint::new(tau, x)?, collateral, params, contract)
    } else {
        quad_u(tau, x, collateral, params, contract, &QuadratureSpec::benchmark())
    }
}

struct RowBuilder<'a> {
    cfg: &'a ExperimentConfig,
    sweep_value: f64,
    rows: Vec<ResultRow>,
    failures: Vec<String>,
}

impl<'a> RowBuilder<'a> {
    fn push(
        &mut self,
        solver: &str,
        (tau, x): (f64, f64),
        value: Result<f64>,
        benchmark: Option<f64>,
        se_ci: Option<(f64, f64, f64)>,
        wall_ms: f64,
    ) {
        let value = match value {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.push(format!(
                    "{}: sweep {}={}, point ({tau}, {x}), solver {solver}: {e}",
                    self.cfg.scenario, self.cfg.sweep.param, self.sweep_value
                ));
                None
            }
        };
        let (se, ci_lo, ci_hi) = match se_ci {
            Some((se, lo, hi)) => (Some(se), Some(lo), Some(hi)),
            None => (None, None, None),
        };
        self.rows.push(ResultRow {
            scenario: self.cfg.scenario.clone(),
            solver: solver.into(),
            sweep_param: self.cfg.sweep.param.clone(),
            sweep_value: self.sweep_value,
            tau,
            x,
            value,
            benchmark,
            abs_error: value
                .zip(benchmark)
                .map(|(v, b)| (v - b).abs()),
            se,
            ci_lo,
            ci_hi,
            wall_ms: if self.cfg.timings { wall_ms } else { 0.0 },
        });
    }

    /// Marks every (point, solver) row of the current sweep value failed.
    fn fail_cell(&mut self, err: &XvaError, solvers: &[SolverKind]) {
        self.failures.push(format!(
            "{}: sweep {}={}: {err}",
            self.cfg.scenario, self.cfg.sweep.param, self.sweep_value
        ));
        for &(tau, x) in &self.cfg.points {
            for solver in solvers {
                self.rows.push(ResultRow {
                    scenario: self.cfg.scenario.clone(),
                    solver: solver.label().into(),
                    sweep_param: self.cfg.sweep.param.clone(),
                    sweep_value: self.sweep_value,
                    tau,
                    x,
                    value: None,
                    benchmark: None,
                    abs_error: None,
                    se: None,
                    ci_lo: None,
                    ci_hi: None,
                    wall_ms: 0.0,
                });
            }
        }
    }
}

/// Runs the experiment described by `cfg` and returns the result table.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    // Benchmark values are deterministic per (model, point), so they are
    // computed once and shared across sweep values that leave the model
    // unchanged.
    let mut bench_cache: HashMap<(usize, u64, u64), Option<f64>> = HashMap::new();

    for (sweep_idx, &sweep_value) in cfg.sweep.values.iter().enumerate() {
        let mut builder = RowBuilder {
            cfg,
            sweep_value,
            rows: Vec::new(),
            failures: Vec::new(),
        };
        match apply_sweep(cfg, sweep_value) {
            Ok(cell) => match cfg.mode {
                RunMode::Sweep => {
                    let model_key = if sweep_touches_model(&cfg.sweep.param) {
                        sweep_idx + 1
                    } else {
                        0
                    };
                    run_sweep_cell(cfg, &cell, model_key, &mut bench_cache, &mut builder);
                }
                RunMode::DelayDiff => run_delay_diff_cell(cfg, &cell, sweep_value, &mut builder),
            },
            Err(e) => builder.fail_cell(&e, &cfg.solvers),
        }
        rows.append(&mut builder.rows);
        failures.append(&mut builder.failures);
    }
    Ok(RunOutcome { rows, failures })
}

fn run_sweep_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    model_key: usize,
    bench_cache: &mut HashMap<(usize, u64, u64), Option<f64>>,
    builder: &mut RowBuilder<'_>,
) {
    // One spatial solve serves every point of the cell.
    let fd_solution: Option<(Result<FdSolution>, f64)> =
        if cfg.solvers.contains(&SolverKind::Fd) {
            let start = Instant::now();
            let sol = solve(
                &cell.grid,
                &cell.collateral,
                &cell.params,
                &cfg.contract,
                &FdOpts::default(),
            );
            let ms = start.elapsed().as_secs_f64() * 1e3;
            if let Err(e) = &sol {
                builder.failures.push(format!(
                    "{}: sweep {}={}: fd: {e}",
                    cfg.scenario, cfg.sweep.param, builder.sweep_value
                ));
            }
            Some((sol, ms))
        } else {
            None
        };

    for &(tau, x) in &cfg.points {
        let benchmark = *bench_cache
            .entry((model_key, tau.to_bits(), x.to_bits()))
            .or_insert_with(|| {
                match benchmark_value(tau, x, &cell.collateral, &cell.params, &cfg.contract) {
                    Ok(b) => Some(b),
                    Err(e) => {
                        builder.failures.push(format!(
                            "{}: benchmark at ({tau}, {x}): {e}",
                            cfg.scenario
                        ));
                        None
                    }
                }
            });
        for solver in &cfg.solvers {
            match solver {
                SolverKind::Analytic => {
                    let start = Instant::now();
                    let value = EvalPoint::new(tau, x).and_then(|pt| {
                        closed_form_u(pt, &cell.collateral, &cell.params, &cfg.contract)
                    });
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    builder.push("analytic", (tau, x), value, benchmark, None, ms);
                }
                SolverKind::Fd => {
                    let (sol, solve_ms) = fd_solution.as_ref().expect("solved above");
                    match sol {
                        Ok(sol) => {
                            let value = sol.value_at(tau, x);
                            builder.push("fd", (tau, x), value, benchmark, None, *solve_ms);
                        }
                        // The cell-level failure is already recorded once;
                        // the rows just stay empty.
                        Err(_) => builder
                            .rows
                            .push(empty_row(cfg, builder.sweep_value, "fd", tau, x)),
                    }
                }
                SolverKind::HeatKernel => {
                    let start = Instant::now();
                    let value = quad_u(
                        tau,
                        x,
                        &cell.collateral,
                        &cell.params,
                        &cfg.contract,
                        &cell.quad,
                    );
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    builder.push("heatkernel", (tau, x), value, benchmark, None, ms);
                }
                SolverKind::Mc => {
                    let start = Instant::now();
                    let result = estimate(
                        tau,
                        x,
                        &cell.collateral,
                        &cell.params,
                        &cfg.contract,
                        &cell.mc,
                    );
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    match result {
                        Ok(r) => {
                            let (lo, hi) = r.ci95();
                            builder.push(
                                "mc",
                                (tau, x),
                                Ok(r.u_total),
                                benchmark,
                                Some((r.se_total, lo, hi)),
                                ms,
                            );
                        }
                        Err(e) => builder.push("mc", (tau, x), Err(e), benchmark, None, ms),
                    }
                }
            }
        }
    }
}

/// Difference between the undelayed two-way balance and the delayed one,
/// from two finite-difference surfaces on the same grid.
fn run_delay_diff_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    t0: f64,
    builder: &mut RowBuilder<'_>,
) {
    let start = Instant::now();
    let undelayed = CollateralSpec::Linear {
        alpha: 1.0,
        beta: -1.0,
    };
    let delayed = CollateralSpec::Delayed { t0 };
    let solved = solve(&cell.grid, &undelayed, &cell.params, &cfg.contract, &FdOpts::default())
        .and_then(|a| {
            solve(&cell.grid, &delayed, &cell.params, &cfg.contract, &FdOpts::default())
                .map(|b| (a, b))
        });
    let ms = start.elapsed().as_secs_f64() * 1e3;
    match solved {
        Ok((a, b)) => {
            for &(tau, x) in &cfg.points {
                let diff = a
                    .value_at(tau, x)
                    .and_then(|va| b.value_at(tau, x).map(|vb| va - vb));
                builder.push("fd", (tau, x), diff, None, None, ms);
            }
        }
        Err(e) => builder.fail_cell(&e, &[SolverKind::Fd]),
    }
}

fn empty_row(
    cfg: &ExperimentConfig,
    sweep_value: f64,
    solver: &str,
    tau: f64,
    x: f64,
) -> ResultRow {
    ResultRow {
        scenario: cfg.scenario.clone(),
        solver: solver.into(),
        sweep_param: cfg.sweep.param.clone(),
        sweep_value,
        tau,
        x,
        value: None,
        benchmark: None,
        abs_error: None,
        se: None,
        ci_lo: None,
        ci_hi: None,
        wall_ms: 0.0,
    }
}
