//! Builtin study configurations.
//!
//! Each scenario is a ready-to-run [`ExperimentConfig`] on the reference
//! parameter set. The `fig*` names identify the plots this tool's output
//! feeds; plotting itself is external.
//!
//! - `oracle`: all four solvers against the closed form at the reference
//!   point, at their production settings.
//! - `fig2-left`: spatial-step sweep of the finite-difference solver at a
//!   fixed reporting step.
//! - `fig2-right`: reporting-step sweep at a fixed spatial step.
//! - `fig3-xmax`: right-boundary truncation sweep.
//! - `fig4-mc`: Monte-Carlo path-count sweep, uncollateralised.
//! - `fig5-diff`: undelayed-minus-delayed value surface under a collateral
//!   spread above the hedge-funding level.
//! - `fig5-mc`: Monte-Carlo path-count sweep under the delayed balance.

use crate::adjustments::CollateralSpec;
use crate::harness::config::{ExperimentConfig, RunMode, SolverKind, Sweep};
use crate::solvers::mc::McSpec;

pub const NAMES: [&str; 7] = [
    "oracle",
    "fig2-left",
    "fig2-right",
    "fig3-xmax",
    "fig4-mc",
    "fig5-diff",
    "fig5-mc",
];

/// Path counts 10^3, 10^3.5, ..., 10^5 rounded to whole paths.
const PATH_LADDER: [f64; 5] = [1000.0, 3162.0, 10000.0, 31623.0, 100000.0];

/// Ten trading days of a 252-day year.
const TEN_DAYS: f64 = 10.0 / 252.0;

pub fn names() -> &'static [&'static str] {
    &NAMES
}

/// Returns the named builtin, or `None` for an unknown name.
pub fn builtin(name: &str) -> Option<ExperimentConfig> {
    let mut cfg = ExperimentConfig::reference();
    cfg.scenario = name.to_string();
    match name {
        "oracle" => {
            cfg.solvers = vec![
                SolverKind::Analytic,
                SolverKind::Fd,
                SolverKind::HeatKernel,
                SolverKind::Mc,
            ];
            cfg.mc = McSpec::new(100_000, 0.0009765625, 1);
            cfg.sweep = Sweep {
                param: "grid.delta_x".into(),
                values: vec![0.015625],
            };
        }
        "fig2-left" => {
            cfg.grid.delta_tau = 0.015625;
            cfg.sweep = Sweep {
                param: "grid.delta_x".into(),
                values: vec![0.25, 0.0625, 0.015625, 0.00390625],
            };
        }
        "fig2-right" => {
            cfg.grid.delta_x = 0.015625;
            cfg.sweep = Sweep {
                param: "grid.delta_tau".into(),
                values: vec![0.25, 0.0625, 0.015625, 0.00390625, 0.0009765625],
            };
        }
        "fig3-xmax" => {
            cfg.grid.x_min = -4.0;
            cfg.grid.delta_x = 0.015625;
            cfg.grid.delta_tau = 0.125;
            cfg.sweep = Sweep {
                param: "grid.x_max".into(),
                values: vec![5.0, 6.0, 7.0, 8.0],
            };
        }
        "fig4-mc" => {
            cfg.solvers = vec![SolverKind::Mc];
            cfg.mc = McSpec::new(1000, 0.0009765625, 1);
            cfg.sweep = Sweep {
                param: "mc.n_paths".into(),
                values: PATH_LADDER.to_vec(),
            };
        }
        "fig5-diff" => {
            cfg.params.s_x = 0.02;
            cfg.collateral = CollateralSpec::Delayed { t0: TEN_DAYS };
            cfg.mode = RunMode::DelayDiff;
            cfg.solvers = vec![SolverKind::Fd];
            cfg.sweep = Sweep {
                param: "collateral.t0".into(),
                values: vec![TEN_DAYS],
            };
            cfg.points = surface_points();
        }
        "fig5-mc" => {
            cfg.params.s_x = 0.02;
            cfg.collateral = CollateralSpec::Delayed { t0: TEN_DAYS };
            cfg.solvers = vec![SolverKind::Mc];
            cfg.mc = McSpec::new(1000, 0.0009765625, 1);
            cfg.sweep = Sweep {
                param: "mc.n_paths".into(),
                values: PATH_LADDER.to_vec(),
            };
        }
        _ => return None,
    }
    Some(cfg)
}

/// The (tau, x) surface for the difference study: four horizons crossed
/// with four log-spots around the reference point. Points further out of
/// the money are excluded because the difference there falls below what
/// any of the solvers can resolve.
fn surface_points() -> Vec<(f64, f64)> {
    let x_ref = 12f64.ln();
    let mut points = Vec::new();
    for tau in [0.5, 1.0, 1.5, 2.0] {
        for offset in [-0.5, 0.0, 0.5, 1.0] {
            points.push((tau, x_ref + offset));
        }
    }
    points
}
