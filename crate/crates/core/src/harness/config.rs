//! Experiment configuration: a flat key=value file format plus defaults.
//!
//! The format is line oriented. `#` starts a comment, blank lines are
//! skipped, and every other line must read `key = value`. Unknown or
//! duplicated keys are errors so typos fail loudly. Any key left out falls
//! back to the reference setup documented in the README.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::adjustments::CollateralSpec;
use crate::error::{Result, XvaError};
use crate::market::{ContractSpec, MarketParams};
use crate::solvers::fd::GridSpec;
use crate::solvers::heatkernel::{DriftShiftMode, QuadratureSpec};
use crate::solvers::mc::McSpec;

/// Solvers the runner can dispatch to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Analytic,
    Fd,
    HeatKernel,
    Mc,
}

impl SolverKind {
    pub fn label(&self) -> &'static str {
        match self {
            SolverKind::Analytic => "analytic",
            SolverKind::Fd => "fd",
            SolverKind::HeatKernel => "heatkernel",
            SolverKind::Mc => "mc",
        }
    }

    fn parse(token: &str) -> Result<Self> {
        match token {
            "analytic" => Ok(SolverKind::Analytic),
            "fd" => Ok(SolverKind::Fd),
            "heatkernel" => Ok(SolverKind::HeatKernel),
            "mc" => Ok(SolverKind::Mc),
            other => Err(XvaError::Config(format!(
                "unknown solver {other:?}, expected analytic, fd, heatkernel or mc"
            ))),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// What a run produces per sweep value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// One row per (sweep value, point, solver).
    Sweep,
    /// One row per (sweep value, point): the value of the contract under
    /// the instantaneous two-way balance minus its value under the delayed
    /// balance, both from the finite-difference solver.
    DelayDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Sweep definition: which knob varies and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

/// Parameter paths the sweep may reference.
pub const SWEEP_PARAMS: [&str; 9] = [
    "grid.delta_x",
    "grid.delta_tau",
    "grid.x_min",
    "grid.x_max",
    "mc.n_paths",
    "mc.delta_s",
    "quad.delta_s",
    "collateral.t0",
    "market.s_x",
];

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub params: MarketParams,
    pub contract: ContractSpec,
    pub collateral: CollateralSpec,
    pub solvers: Vec<SolverKind>,
    pub mode: RunMode,
    pub grid: GridSpec,
    pub quad: QuadratureSpec,
    pub mc: McSpec,
    pub sweep: Sweep,
    /// Evaluation points as (tau, x) pairs.
    pub points: Vec<(f64, f64)>,
    /// Record wall-clock times per row. Off by default so output bytes are
    /// reproducible.
    pub timings: bool,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The reference setup: uncollateralised call, strike 15, two years to
    /// run, finite differences on [-5, 5] with delta_x 2^-6, evaluated at
    /// (tau, x) = (2, ln 12).
    pub fn reference() -> Self {
        let contract = ContractSpec {
            strike: 15.0,
            maturity: 2.0,
        };
        Self {
            scenario: "custom".into(),
            params: MarketParams {
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
            contract,
            collateral: CollateralSpec::None,
            solvers: vec![SolverKind::Fd],
            mode: RunMode::Sweep,
            grid: GridSpec {
                x_min: -5.0,
                x_max: 5.0,
                delta_x: 0.015625,
                delta_tau: 0.125,
                tau_end: contract.maturity,
            },
            quad: QuadratureSpec::benchmark(),
            mc: McSpec::new(10_000, 0.0625, 1),
            sweep: Sweep {
                param: "grid.delta_x".into(),
                values: vec![0.015625],
            },
            points: vec![(2.0, 12f64.ln())],
            timings: false,
            format: OutputFormat::Csv,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.contract.validate()?;
        self.collateral.validate()?;
        self.grid.validate(&self.contract)?;
        self.quad.validate()?;
        self.mc.validate()?;
        if self.solvers.is_empty() {
            return Err(XvaError::Config("solvers must not be empty".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(XvaError::Config("sweep.values must not be empty".into()));
        }
        if !SWEEP_PARAMS.contains(&self.sweep.param.as_str()) {
            return Err(XvaError::Config(format!(
                "unknown sweep parameter {:?}, expected one of {}",
                self.sweep.param,
                SWEEP_PARAMS.join(", ")
            )));
        }
        for &v in &self.sweep.values {
            if !v.is_finite() {
                return Err(XvaError::Config(format!("sweep value {v} is not finite")));
            }
        }
        if self.sweep.param == "collateral.t0"
            && !matches!(self.collateral, CollateralSpec::Delayed { .. })
        {
            return Err(XvaError::Config(
                "sweeping collateral.t0 needs a delayed collateral regime".into(),
            ));
        }
        if self.mode == RunMode::DelayDiff {
            if self.sweep.param != "collateral.t0" {
                return Err(XvaError::Config(
                    "delay-diff mode sweeps collateral.t0 by definition".into(),
                ));
            }
            if self.solvers != vec![SolverKind::Fd] {
                return Err(XvaError::Config(
                    "delay-diff mode compares finite-difference surfaces, set solvers = fd".into(),
                ));
            }
        }
        if self.points.is_empty() {
            return Err(XvaError::Config("points must not be empty".into()));
        }
        for &(tau, x) in &self.points {
            if !tau.is_finite() || !x.is_finite() || tau < 0.0 {
                return Err(XvaError::Config(format!(
                    "evaluation point ({tau}, {x}) is not a valid (tau, x) pair"
                )));
            }
        }
        Ok(())
    }

    /// Parses a config file on top of the reference defaults.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            XvaError::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        Self::from_str(&text)
    }

    /// Parses config text on top of the reference defaults.
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let mut raw = RawConfig::parse(text)?;
        let mut cfg = Self::reference();

        if let Some(v) = raw.take("scenario") {
            cfg.scenario = v;
        }
        macro_rules! real_keys {
            ($($key:literal => $field:expr),+ $(,)?) => {
                $(if let Some(v) = raw.take_f64($key)? { $field = v; })+
            };
        }
        real_keys! {
            "sigma" => cfg.params.sigma,
            "r" => cfg.params.r,
            "q_s" => cfg.params.q_s,
            "gamma_s" => cfg.params.gamma_s,
            "lambda_b" => cfg.params.lambda_b,
            "lambda_c" => cfg.params.lambda_c,
            "recovery_b" => cfg.params.recovery_b,
            "recovery_c" => cfg.params.recovery_c,
            "s_x" => cfg.params.s_x,
            "strike" => cfg.contract.strike,
            "maturity" => cfg.contract.maturity,
            "grid.x_min" => cfg.grid.x_min,
            "grid.x_max" => cfg.grid.x_max,
            "grid.delta_x" => cfg.grid.delta_x,
            "grid.delta_tau" => cfg.grid.delta_tau,
            "quad.delta_s" => cfg.quad.delta_s,
            "quad.delta_y" => cfg.quad.delta_y,
            "quad.y_max" => cfg.quad.y_max,
            "mc.delta_s" => cfg.mc.delta_s,
        }
        // tau_end defaults to the (possibly overridden) maturity.
        cfg.grid.tau_end = cfg.contract.maturity;
        if let Some(v) = raw.take_f64("grid.tau_end")? {
            cfg.grid.tau_end = v;
        }
        if let Some(v) = raw.take_usize("mc.n_paths")? {
            cfg.mc.n_paths = v;
        }
        if let Some(v) = raw.take_u64("mc.seed")? {
            cfg.mc.seed = v;
        }
        if let Some(v) = raw.take_bool("mc.antithetic")? {
            cfg.mc.antithetic = v;
        }
        if let Some(v) = raw.take_bool("timings")? {
            cfg.timings = v;
        }

        let alpha = raw.take_f64("alpha")?;
        let beta = raw.take_f64("beta")?;
        let t0 = raw.take_f64("t0")?;
        if let Some(kind) = raw.take("collateral") {
            cfg.collateral = match kind.as_str() {
                "none" => CollateralSpec::None,
                "linear" => CollateralSpec::Linear {
                    alpha: alpha.unwrap_or(0.0),
                    beta: beta.unwrap_or(0.0),
                },
                "delayed" => CollateralSpec::Delayed {
                    t0: t0.ok_or_else(|| {
                        XvaError::Config("collateral = delayed needs a t0 key".into())
                    })?,
                },
                other => {
                    return Err(XvaError::Config(format!(
                        "unknown collateral {other:?}, expected none, linear or delayed"
                    )))
                }
            };
        } else if alpha.is_some() || beta.is_some() || t0.is_some() {
            return Err(XvaError::Config(
                "alpha, beta and t0 only make sense together with a collateral key".into(),
            ));
        }

        if let Some(v) = raw.take("quad.mode") {
            cfg.quad.mode = match v.as_str() {
                "corrected" => DriftShiftMode::Corrected,
                "as-printed" => DriftShiftMode::AsPrinted,
                other => {
                    return Err(XvaError::Config(format!(
                        "unknown quad.mode {other:?}, expected corrected or as-printed"
                    )))
                }
            };
        }
        if let Some(v) = raw.take("mode") {
            cfg.mode = match v.as_str() {
                "sweep" => RunMode::Sweep,
                "delay-diff" => RunMode::DelayDiff,
                other => {
                    return Err(XvaError::Config(format!(
                        "unknown mode {other:?}, expected sweep or delay-diff"
                    )))
                }
            };
        }
        if let Some(v) = raw.take("format") {
            cfg.format = match v.as_str() {
                "csv" => OutputFormat::Csv,
                "json" => OutputFormat::Json,
                other => {
                    return Err(XvaError::Config(format!(
                        "unknown format {other:?}, expected csv or json"
                    )))
                }
            };
        }
        if let Some(v) = raw.take("out") {
            cfg.out = Some(PathBuf::from(v));
        }
        if let Some(v) = raw.take("solvers") {
            cfg.solvers = list_tokens(&v)
                .map(SolverKind::parse)
                .collect::<Result<_>>()?;
        }
        if cfg.mode == RunMode::DelayDiff && !raw.contains("sweep.param") {
            // In delay-diff mode the sweep is the delay itself; default it
            // from the collateral so minimal configs stay minimal.
            if let CollateralSpec::Delayed { t0 } = cfg.collateral {
                cfg.sweep = Sweep {
                    param: "collateral.t0".into(),
                    values: vec![t0],
                };
            }
        }
        if let Some(v) = raw.take("sweep.param") {
            cfg.sweep.param = v;
        }
        if let Some(v) = raw.take("sweep.values") {
            cfg.sweep.values = list_tokens(&v)
                .map(|t| parse_f64("sweep.values", t))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = raw.take("points") {
            cfg.points = v
                .split_whitespace()
                .map(|pair| {
                    let (tau, x) = pair.split_once(':').ok_or_else(|| {
                        XvaError::Config(format!(
                            "point {pair:?} must be written tau:x, e.g. 2:2.4849"
                        ))
                    })?;
                    Ok((parse_f64("points", tau)?, parse_f64("points", x)?))
                })
                .collect::<Result<_>>()?;
        }

        raw.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Splits a list-valued key on commas or whitespace, so `a, b` and `a b`
/// read the same.
fn list_tokens(v: &str) -> impl Iterator<Item = &str> {
    v.split(|ch: char| ch == ',' || ch.is_whitespace())
        .filter(|t| !t.is_empty())
}

fn parse_f64(key: &str, token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| XvaError::Config(format!("{key}: cannot parse {token:?} as a real number")))
}

/// Key-value lines with their line numbers, consumed key by key so that
/// anything left over is reported as unknown.
struct RawConfig {
    entries: HashMap<String, (usize, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let stripped = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| {
                XvaError::Config(format!("line {line_no}: expected key = value, got {line:?}"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(XvaError::Config(format!("line {line_no}: empty key")));
            }
            if let Some((first, _)) = entries.insert(key.clone(), (line_no, value)) {
                return Err(XvaError::Config(format!(
                    "line {line_no}: key {key:?} already set on line {first}"
                )));
            }
        }
        Ok(Self { entries })
    }

    fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| parse_f64(key, &v)).transpose()
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    XvaError::Config(format!("{key}: cannot parse {v:?} as a positive integer"))
                })
            })
            .transpose()
    }

    fn take_u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.take(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    XvaError::Config(format!("{key}: cannot parse {v:?} as an unsigned integer"))
                })
            })
            .transpose()
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        self.take(key)
            .map(|v| match v.as_str() {
                "on" | "true" | "yes" => Ok(true),
                "off" | "false" | "no" => Ok(false),
                other => Err(XvaError::Config(format!(
                    "{key}: cannot parse {other:?} as on/off"
                ))),
            })
            .transpose()
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (line_no, _))) = self.entries.into_iter().min_by_key(|(_, (l, _))| *l) {
            return Err(XvaError::Config(format!(
                "line {line_no}: unknown key {key:?}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        ExperimentConfig::reference().validate().unwrap();
    }

    #[test]
    fn empty_text_yields_the_reference_setup() {
        let cfg = ExperimentConfig::from_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::reference());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = ExperimentConfig::from_str(
            "# header\n\n  sigma = 0.3   # inline note\n\nr=0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.params.sigma, 0.3);
        assert_eq!(cfg.params.r, 0.01);
    }

    #[test]
    fn full_config_round_trips_every_section() {
        let cfg = ExperimentConfig::from_str(
            "scenario = demo\n\
             sigma = 0.2\n\
             collateral = delayed\n\
             t0 = 0.0396825396825\n\
             solvers = fd, mc\n\
             grid.delta_x = 0.03125\n\
             grid.delta_tau = 0.0625\n\
             quad.mode = as-printed\n\
             mc.n_paths = 5000\n\
             mc.seed = 9\n\
             mc.antithetic = on\n\
             sweep.param = mc.n_paths\n\
             sweep.values = 100, 1000\n\
             points = 2:2.4849066497880004 1:2.0\n\
             timings = on\n\
             format = json\n\
             out = results/demo.json\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, "demo");
        assert_eq!(cfg.params.sigma, 0.2);
        assert!(matches!(cfg.collateral, CollateralSpec::Delayed { .. }));
        assert_eq!(cfg.solvers, vec![SolverKind::Fd, SolverKind::Mc]);
        assert_eq!(cfg.grid.delta_x, 0.03125);
        assert_eq!(cfg.quad.mode, DriftShiftMode::AsPrinted);
        assert_eq!(cfg.mc.n_paths, 5000);
        assert_eq!(cfg.mc.seed, 9);
        assert!(cfg.mc.antithetic);
        assert_eq!(cfg.sweep.param, "mc.n_paths");
        assert_eq!(cfg.sweep.values, vec![100.0, 1000.0]);
        assert_eq!(cfg.points.len(), 2);
        assert!(cfg.timings);
        assert_eq!(cfg.format, OutputFormat::Json);
        assert_eq!(cfg.out.as_deref(), Some(Path::new("results/demo.json")));
    }

    #[test]
    fn list_keys_accept_spaces_or_commas() {
        let cfg = ExperimentConfig::from_str(
            "solvers = fd heatkernel\n\
             sweep.param = market.s_x\n\
             sweep.values = 0 0.006, 0.012\n",
        )
        .unwrap();
        assert_eq!(cfg.solvers, vec![SolverKind::Fd, SolverKind::HeatKernel]);
        assert_eq!(cfg.sweep.values, vec![0.0, 0.006, 0.012]);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let err = ExperimentConfig::from_str("sigma = 0.2\nsigmaa = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("sigmaa"), "{err}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = ExperimentConfig::from_str("r = 0.01\nr = 0.02\n").unwrap_err();
        assert!(err.to_string().contains("already set"), "{err}");
    }

    #[test]
    fn malformed_lines_and_numbers_are_rejected() {
        assert!(ExperimentConfig::from_str("just words\n").is_err());
        assert!(ExperimentConfig::from_str("sigma = abc\n").is_err());
        assert!(ExperimentConfig::from_str("mc.n_paths = -3\n").is_err());
        assert!(ExperimentConfig::from_str("points = 2;3\n").is_err());
    }

    #[test]
    fn empty_sweep_is_a_configuration_error() {
        let err = ExperimentConfig::from_str("sweep.values =\n").unwrap_err();
        assert!(err.to_string().contains("sweep"), "{err}");
    }

    #[test]
    fn unknown_sweep_parameter_is_rejected() {
        let err =
            ExperimentConfig::from_str("sweep.param = grid.delta_q\nsweep.values = 1\n")
                .unwrap_err();
        assert!(err.to_string().contains("grid.delta_q"), "{err}");
    }

    #[test]
    fn delay_diff_mode_defaults_its_sweep_to_the_configured_delay() {
        let cfg = ExperimentConfig::from_str(
            "mode = delay-diff\ncollateral = delayed\nt0 = 0.25\ns_x = 0.02\n",
        )
        .unwrap();
        assert_eq!(cfg.sweep.param, "collateral.t0");
        assert_eq!(cfg.sweep.values, vec![0.25]);
        assert_eq!(cfg.solvers, vec![SolverKind::Fd]);
    }

    #[test]
    fn delay_diff_mode_rejects_other_solvers() {
        let err = ExperimentConfig::from_str(
            "mode = delay-diff\ncollateral = delayed\nt0 = 0.25\nsolvers = mc\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("delay-diff"), "{err}");
    }

    #[test]
    fn sweeping_the_delay_requires_a_delayed_regime() {
        let err = ExperimentConfig::from_str(
            "sweep.param = collateral.t0\nsweep.values = 0.1\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("delayed"), "{err}");
    }

    #[test]
    fn stray_collateral_shape_keys_are_rejected() {
        let err = ExperimentConfig::from_str("alpha = 1\n").unwrap_err();
        assert!(err.to_string().contains("collateral"), "{err}");
    }
}
