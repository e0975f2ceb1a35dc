//! The adder benchmark: build, simulate, verify and measure every
//! (design, supply) cell.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adders::{build_adder_with, AdderError, AdderKind, DesignParams, Stimulus, Testbench};
use crate::measure::{
    average_power, full_swing_check, settled_crossing, window_mean, ExpectedLevels, LogicThresholds,
    MeasureError, Measurement, SwingReport, Transition,
};
use crate::netlist::NetlistError;
use crate::oracle::{fa_truth, verify_adder_network, AdderReport, Mismatch, OracleError};
use crate::solver::{transient, Integration, SolverConfig, SolverError, TransientResult};

/// Built-in configuration, also the template for override files.
pub const DEFAULT_CONFIG: &str = include_str!("../config/bench.toml");

/// Environment variable naming a configuration file to use instead of the
/// built-in one.
pub const CONFIG_ENV: &str = "MVLSIM_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusConfig {
    pub transition_time: f64,
    pub hold_time: f64,
    pub steps_per_transition: u32,
    pub load_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub sustain_fraction: f64,
    pub settle_fraction: f64,
    pub relaxed_high: f64,
    pub relaxed_low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub abstol: f64,
    pub reltol: f64,
    pub vtol: f64,
    pub max_newton_iters: usize,
    pub gmin: f64,
    pub integration: Integration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub version: u32,
    pub stimulus: StimulusConfig,
    pub measure: MeasureConfig,
    pub solver: SolverSettings,
    pub design: DesignParams,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("built-in config is valid")
    }
}

impl BenchConfig {
    pub const VERSION: u32 = 1;

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: BenchConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Explicit path, then the environment override, then the built-in file.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ConfigError> {
        if let Some(p) = path {
            return Self::load(p);
        }
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.version != Self::VERSION {
            return Err(ConfigError::Invalid(format!(
                "unsupported config version {} (expected {})",
                self.version,
                Self::VERSION
            )));
        }
        let s = &self.stimulus;
        if !(s.transition_time > 0.0 && s.hold_time > 0.0 && s.load_cap >= 0.0) || s.steps_per_transition == 0 {
            return bad("stimulus times must be positive and load_cap non-negative");
        }
        let m = &self.measure;
        let fraction = |x: f64| x > 0.0 && x <= 1.0;
        if !(fraction(m.sustain_fraction) && fraction(m.settle_fraction)) {
            return bad("sustain_fraction and settle_fraction must lie in (0, 1]");
        }
        if !(0.0 <= m.relaxed_low && m.relaxed_low < m.relaxed_high && m.relaxed_high <= 1.0) {
            return bad("relaxed swing limits need 0 <= low < high <= 1");
        }
        if !(self.design.input_cap > 0.0) || self.design.tube_count == 0 || self.design.driver_tube_count == 0 {
            return bad("input_cap must be positive and tube counts at least 1");
        }
        self.solver_config(1e-12)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn solver_config(&self, timestep: f64) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            abstol: s.abstol,
            reltol: s.reltol,
            vtol: s.vtol,
            max_newton_iters: s.max_newton_iters,
            gmin: s.gmin,
            timestep,
            integration: s.integration,
            use_initial_conditions: true,
        }
    }

    pub fn stimulus(&self) -> Stimulus {
        Stimulus::gray(self.stimulus.transition_time, self.stimulus.hold_time)
    }

    pub fn timestep(&self) -> f64 {
        self.stimulus.transition_time / self.stimulus.steps_per_transition as f64
    }

    pub fn thresholds(&self, kind: AdderKind, vdd: f64) -> LogicThresholds {
        let settle = self.measure.settle_fraction * self.stimulus.hold_time;
        if kind.requires_full_swing() {
            LogicThresholds::new(vdd, settle)
        } else {
            LogicThresholds::with_fractions(vdd, self.measure.relaxed_high, self.measure.relaxed_low, settle)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("construction: {0}")]
    Build(#[from] AdderError),
    #[error("netlist: {0}")]
    Netlist(#[from] NetlistError),
    #[error("simulation: {0}")]
    Solver(#[from] SolverError),
    #[error("measurement: {0}")]
    Measure(#[from] MeasureError),
    #[error("gate-level network: {0}")]
    Oracle(#[from] OracleError),
    #[error("logic verification failed on {} check(s)", .0.mismatches.len())]
    Logic(AdderReport),
    #[error("outputs miss the swing limits in {} of {} checks", .0.violations.len(), .0.checks)]
    Swing(SwingReport),
}

/// Everything recorded for one (design, supply) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub kind: AdderKind,
    pub vdd: f64,
    pub measurement: Measurement,
    pub swing: SwingReport,
    pub logic: AdderReport,
}

/// Settled logic value of each output in each slot, compared with the adder
/// truth table.
pub fn verify_transient(result: &TransientResult, stim: &Stimulus, vdd: f64, settle: f64) -> Result<AdderReport, MeasureError> {
    let mut mismatches = Vec::new();
    for (k, v) in stim.vectors.iter().enumerate() {
        let (sum, cout) = fa_truth(v[0], v[1], v[2]);
        for (name, expected) in [("sum", sum), ("cout", cout)] {
            let series = result
                .voltage(name)
                .ok_or_else(|| MeasureError::UnknownSignal(name.into()))?;
            let end = stim.slot_end(k);
            let actual = window_mean(&result.times, series, end - settle, end) > vdd / 2.0;
            if actual != expected {
                mismatches.push(Mismatch {
                    inputs: *v,
                    output: name.into(),
                    expected,
                    actual,
                });
            }
        }
    }
    Ok(AdderReport {
        vectors_checked: stim.vectors.len(),
        mismatches,
    })
}

/// Delay of every output that the adder truth table says must change, for
/// every input edge in the schedule.
pub fn measure_delays(
    result: &TransientResult,
    stim: &Stimulus,
    vdd: f64,
    sustain: f64,
) -> Result<Vec<Transition>, MeasureError> {
    let mut out = Vec::new();
    for edge in stim.edges() {
        let name = edge.input_name();
        let input = result
            .voltage(name)
            .ok_or_else(|| MeasureError::UnknownSignal(name.into()))?;
        let (start, end) = (stim.slot_start(edge.slot), stim.slot_end(edge.slot));
        let t_in = settled_crossing(&result.times, input, vdd, start, end, 0.0).ok_or(MeasureError::NoInputEdge)?;
        let before = fa_truth(edge.from[0], edge.from[1], edge.from[2]);
        let after = fa_truth(edge.to[0], edge.to[1], edge.to[2]);
        for (output, changes) in [("sum", before.0 != after.0), ("cout", before.1 != after.1)] {
            if !changes {
                continue;
            }
            let series = result
                .voltage(output)
                .ok_or_else(|| MeasureError::UnknownSignal(output.into()))?;
            let t_out = settled_crossing(&result.times, series, vdd, t_in, end, sustain).ok_or_else(|| {
                MeasureError::MissingTransition {
                    edge_time: t_in,
                    output: output.into(),
                }
            })?;
            out.push(Transition {
                edge_time: t_in,
                input: name.into(),
                output: output.into(),
                delay: t_out - t_in,
            });
        }
    }
    Ok(out)
}

/// Builds the buffered testbench for one cell.
pub fn testbench(kind: AdderKind, vdd: f64, cfg: &BenchConfig) -> Result<Testbench, BenchError> {
    let dut = build_adder_with(kind, vdd, &cfg.design)?;
    Ok(Testbench::new(&dut, vdd, cfg.stimulus(), &cfg.design, cfg.stimulus.load_cap))
}

/// Simulates one cell's testbench.
pub fn simulate_cell(kind: AdderKind, vdd: f64, cfg: &BenchConfig) -> Result<(Testbench, TransientResult), BenchError> {
    let tb = testbench(kind, vdd, cfg)?;
    let flat = tb.circuit.flatten()?;
    let result = transient(&flat, &cfg.solver_config(cfg.timestep()), tb.stimulus.tstop())?;
    Ok((tb, result))
}

pub fn run_cell(kind: AdderKind, vdd: f64, cfg: &BenchConfig) -> Result<CellResult, BenchError> {
    let network = verify_adder_network(&kind.logic_network())?;
    if !network.passed() {
        return Err(BenchError::Logic(network));
    }
    let (tb, result) = simulate_cell(kind, vdd, cfg)?;
    let stim = &tb.stimulus;
    let th = cfg.thresholds(kind, vdd);

    let logic = verify_transient(&result, stim, vdd, th.settle_window)?;
    if !logic.passed() {
        return Err(BenchError::Logic(logic));
    }
    let truth: Vec<ExpectedLevels> = stim
        .vectors
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let (s, c) = fa_truth(v[0], v[1], v[2]);
            ExpectedLevels {
                end: stim.slot_end(k),
                levels: vec![s, c],
            }
        })
        .collect();
    let swing = full_swing_check(&result, &["sum", "cout"], &truth, &th)?;
    if !swing.passed() {
        return Err(BenchError::Swing(swing));
    }

    let sustain = cfg.measure.sustain_fraction * stim.slot();
    let transitions = measure_delays(&result, stim, vdd, sustain)?;
    let power = average_power(&result, "vdd", vdd, (stim.slot(), stim.tstop()))?;
    Ok(CellResult {
        kind,
        vdd,
        measurement: Measurement::new(kind.id(), vdd, power, transitions),
        swing,
        logic,
    })
}

/// One outcome per (design, supply) pair, supplies outer, designs in the
/// given order. Cells run in parallel; the order of the output is fixed.
pub fn run_matrix(
    kinds: &[AdderKind],
    supplies: &[f64],
    cfg: &BenchConfig,
) -> Vec<(AdderKind, f64, Result<CellResult, BenchError>)> {
    let cells: Vec<(AdderKind, f64)> = supplies
        .iter()
        .flat_map(|&v| kinds.iter().map(move |&k| (k, v)))
        .collect();
    cells
        .into_par_iter()
        .map(|(k, v)| (k, v, run_cell(k, v, cfg)))
        .collect()
}
