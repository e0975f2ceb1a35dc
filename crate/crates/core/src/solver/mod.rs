//! Modified nodal analysis with Newton–Raphson linearization: DC operating
//! point, charge-conserving initialization of capacitive nodes, and
//! fixed-step implicit transient integration.

mod dc;
mod mna;
mod result;
mod transient;

use thiserror::Error;

pub use dc::{dc_operating_point, initialize_floating_nodes};
pub use result::{OperatingPoint, TransientResult};
pub(crate) use result::interpolate as result_interpolate;
pub use transient::{transient, transient_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integration {
    BackwardEuler,
    Trapezoidal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Absolute current tolerance, A.
    pub abstol: f64,
    pub reltol: f64,
    /// Absolute voltage tolerance, V.
    pub vtol: f64,
    pub max_newton_iters: usize,
    /// Conductance to ground from every node not held by a grounded source, S.
    pub gmin: f64,
    /// Fixed transient step, s.
    pub timestep: f64,
    pub integration: Integration,
    /// Start transients from charge-conserving initial conditions instead of
    /// the DC operating point.
    pub use_initial_conditions: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abstol: 1e-12,
            reltol: 1e-4,
            vtol: 1e-6,
            max_newton_iters: 100,
            gmin: 1e-12,
            timestep: 1e-13,
            integration: Integration::Trapezoidal,
            use_initial_conditions: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("abstol", self.abstol),
            ("reltol", self.reltol),
            ("vtol", self.vtol),
            ("gmin", self.gmin),
            ("timestep", self.timestep),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SolverError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_newton_iters == 0 {
            return Err(SolverError::InvalidConfig("max_newton_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("circuit still contains subcircuit instances; flatten it first")]
    NotFlattened,
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("operating point did not converge (last residual {residual:.3e})")]
    Convergence { residual: f64 },
    #[error("transient step at t = {time:.6e} s did not converge (last residual {residual:.3e})")]
    StepFailure { time: f64, residual: f64 },
    #[error("capacitive node '{node}' is coupled only to other capacitive nodes")]
    IllConditionedDivider { node: String },
    #[error("unknown node '{0}'")]
    UnknownNode(String),
}
