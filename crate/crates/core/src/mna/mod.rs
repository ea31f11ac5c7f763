//! Modified nodal analysis: DC operating point and fixed-step transient.

mod energy;
pub mod lu;
mod newton;
mod system;
mod transient;
mod waveform;

use thiserror::Error;

use crate::device::{DeviceError, ModelConfig};
use crate::netlist::Circuit;

pub use energy::{energy_balance, EnergyBalance};
pub use newton::NewtonStats;
pub use system::{Companion, MnaSystem, Stamp, StampContext};
pub use transient::transient;
pub use waveform::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integration {
    #[default]
    Trapezoidal,
    BackwardEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Absolute KCL tolerance, A.
    pub abstol: f64,
    pub reltol: f64,
    /// Absolute voltage tolerance, V.
    pub vntol: f64,
    pub max_newton_iters: usize,
    /// Conductance from every node to ground, S.
    pub gmin: f64,
    pub integration: Integration,
    pub source_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            abstol: 1e-12,
            reltol: 1e-6,
            vntol: 1e-9,
            max_newton_iters: 100,
            gmin: 1e-12,
            integration: Integration::Trapezoidal,
            source_steps: 10,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.abstol > 0.0
            && self.reltol > 0.0
            && self.vntol > 0.0
            && self.gmin >= 0.0
            && self.max_newton_iters >= 1
            && self.source_steps >= 1;
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidOptions(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("singular system: node `{node}` has no DC path to ground")]
    FloatingNode { node: String },
    #[error("singular system at unknown `{unknown}`")]
    Singular { unknown: String },
    #[error("Newton failed to converge{} after {iterations} iterations (residual {residual:e})", time.map(|t| format!(" at t = {t:e} s")).unwrap_or_default())]
    NonConvergence {
        time: Option<f64>,
        iterations: usize,
        residual: f64,
    },
    #[error("circuit has no .tran analysis")]
    NoTransient,
}

/// Converged DC solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub node_volts: Vec<(String, f64)>,
    /// Current delivered out of each source's `+` terminal, A.
    pub source_currents: Vec<(String, f64)>,
    pub stats: NewtonStats,
}

impl OperatingPoint {
    pub fn voltage(&self, node: &str) -> Option<f64> {
        if node == crate::netlist::GROUND {
            return Some(0.0);
        }
        self.node_volts
            .iter()
            .find(|(n, _)| n == node)
            .map(|(_, v)| *v)
    }

    pub fn current(&self, source: &str) -> Option<f64> {
        self.source_currents
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(source))
            .map(|(_, i)| *i)
    }
}

/// DC operating point with capacitors open.
///
/// Tries plain Newton, then gmin stepping, then source stepping.
pub fn dc_operating_point(
    c: &Circuit,
    model: &ModelConfig,
    opts: &SolverOptions,
    temp_c: f64,
) -> Result<OperatingPoint, SimError> {
    opts.validate()?;
    let mut sys = MnaSystem::compile(c, model)?;
    sys.temp_k = temp_c + 273.15;
    let x = newton::solve_dc(&sys, opts, &[], 0.0, None)?;
    Ok(operating_point(&sys, &x.0, x.1))
}

fn operating_point(sys: &MnaSystem, x: &[f64], stats: NewtonStats) -> OperatingPoint {
    let nn = sys.node_count();
    OperatingPoint {
        node_volts: sys
            .node_names
            .iter()
            .cloned()
            .zip(x[..nn].iter().copied())
            .collect(),
        source_currents: sys
            .sources
            .iter()
            .enumerate()
            .map(|(j, s)| (s.name.clone(), x[nn + j]))
            .collect(),
        stats,
    }
}
