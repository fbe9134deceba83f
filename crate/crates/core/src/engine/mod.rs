//! Differential-algebraic system assembly, equilibrium, implicit integration
//! and discrete events.

mod equilibrium;
mod events;
mod integrator;
mod newton;
mod simulation;
mod system;

pub use equilibrium::{solve_equilibrium, Equilibrium, EquilibriumOptions};
pub use events::{handle_event, Event, EventKind};
pub use integrator::{trapezoidal_step, Dae, JacobianRefresh, SolverConfig};
pub use newton::{fd_jacobian, NewtonReport};
pub use simulation::{run_simulation, DeviceOutputs, EventRecord, SimResult};
pub use system::{DeviceModel, DeviceSlot, DynamicSystem, SystemState};

use thiserror::Error;

use crate::devices::DeviceError;
use crate::network::NetworkError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error("device {id}: {source}")]
    Device { id: usize, source: DeviceError },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("equilibrium did not converge; residual history {history:?}")]
    Equilibrium { history: Vec<f64> },
    #[error("step at t = {t} failed after {halvings} dt halvings: residual {residual:e}")]
    Step { t: f64, halvings: usize, residual: f64 },
    #[error("event at t = {t}: algebraic re-solve failed with residual {residual:e}")]
    Event { t: f64, residual: f64 },
    #[error("singular Jacobian")]
    Singular,
}
