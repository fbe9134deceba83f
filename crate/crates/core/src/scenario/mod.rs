//! Cases, the embedded 9-bus system and the disturbance schedules.

mod case_file;
mod wscc9;

pub use case_file::{parse_case, serialize_case, CaseError, CaseErrorKind, HEADER};
pub use wscc9::{
    builtin_wscc9, converter, default_pss, dual_gfm_params, irish_params, machine, wscc9_network,
    Wscc9Variant, CONVERTER_RATINGS, MACHINE_RATINGS,
};

use crate::engine::{
    solve_equilibrium, DeviceSlot, DynamicSystem, EngineError, Equilibrium, EquilibriumOptions, Event, EventKind,
};
use crate::network::{solve_powerflow, NetworkCase, NetworkError, PowerFlowSolution};

/// A network with its devices and an event schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub name: String,
    pub network: NetworkCase,
    pub omega_ref: f64,
    pub devices: Vec<DeviceSlot>,
    pub events: Vec<Event>,
}

/// A case brought to its dynamic steady state.
#[derive(Debug, Clone)]
pub struct Initialized {
    pub powerflow: PowerFlowSolution,
    pub system: DynamicSystem,
    pub equilibrium: Equilibrium,
}

impl Case {
    pub fn powerflow(&self) -> Result<PowerFlowSolution, NetworkError> {
        solve_powerflow(&self.network, &self.network.scheduled_injections())
    }

    /// Power flow, system assembly and equilibrium, in that order.
    pub fn initialize(&self) -> Result<Initialized, EngineError> {
        let powerflow = self.powerflow()?;
        let mut system = DynamicSystem::new(self.network.clone(), self.devices.clone(), &powerflow)?;
        let equilibrium = solve_equilibrium(&mut system, &powerflow, EquilibriumOptions::default())?;
        Ok(Initialized { powerflow, system, equilibrium })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperScenario {
    /// 20% load loss at bus 5, t = 1 s.
    Fig3,
    /// Fault at bus 7 at t = 1 s, cleared after 60 ms.
    Fig4,
}

impl PaperScenario {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "fig3" => Some(PaperScenario::Fig3),
            "fig4" => Some(PaperScenario::Fig4),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PaperScenario::Fig3 => "fig3",
            PaperScenario::Fig4 => "fig4",
        }
    }
}

/// Fault conductance (pu) of a near-bolted fault.
pub const FAULT_CONDUCTANCE: f64 = 1e4;

pub fn paper_events(scenario: PaperScenario) -> Vec<Event> {
    match scenario {
        PaperScenario::Fig3 => vec![Event::new(1.0, EventKind::LoadScale { bus: 5, factor: 0.8 })],
        PaperScenario::Fig4 => vec![
            Event::new(1.0, EventKind::FaultApply { bus: 7, g: FAULT_CONDUCTANCE, b: 0.0 }),
            Event::new(1.06, EventKind::FaultClear { bus: 7 }),
        ],
    }
}
