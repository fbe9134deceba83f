//! Dynamic device models written as pure derivative evaluators.
//!
//! Every quantity is per-unit on the device's own rating; the engine scales
//! injections to the system base. Frequencies and angle rates share one unit,
//! so `d(delta)/dt = omega - omega_ref` with no base-frequency factor.

mod dual_gfm;
mod frequency;
mod machine;
mod pll;
mod power;
mod pss;

pub use dual_gfm::{
    dual_governor_derivative, dual_reactive_derivatives, dual_reactive_equiv_form,
    dual_swing_derivatives, dual_swing_log_derivatives, DualGfmDevice, DualGfmParams,
    DualGfmOutputs, DualGfmState, GovernorMode, MIN_TRACKING_DROOP,
};
pub use frequency::{complex_frequency, ComplexFrequency};
pub use machine::{
    avr_derivatives, governor_derivative, swing_derivatives, MachineDevice, MachineParams,
    MachineState,
};
pub use pll::{pll_derivatives, PllParams, PllState};
pub use power::{dual_gfm_power, dual_power_resistive, machine_power_lossless, machine_power_lossy};
pub use pss::{pss_derivatives, pss_output, PssParams, PssState};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("series impedance r_a + j x'_d is zero")]
    SingularImpedance,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite input")]
    NonFinite,
}

pub(crate) fn finite(values: &[f64]) -> Result<(), DeviceError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DeviceError::NonFinite)
    }
}
