/// First-order filtered-derivative angle tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllParams {
    pub t_pll: f64,
}

impl Default for PllParams {
    fn default() -> Self {
        PllParams { t_pll: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PllState {
    /// Filtered bus angle (rad, synchronous frame).
    pub theta_f: f64,
}

/// Returns `(d theta_f/dt, omega_est)`.
pub fn pll_derivatives(pll: &PllParams, state: &PllState, theta_bus: f64, omega_ref: f64) -> (f64, f64) {
    let rate = (theta_bus - state.theta_f) / pll.t_pll;
    (rate, omega_ref + rate)
}
