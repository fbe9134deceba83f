//! Dual grid-forming converter.
//!
//! Active power is balanced through the instantaneous bandwidth `rho = (de/dt)/e`
//! of the internal emf and synchronization comes from reactive power acting on
//! the emf angle. The converter measures bus angle and frequency with a PLL and
//! may carry a stabilizer on the frequency channel.

use super::{dual_gfm_power, finite, pll_derivatives, pss_derivatives, pss_output};
use super::{DeviceError, PllParams, PllState, PssParams, PssState};

/// Smallest droop used when the governor runs in tracking mode.
pub const MIN_TRACKING_DROOP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GovernorMode {
    /// First-order droop on `rho` with a power set point.
    #[default]
    Droop,
    /// Integral tracking of `rho = 0`; the droop only sets the integral gain.
    Tracking,
}

impl GovernorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GovernorMode::Droop => "droop",
            GovernorMode::Tracking => "tracking",
        }
    }
}

impl std::str::FromStr for GovernorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "droop" => Ok(GovernorMode::Droop),
            "tracking" => Ok(GovernorMode::Tracking),
            other => Err(format!("unknown governor mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualGfmParams {
    /// Virtual conductance gain, `-1/r_a`.
    pub k: f64,
    /// Virtual inertia M~ (s).
    pub m_t: f64,
    /// Virtual damping D~.
    pub d_t: f64,
    pub t_m_t: f64,
    pub r_t: f64,
    pub k_q: f64,
    pub t_q: f64,
    pub k_r_t: f64,
    pub t_r_t: f64,
    pub omega_ref: f64,
    /// Converter power set point, fixed at initialization.
    pub p_ref_o: f64,
    pub mode: GovernorMode,
}

impl DualGfmParams {
    /// Bandwidth reference. Bus voltage magnitudes are constant in steady state,
    /// so this is identically zero.
    pub const fn rho_ref(&self) -> f64 {
        0.0
    }

    /// Frequency gain of the reactive controller rewritten in
    /// `delta_r = K_q q_ref`. Scaling the `q_ref` equation by `K_q` gives
    /// `K_q K~_r`; the quotient `K~_r / K_q` would not reproduce the original
    /// trajectories.
    pub fn k_r_t_prime(&self) -> f64 {
        self.k_q * self.k_r_t
    }

    /// Equivalent (negative) virtual armature resistance.
    pub fn virtual_resistance(&self) -> f64 {
        -1.0 / self.k
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let positive = [
            ("K", self.k),
            ("M~", self.m_t),
            ("T~_m", self.t_m_t),
            ("R~", self.r_t),
            ("T_q", self.t_q),
            ("T~_r", self.t_r_t),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(DeviceError::Parameter(format!("{name} must be positive, got {value}")));
            }
        }
        if self.k_q == 0.0 {
            return Err(DeviceError::Parameter("K_q must be nonzero".into()));
        }
        finite(&[self.d_t, self.k_r_t, self.omega_ref, self.p_ref_o])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualGfmState {
    pub e: f64,
    pub rho: f64,
    /// Internal angle in the synchronous frame.
    pub delta: f64,
    pub p_ref: f64,
    pub q_ref: f64,
    pub pll: PllState,
    pub pss: PssState,
}

impl DualGfmState {
    /// `u = ln e`.
    pub fn u(&self) -> Result<f64, DeviceError> {
        if self.e > 0.0 {
            Ok(self.e.ln())
        } else {
            Err(DeviceError::Domain(format!("ln(e) undefined for e = {}", self.e)))
        }
    }

    /// `delta_r = K_q q_ref`.
    pub fn delta_r(&self, k_q: f64) -> f64 {
        k_q * self.q_ref
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualGfmDevice {
    pub params: DualGfmParams,
    pub pll: PllParams,
    pub pss: Option<PssParams>,
    pub state: DualGfmState,
}

/// Outputs of one dual-GFM evaluation besides the derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualGfmOutputs {
    pub p: f64,
    pub q: f64,
    pub omega_est: f64,
    pub pss_signal: f64,
}

impl DualGfmDevice {
    /// Number of differential states: five core states, the PLL filter and,
    /// when present, three stabilizer states.
    pub fn n_states(&self) -> usize {
        if self.pss.is_some() {
            9
        } else {
            6
        }
    }

    pub fn load_states(&mut self, x: &[f64]) {
        let s = &mut self.state;
        s.e = x[0];
        s.rho = x[1];
        s.delta = x[2];
        s.p_ref = x[3];
        s.q_ref = x[4];
        s.pll.theta_f = x[5];
        if self.pss.is_some() {
            s.pss = PssState { washout: x[6], lead1: x[7], lead2: x[8] };
        }
    }

    pub fn store_states(&self, x: &mut [f64]) {
        let s = &self.state;
        x[..6].copy_from_slice(&[s.e, s.rho, s.delta, s.p_ref, s.q_ref, s.pll.theta_f]);
        if self.pss.is_some() {
            x[6..9].copy_from_slice(&[s.pss.washout, s.pss.lead1, s.pss.lead2]);
        }
    }

    pub fn power(&self, v: f64, theta: f64) -> Result<(f64, f64), DeviceError> {
        dual_gfm_power(self.state.e, v, self.state.delta, theta, self.params.k)
    }

    /// Writes all state derivatives into `dx` (length `n_states`).
    pub fn derivatives(&self, v: f64, theta: f64, dx: &mut [f64]) -> Result<DualGfmOutputs, DeviceError> {
        let (p, q) = self.power(v, theta)?;
        let (d_theta_f, omega_est) =
            pll_derivatives(&self.pll, &self.state.pll, theta, self.params.omega_ref);
        let dev_input = omega_est - self.params.omega_ref;
        let pss_signal = match &self.pss {
            Some(pss) => {
                let d = pss_derivatives(pss, &self.state.pss, dev_input);
                dx[6..9].copy_from_slice(&d);
                pss_output(pss, &self.state.pss, dev_input)
            }
            None => 0.0,
        };
        let (de, drho) = dual_swing_derivatives(self, p)?;
        let (ddelta, dq) = dual_reactive_derivatives(self, q, omega_est, pss_signal);
        dx[0] = de;
        dx[1] = drho;
        dx[2] = ddelta;
        dx[3] = dual_governor_derivative(self);
        dx[4] = dq;
        dx[5] = d_theta_f;
        Ok(DualGfmOutputs { p, q, omega_est, pss_signal })
    }
}

/// Dual swing in emf form: returns `(de/dt, d rho/dt)` for injected power `p_t`.
pub fn dual_swing_derivatives(dev: &DualGfmDevice, p_t: f64) -> Result<(f64, f64), DeviceError> {
    let s = &dev.state;
    if !(s.e > 0.0) {
        return Err(DeviceError::Domain(format!("emf magnitude must be positive, got {}", s.e)));
    }
    let prm = &dev.params;
    Ok((s.rho * s.e, (s.p_ref - p_t - prm.d_t * s.rho) / prm.m_t))
}

/// Dual swing in logarithmic form: returns `(du/dt, d rho/dt)` with `u = ln e`.
pub fn dual_swing_log_derivatives(prm: &DualGfmParams, rho: f64, p_ref: f64, p_t: f64) -> (f64, f64) {
    (rho, (p_ref - p_t - prm.d_t * rho) / prm.m_t)
}

/// Dual governor. In droop mode
/// `T~_m dp_ref/dt = (rho_ref - rho)/R~ + p_ref_o - p_ref`; in tracking mode
/// `dp_ref/dt = (rho_ref - rho)/(R~ T~_m)` with `R~` floored at [`MIN_TRACKING_DROOP`].
pub fn dual_governor_derivative(dev: &DualGfmDevice) -> f64 {
    let s = &dev.state;
    let prm = &dev.params;
    match prm.mode {
        GovernorMode::Droop => ((prm.rho_ref() - s.rho) / prm.r_t + prm.p_ref_o - s.p_ref) / prm.t_m_t,
        GovernorMode::Tracking => {
            (prm.rho_ref() - s.rho) / (prm.r_t.max(MIN_TRACKING_DROOP) * prm.t_m_t)
        }
    }
}

/// Reactive-angle controller: returns `(d delta/dt, d q_ref/dt)`.
///
/// `supplementary` is added to the frequency reference (stabilizer output).
pub fn dual_reactive_derivatives(
    dev: &DualGfmDevice,
    q_t: f64,
    omega_meas: f64,
    supplementary: f64,
) -> (f64, f64) {
    let s = &dev.state;
    let prm = &dev.params;
    // distributed so that delta_r = K_q q_ref reproduces it bit for bit
    let d_delta = (prm.k_q * s.q_ref - prm.k_q * q_t - s.delta) / prm.t_q;
    let d_q = (prm.k_r_t * (prm.omega_ref + supplementary - omega_meas) - s.q_ref) / prm.t_r_t;
    (d_delta, d_q)
}

/// The reactive controller rewritten in `delta_r = K_q q_ref`: returns
/// `(d delta/dt, d delta_r/dt)`.
pub fn dual_reactive_equiv_form(
    prm: &DualGfmParams,
    delta: f64,
    delta_r: f64,
    q_t: f64,
    omega_meas: f64,
    supplementary: f64,
) -> Result<(f64, f64), DeviceError> {
    if prm.k_q == 0.0 {
        return Err(DeviceError::Parameter("K_q must be nonzero".into()));
    }
    let d_delta = (delta_r - prm.k_q * q_t - delta) / prm.t_q;
    let d_delta_r =
        (prm.k_r_t_prime() * (prm.omega_ref + supplementary - omega_meas) - delta_r) / prm.t_r_t;
    Ok((d_delta, d_delta_r))
}
