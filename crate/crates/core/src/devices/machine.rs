//! Third-order synchronous machine with a first-order turbine governor and a
//! first-order exciter.

use super::{machine_power_lossy, DeviceError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineParams {
    /// Mechanical starting time M = 2H (s).
    pub m: f64,
    pub d: f64,
    pub r_a: f64,
    pub x_d: f64,
    pub x_d_t: f64,
    pub t_d0_t: f64,
    pub t_r: f64,
    pub t_m: f64,
    pub k_r: f64,
    /// Governor droop R.
    pub droop: f64,
    pub omega_ref: f64,
    /// Governor power set point, fixed at initialization.
    pub p_m_o: f64,
    /// Exciter voltage set point, fixed at initialization.
    pub v_ref: f64,
}

impl MachineParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let positive = [
            ("M", self.m),
            ("x'_d", self.x_d_t),
            ("T'_d0", self.t_d0_t),
            ("T_r", self.t_r),
            ("T_m", self.t_m),
            ("R", self.droop),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(DeviceError::Parameter(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.r_a >= 0.0) {
            return Err(DeviceError::Parameter(format!("r_a must be non-negative, got {}", self.r_a)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MachineState {
    pub delta: f64,
    pub omega: f64,
    /// Transient q-axis emf e'_q.
    pub eq_t: f64,
    pub p_m: f64,
    pub v_f: f64,
}

impl MachineState {
    pub const LEN: usize = 5;

    pub fn from_slice(x: &[f64]) -> Self {
        MachineState { delta: x[0], omega: x[1], eq_t: x[2], p_m: x[3], v_f: x[4] }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.delta, self.omega, self.eq_t, self.p_m, self.v_f]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineDevice {
    pub params: MachineParams,
    pub state: MachineState,
}

impl MachineDevice {
    /// Terminal injection (device base).
    pub fn power(&self, v: f64, theta: f64) -> Result<(f64, f64), DeviceError> {
        machine_power_lossy(self.state.eq_t, v, self.state.delta, theta, self.params.r_a, self.params.x_d_t)
    }

    /// d-axis stator current of the third-order model, stator resistance neglected.
    pub fn i_d(&self, v: f64, theta: f64) -> f64 {
        (self.state.eq_t - v * (self.state.delta - theta).cos()) / self.params.x_d_t
    }

    /// All five state derivatives in state order.
    pub fn derivatives(&self, v: f64, theta: f64) -> Result<([f64; 5], (f64, f64)), DeviceError> {
        let pq = self.power(v, theta)?;
        let (d_delta, d_omega) = swing_derivatives(self, pq.0);
        let (d_e, d_vf) = avr_derivatives(self, v, theta);
        Ok(([d_delta, d_omega, d_e, governor_derivative(self), d_vf], pq))
    }
}

/// Swing equation: returns `(d delta/dt, d omega/dt)` for electrical power `p`.
pub fn swing_derivatives(dev: &MachineDevice, p: f64) -> (f64, f64) {
    let s = &dev.state;
    let prm = &dev.params;
    let slip = s.omega - prm.omega_ref;
    (slip, (s.p_m - p - prm.d * slip) / prm.m)
}

/// Turbine governor `T_m dp_m/dt = (omega_ref - omega)/R + p_m_o - p_m`.
pub fn governor_derivative(dev: &MachineDevice) -> f64 {
    let s = &dev.state;
    let prm = &dev.params;
    ((prm.omega_ref - s.omega) / prm.droop + prm.p_m_o - s.p_m) / prm.t_m
}

/// Field dynamics and exciter: returns `(d e'_q/dt, d v_f/dt)`.
pub fn avr_derivatives(dev: &MachineDevice, v: f64, theta: f64) -> (f64, f64) {
    let s = &dev.state;
    let prm = &dev.params;
    let i_d = dev.i_d(v, theta);
    (
        (s.v_f - (prm.x_d - prm.x_d_t) * i_d - s.eq_t) / prm.t_d0_t,
        (prm.k_r * (prm.v_ref - v) - s.v_f) / prm.t_r,
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn sample() -> MachineDevice {
        MachineDevice {
            params: MachineParams {
                m: 10.0,
                d: 0.0,
                r_a: 0.0,
                x_d: 0.9,
                x_d_t: 0.12,
                t_d0_t: 6.0,
                t_r: 0.05,
                t_m: 2.0,
                k_r: 20.0,
                droop: 0.05,
                omega_ref: 1.0,
                p_m_o: 0.5,
                v_ref: 1.0,
            },
            state: MachineState { delta: 0.3, omega: 1.0, eq_t: 1.05, p_m: 0.5, v_f: 0.0 },
        }
    }

    #[test]
    fn swing_equilibrium_and_step() {
        let dev = sample();
        assert_eq!(swing_derivatives(&dev, 0.5), (0.0, 0.0));
        let (dd, dw) = swing_derivatives(&dev, 0.4);
        assert_eq!(dd, 0.0);
        assert!((dw - 0.01).abs() < 1e-15);
    }

    #[test]
    fn damping_opposes_slip() {
        let mut dev = sample();
        dev.params.d = 1e6;
        for slip in [1e-3, -1e-3] {
            dev.state.omega = 1.0 + slip;
            let (_, dw) = swing_derivatives(&dev, dev.state.p_m);
            assert_eq!(dw.signum(), -slip.signum());
        }
    }

    #[test]
    fn governor_droop() {
        let mut dev = sample();
        assert_eq!(governor_derivative(&dev), 0.0);
        dev.state.omega = 0.99;
        assert!((governor_derivative(&dev) - 0.1).abs() < 1e-12);
        // steady state p_m = p_m_o + (omega_ref - omega)/R
        dev.state.p_m = dev.params.p_m_o + 0.01 / 0.05;
        assert!(governor_derivative(&dev).abs() < 1e-12);
    }

    #[test]
    fn avr_fixed_points() {
        let mut dev = sample();
        dev.state = MachineState { delta: 0.0, omega: 1.0, eq_t: 0.0, p_m: 0.0, v_f: 0.0 };
        // e = 0 and v cos(delta - theta) = 0 make i_d vanish
        dev.params.v_ref = 0.0;
        assert_eq!(avr_derivatives(&dev, 0.0, 0.0), (0.0, 0.0));

        let mut dev = sample();
        let (v, theta) = (0.98, 0.1);
        dev.state.v_f = dev.params.k_r * (dev.params.v_ref - v);
        // e = v_f - (x_d - x'_d)(e - v cos)/x'_d solved for e
        let (xd, xdt) = (dev.params.x_d, dev.params.x_d_t);
        dev.state.eq_t = (dev.state.v_f * xdt + (xd - xdt) * v * (dev.state.delta - theta).cos()) / xd;
        let (de, dvf) = avr_derivatives(&dev, v, theta);
        assert!(dvf.abs() < 1e-12);
        assert!(de.abs() < 1e-9, "{de}");
    }

    #[test]
    fn round_rotor_ignores_stator_current() {
        let mut dev = sample();
        dev.params.x_d = dev.params.x_d_t;
        dev.state.v_f = 1.3;
        let (de, _) = avr_derivatives(&dev, 0.9, -0.4);
        assert!((de - (1.3 - dev.state.eq_t) / dev.params.t_d0_t).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        let mut dev = sample();
        assert!(dev.params.validate().is_ok());
        dev.params.m = 0.0;
        assert!(dev.params.validate().is_err());
    }
}
