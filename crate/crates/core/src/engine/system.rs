use num_complex::Complex64;

use super::EngineError;
use crate::devices::{DualGfmDevice, MachineDevice, MachineState};
use crate::network::{assemble_ybus, AdmittanceMatrix, NetworkCase, NetworkError, PowerFlowSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceModel {
    Machine(MachineDevice),
    DualGfm(DualGfmDevice),
}

impl DeviceModel {
    pub fn n_states(&self) -> usize {
        match self {
            DeviceModel::Machine(_) => MachineState::LEN,
            DeviceModel::DualGfm(d) => d.n_states(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DeviceModel::Machine(_) => "machine",
            DeviceModel::DualGfm(_) => "dualgfm",
        }
    }

    pub fn omega_ref(&self) -> f64 {
        match self {
            DeviceModel::Machine(m) => m.params.omega_ref,
            DeviceModel::DualGfm(d) => d.params.omega_ref,
        }
    }

    /// Marks the states that advance at a common frame rotation: the
    /// internal angle and the PLL filter angle.
    pub(crate) fn rotation_pattern(&self, out: &mut [f64]) {
        out.fill(0.0);
        out[match self {
            DeviceModel::Machine(_) => 0,
            DeviceModel::DualGfm(_) => 2,
        }] = 1.0;
        if let DeviceModel::DualGfm(_) = self {
            out[5] = 1.0;
        }
    }
}

/// A device placed on a bus, with its rating in MVA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceSlot {
    pub id: usize,
    pub bus: usize,
    pub rating: f64,
    pub model: DeviceModel,
}

/// Differential states `x` (device states concatenated in device order) and
/// algebraic variables `y = [v_1, theta_1, v_2, theta_2, ...]` in bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SystemState {
    pub fn v(&self, bus_index: usize) -> f64 {
        self.y[2 * bus_index]
    }

    pub fn theta(&self, bus_index: usize) -> f64 {
        self.y[2 * bus_index + 1]
    }
}

/// Network plus devices in the form integrated by the engine. Loads are
/// constant admittances folded into the admittance matrix.
#[derive(Debug, Clone)]
pub struct DynamicSystem {
    pub network: NetworkCase,
    ybus: AdmittanceMatrix,
    devices: Vec<DeviceSlot>,
    device_bus: Vec<usize>,
    offsets: Vec<usize>,
    n_x: usize,
    pub(crate) load_admittance: Vec<Complex64>,
    pub(crate) faults: Vec<(usize, Complex64)>,
    tripped: Vec<bool>,
}

impl DynamicSystem {
    /// Builds the system, converting each load to the admittance
    /// `(p - jq)/v0^2` at the solved power-flow voltage.
    pub fn new(
        network: NetworkCase,
        devices: Vec<DeviceSlot>,
        pf: &PowerFlowSolution,
    ) -> Result<Self, EngineError> {
        let n = network.n_buses();
        if pf.v.len() != n {
            return Err(EngineError::Dimension { what: "power-flow voltages", expected: n, got: pf.v.len() });
        }
        let mut ybus = assemble_ybus(&network)?;
        let mut load_admittance = vec![Complex64::new(0.0, 0.0); n];
        for (i, bus) in network.buses.iter().enumerate() {
            let y = Complex64::new(bus.p_load, -bus.q_load) / (pf.v[i] * pf.v[i]);
            load_admittance[i] = y;
            ybus.apply_delta_in_place(bus.id, y)?;
        }

        let mut device_bus = Vec::with_capacity(devices.len());
        let mut offsets = Vec::with_capacity(devices.len());
        let mut n_x = 0;
        for (k, dev) in devices.iter().enumerate() {
            if !(dev.rating > 0.0) {
                return Err(EngineError::Invalid(format!("device {} rating must be positive", dev.id)));
            }
            if devices[..k].iter().any(|d| d.id == dev.id) {
                return Err(EngineError::Invalid(format!("duplicate device id {}", dev.id)));
            }
            if devices[..k].iter().any(|d| d.bus == dev.bus) {
                return Err(EngineError::Invalid(format!("more than one device at bus {}", dev.bus)));
            }
            let validation = match &dev.model {
                DeviceModel::Machine(m) => m.params.validate(),
                DeviceModel::DualGfm(d) => d
                    .params
                    .validate()
                    .and_then(|_| d.pss.map_or(Ok(()), |p| p.validate())),
            };
            validation.map_err(|source| EngineError::Device { id: dev.id, source })?;
            device_bus.push(network.index_of(dev.bus)?);
            offsets.push(n_x);
            n_x += dev.model.n_states();
        }

        Ok(DynamicSystem {
            network,
            ybus,
            tripped: vec![false; devices.len()],
            devices,
            device_bus,
            offsets,
            n_x,
            load_admittance,
            faults: Vec::new(),
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        2 * self.network.n_buses()
    }

    pub fn devices(&self) -> &[DeviceSlot] {
        &self.devices
    }

    pub(crate) fn devices_mut(&mut self) -> &mut [DeviceSlot] {
        &mut self.devices
    }

    pub fn ybus(&self) -> &AdmittanceMatrix {
        &self.ybus
    }

    /// Index of the first state of device `k` in `x`.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn device_bus_index(&self, k: usize) -> usize {
        self.device_bus[k]
    }

    pub fn device_index(&self, id: usize) -> Option<usize> {
        self.devices.iter().position(|d| d.id == id)
    }

    pub fn is_tripped(&self, k: usize) -> bool {
        self.tripped[k]
    }

    pub(crate) fn trip(&mut self, k: usize) {
        self.tripped[k] = true;
    }

    pub(crate) fn edit_admittance(&mut self, bus_index: usize, delta: Complex64) -> Result<(), NetworkError> {
        let id = self.network.buses[bus_index].id;
        self.ybus.apply_delta_in_place(id, delta)
    }

    /// Device `k` with its states loaded from `x`.
    pub fn device_at(&self, k: usize, x: &[f64]) -> DeviceModel {
        let off = self.offsets[k];
        let mut model = self.devices[k].model;
        match &mut model {
            DeviceModel::Machine(m) => m.state = MachineState::from_slice(&x[off..off + MachineState::LEN]),
            DeviceModel::DualGfm(d) => d.load_states(&x[off..off + d.n_states()]),
        }
        model
    }

    /// Writes the states held by the device slots into `x`.
    pub fn pack_states(&self, x: &mut [f64]) {
        for (k, dev) in self.devices.iter().enumerate() {
            let off = self.offsets[k];
            match &dev.model {
                DeviceModel::Machine(m) => x[off..off + 5].copy_from_slice(&m.state.to_array()),
                DeviceModel::DualGfm(d) => d.store_states(&mut x[off..off + d.n_states()]),
            }
        }
    }

    /// Copies states from `x` back into the device slots.
    pub fn unpack_states(&mut self, x: &[f64]) {
        for k in 0..self.devices.len() {
            self.devices[k].model = self.device_at(k, x);
        }
    }

    /// Rotation generator over `x`: 1 on every angle state, 0 elsewhere.
    pub(crate) fn rotation_pattern(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.n_x];
        for (k, dev) in self.devices.iter().enumerate() {
            let off = self.offsets[k];
            dev.model.rotation_pattern(&mut r[off..off + dev.model.n_states()]);
        }
        r
    }

    /// Device injection on the system base and frequency signal, with the
    /// derivatives written into `dx` when given.
    pub(crate) fn eval_device(
        &self,
        k: usize,
        x: &[f64],
        y: &[f64],
        dx: Option<&mut [f64]>,
    ) -> Result<(Complex64, f64), EngineError> {
        let slot = &self.devices[k];
        let b = self.device_bus[k];
        let (v, theta) = (y[2 * b], y[2 * b + 1]);
        let scale = slot.rating / self.network.base_mva;
        let model = self.device_at(k, x);
        let err = |source| EngineError::Device { id: slot.id, source };
        let n = model.n_states();
        let mut local = [0.0; 9];
        let (p, q, omega) = match &model {
            DeviceModel::Machine(m) => {
                let (d, (p, q)) = m.derivatives(v, theta).map_err(err)?;
                local[..5].copy_from_slice(&d);
                (p, q, m.state.omega)
            }
            DeviceModel::DualGfm(d) => {
                let out = d.derivatives(v, theta, &mut local[..n]).map_err(err)?;
                (out.p, out.q, out.omega_est)
            }
        };
        if let Some(dx) = dx {
            if self.tripped[k] {
                dx.fill(0.0);
            } else {
                dx.copy_from_slice(&local[..n]);
            }
        }
        if self.tripped[k] {
            return Ok((Complex64::new(0.0, 0.0), omega));
        }
        Ok((Complex64::new(p, q) * scale, omega))
    }

    /// Differential residuals `f = dx/dt` and algebraic residuals
    /// `g = [dP_1/v_1, dQ_1/v_1, ...]`: the power drawn by the network minus the
    /// power injected by devices at each bus, divided by the bus voltage. The
    /// division keeps the roots with `v > 0` and removes the spurious root at
    /// `v = 0` that pure power balance has (both sides vanish there).
    pub fn residuals(&self, x: &[f64], y: &[f64], f: &mut [f64], g: &mut [f64]) -> Result<(), EngineError> {
        self.check_dims(x, y)?;
        if f.len() != self.n_x {
            return Err(EngineError::Dimension { what: "f", expected: self.n_x, got: f.len() });
        }
        if g.len() != self.n_y() {
            return Err(EngineError::Dimension { what: "g", expected: self.n_y(), got: g.len() });
        }
        self.network_mismatch(y, g);
        for k in 0..self.devices.len() {
            let off = self.offsets[k];
            let n = self.devices[k].model.n_states();
            let (s, _) = self.eval_device(k, x, y, Some(&mut f[off..off + n]))?;
            let b = self.device_bus[k];
            g[2 * b] -= s.re;
            g[2 * b + 1] -= s.im;
        }
        scale_by_voltage(y, g);
        Ok(())
    }

    /// Algebraic residuals only.
    pub fn algebraic_residuals(&self, x: &[f64], y: &[f64], g: &mut [f64]) -> Result<(), EngineError> {
        self.check_dims(x, y)?;
        self.network_mismatch(y, g);
        for k in 0..self.devices.len() {
            let (s, _) = self.eval_device(k, x, y, None)?;
            let b = self.device_bus[k];
            g[2 * b] -= s.re;
            g[2 * b + 1] -= s.im;
        }
        scale_by_voltage(y, g);
        Ok(())
    }

    /// Power drawn by the network (loads, shunts, faults and branches) at each bus.
    pub fn network_mismatch(&self, y: &[f64], g: &mut [f64]) {
        let n = self.network.n_buses();
        let phasors: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(y[2 * i], y[2 * i + 1])).collect();
        let currents = self.ybus.mul_vec(&phasors);
        for i in 0..n {
            let s = phasors[i] * currents[i].conj();
            g[2 * i] = s.re;
            g[2 * i + 1] = s.im;
        }
    }

    /// Frequency signal of every device: PLL estimate for converters, rotor
    /// speed for machines.
    pub fn frequencies(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, EngineError> {
        (0..self.devices.len()).map(|k| self.eval_device(k, x, y, None).map(|r| r.1)).collect()
    }

    /// Active and reactive injection of each device on the system base.
    pub fn injections(&self, x: &[f64], y: &[f64]) -> Result<Vec<Complex64>, EngineError> {
        (0..self.devices.len()).map(|k| self.eval_device(k, x, y, None).map(|r| r.0)).collect()
    }

    /// Initial algebraic vector from a power-flow solution.
    pub fn y_from_powerflow(&self, pf: &PowerFlowSolution) -> Vec<f64> {
        pf.v.iter().zip(&pf.theta).flat_map(|(&v, &t)| [v, t]).collect()
    }

    /// Rewrites any bus with `v < 0` as the same phasor `(-v, theta + pi)`,
    /// choosing the angle branch nearest `y_prev`. Returns whether anything changed.
    pub fn normalize_voltages(&self, y: &mut [f64], y_prev: &[f64]) -> bool {
        let mut changed = false;
        for i in 0..self.network.n_buses() {
            if y[2 * i] < 0.0 {
                y[2 * i] = -y[2 * i];
                let flipped = y[2 * i + 1] + std::f64::consts::PI;
                let turns = ((flipped - y_prev[2 * i + 1]) / std::f64::consts::TAU).round();
                y[2 * i + 1] = flipped - turns * std::f64::consts::TAU;
                changed = true;
            }
        }
        changed
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<(), EngineError> {
        if x.len() != self.n_x {
            return Err(EngineError::Dimension { what: "x", expected: self.n_x, got: x.len() });
        }
        if y.len() != self.n_y() {
            return Err(EngineError::Dimension { what: "y", expected: self.n_y(), got: y.len() });
        }
        Ok(())
    }
}

fn scale_by_voltage(y: &[f64], g: &mut [f64]) {
    for (i, pair) in g.chunks_exact_mut(2).enumerate() {
        let v = y[2 * i];
        pair[0] /= v;
        pair[1] /= v;
    }
}
