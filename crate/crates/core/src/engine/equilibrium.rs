use num_complex::Complex64;

use super::newton::{fd_jacobian, inf_norm, linear_solve, LinearSolver, NewtonReport};
use super::{DeviceModel, DynamicSystem, EngineError, SystemState};
use crate::network::{BusKind, PowerFlowSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions { tolerance: 1e-10, max_iterations: 50, fd_step: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub state: SystemState,
    /// Common frequency deviation of the steady state (pu).
    pub freq_deviation: f64,
    /// `max(|f|, |g|)` at the returned state.
    pub residual: f64,
    pub report: NewtonReport,
}

/// Finds the operating point matching the power flow.
///
/// Unknowns are the states, the bus voltages, a common frequency deviation
/// `dw` and the device set points (governor power set points, exciter voltage
/// references). Equations are `f - dw * r = 0` (with `r` the frame-rotation
/// pattern), `g = 0`, the power-flow active power at every device, the
/// power-flow voltage at every machine bus, and one closure: `dw = 0` when any
/// converter is present (their internal angles are absolute, so only a
/// stationary point is a steady state), otherwise a zero slack angle.
///
/// On success the set points and states are written into `sys`.
pub fn solve_equilibrium(
    sys: &mut DynamicSystem,
    pf: &PowerFlowSolution,
    opts: EquilibriumOptions,
) -> Result<Equilibrium, EngineError> {
    let n_bus = sys.network.n_buses();
    if pf.v.len() != n_bus {
        return Err(EngineError::Dimension { what: "power flow", expected: n_bus, got: pf.v.len() });
    }
    let (n_x, n_y) = (sys.n_x(), sys.n_y());
    let n_set: usize = sys.devices().iter().map(|d| setpoint_count(&d.model)).sum();
    let any_converter = sys.devices().iter().any(|d| matches!(d.model, DeviceModel::DualGfm(_)));
    let slack = sys.network.buses.iter().position(|b| b.kind == BusKind::Slack);

    let p_gen: Vec<f64> = (0..n_bus)
        .map(|i| pf.injections[i].re + sys.network.buses[i].p_load)
        .collect();
    let rotation = sys.rotation_pattern();
    let z0 = initial_guess(sys, pf)?;
    let n_z = z0.len();
    debug_assert_eq!(n_z, n_x + n_y + 1 + n_set);

    let mut scratch = sys.clone();
    let mut fun = |z: &[f64], out: &mut [f64]| -> Result<(), EngineError> {
        apply_setpoints(&mut scratch, &z[n_x + n_y + 1..]);
        let (x, y, dw) = (&z[..n_x], &z[n_x..n_x + n_y], z[n_x + n_y]);
        let (f, rest) = out.split_at_mut(n_x);
        let (g, rest) = rest.split_at_mut(n_y);
        scratch.residuals(x, y, f, g)?;
        for (fi, ri) in f.iter_mut().zip(&rotation) {
            *fi -= dw * ri;
        }
        let inj = scratch.injections(x, y)?;
        let mut row = 0;
        for (k, s) in inj.iter().enumerate() {
            let b = scratch.device_bus_index(k);
            rest[row] = s.re - p_gen[b];
            row += 1;
            if let DeviceModel::Machine(_) = scratch.devices()[k].model {
                rest[row] = y[2 * b] - pf.v[b];
                row += 1;
            }
        }
        rest[row] = if any_converter {
            dw
        } else {
            slack.map_or(0.0, |s| y[2 * s + 1] - pf.theta[s])
        };
        Ok(())
    };

    let mut z = z0;
    let mut r = vec![0.0; n_z];
    let mut report = NewtonReport::default();
    fun(&z, &mut r)?;
    report.history.push(inf_norm(&r));
    while report.history.last().is_some_and(|&n| !(n < opts.tolerance)) {
        if report.iterations >= opts.max_iterations {
            return Err(EngineError::Equilibrium { history: report.history });
        }
        let jac = fd_jacobian(&mut fun, &z, &r, opts.fd_step)?;
        let dz = linear_solve(jac, &r, &LinearSolver::Svd)?;
        for (zi, di) in z.iter_mut().zip(dz.iter()) {
            *zi -= di;
        }
        report.iterations += 1;
        if fun(&z, &mut r).is_err() {
            return Err(EngineError::Equilibrium { history: report.history });
        }
        report.history.push(inf_norm(&r));
    }
    report.residual = *report.history.last().unwrap_or(&0.0);

    apply_setpoints(sys, &z[n_x + n_y + 1..]);
    let x = z[..n_x].to_vec();
    let y = z[n_x..n_x + n_y].to_vec();
    sys.unpack_states(&x);
    let mut f = vec![0.0; n_x];
    let mut g = vec![0.0; n_y];
    sys.residuals(&x, &y, &mut f, &mut g)?;
    let residual = inf_norm(&f).max(inf_norm(&g));
    Ok(Equilibrium {
        state: SystemState { t: 0.0, x, y },
        freq_deviation: z[n_x + n_y],
        residual,
        report,
    })
}

fn setpoint_count(model: &DeviceModel) -> usize {
    match model {
        DeviceModel::Machine(_) => 2,
        DeviceModel::DualGfm(_) => 1,
    }
}

fn apply_setpoints(sys: &mut DynamicSystem, s: &[f64]) {
    let mut i = 0;
    for dev in sys.devices_mut() {
        match &mut dev.model {
            DeviceModel::Machine(m) => {
                m.params.p_m_o = s[i];
                m.params.v_ref = s[i + 1];
                i += 2;
            }
            DeviceModel::DualGfm(d) => {
                d.params.p_ref_o = s[i];
                i += 1;
            }
        }
    }
}

/// Classical initialization for machines, closed-form emf inversion for
/// converters, then a common angle shift that best satisfies the converter
/// angle controllers at `q_ref = 0`.
fn initial_guess(sys: &DynamicSystem, pf: &PowerFlowSolution) -> Result<Vec<f64>, EngineError> {
    let n_bus = sys.network.n_buses();
    let mut models: Vec<DeviceModel> = Vec::new();
    let mut setpoints = Vec::new();
    let mut shift_terms = Vec::new();
    for (k, slot) in sys.devices().iter().enumerate() {
        let b = sys.device_bus_index(k);
        let (v, theta) = (pf.v[b], pf.theta[b]);
        let s_gen = (pf.injections[b]
            + Complex64::new(sys.network.buses[b].p_load, sys.network.buses[b].q_load))
            * (sys.network.base_mva / slot.rating);
        let mut model = slot.model;
        match &mut model {
            DeviceModel::Machine(m) => {
                let vp = Complex64::from_polar(v, theta);
                let current = (s_gen / vp).conj();
                let emf = vp + Complex64::new(m.params.r_a, m.params.x_d_t) * current;
                let st = &mut m.state;
                st.delta = emf.arg();
                st.eq_t = emf.norm();
                st.omega = m.params.omega_ref;
                st.p_m = s_gen.re;
                let i_d = (st.eq_t - v * (st.delta - theta).cos()) / m.params.x_d_t;
                st.v_f = st.eq_t + (m.params.x_d - m.params.x_d_t) * i_d;
                setpoints.push(s_gen.re);
                setpoints.push(v + st.v_f / m.params.k_r);
            }
            DeviceModel::DualGfm(d) => {
                let k = d.params.k;
                let a = k * v * v - s_gen.re;
                let st = &mut d.state;
                st.e = a.hypot(s_gen.im) / (k * v);
                st.delta = theta + s_gen.im.atan2(a);
                st.rho = 0.0;
                st.p_ref = s_gen.re;
                st.q_ref = 0.0;
                st.pll.theta_f = theta;
                st.pss = Default::default();
                shift_terms.push(-d.params.k_q * s_gen.im - st.delta);
                setpoints.push(s_gen.re);
            }
        }
        models.push(model);
    }
    let alpha = if shift_terms.is_empty() {
        0.0
    } else {
        shift_terms.iter().sum::<f64>() / shift_terms.len() as f64
    };
    for model in &mut models {
        match model {
            DeviceModel::Machine(m) => m.state.delta += alpha,
            DeviceModel::DualGfm(d) => {
                d.state.delta += alpha;
                d.state.pll.theta_f += alpha;
            }
        }
    }

    let mut tmp = sys.clone();
    for (slot, model) in tmp.devices_mut().iter_mut().zip(models) {
        slot.model = model;
    }
    let mut z = vec![0.0; sys.n_x()];
    tmp.pack_states(&mut z);
    for i in 0..n_bus {
        z.push(pf.v[i]);
        z.push(pf.theta[i] + alpha);
    }
    z.push(0.0);
    z.extend(setpoints);
    Ok(z)
}
