use num_complex::Complex64;

use super::newton::{fd_jacobian, inf_norm, linear_solve, LinearSolver};
use super::{DynamicSystem, EngineError, SolverConfig, SystemState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// Multiplies the load admittance at `bus` by `factor`.
    LoadScale { bus: usize, factor: f64 },
    FaultApply { bus: usize, g: f64, b: f64 },
    /// Removes the most recent fault applied at `bus`.
    FaultClear { bus: usize },
    DeviceTrip { id: usize },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::LoadScale { .. } => "load_scale",
            EventKind::FaultApply { .. } => "fault_apply",
            EventKind::FaultClear { .. } => "fault_clear",
            EventKind::DeviceTrip { .. } => "device_trip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

impl Event {
    pub fn new(t: f64, kind: EventKind) -> Self {
        Event { t, kind }
    }
}

/// Applies `event` to the network or devices and re-solves the algebraic
/// variables with the differential states frozen.
pub fn handle_event(
    sys: &mut DynamicSystem,
    state: &SystemState,
    event: &Event,
    cfg: &SolverConfig,
) -> Result<SystemState, EngineError> {
    if !(event.t >= 0.0) {
        return Err(EngineError::Invalid(format!("event time must be non-negative, got {}", event.t)));
    }
    match event.kind {
        EventKind::LoadScale { bus, factor } => {
            if !factor.is_finite() || factor < 0.0 {
                return Err(EngineError::Invalid(format!("load factor must be non-negative, got {factor}")));
            }
            let i = sys.network.index_of(bus)?;
            let old = sys.load_admittance[i];
            sys.load_admittance[i] = old * factor;
            sys.edit_admittance(i, old * (factor - 1.0))?;
        }
        EventKind::FaultApply { bus, g, b } => {
            let i = sys.network.index_of(bus)?;
            let y = Complex64::new(g, b);
            sys.edit_admittance(i, y)?;
            sys.faults.push((i, y));
        }
        EventKind::FaultClear { bus } => {
            let i = sys.network.index_of(bus)?;
            let pos = sys
                .faults
                .iter()
                .rposition(|&(k, _)| k == i)
                .ok_or_else(|| EngineError::Invalid(format!("no active fault at bus {bus}")))?;
            let (_, y) = sys.faults.remove(pos);
            sys.edit_admittance(i, -y)?;
        }
        EventKind::DeviceTrip { id } => {
            let k = sys
                .device_index(id)
                .ok_or_else(|| EngineError::Invalid(format!("unknown device {id}")))?;
            sys.trip(k);
        }
    }
    let y = resolve_algebraic(sys, &state.x, &state.y, cfg)
        .map_err(|residual| EngineError::Event { t: event.t, residual })?;
    Ok(SystemState { t: state.t, x: state.x.clone(), y })
}

/// Polar `y` from rectangular bus voltages, each angle on the branch nearest `y_ref`.
fn polar_from(z: &[f64], y_ref: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; z.len()];
    for i in 0..z.len() / 2 {
        let (re, im) = (z[2 * i], z[2 * i + 1]);
        let th = im.atan2(re);
        let turns = ((th - y_ref[2 * i + 1]) / std::f64::consts::TAU).round();
        y[2 * i] = re.hypot(im);
        y[2 * i + 1] = th - turns * std::f64::consts::TAU;
    }
    y
}

/// Newton on the bus current mismatch in rectangular voltages. With the
/// states frozen every device model is a Norton source and loads and faults
/// are admittances, so this converges in a step or two from any start,
/// including when a fault drives a bus voltage through the region where the
/// polar form is ill-conditioned.
fn rectangular_start(sys: &DynamicSystem, x: &[f64], y0: &[f64], cfg: &SolverConfig) -> Option<Vec<f64>> {
    let n = y0.len() / 2;
    // g = dS/v = e^{j theta} conj(dI), so dI = e^{j theta} conj(g)
    let mut current = |z: &[f64], out: &mut [f64]| -> Result<(), EngineError> {
        let y = polar_from(z, y0);
        let mut g = vec![0.0; y.len()];
        sys.algebraic_residuals(x, &y, &mut g)?;
        for i in 0..n {
            let di = Complex64::from_polar(1.0, y[2 * i + 1]) * Complex64::new(g[2 * i], -g[2 * i + 1]);
            out[2 * i] = di.re;
            out[2 * i + 1] = di.im;
        }
        Ok(())
    };
    let mut z: Vec<f64> = (0..n)
        .flat_map(|i| {
            let c = Complex64::from_polar(y0[2 * i], y0[2 * i + 1]);
            [c.re, c.im]
        })
        .collect();
    let mut r = vec![0.0; z.len()];
    current(&z, &mut r).ok()?;
    for _ in 0..cfg.max_newton {
        if inf_norm(&r) < cfg.newton_tol {
            return Some(polar_from(&z, y0));
        }
        let jac = fd_jacobian(&mut current, &z, &r, cfg.fd_step).ok()?;
        let dz = linear_solve(jac, &r, &LinearSolver::Lu).ok()?;
        for (zi, di) in z.iter_mut().zip(dz.iter()) {
            *zi -= di;
        }
        current(&z, &mut r).ok()?;
    }
    None
}

/// Newton on `g(x, y) = 0` in `y` alone. Err carries the last residual norm.
pub(crate) fn resolve_algebraic(
    sys: &DynamicSystem,
    x: &[f64],
    y0: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>, f64> {
    let mut fun = |y: &[f64], g: &mut [f64]| sys.algebraic_residuals(x, y, g);
    let mut y = rectangular_start(sys, x, y0, cfg).unwrap_or_else(|| y0.to_vec());
    let mut g = vec![0.0; y.len()];
    fun(&y, &mut g).map_err(|_| f64::NAN)?;
    let mut norm = inf_norm(&g);
    // more room than a time step: the start point can be far off after a fault
    for _ in 0..(4 * cfg.max_newton) {
        if norm < cfg.newton_tol {
            sys.normalize_voltages(&mut y, y0);
            return Ok(y);
        }
        let jac = fd_jacobian(&mut fun, &y, &g, cfg.fd_step).map_err(|_| norm)?;
        let dy = linear_solve(jac, &g, &LinearSolver::Lu).map_err(|_| norm)?;
        // backtracking on the residual norm
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(dy.iter()).map(|(yi, di)| yi - lambda * di).collect();
            let mut gt = vec![0.0; g.len()];
            let ok = fun(&trial, &mut gt).is_ok();
            let nt = inf_norm(&gt);
            if ok && (nt < norm || lambda < 1e-3) && nt.is_finite() {
                y = trial;
                g = gt;
                norm = nt;
                break;
            }
            if lambda < 1e-3 {
                return Err(norm);
            }
            lambda *= 0.5;
        }
    }
    Err(norm)
}
