use super::events::handle_event;
use super::{trapezoidal_step, DeviceModel, DynamicSystem, EngineError, Event, EventKind, SolverConfig, SystemState};

/// Per-device signals recorded at each output time. Powers are on the device
/// rating. For machines `e` is `e'_q`, `rho` is `(de'_q/dt)/e'_q` and
/// `omega_est` is the rotor speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceOutputs {
    pub e: f64,
    pub rho: f64,
    pub delta: f64,
    pub omega_est: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub requested: f64,
    pub applied: f64,
    pub step: usize,
    pub kind: EventKind,
    /// Algebraic residual after the re-solve, or the failure residual.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub device_ids: Vec<usize>,
    pub device_kinds: Vec<&'static str>,
    pub device_omega_ref: Vec<f64>,
    pub bus_ids: Vec<usize>,
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<DeviceOutputs>>,
    pub events: Vec<EventRecord>,
    pub newton_iterations: usize,
    /// False when a step or event failed; the snapshots stop there.
    pub complete: bool,
    pub failure: Option<String>,
}

impl SimResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_stop(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

pub(crate) fn device_outputs(sys: &DynamicSystem, x: &[f64], y: &[f64]) -> Result<Vec<DeviceOutputs>, EngineError> {
    let mut out = Vec::with_capacity(sys.devices().len());
    let mut dx = [0.0; 9];
    for k in 0..sys.devices().len() {
        let slot = sys.devices()[k];
        let n = slot.model.n_states();
        let (s, omega) = sys.eval_device(k, x, y, Some(&mut dx[..n]))?;
        let s = s / (slot.rating / sys.network.base_mva);
        let model = sys.device_at(k, x);
        let (e, rho, delta) = match &model {
            DeviceModel::Machine(m) => (m.state.eq_t, dx[2] / m.state.eq_t, m.state.delta),
            DeviceModel::DualGfm(d) => (d.state.e, d.state.rho, d.state.delta),
        };
        out.push(DeviceOutputs { e, rho, delta, omega_est: omega, p: s.re, q: s.im });
    }
    Ok(out)
}

/// Fixed-step march from `initial` to `cfg.t_stop`. Event times are snapped
/// to the nearest grid point; events sharing a grid point apply in list order
/// before the step that starts there. Step or event failures end the run
/// early with `complete = false`.
pub fn run_simulation(
    sys: &DynamicSystem,
    initial: &SystemState,
    events: &[Event],
    cfg: &SolverConfig,
) -> Result<SimResult, EngineError> {
    cfg.validate()?;
    if initial.x.len() != sys.n_x() || initial.y.len() != sys.n_y() {
        return Err(EngineError::Dimension { what: "initial state", expected: sys.n_x() + sys.n_y(), got: initial.x.len() + initial.y.len() });
    }
    let mut sys = sys.clone();
    let n_steps = (cfg.t_stop / cfg.dt).round() as usize;
    let mut schedule: Vec<(usize, Event)> = Vec::with_capacity(events.len());
    for ev in events {
        if !(ev.t >= 0.0) || !ev.t.is_finite() {
            return Err(EngineError::Invalid(format!("event time must be non-negative, got {}", ev.t)));
        }
        let step = (ev.t / cfg.dt).round() as usize;
        if step <= n_steps {
            schedule.push((step, *ev));
        }
    }
    schedule.sort_by_key(|(k, _)| *k);

    let mut result = SimResult {
        device_ids: sys.devices().iter().map(|d| d.id).collect(),
        device_kinds: sys.devices().iter().map(|d| d.model.kind()).collect(),
        device_omega_ref: sys.devices().iter().map(|d| d.model.omega_ref()).collect(),
        bus_ids: sys.network.buses.iter().map(|b| b.id).collect(),
        times: Vec::with_capacity(n_steps + 1),
        x: Vec::with_capacity(n_steps + 1),
        y: Vec::with_capacity(n_steps + 1),
        outputs: Vec::with_capacity(n_steps + 1),
        events: Vec::new(),
        newton_iterations: 0,
        complete: true,
        failure: None,
    };

    let mut state = SystemState { t: 0.0, x: initial.x.clone(), y: initial.y.clone() };
    let mut next = 0;
    for k in 0..=n_steps {
        let t_k = k as f64 * cfg.dt;
        state.t = t_k;
        while next < schedule.len() && schedule[next].0 == k {
            let ev = schedule[next].1;
            next += 1;
            match handle_event(&mut sys, &state, &ev, cfg) {
                Ok(s) => {
                    let mut g = vec![0.0; sys.n_y()];
                    sys.algebraic_residuals(&s.x, &s.y, &mut g)?;
                    result.events.push(EventRecord {
                        requested: ev.t,
                        applied: t_k,
                        step: k,
                        kind: ev.kind,
                        residual: super::newton::inf_norm(&g),
                    });
                    state = s;
                }
                Err(err) => {
                    let residual = match err {
                        EngineError::Event { residual, .. } => residual,
                        _ => f64::NAN,
                    };
                    result.events.push(EventRecord { requested: ev.t, applied: t_k, step: k, kind: ev.kind, residual });
                    result.complete = false;
                    result.failure = Some(err.to_string());
                    return Ok(result);
                }
            }
        }
        result.outputs.push(device_outputs(&sys, &state.x, &state.y)?);
        result.times.push(t_k);
        result.x.push(state.x.clone());
        result.y.push(state.y.clone());
        if k == n_steps {
            break;
        }
        match trapezoidal_step(&sys, &state, cfg.dt, cfg) {
            Ok((s, report)) => {
                result.newton_iterations += report.iterations;
                state = s;
            }
            Err(err) => {
                result.complete = false;
                result.failure = Some(err.to_string());
                return Ok(result);
            }
        }
    }
    Ok(result)
}
