//! The WSCC 9-bus system (Anderson & Fouad data, 100 MVA base).

use super::Case;
use crate::devices::{
    DualGfmDevice, DualGfmParams, DualGfmState, GovernorMode, MachineDevice, MachineParams,
    MachineState, PllParams, PssParams,
};
use crate::engine::{DeviceModel, DeviceSlot};
use crate::network::{Branch, Bus, BusKind, NetworkCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wscc9Variant {
    /// Synchronous machines at buses 1-3.
    Machines,
    /// Dual-GFM converters at buses 1-3.
    DualGfm,
    /// Converter at bus 1, machines at buses 2-3.
    Mixed,
    /// Converters with the large-system parameter set (K = 1, M~ = 15, D~ = 0.5).
    Irish,
}

impl Wscc9Variant {
    pub const ALL: [Wscc9Variant; 4] =
        [Wscc9Variant::Machines, Wscc9Variant::DualGfm, Wscc9Variant::Mixed, Wscc9Variant::Irish];

    pub fn name(self) -> &'static str {
        match self {
            Wscc9Variant::Machines => "wscc9-machines",
            Wscc9Variant::DualGfm => "wscc9-dualgfm",
            Wscc9Variant::Mixed => "wscc9-mixed",
            Wscc9Variant::Irish => "wscc9-irish",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

/// Machine ratings (MVA) of the standard data set.
pub const MACHINE_RATINGS: [f64; 3] = [247.5, 192.0, 128.0];

/// Converter ratings (MVA). Not published. One uniform value for all three
/// converters; the aggregate virtual conductance has to exceed the load
/// conductance for a positive-sequence equilibrium to exist.
pub const CONVERTER_RATINGS: [f64; 3] = [4000.0; 3];

pub fn wscc9_network() -> NetworkCase {
    let mut net = NetworkCase::new(100.0, 50.0);
    for id in 1..=9 {
        let kind = match id {
            1 => BusKind::Slack,
            2 | 3 => BusKind::Pv,
            _ => BusKind::Pq,
        };
        net.buses.push(Bus::new(id, kind));
    }
    let b = &mut net.buses;
    b[0].v = 1.04;
    b[1].v = 1.025;
    b[1].p_gen = 1.63;
    b[2].v = 1.025;
    b[2].p_gen = 0.85;
    (b[4].p_load, b[4].q_load) = (1.25, 0.5);
    (b[5].p_load, b[5].q_load) = (0.9, 0.3);
    (b[7].p_load, b[7].q_load) = (1.0, 0.35);
    net.branches = vec![
        Branch::line(1, 4, 0.0, 0.0576, 0.0),
        Branch::line(4, 5, 0.010, 0.085, 0.176),
        Branch::line(4, 6, 0.017, 0.092, 0.158),
        Branch::line(5, 7, 0.032, 0.161, 0.306),
        Branch::line(6, 9, 0.039, 0.170, 0.358),
        Branch::line(7, 8, 0.0085, 0.072, 0.149),
        Branch::line(8, 9, 0.0119, 0.1008, 0.209),
        Branch::line(2, 7, 0.0, 0.0625, 0.0),
        Branch::line(3, 9, 0.0, 0.0586, 0.0),
    ];
    net
}

/// Converter parameters of the 9-bus study on the converter rating.
pub fn dual_gfm_params() -> DualGfmParams {
    DualGfmParams {
        k: 0.1,
        m_t: 30.0,
        d_t: 20.0,
        t_m_t: 2.0,
        r_t: 0.05,
        k_q: 10.0,
        t_q: 5.0,
        k_r_t: 40.0,
        t_r_t: 1.0,
        omega_ref: 1.0,
        p_ref_o: 0.0,
        mode: GovernorMode::Droop,
    }
}

/// Large-system parameter variant.
pub fn irish_params() -> DualGfmParams {
    DualGfmParams { k: 1.0, m_t: 15.0, d_t: 0.5, ..dual_gfm_params() }
}

/// Shipped stabilizer tuning.
pub fn default_pss() -> PssParams {
    PssParams { gain: 0.0, ..PssParams::default() }
}

pub fn converter(params: DualGfmParams) -> DualGfmDevice {
    DualGfmDevice {
        params,
        pll: PllParams::default(),
        pss: Some(default_pss()),
        state: DualGfmState { e: 1.0, ..Default::default() },
    }
}

/// Machine `i` (0-based) of the standard data with governor and exciter.
pub fn machine(i: usize) -> MachineDevice {
    // H (s), x_d, x'_d, T'_d0 on the machine rating
    const DATA: [(f64, f64, f64, f64); 3] = [
        (9.551, 0.3614, 0.1505, 8.96),
        (3.333, 1.7199, 0.2300, 6.00),
        (2.352, 1.6800, 0.2321, 5.89),
    ];
    let (h, x_d, x_d_t, t_d0_t) = DATA[i];
    MachineDevice {
        params: MachineParams {
            m: 2.0 * h,
            d: 2.0,
            r_a: 0.0,
            x_d,
            x_d_t,
            t_d0_t,
            t_r: 0.2,
            t_m: 2.0,
            k_r: 20.0,
            droop: 0.05,
            omega_ref: 1.0,
            p_m_o: 0.0,
            v_ref: 1.0,
        },
        state: MachineState { omega: 1.0, eq_t: 1.0, ..Default::default() },
    }
}

pub fn builtin_wscc9(variant: Wscc9Variant) -> Case {
    let net = wscc9_network();
    let mut devices = Vec::new();
    for i in 0..3 {
        let as_converter = match variant {
            Wscc9Variant::Machines => false,
            Wscc9Variant::DualGfm | Wscc9Variant::Irish => true,
            Wscc9Variant::Mixed => i == 0,
        };
        let (model, rating) = if as_converter {
            let p = if variant == Wscc9Variant::Irish { irish_params() } else { dual_gfm_params() };
            (DeviceModel::DualGfm(converter(p)), CONVERTER_RATINGS[i])
        } else {
            (DeviceModel::Machine(machine(i)), MACHINE_RATINGS[i])
        };
        devices.push(DeviceSlot { id: i + 1, bus: i + 1, rating, model });
    }
    Case { name: variant.name().to_string(), network: net, omega_ref: 1.0, devices, events: Vec::new() }
}
