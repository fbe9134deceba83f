//! Text case format, version 1.
//!
//! ```text
//! dualgfm-case v1
//! # comment
//! [system]
//! name=demo base_mva=100 base_hz=50 omega_ref=1
//! [bus]
//! id=1 kind=slack v=1.04 theta=0
//! id=2 kind=pq p_load=0.5 q_load=0.1
//! [branch]
//! from=1 to=2 r=0.01 x=0.1 b=0.02 tap=1
//! [dualgfm]
//! id=1 bus=1 rating=400 k=0.1 m=30 d=20 t_m=2 r=0.05 k_q=10 t_q=5 k_r=40 t_r=1
//! [pss]
//! device=1 gain=0 t_w=5
//! [event]
//! t=1 kind=load_scale bus=2 factor=0.8
//! ```
//!
//! Every row is a list of whitespace-separated `key=value` pairs; `#` starts a
//! comment. Sections may appear in any order and more than once. Angles are in
//! degrees. Device states are not stored: they come from the equilibrium.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use super::{Case, FAULT_CONDUCTANCE};
use crate::devices::{
    DualGfmDevice, DualGfmParams, DualGfmState, GovernorMode, MachineDevice, MachineParams, MachineState,
    PllParams, PssParams,
};
use crate::engine::{DeviceModel, DeviceSlot, Event, EventKind};
use crate::network::{Branch, Bus, BusKind, NetworkCase};

pub const HEADER: &str = "dualgfm-case v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseErrorKind {
    MissingHeader,
    Syntax(String),
    UnknownSection(String),
    UnknownKey { section: &'static str, key: String },
    DuplicateKey(String),
    MissingField { section: &'static str, key: &'static str },
    BadValue { key: String, message: String },
    DanglingBus(usize),
    UnknownDevice(usize),
    Invalid(String),
}

impl fmt::Display for CaseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseErrorKind::MissingHeader => write!(f, "expected header '{HEADER}'"),
            CaseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            CaseErrorKind::UnknownSection(s) => write!(f, "unknown section [{s}]"),
            CaseErrorKind::UnknownKey { section, key } => write!(f, "unknown key '{key}' in [{section}]"),
            CaseErrorKind::DuplicateKey(k) => write!(f, "key '{k}' given twice"),
            CaseErrorKind::MissingField { section, key } => write!(f, "missing field '{key}' in [{section}]"),
            CaseErrorKind::BadValue { key, message } => write!(f, "bad value for '{key}': {message}"),
            CaseErrorKind::DanglingBus(b) => write!(f, "reference to unknown bus {b}"),
            CaseErrorKind::UnknownDevice(d) => write!(f, "reference to unknown device {d}"),
            CaseErrorKind::Invalid(m) => write!(f, "{m}"),
        }
    }
}

/// Parse failure with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct CaseError {
    pub line: usize,
    pub col: usize,
    pub kind: CaseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    System,
    Bus,
    Branch,
    Machine,
    DualGfm,
    Pll,
    Pss,
    Event,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "system" => Section::System,
            "bus" => Section::Bus,
            "branch" => Section::Branch,
            "machine" => Section::Machine,
            "dualgfm" => Section::DualGfm,
            "pll" => Section::Pll,
            "pss" => Section::Pss,
            "event" => Section::Event,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Section::System => "system",
            Section::Bus => "bus",
            Section::Branch => "branch",
            Section::Machine => "machine",
            Section::DualGfm => "dualgfm",
            Section::Pll => "pll",
            Section::Pss => "pss",
            Section::Event => "event",
        }
    }
}

struct Field<'a> {
    value: &'a str,
    col: usize,
    key_col: usize,
    used: bool,
}

/// One `key=value` row. Lookups mark keys as used; `finish` rejects the rest.
struct Row<'a> {
    section: Section,
    line: usize,
    col: usize,
    fields: BTreeMap<&'a str, Field<'a>>,
}

impl<'a> Row<'a> {
    fn tokenize(section: Section, line: usize, text: &'a str) -> Result<Self, CaseError> {
        let mut fields = BTreeMap::new();
        let mut first_col = 0;
        let mut rest = text;
        let mut offset = 0;
        loop {
            let trimmed = rest.trim_start();
            offset += rest.len() - trimmed.len();
            if trimmed.is_empty() {
                break;
            }
            let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
            let token = &trimmed[..end];
            let key_col = text[..offset].chars().count() + 1;
            if first_col == 0 {
                first_col = key_col;
            }
            let Some((key, value)) = token.split_once('=') else {
                return Err(CaseError {
                    line,
                    col: key_col,
                    kind: CaseErrorKind::Syntax(format!("expected key=value, found '{token}'")),
                });
            };
            if key.is_empty() || value.is_empty() {
                return Err(CaseError {
                    line,
                    col: key_col,
                    kind: CaseErrorKind::Syntax(format!("empty key or value in '{token}'")),
                });
            }
            let col = key_col + key.chars().count() + 1;
            if fields.insert(key, Field { value, col, key_col, used: false }).is_some() {
                return Err(CaseError { line, col: key_col, kind: CaseErrorKind::DuplicateKey(key.to_string()) });
            }
            rest = &trimmed[end..];
            offset += end;
        }
        Ok(Row { section, line, col: first_col.max(1), fields })
    }

    fn err(&self, col: usize, kind: CaseErrorKind) -> CaseError {
        CaseError { line: self.line, col, kind }
    }

    fn raw(&mut self, key: &'static str) -> Option<(&'a str, usize)> {
        let f = self.fields.get_mut(key)?;
        f.used = true;
        Some((f.value, f.col))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &'static str) -> Result<Option<(T, usize)>, CaseError>
    where
        T::Err: fmt::Display,
    {
        let Some((value, col)) = self.raw(key) else { return Ok(None) };
        match value.parse::<T>() {
            Ok(v) => Ok(Some((v, col))),
            Err(e) => Err(self.err(col, CaseErrorKind::BadValue { key: key.to_string(), message: e.to_string() })),
        }
    }

    fn f64_opt(&mut self, key: &'static str) -> Result<Option<f64>, CaseError> {
        match self.parse::<f64>(key)? {
            Some((v, col)) if !v.is_finite() => {
                Err(self.err(col, CaseErrorKind::BadValue { key: key.to_string(), message: "not finite".into() }))
            }
            other => Ok(other.map(|(v, _)| v)),
        }
    }

    fn f64_or(&mut self, key: &'static str, default: f64) -> Result<f64, CaseError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn missing(&self, key: &'static str) -> CaseError {
        self.err(self.col, CaseErrorKind::MissingField { section: self.section.name(), key })
    }

    fn f64(&mut self, key: &'static str) -> Result<f64, CaseError> {
        self.f64_opt(key)?.ok_or_else(|| self.missing(key))
    }

    fn usize(&mut self, key: &'static str) -> Result<(usize, usize), CaseError> {
        self.parse::<usize>(key)?.ok_or_else(|| self.missing(key))
    }

    fn finish(self) -> Result<(), CaseError> {
        match self.fields.iter().filter(|(_, f)| !f.used).min_by_key(|(_, f)| f.key_col) {
            Some((key, f)) => Err(CaseError {
                line: self.line,
                col: f.key_col,
                kind: CaseErrorKind::UnknownKey { section: self.section.name(), key: key.to_string() },
            }),
            None => Ok(()),
        }
    }
}

struct DeviceRow {
    slot: DeviceSlot,
    line: usize,
    bus_col: usize,
}

/// Parses a case and checks every cross reference. Devices come out sorted
/// by id; buses, branches and events keep file order.
pub fn parse_case(text: &str) -> Result<Case, CaseError> {
    let mut header_seen = false;
    let mut section: Option<Section> = None;
    let mut name = String::new();
    let mut system: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut system_line = 0;
    let mut buses: Vec<(Bus, usize, usize)> = Vec::new();
    let mut branches: Vec<(Branch, usize, usize, usize)> = Vec::new();
    let mut devices: Vec<DeviceRow> = Vec::new();
    let mut plls: Vec<(usize, usize, usize, PllParams)> = Vec::new();
    let mut psss: Vec<(usize, usize, usize, PssParams)> = Vec::new();
    let mut events: Vec<(Event, usize, usize, Option<usize>)> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.chars().count() - content.trim_start().chars().count() + 1;
        if !header_seen {
            if trimmed != HEADER {
                return Err(CaseError { line, col: indent, kind: CaseErrorKind::MissingHeader });
            }
            header_seen = true;
            continue;
        }
        if let Some(inner) = trimmed.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                return Err(CaseError { line, col: indent, kind: CaseErrorKind::Syntax("unterminated section header".into()) });
            };
            let name = name.trim();
            section = Some(Section::parse(name).ok_or(CaseError {
                line,
                col: indent + 1,
                kind: CaseErrorKind::UnknownSection(name.to_string()),
            })?);
            continue;
        }
        let Some(sec) = section else {
            return Err(CaseError { line, col: indent, kind: CaseErrorKind::Syntax("row outside any section".into()) });
        };
        let mut row = Row::tokenize(sec, line, content)?;
        match sec {
            Section::System => {
                if system_line == 0 {
                    system_line = line;
                }
                if let Some((v, _)) = row.raw("name") {
                    name = v.to_string();
                }
                for key in ["base_mva", "base_hz", "omega_ref"] {
                    if let Some(v) = row.f64_opt(key)? {
                        if system.insert(key, v).is_some() {
                            let col = row.fields[key].key_col;
                            return Err(row.err(col, CaseErrorKind::DuplicateKey(key.to_string())));
                        }
                    }
                }
                row.finish()?;
            }
            Section::Bus => {
                let (id, _) = row.usize("id")?;
                let kind = match row.parse::<BusKind>("kind")? {
                    Some((k, _)) => k,
                    None => return Err(row.missing("kind")),
                };
                let mut bus = Bus::new(id, kind);
                bus.v = row.f64_or("v", 1.0)?;
                bus.theta = row.f64_or("theta", 0.0)?.to_radians();
                bus.p_gen = row.f64_or("p_gen", 0.0)?;
                bus.p_load = row.f64_or("p_load", 0.0)?;
                bus.q_load = row.f64_or("q_load", 0.0)?;
                bus.shunt_g = row.f64_or("shunt_g", 0.0)?;
                bus.shunt_b = row.f64_or("shunt_b", 0.0)?;
                let col = row.col;
                row.finish()?;
                buses.push((bus, line, col));
            }
            Section::Branch => {
                let (from, from_col) = row.usize("from")?;
                let (to, to_col) = row.usize("to")?;
                let br = Branch {
                    from,
                    to,
                    r: row.f64_or("r", 0.0)?,
                    x: row.f64("x")?,
                    b: row.f64_or("b", 0.0)?,
                    tap: row.f64_or("tap", 1.0)?,
                };
                row.finish()?;
                branches.push((br, line, from_col, to_col));
            }
            Section::Machine => {
                let (id, bus, bus_col, rating) = device_header(&mut row)?;
                let params = MachineParams {
                    m: row.f64("m")?,
                    d: row.f64("d")?,
                    r_a: row.f64_or("r_a", 0.0)?,
                    x_d: row.f64("x_d")?,
                    x_d_t: row.f64("x_d_t")?,
                    t_d0_t: row.f64("t_d0_t")?,
                    t_r: row.f64("t_r")?,
                    t_m: row.f64("t_m")?,
                    k_r: row.f64("k_r")?,
                    droop: row.f64("droop")?,
                    omega_ref: 1.0,
                    p_m_o: 0.0,
                    v_ref: 1.0,
                };
                row.finish()?;
                let model = DeviceModel::Machine(MachineDevice {
                    params,
                    state: MachineState { omega: 1.0, eq_t: 1.0, ..Default::default() },
                });
                devices.push(DeviceRow { slot: DeviceSlot { id, bus, rating, model }, line, bus_col });
            }
            Section::DualGfm => {
                let (id, bus, bus_col, rating) = device_header(&mut row)?;
                let mode = match row.parse::<GovernorMode>("mode")? {
                    Some((m, _)) => m,
                    None => GovernorMode::Droop,
                };
                let params = DualGfmParams {
                    k: row.f64("k")?,
                    m_t: row.f64("m")?,
                    d_t: row.f64("d")?,
                    t_m_t: row.f64("t_m")?,
                    r_t: row.f64("r")?,
                    k_q: row.f64("k_q")?,
                    t_q: row.f64("t_q")?,
                    k_r_t: row.f64("k_r")?,
                    t_r_t: row.f64("t_r")?,
                    omega_ref: 1.0,
                    p_ref_o: 0.0,
                    mode,
                };
                row.finish()?;
                let model = DeviceModel::DualGfm(DualGfmDevice {
                    params,
                    pll: PllParams::default(),
                    pss: None,
                    state: DualGfmState { e: 1.0, ..Default::default() },
                });
                devices.push(DeviceRow { slot: DeviceSlot { id, bus, rating, model }, line, bus_col });
            }
            Section::Pll => {
                let (dev, col) = row.usize("device")?;
                let pll = PllParams { t_pll: row.f64_or("t_pll", PllParams::default().t_pll)? };
                row.finish()?;
                plls.push((dev, line, col, pll));
            }
            Section::Pss => {
                let (dev, col) = row.usize("device")?;
                let d = PssParams::default();
                let pss = PssParams {
                    gain: row.f64_or("gain", d.gain)?,
                    t_w: row.f64_or("t_w", d.t_w)?,
                    t1: row.f64_or("t1", d.t1)?,
                    t2: row.f64_or("t2", d.t2)?,
                    t3: row.f64_or("t3", d.t3)?,
                    t4: row.f64_or("t4", d.t4)?,
                    v_min: row.f64_or("v_min", d.v_min)?,
                    v_max: row.f64_or("v_max", d.v_max)?,
                };
                row.finish()?;
                psss.push((dev, line, col, pss));
            }
            Section::Event => {
                let t = row.f64("t")?;
                let (kind_name, kind_col) = row.raw("kind").ok_or_else(|| row.missing("kind"))?;
                let (kind, ref_col, bus_ref) = match kind_name {
                    "load_scale" => {
                        let (bus, col) = row.usize("bus")?;
                        (EventKind::LoadScale { bus, factor: row.f64("factor")? }, col, Some(bus))
                    }
                    "fault_apply" => {
                        let (bus, col) = row.usize("bus")?;
                        let g = row.f64_or("g", FAULT_CONDUCTANCE)?;
                        (EventKind::FaultApply { bus, g, b: row.f64_or("b", 0.0)? }, col, Some(bus))
                    }
                    "fault_clear" => {
                        let (bus, col) = row.usize("bus")?;
                        (EventKind::FaultClear { bus }, col, Some(bus))
                    }
                    "device_trip" => {
                        let (id, col) = row.usize("device")?;
                        (EventKind::DeviceTrip { id }, col, None)
                    }
                    other => {
                        return Err(row.err(
                            kind_col,
                            CaseErrorKind::BadValue { key: "kind".into(), message: format!("unknown event kind '{other}'") },
                        ))
                    }
                };
                if t < 0.0 {
                    return Err(row.err(row.col, CaseErrorKind::Invalid(format!("event time {t} is negative"))));
                }
                row.finish()?;
                events.push((Event::new(t, kind), line, ref_col, bus_ref));
            }
        }
    }
    if !header_seen {
        return Err(CaseError { line: 1, col: 1, kind: CaseErrorKind::MissingHeader });
    }

    let at_system = |kind| CaseError { line: system_line.max(1), col: 1, kind };
    let base_mva = *system
        .get("base_mva")
        .ok_or_else(|| at_system(CaseErrorKind::MissingField { section: "system", key: "base_mva" }))?;
    if !(base_mva > 0.0) {
        return Err(at_system(CaseErrorKind::Invalid(format!("base_mva must be positive, got {base_mva}"))));
    }
    let base_hz = system.get("base_hz").copied().unwrap_or(50.0);
    if !(base_hz > 0.0) {
        return Err(at_system(CaseErrorKind::Invalid(format!("base_hz must be positive, got {base_hz}"))));
    }
    let omega_ref = system.get("omega_ref").copied().unwrap_or(1.0);

    let mut network = NetworkCase::new(base_mva, base_hz);
    for (bus, line, col) in &buses {
        if network.buses.iter().any(|b| b.id == bus.id) {
            return Err(CaseError { line: *line, col: *col, kind: CaseErrorKind::Invalid(format!("duplicate bus id {}", bus.id)) });
        }
        network.buses.push(bus.clone());
    }
    let has_bus = |id: usize| network.buses.iter().any(|b| b.id == id);
    for (br, line, from_col, to_col) in &branches {
        for (end, col) in [(br.from, *from_col), (br.to, *to_col)] {
            if !has_bus(end) {
                return Err(CaseError { line: *line, col, kind: CaseErrorKind::DanglingBus(end) });
            }
        }
        if br.r == 0.0 && br.x == 0.0 {
            return Err(CaseError { line: *line, col: *from_col, kind: CaseErrorKind::Invalid("zero series impedance".into()) });
        }
        if !(br.tap > 0.0) {
            return Err(CaseError { line: *line, col: *from_col, kind: CaseErrorKind::Invalid("tap must be positive".into()) });
        }
    }
    network.branches = branches.into_iter().map(|b| b.0).collect();

    devices.sort_by_key(|d| d.slot.id);
    for (k, d) in devices.iter().enumerate() {
        let at = |kind| CaseError { line: d.line, col: d.bus_col, kind };
        if !has_bus(d.slot.bus) {
            return Err(at(CaseErrorKind::DanglingBus(d.slot.bus)));
        }
        if k > 0 && devices[k - 1].slot.id == d.slot.id {
            return Err(at(CaseErrorKind::Invalid(format!("duplicate device id {}", d.slot.id))));
        }
        if devices[..k].iter().any(|o| o.slot.bus == d.slot.bus) {
            return Err(at(CaseErrorKind::Invalid(format!("bus {} already has a device", d.slot.bus))));
        }
        if !(d.slot.rating > 0.0) {
            return Err(at(CaseErrorKind::Invalid(format!("rating must be positive, got {}", d.slot.rating))));
        }
    }
    let mut slots: Vec<DeviceSlot> = devices.iter().map(|d| d.slot).collect();
    for slot in slots.iter_mut() {
        match &mut slot.model {
            DeviceModel::Machine(m) => m.params.omega_ref = omega_ref,
            DeviceModel::DualGfm(g) => g.params.omega_ref = omega_ref,
        }
    }
    let converter = |slots: &[DeviceSlot], id: usize, line: usize, col: usize| {
        slots
            .iter()
            .position(|s| s.id == id && matches!(s.model, DeviceModel::DualGfm(_)))
            .ok_or(CaseError { line, col, kind: CaseErrorKind::UnknownDevice(id) })
    };
    for (dev, line, col, pll) in plls {
        let k = converter(&slots, dev, line, col)?;
        if let DeviceModel::DualGfm(g) = &mut slots[k].model {
            g.pll = pll;
        }
    }
    for (dev, line, col, pss) in psss {
        let k = converter(&slots, dev, line, col)?;
        if let DeviceModel::DualGfm(g) = &mut slots[k].model {
            g.pss = Some(pss);
        }
    }
    for (k, d) in devices.iter().enumerate() {
        let res = match &slots[k].model {
            DeviceModel::Machine(m) => m.params.validate(),
            DeviceModel::DualGfm(g) => g.params.validate().and_then(|_| g.pss.map_or(Ok(()), |p| p.validate())),
        };
        if let DeviceModel::DualGfm(g) = &slots[k].model {
            if !(g.pll.t_pll > 0.0) {
                return Err(CaseError {
                    line: d.line,
                    col: 1,
                    kind: CaseErrorKind::Invalid(format!("device {}: t_pll must be positive", d.slot.id)),
                });
            }
        }
        if let Err(e) = res {
            return Err(CaseError { line: d.line, col: 1, kind: CaseErrorKind::Invalid(format!("device {}: {e}", d.slot.id)) });
        }
    }
    for (ev, line, col, bus_ref) in &events {
        if let Some(bus) = bus_ref {
            if !has_bus(*bus) {
                return Err(CaseError { line: *line, col: *col, kind: CaseErrorKind::DanglingBus(*bus) });
            }
        }
        if let EventKind::DeviceTrip { id } = ev.kind {
            if !slots.iter().any(|s| s.id == id) {
                return Err(CaseError { line: *line, col: *col, kind: CaseErrorKind::UnknownDevice(id) });
            }
        }
    }

    Ok(Case { name, network, omega_ref, devices: slots, events: events.into_iter().map(|e| e.0).collect() })
}

fn device_header(row: &mut Row<'_>) -> Result<(usize, usize, usize, f64), CaseError> {
    let (id, _) = row.usize("id")?;
    let (bus, bus_col) = row.usize("bus")?;
    let rating = row.f64("rating")?;
    Ok((id, bus, bus_col, rating))
}

/// Degree value whose conversion back to radians reproduces `rad` exactly,
/// when one exists within a few ulps of the direct conversion.
fn exact_degrees(rad: f64) -> f64 {
    let d = rad.to_degrees();
    if d.to_radians() == rad {
        return d;
    }
    let (mut lo, mut hi) = (d, d);
    for _ in 0..64 {
        lo = lo.next_down();
        hi = hi.next_up();
        if lo.to_radians() == rad {
            return lo;
        }
        if hi.to_radians() == rad {
            return hi;
        }
    }
    d
}

/// Writes a case in the v1 format. `parse_case` of the output reproduces
/// the parsed form of `case` exactly.
pub fn serialize_case(case: &Case) -> String {
    let mut s = String::new();
    let net = &case.network;
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "[system]");
    if !case.name.is_empty() {
        let _ = writeln!(s, "name={}", case.name);
    }
    let _ = writeln!(s, "base_mva={} base_hz={} omega_ref={}", net.base_mva, net.base_hz, case.omega_ref);
    let _ = writeln!(s, "\n[bus]");
    for b in &net.buses {
        let _ = writeln!(
            s,
            "id={} kind={} v={} theta={} p_gen={} p_load={} q_load={} shunt_g={} shunt_b={}",
            b.id,
            b.kind,
            b.v,
            exact_degrees(b.theta),
            b.p_gen,
            b.p_load,
            b.q_load,
            b.shunt_g,
            b.shunt_b
        );
    }
    let _ = writeln!(s, "\n[branch]");
    for br in &net.branches {
        let _ = writeln!(s, "from={} to={} r={} x={} b={} tap={}", br.from, br.to, br.r, br.x, br.b, br.tap);
    }
    let machines: Vec<_> = case.devices.iter().filter(|d| matches!(d.model, DeviceModel::Machine(_))).collect();
    if !machines.is_empty() {
        let _ = writeln!(s, "\n[machine]");
        for d in machines {
            if let DeviceModel::Machine(m) = &d.model {
                let p = &m.params;
                let _ = writeln!(
                    s,
                    "id={} bus={} rating={} m={} d={} r_a={} x_d={} x_d_t={} t_d0_t={} t_r={} t_m={} k_r={} droop={}",
                    d.id, d.bus, d.rating, p.m, p.d, p.r_a, p.x_d, p.x_d_t, p.t_d0_t, p.t_r, p.t_m, p.k_r, p.droop
                );
            }
        }
    }
    let converters: Vec<_> = case
        .devices
        .iter()
        .filter_map(|d| match &d.model {
            DeviceModel::DualGfm(g) => Some((d, g)),
            DeviceModel::Machine(_) => None,
        })
        .collect();
    if !converters.is_empty() {
        let _ = writeln!(s, "\n[dualgfm]");
        for (d, g) in &converters {
            let p = &g.params;
            let _ = writeln!(
                s,
                "id={} bus={} rating={} k={} m={} d={} t_m={} r={} k_q={} t_q={} k_r={} t_r={} mode={}",
                d.id,
                d.bus,
                d.rating,
                p.k,
                p.m_t,
                p.d_t,
                p.t_m_t,
                p.r_t,
                p.k_q,
                p.t_q,
                p.k_r_t,
                p.t_r_t,
                p.mode.as_str()
            );
        }
        let _ = writeln!(s, "\n[pll]");
        for (d, g) in &converters {
            let _ = writeln!(s, "device={} t_pll={}", d.id, g.pll.t_pll);
        }
        if converters.iter().any(|(_, g)| g.pss.is_some()) {
            let _ = writeln!(s, "\n[pss]");
            let _ = writeln!(s, "# repository-chosen stabilizer tuning, not a published value");
            for (d, g) in &converters {
                if let Some(p) = &g.pss {
                    let _ = writeln!(
                        s,
                        "device={} gain={} t_w={} t1={} t2={} t3={} t4={} v_min={} v_max={}",
                        d.id, p.gain, p.t_w, p.t1, p.t2, p.t3, p.t4, p.v_min, p.v_max
                    );
                }
            }
        }
    }
    if !case.events.is_empty() {
        let _ = writeln!(s, "\n[event]");
        for ev in &case.events {
            let _ = match ev.kind {
                EventKind::LoadScale { bus, factor } => {
                    writeln!(s, "t={} kind=load_scale bus={bus} factor={factor}", ev.t)
                }
                EventKind::FaultApply { bus, g, b } => writeln!(s, "t={} kind=fault_apply bus={bus} g={g} b={b}", ev.t),
                EventKind::FaultClear { bus } => writeln!(s, "t={} kind=fault_clear bus={bus}", ev.t),
                EventKind::DeviceTrip { id } => writeln!(s, "t={} kind=device_trip device={id}", ev.t),
            };
        }
    }
    s
}
