//! Static grid model: buses, branches, nodal admittance matrix and a
//! Newton-Raphson power flow used to initialize dynamic runs.
//!
//! Everything here is on the system MVA base. Angles are radians.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("branch {branch} references unknown bus {bus}")]
    DanglingBranch { branch: usize, bus: usize },
    #[error("branch {from}-{to} has zero series impedance")]
    SingularBranch { from: usize, to: usize },
    #[error("branch {from}-{to} has non-positive tap ratio {tap}")]
    BadTap { from: usize, to: usize, tap: f64 },
    #[error("unknown bus {0}")]
    UnknownBus(usize),
    #[error("duplicate bus id {0}")]
    DuplicateBus(usize),
    #[error("expected exactly one slack bus, found {0}")]
    SlackCount(usize),
    #[error("network is not connected: bus {0} is unreachable from the slack")]
    Disconnected(usize),
    #[error("injection vector has length {got}, expected {expected}")]
    InjectionLength { expected: usize, got: usize },
    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:e})")]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error("power flow Jacobian is singular at iteration {0}")]
    SingularJacobian(usize),
}

/// Power-flow role of a bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

impl BusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BusKind::Slack => "slack",
            BusKind::Pv => "pv",
            BusKind::Pq => "pq",
        }
    }
}

impl fmt::Display for BusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BusKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "slack" | "ref" => Ok(BusKind::Slack),
            "pv" => Ok(BusKind::Pv),
            "pq" => Ok(BusKind::Pq),
            other => Err(format!("unknown bus kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    /// Voltage magnitude: set point for slack/PV buses, initial guess otherwise.
    pub v: f64,
    /// Voltage angle (rad): reference for the slack bus.
    pub theta: f64,
    /// Scheduled active generation (pu). Ignored at the slack bus.
    pub p_gen: f64,
    pub p_load: f64,
    pub q_load: f64,
    pub shunt_g: f64,
    pub shunt_b: f64,
}

impl Bus {
    pub fn new(id: usize, kind: BusKind) -> Self {
        Bus {
            id,
            kind,
            v: 1.0,
            theta: 0.0,
            p_gen: 0.0,
            p_load: 0.0,
            q_load: 0.0,
            shunt_g: 0.0,
            shunt_b: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, split evenly between both ends.
    pub b: f64,
    /// Off-nominal turns ratio on the `from` side.
    pub tap: f64,
}

impl Branch {
    pub fn line(from: usize, to: usize, r: f64, x: f64, b: f64) -> Self {
        Branch { from, to, r, x, b, tap: 1.0 }
    }

    pub fn series_admittance(&self) -> Complex64 {
        Complex64::new(1.0, 0.0) / Complex64::new(self.r, self.x)
    }
}

/// The static grid description.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub base_hz: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
}

impl NetworkCase {
    pub fn new(base_mva: f64, base_hz: f64) -> Self {
        NetworkCase { base_mva, base_hz, buses: Vec::new(), branches: Vec::new() }
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    /// Position of bus `id` in `buses`.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn index_of(&self, id: usize) -> Result<usize, NetworkError> {
        self.bus_index(id).ok_or(NetworkError::UnknownBus(id))
    }

    /// Checks ids, branch endpoints and impedances. Does not check slack count
    /// or connectivity; `validate_for_powerflow` does.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let mut seen = BTreeMap::new();
        for bus in &self.buses {
            if seen.insert(bus.id, ()).is_some() {
                return Err(NetworkError::DuplicateBus(bus.id));
            }
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !seen.contains_key(&end) {
                    return Err(NetworkError::DanglingBranch { branch: k, bus: end });
                }
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(NetworkError::SingularBranch { from: br.from, to: br.to });
            }
            if !(br.tap > 0.0) {
                return Err(NetworkError::BadTap { from: br.from, to: br.to, tap: br.tap });
            }
        }
        Ok(())
    }

    pub fn validate_for_powerflow(&self) -> Result<usize, NetworkError> {
        self.validate()?;
        let slacks: Vec<usize> = (0..self.buses.len())
            .filter(|&i| self.buses[i].kind == BusKind::Slack)
            .collect();
        if slacks.len() != 1 {
            return Err(NetworkError::SlackCount(slacks.len()));
        }
        let slack = slacks[0];

        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let (i, j) = (self.index_of(br.from)?, self.index_of(br.to)?);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([slack]);
        seen[slack] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(NetworkError::Disconnected(self.buses[i].id));
        }
        Ok(slack)
    }

    /// Net scheduled injection (generation minus load) per bus, in bus order.
    /// Reactive generation is unknown to the schedule, so only loads enter `q`.
    pub fn scheduled_injections(&self) -> Vec<Complex64> {
        self.buses
            .iter()
            .map(|b| Complex64::new(b.p_gen - b.p_load, -b.q_load))
            .collect()
    }
}

/// Sparse nodal admittance matrix with in-place diagonal edits.
///
/// Diagonal edits are kept as a list of adjustments on top of the assembled
/// diagonal so that undoing an edit restores the original entry bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    bus_ids: Vec<usize>,
    /// Off-diagonal entries per row, sorted by column.
    off_diag: Vec<Vec<(usize, Complex64)>>,
    base_diag: Vec<Complex64>,
    diag: Vec<Complex64>,
    adjustments: Vec<(usize, Complex64)>,
}

impl AdmittanceMatrix {
    pub fn order(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn bus_ids(&self) -> &[usize] {
        &self.bus_ids
    }

    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.bus_ids.iter().position(|&b| b == id)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i == j {
            return self.diag[i];
        }
        match self.off_diag[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(k) => self.off_diag[i][k].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn off_diagonal_row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.off_diag[i]
    }

    /// Number of stored off-diagonal entries.
    pub fn off_diagonal_nnz(&self) -> usize {
        self.off_diag.iter().map(Vec::len).sum()
    }

    /// Number of structurally nonzero entries (all diagonals plus off-diagonals).
    pub fn nnz(&self) -> usize {
        self.order() + self.off_diagonal_nnz()
    }

    /// `Y * v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.order())
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                for &(j, y) in &self.off_diag[i] {
                    acc += y * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.order();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Returns a copy with `dg + j db` added to the diagonal of bus `bus`.
    pub fn apply_admittance_delta(
        &self,
        bus: usize,
        dg: f64,
        db: f64,
    ) -> Result<AdmittanceMatrix, NetworkError> {
        let mut out = self.clone();
        out.apply_delta_in_place(bus, Complex64::new(dg, db))?;
        Ok(out)
    }

    /// In-place variant of [`apply_admittance_delta`](Self::apply_admittance_delta).
    /// A delta that exactly negates an earlier one at the same bus cancels it.
    pub fn apply_delta_in_place(&mut self, bus: usize, delta: Complex64) -> Result<(), NetworkError> {
        let i = self.bus_index(bus).ok_or(NetworkError::UnknownBus(bus))?;
        if delta == Complex64::new(0.0, 0.0) {
            return Ok(());
        }
        let undo = self
            .adjustments
            .iter()
            .rposition(|&(k, d)| k == i && d == -delta);
        match undo {
            Some(pos) => {
                self.adjustments.remove(pos);
            }
            None => self.adjustments.push((i, delta)),
        }
        let mut value = self.base_diag[i];
        for &(k, d) in &self.adjustments {
            if k == i {
                value += d;
            }
        }
        self.diag[i] = value;
        Ok(())
    }
}

/// Builds the nodal admittance matrix of `case` using the standard pi model
/// with the tap on the `from` side.
pub fn assemble_ybus(case: &NetworkCase) -> Result<AdmittanceMatrix, NetworkError> {
    case.validate()?;
    let n = case.n_buses();
    let mut diag: Vec<Complex64> = case
        .buses
        .iter()
        .map(|b| Complex64::new(b.shunt_g, b.shunt_b))
        .collect();
    let mut off: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();

    for br in &case.branches {
        let i = case.index_of(br.from)?;
        let j = case.index_of(br.to)?;
        let y = br.series_admittance();
        let charging = Complex64::new(0.0, br.b / 2.0);
        let t = br.tap;
        diag[i] += (y + charging) / (t * t);
        diag[j] += y + charging;
        let m = -y / t;
        *off.entry((i, j)).or_default() += m;
        *off.entry((j, i)).or_default() += m;
    }

    let mut off_diag = vec![Vec::new(); n];
    for ((i, j), y) in off {
        off_diag[i].push((j, y));
    }
    Ok(AdmittanceMatrix {
        bus_ids: case.buses.iter().map(|b| b.id).collect(),
        off_diag,
        base_diag: diag.clone(),
        diag,
        adjustments: Vec::new(),
    })
}

/// Complex power `S_i = v_i conj((Y v)_i)` drawn from each bus into the network.
pub fn bus_injections(y: &AdmittanceMatrix, v: &[f64], theta: &[f64]) -> Vec<Complex64> {
    let phasors: Vec<Complex64> = v
        .iter()
        .zip(theta)
        .map(|(&m, &a)| Complex64::from_polar(m, a))
        .collect();
    let currents = y.mul_vec(&phasors);
    phasors
        .iter()
        .zip(currents)
        .map(|(vi, ii)| vi * ii.conj())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlowOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions { max_iterations: 20, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    /// Newton corrections applied.
    pub iterations: usize,
    /// Final mismatch infinity norm over the specified quantities.
    pub mismatch: f64,
    /// Complex power injected into the network at each bus.
    pub injections: Vec<Complex64>,
}

pub fn solve_powerflow(
    case: &NetworkCase,
    injections: &[Complex64],
) -> Result<PowerFlowSolution, NetworkError> {
    solve_powerflow_with(case, injections, PowerFlowOptions::default())
}

/// Polar Newton-Raphson from a flat start. Slack and PV magnitudes are pinned
/// to the bus set points and the slack angle to the bus reference angle.
pub fn solve_powerflow_with(
    case: &NetworkCase,
    injections: &[Complex64],
    opts: PowerFlowOptions,
) -> Result<PowerFlowSolution, NetworkError> {
    let n = case.n_buses();
    if injections.len() != n {
        return Err(NetworkError::InjectionLength { expected: n, got: injections.len() });
    }
    case.validate_for_powerflow()?;
    let ybus = assemble_ybus(case)?;

    let mut v = vec![1.0; n];
    let mut theta = vec![0.0; n];
    for (i, bus) in case.buses.iter().enumerate() {
        match bus.kind {
            BusKind::Slack => {
                v[i] = bus.v;
                theta[i] = bus.theta;
            }
            BusKind::Pv => v[i] = bus.v,
            BusKind::Pq => {}
        }
    }

    // unknown ordering: angles of non-slack buses, then magnitudes of PQ buses
    let ang_idx: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind != BusKind::Slack).collect();
    let mag_idx: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind == BusKind::Pq).collect();
    let dim = ang_idx.len() + mag_idx.len();

    let mismatch_of = |v: &[f64], theta: &[f64]| -> (Vec<f64>, Vec<Complex64>) {
        let s = bus_injections(&ybus, v, theta);
        let mut r = Vec::with_capacity(dim);
        for &i in &ang_idx {
            r.push(s[i].re - injections[i].re);
        }
        for &i in &mag_idx {
            r.push(s[i].im - injections[i].im);
        }
        (r, s)
    };

    let mut iterations = 0;
    loop {
        let (r, s) = mismatch_of(&v, &theta);
        let norm = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if norm < opts.tolerance {
            return Ok(PowerFlowSolution { v, theta, iterations, mismatch: norm, injections: s });
        }
        if iterations >= opts.max_iterations || !norm.is_finite() {
            return Err(NetworkError::NonConvergence { iterations, mismatch: norm });
        }

        let jac = powerflow_jacobian(&ybus, &v, &theta, &s, &ang_idx, &mag_idx);
        let rhs = DVector::from_iterator(dim, r.iter().map(|x| -x));
        let dx = jac
            .lu()
            .solve(&rhs)
            .ok_or(NetworkError::SingularJacobian(iterations))?;
        for (k, &i) in ang_idx.iter().enumerate() {
            theta[i] += dx[k];
        }
        for (k, &i) in mag_idx.iter().enumerate() {
            v[i] += dx[ang_idx.len() + k];
        }
        iterations += 1;
    }
}

fn powerflow_jacobian(
    ybus: &AdmittanceMatrix,
    v: &[f64],
    theta: &[f64],
    s: &[Complex64],
    ang_idx: &[usize],
    mag_idx: &[usize],
) -> DMatrix<f64> {
    let n = v.len();
    let na = ang_idx.len();
    let dim = na + mag_idx.len();
    // dP/dtheta, dP/dv, dQ/dtheta, dQ/dv as dense n x n blocks
    let mut dp_dt = DMatrix::<f64>::zeros(n, n);
    let mut dp_dv = DMatrix::<f64>::zeros(n, n);
    let mut dq_dt = DMatrix::<f64>::zeros(n, n);
    let mut dq_dv = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let yii = ybus.get(i, i);
        for &(j, y) in ybus.off_diagonal_row(i) {
            let a = theta[i] - theta[j];
            let (sin, cos) = a.sin_cos();
            let (g, b) = (y.re, y.im);
            dp_dt[(i, j)] = v[i] * v[j] * (g * sin - b * cos);
            dq_dt[(i, j)] = -v[i] * v[j] * (g * cos + b * sin);
            dp_dv[(i, j)] = v[i] * (g * cos + b * sin);
            dq_dv[(i, j)] = v[i] * (g * sin - b * cos);
        }
        dp_dt[(i, i)] = -s[i].im - yii.im * v[i] * v[i];
        dq_dt[(i, i)] = s[i].re - yii.re * v[i] * v[i];
        dp_dv[(i, i)] = s[i].re / v[i] + yii.re * v[i];
        dq_dv[(i, i)] = s[i].im / v[i] - yii.im * v[i];
    }
    DMatrix::from_fn(dim, dim, |r, c| {
        let row_p = r < na;
        let bi = if row_p { ang_idx[r] } else { mag_idx[r - na] };
        let col_t = c < na;
        let bj = if col_t { ang_idx[c] } else { mag_idx[c - na] };
        match (row_p, col_t) {
            (true, true) => dp_dt[(bi, bj)],
            (true, false) => dp_dv[(bi, bj)],
            (false, true) => dq_dt[(bi, bj)],
            (false, false) => dq_dv[(bi, bj)],
        }
    })
}
