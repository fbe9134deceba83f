//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 convergence failure, 3 case
//! validation error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{compute_metrics, eigenvalues, linearize, AnalysisError, Bands};
use crate::engine::{run_simulation, EngineError, SimResult, SolverConfig};
use crate::network::NetworkError;
use crate::scenario::{builtin_wscc9, paper_events, parse_case, serialize_case, Case, PaperScenario, Wscc9Variant};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_CONVERGENCE: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "dualgfm", version, about = "Phasor-domain simulator for dual grid-forming converters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the power flow and print bus voltages.
    Pf(CommonArgs),
    /// Solve the dynamic equilibrium.
    Eq(CommonArgs),
    /// Time-domain simulation.
    Run(RunArgs),
    /// Eigenvalues of the linearized system at equilibrium.
    Eig(CommonArgs),
    /// Write a case in the text case format.
    Export(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Built-in case name (wscc9-machines, wscc9-dualgfm, wscc9-mixed,
    /// wscc9-irish) or path to a case file.
    #[arg(long)]
    pub case: String,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Repeat for more diagnostics on standard error.
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Fig3,
    Fig4,
    /// Use the events stored in the case.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputSet {
    Devices,
    Buses,
    #[default]
    All,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "none")]
    pub scenario: ScenarioArg,
    /// Simulation horizon (s).
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    pub tstop: f64,
    /// Integration step (s).
    #[arg(long, default_value_t = 0.005, allow_negative_numbers = true)]
    pub dt: f64,
    #[arg(long, value_enum, default_value = "all")]
    pub output: OutputSet,
    /// Also write the key=value metrics report here.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn validation(message: impl Into<String>) -> Self {
        Failure { code: EXIT_VALIDATION, message: message.into() }
    }

    fn convergence(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONVERGENCE, message: message.into() }
    }
}

impl From<NetworkError> for Failure {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::NonConvergence { .. } | NetworkError::SingularJacobian(_) => Failure::convergence(e.to_string()),
            _ => Failure::validation(e.to_string()),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Network(n) => n.into(),
            EngineError::Dimension { .. } | EngineError::Invalid(_) | EngineError::Device { .. } => {
                Failure::validation(e.to_string())
            }
            EngineError::Equilibrium { .. } | EngineError::Step { .. } | EngineError::Event { .. } | EngineError::Singular => {
                Failure::convergence(e.to_string())
            }
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Engine(e) => e.into(),
            other => Failure::convergence(other.to_string()),
        }
    }
}

/// Parses `args` (program name first) and runs the command. Diagnostics go
/// to standard error; the return value is the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            if f.code == EXIT_USAGE {
                eprintln!("\nFor more information, try '--help'.");
            }
            f.code
        }
    }
}

/// Built-in name or case file path.
pub fn load_case(spec: &str) -> Result<Case, String> {
    if let Some(v) = Wscc9Variant::from_name(spec) {
        return Ok(builtin_wscc9(v));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| format!("cannot read case '{spec}': {e}"))?;
    parse_case(&text).map_err(|e| format!("{spec}: {e}"))
}

/// Header plus one row per sample; numbers in `{:.16e}`, LF line endings.
pub fn trajectory_csv(result: &SimResult, set: OutputSet) -> String {
    let devices = set != OutputSet::Buses;
    let buses = set != OutputSet::Devices;
    let mut s = String::from("t");
    if devices {
        for id in &result.device_ids {
            for q in ["e", "rho", "delta", "omega_est", "p", "q"] {
                let _ = write!(s, ",dev{id}.{q}");
            }
        }
    }
    if buses {
        for id in &result.bus_ids {
            let _ = write!(s, ",bus{id}.v,bus{id}.theta");
        }
    }
    s.push('\n');
    for k in 0..result.len() {
        let _ = write!(s, "{:.16e}", result.times[k]);
        if devices {
            for o in &result.outputs[k] {
                for v in [o.e, o.rho, o.delta, o.omega_est, o.p, o.q] {
                    let _ = write!(s, ",{v:.16e}");
                }
            }
        }
        if buses {
            for v in &result.y[k] {
                let _ = write!(s, ",{v:.16e}");
            }
        }
        s.push('\n');
    }
    s
}

/// Writes through a temporary file in the target directory and renames it.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, contents)
            .map_err(|e| Failure { code: EXIT_USAGE, message: format!("cannot write {}: {e}", path.display()) }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| Failure::usage(e.to_string()))
        }
    }
}

fn execute(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Pf(a) => {
            let case = load_case(&a.case).map_err(Failure::validation)?;
            let pf = case.powerflow()?;
            if a.verbose > 0 {
                eprintln!("power flow: {} iterations, mismatch {:e}", pf.iterations, pf.mismatch);
            }
            let mut s = String::from("bus,v,theta,p,q\n");
            for (i, bus) in case.network.buses.iter().enumerate() {
                let inj = pf.injections[i];
                let _ = writeln!(s, "{},{:.16e},{:.16e},{:.16e},{:.16e}", bus.id, pf.v[i], pf.theta[i], inj.re, inj.im);
            }
            emit(&a.out, &s)
        }
        Command::Eq(a) => {
            let case = load_case(&a.case).map_err(Failure::validation)?;
            let init = case.initialize()?;
            let eq = &init.equilibrium;
            if a.verbose > 0 {
                eprintln!("equilibrium: {} Newton iterations", eq.report.iterations);
            }
            let mut s = String::new();
            let _ = writeln!(s, "residual={:e}", eq.residual);
            let _ = writeln!(s, "freq_deviation={:e}", eq.freq_deviation);
            let sys = &init.system;
            for (k, slot) in sys.devices().iter().enumerate() {
                let off = sys.offset(k);
                let n = slot.model.n_states();
                for (j, v) in eq.state.x[off..off + n].iter().enumerate() {
                    let _ = writeln!(s, "dev{}.x{}={:e}", slot.id, j, v);
                }
            }
            for (i, bus) in sys.network.buses.iter().enumerate() {
                let _ = writeln!(s, "bus{}.v={:e}", bus.id, eq.state.y[2 * i]);
                let _ = writeln!(s, "bus{}.theta={:e}", bus.id, eq.state.y[2 * i + 1]);
            }
            emit(&a.out, &s)
        }
        Command::Run(r) => {
            if !(r.dt > 0.0) || !r.dt.is_finite() {
                return Err(Failure::usage(format!("--dt must be positive, got {}", r.dt)));
            }
            if !(r.tstop > 0.0) || !r.tstop.is_finite() {
                return Err(Failure::usage(format!("--tstop must be positive, got {}", r.tstop)));
            }
            if r.tstop < r.dt {
                return Err(Failure::usage("--tstop must be at least --dt"));
            }
            let a = &r.common;
            let case = load_case(&a.case).map_err(Failure::validation)?;
            let events = match r.scenario {
                ScenarioArg::Fig3 => paper_events(PaperScenario::Fig3),
                ScenarioArg::Fig4 => paper_events(PaperScenario::Fig4),
                ScenarioArg::None => case.events.clone(),
            };
            let init = case.initialize()?;
            let cfg = SolverConfig { dt: r.dt, t_stop: r.tstop, ..Default::default() };
            let result = run_simulation(&init.system, &init.equilibrium.state, &events, &cfg)?;
            if a.verbose > 0 {
                eprintln!(
                    "run: {} samples, {} Newton iterations, {} events",
                    result.len(),
                    result.newton_iterations,
                    result.events.len()
                );
            }
            if !result.complete {
                let why = result.failure.clone().unwrap_or_default();
                return Err(Failure::convergence(format!("simulation stopped at t = {}: {why}", result.t_stop())));
            }
            emit(&a.out, &trajectory_csv(&result, r.output))?;
            let metrics = compute_metrics(&result, Bands::default())?;
            if a.verbose > 0 {
                eprint!("{}", metrics.to_report());
            }
            if let Some(path) = &r.metrics {
                emit(&Some(path.clone()), &metrics.to_report())?;
            }
            Ok(())
        }
        Command::Eig(a) => {
            let case = load_case(&a.case).map_err(Failure::validation)?;
            let init = case.initialize()?;
            let spectrum = eigenvalues(&linearize(&init.system, &init.equilibrium.state)?)?;
            if a.verbose > 0 {
                if let Some((l, z)) = spectrum.dominant_oscillatory() {
                    eprintln!("dominant oscillatory mode {:.6}{:+.6}j, damping {:.4}", l.re, l.im, z);
                }
            }
            emit(&a.out, &spectrum.to_csv())
        }
        Command::Export(a) => {
            let case = load_case(&a.case).map_err(Failure::validation)?;
            emit(&a.out, &serialize_case(&case))
        }
    }
}
