use super::newton::{fd_jacobian, inf_norm, linear_solve, LinearSolver, NewtonReport};
use super::{DynamicSystem, EngineError, SystemState};

/// When the Newton Jacobian of a step is rebuilt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianRefresh {
    #[default]
    EveryIteration,
    /// Chord iteration with the Jacobian from the first iterate of each step.
    EveryStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_stop: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub jac_refresh: JacobianRefresh,
    pub max_halvings: usize,
    pub fd_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.005,
            t_stop: 20.0,
            newton_tol: 1e-8,
            max_newton: 15,
            jac_refresh: JacobianRefresh::EveryIteration,
            max_halvings: 4,
            fd_step: 1e-7,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(EngineError::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_stop >= self.dt) || !self.t_stop.is_finite() {
            return Err(EngineError::Invalid(format!("t_stop must be at least dt, got {}", self.t_stop)));
        }
        if !(self.newton_tol > 0.0) || self.max_newton == 0 {
            return Err(EngineError::Invalid("newton_tol and max_newton must be positive".into()));
        }
        Ok(())
    }
}

/// A semi-explicit DAE `dx/dt = f(x, y)`, `0 = g(x, y)`.
pub trait Dae {
    fn n_x(&self) -> usize;
    fn n_y(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64], f: &mut [f64], g: &mut [f64]) -> Result<(), EngineError>;

    /// Maps a converged algebraic vector onto its canonical representation.
    /// Returns true if `y` changed, in which case the step is re-solved from it.
    fn normalize(&self, _y: &mut [f64], _y_prev: &[f64]) -> bool {
        false
    }
}

impl Dae for DynamicSystem {
    fn n_x(&self) -> usize {
        DynamicSystem::n_x(self)
    }

    fn n_y(&self) -> usize {
        DynamicSystem::n_y(self)
    }

    fn eval(&self, x: &[f64], y: &[f64], f: &mut [f64], g: &mut [f64]) -> Result<(), EngineError> {
        self.residuals(x, y, f, g)
    }

    fn normalize(&self, y: &mut [f64], y_prev: &[f64]) -> bool {
        self.normalize_voltages(y, y_prev)
    }
}

/// One trapezoidal step of length `dt` solved simultaneously for `(x', y')`.
/// Retries with halved sub-steps up to `cfg.max_halvings` times.
pub fn trapezoidal_step<S: Dae + ?Sized>(
    sys: &S,
    state: &SystemState,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<(SystemState, NewtonReport), EngineError> {
    step_with_retry(sys, state, dt, cfg, 0)
}

fn step_with_retry<S: Dae + ?Sized>(
    sys: &S,
    state: &SystemState,
    dt: f64,
    cfg: &SolverConfig,
    depth: usize,
) -> Result<(SystemState, NewtonReport), EngineError> {
    match single_step(sys, state, dt, cfg) {
        Ok(out) => Ok(out),
        Err(residual) => {
            if depth >= cfg.max_halvings {
                return Err(EngineError::Step { t: state.t, halvings: depth, residual });
            }
            let (mid, r1) = step_with_retry(sys, state, dt / 2.0, cfg, depth + 1)?;
            let (mut end, mut r2) = step_with_retry(sys, &mid, dt / 2.0, cfg, depth + 1)?;
            end.t = state.t + dt;
            r2.iterations += r1.iterations;
            Ok((end, r2))
        }
    }
}

/// Err carries the last residual norm.
fn single_step<S: Dae + ?Sized>(
    sys: &S,
    state: &SystemState,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<(SystemState, NewtonReport), f64> {
    let (n_x, n_y) = (sys.n_x(), sys.n_y());
    let mut f0 = vec![0.0; n_x];
    let mut g0 = vec![0.0; n_y];
    sys.eval(&state.x, &state.y, &mut f0, &mut g0).map_err(|_| f64::NAN)?;

    let h = dt / 2.0;
    let x_old = &state.x;
    let mut fwork = vec![0.0; n_x];
    let mut residual = |z: &[f64], out: &mut [f64]| -> Result<(), EngineError> {
        let (x, y) = z.split_at(n_x);
        let (rf, rg) = out.split_at_mut(n_x);
        sys.eval(x, y, &mut fwork, rg)?;
        for i in 0..n_x {
            rf[i] = x[i] - x_old[i] - h * (fwork[i] + f0[i]);
        }
        Ok(())
    };

    let mut z: Vec<f64> = state.x.iter().chain(&state.y).copied().collect();
    let mut r = vec![0.0; n_x + n_y];
    residual(&z, &mut r).map_err(|_| f64::NAN)?;
    let mut report = NewtonReport { history: vec![inf_norm(&r)], ..Default::default() };
    let mut lu = None;
    let mut normalized = false;
    loop {
        let norm = *report.history.last().unwrap_or(&f64::NAN);
        if norm < cfg.newton_tol {
            if normalized || !sys.normalize(&mut z[n_x..], &state.y) {
                break;
            }
            normalized = true;
            lu = None;
            residual(&z, &mut r).map_err(|_| norm)?;
            report.history.push(inf_norm(&r));
            continue;
        }
        if report.iterations >= cfg.max_newton || !norm.is_finite() {
            return Err(norm);
        }
        let dz = match cfg.jac_refresh {
            JacobianRefresh::EveryIteration => {
                let jac = fd_jacobian(&mut residual, &z, &r, cfg.fd_step).map_err(|_| norm)?;
                linear_solve(jac, &r, &LinearSolver::Lu).map_err(|_| norm)?
            }
            JacobianRefresh::EveryStep => {
                if lu.is_none() {
                    let jac = fd_jacobian(&mut residual, &z, &r, cfg.fd_step).map_err(|_| norm)?;
                    lu = Some(jac.lu());
                }
                let b = nalgebra::DVector::from_column_slice(&r);
                lu.as_ref().and_then(|lu| lu.solve(&b)).ok_or(norm)?
            }
        };
        for (zi, di) in z.iter_mut().zip(dz.iter()) {
            *zi -= di;
        }
        report.iterations += 1;
        if residual(&z, &mut r).is_err() {
            return Err(norm);
        }
        report.history.push(inf_norm(&r));
    }
    report.residual = *report.history.last().unwrap_or(&0.0);
    let y = z.split_off(n_x);
    Ok((SystemState { t: state.t + dt, x: z, y }, report))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// `dx/dt = lambda x` with a trivial algebraic pair `y = x`.
    pub(crate) struct Scalar {
        pub lambda: f64,
    }

    impl Dae for Scalar {
        fn n_x(&self) -> usize {
            1
        }
        fn n_y(&self) -> usize {
            1
        }
        fn eval(&self, x: &[f64], y: &[f64], f: &mut [f64], g: &mut [f64]) -> Result<(), EngineError> {
            f[0] = self.lambda * x[0];
            g[0] = y[0] - x[0];
            Ok(())
        }
    }

    fn tight() -> SolverConfig {
        SolverConfig { newton_tol: 1e-14, ..Default::default() }
    }

    #[test]
    fn one_step_matches_trapezoid_closed_form() {
        let (lambda, dt) = (-3.0, 0.1);
        let s = SystemState { t: 0.0, x: vec![2.0], y: vec![2.0] };
        let (out, _) = trapezoidal_step(&Scalar { lambda }, &s, dt, &tight()).unwrap();
        let exact = 2.0 * (1.0 + lambda * dt / 2.0) / (1.0 - lambda * dt / 2.0);
        assert!((out.x[0] - exact).abs() < 1e-13);
        assert!((out.y[0] - out.x[0]).abs() < 1e-13);
        assert_eq!(out.t, dt);
    }

    fn global_error(dt: f64) -> f64 {
        let sys = Scalar { lambda: -1.0 };
        let mut s = SystemState { t: 0.0, x: vec![1.0], y: vec![1.0] };
        let n = (1.0 / dt).round() as usize;
        for _ in 0..n {
            s = trapezoidal_step(&sys, &s, dt, &tight()).unwrap().0;
        }
        (s.x[0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn second_order_convergence() {
        let ratio = global_error(0.01) / global_error(0.005);
        assert!((3.8..=4.2).contains(&ratio), "{ratio}");
    }

    #[test]
    fn halving_recovers_from_hard_steps() {
        struct Picky;
        impl Dae for Picky {
            fn n_x(&self) -> usize {
                1
            }
            fn n_y(&self) -> usize {
                0
            }
            fn eval(&self, x: &[f64], _: &[f64], f: &mut [f64], _: &mut [f64]) -> Result<(), EngineError> {
                // cubic decay; Newton needs more than 3 iterations at dt = 0.5
                f[0] = -x[0].powi(3);
                Ok(())
            }
        }
        let cfg = SolverConfig { max_newton: 3, ..Default::default() };
        let s = SystemState { t: 0.0, x: vec![1.0], y: vec![] };
        let (out, _) = trapezoidal_step(&Picky, &s, 0.5, &cfg).unwrap();
        assert!(out.x[0] > 0.6 && out.x[0] < 0.8, "{}", out.x[0]);
        let none = SolverConfig { max_halvings: 0, ..cfg };
        assert!(matches!(trapezoidal_step(&Picky, &s, 0.5, &none), Err(EngineError::Step { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { dt: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { dt: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { t_stop: 0.001, ..Default::default() }.validate().is_err());
    }
}
