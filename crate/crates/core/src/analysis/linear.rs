use nalgebra::DMatrix;
use num_complex::Complex64;

use super::AnalysisError;
use crate::engine::{DynamicSystem, SystemState};

/// Relative perturbation of the central differences.
pub const LINEARIZE_STEP: f64 = 1e-6;

/// Partial Jacobians of the DAE at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DaeJacobians {
    pub f_x: DMatrix<f64>,
    pub f_y: DMatrix<f64>,
    pub g_x: DMatrix<f64>,
    pub g_y: DMatrix<f64>,
}

/// Central-difference Jacobians of `(f, g)` with step `LINEARIZE_STEP * max(1, |z|)`.
pub fn dae_jacobians(sys: &DynamicSystem, state: &SystemState) -> Result<DaeJacobians, AnalysisError> {
    let (n_x, n_y) = (sys.n_x(), sys.n_y());
    let n = n_x + n_y;
    let mut z: Vec<f64> = state.x.iter().chain(&state.y).copied().collect();
    let mut jac = DMatrix::zeros(n, n);
    let (mut rp, mut rm) = (vec![0.0; n], vec![0.0; n]);
    let eval = |z: &[f64], out: &mut [f64]| {
        let (f, g) = out.split_at_mut(n_x);
        sys.residuals(&z[..n_x], &z[n_x..], f, g)
    };
    for j in 0..n {
        let z0 = z[j];
        let h = LINEARIZE_STEP * z0.abs().max(1.0);
        z[j] = z0 + h;
        eval(&z, &mut rp)?;
        z[j] = z0 - h;
        eval(&z, &mut rm)?;
        z[j] = z0;
        for i in 0..n {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    Ok(DaeJacobians {
        f_x: jac.view((0, 0), (n_x, n_x)).into_owned(),
        f_y: jac.view((0, n_x), (n_x, n_y)).into_owned(),
        g_x: jac.view((n_x, 0), (n_y, n_x)).into_owned(),
        g_y: jac.view((n_x, n_x), (n_y, n_y)).into_owned(),
    })
}

/// State matrix `A = f_x - f_y g_y^-1 g_x` with the algebraic variables eliminated.
pub fn linearize(sys: &DynamicSystem, state: &SystemState) -> Result<DMatrix<f64>, AnalysisError> {
    let j = dae_jacobians(sys, state)?;
    reduce(&j)
}

pub fn reduce(j: &DaeJacobians) -> Result<DMatrix<f64>, AnalysisError> {
    let lu = j.g_y.clone().lu();
    let sol = lu.solve(&j.g_x).ok_or(AnalysisError::SingularAlgebraic)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::SingularAlgebraic);
    }
    Ok(&j.f_x - &j.f_y * sol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by descending real part, then descending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// `-Re/|lambda|` per eigenvalue (1 or -1 for real eigenvalues, NaN at zero).
    pub damping: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_oscillatory(lambda: Complex64) -> bool {
        lambda.im.abs() > 1e-9 * lambda.norm().max(1.0)
    }

    /// Least-damped oscillatory pair member with positive imaginary part.
    pub fn dominant_oscillatory(&self) -> Option<(Complex64, f64)> {
        self.eigenvalues
            .iter()
            .zip(&self.damping)
            .filter(|(l, _)| Self::is_oscillatory(**l) && l.im > 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(l, z)| (*l, *z))
    }

    pub fn frequency_hz(lambda: Complex64) -> f64 {
        lambda.im.abs() / (2.0 * std::f64::consts::PI)
    }

    /// CSV with header `re,im,freq_hz,damping`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,freq_hz,damping\n");
        for (l, z) in self.eigenvalues.iter().zip(&self.damping) {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                l.re,
                l.im,
                Self::frequency_hz(*l),
                z
            ));
        }
        out
    }
}

/// Full spectrum of a square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Spectrum, AnalysisError> {
    if a.nrows() != a.ncols() {
        return Err(AnalysisError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    if a.is_empty() {
        return Ok(Spectrum { eigenvalues: Vec::new(), damping: Vec::new() });
    }
    let mut eig = general_eigenvalues(a).ok_or(AnalysisError::EigenNonConvergence)?;
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let damping = eig.iter().map(|l| -l.re / l.norm()).collect();
    Ok(Spectrum { eigenvalues: eig, damping })
}

fn general_eigenvalues(a: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    let m = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let eig = m.eigenvalues().ok()?;
    Some(eig.into_iter().map(|l| Complex64::new(l.re, l.im)).collect())
}
