use nalgebra::{DMatrix, DVector};

use super::EngineError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    /// Residual infinity norm before each correction and after the last.
    pub history: Vec<f64>,
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Forward-difference Jacobian of `fun` at `z` with step `h * max(1, |z_j|)`.
/// `f0` must hold `fun(z)`.
pub fn fd_jacobian<F>(mut fun: F, z: &[f64], f0: &[f64], h: f64) -> Result<DMatrix<f64>, EngineError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), EngineError>,
{
    let m = f0.len();
    let mut jac = DMatrix::zeros(m, z.len());
    let mut zp = z.to_vec();
    let mut fp = vec![0.0; m];
    for j in 0..z.len() {
        let step = h * z[j].abs().max(1.0);
        zp[j] = z[j] + step;
        let actual = zp[j] - z[j];
        fun(&zp, &mut fp)?;
        for i in 0..m {
            jac[(i, j)] = (fp[i] - f0[i]) / actual;
        }
        zp[j] = z[j];
    }
    Ok(jac)
}

pub(crate) enum LinearSolver {
    Lu,
    /// Least-squares solve tolerant of rank deficiency.
    Svd,
}

/// Minimum-norm least-squares solution, dropping singular values below
/// `1e-13` of the largest.
fn pseudo_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let m = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = m.thin_svd().ok()?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let smax = (0..s.nrows()).map(|k| s[k]).fold(0.0, f64::max);
    let mut x = DVector::zeros(a.ncols());
    for k in 0..s.nrows() {
        if s[k] <= smax * 1e-13 {
            continue;
        }
        let c = (0..a.nrows()).map(|i| u[(i, k)] * b[i]).sum::<f64>() / s[k];
        for j in 0..a.ncols() {
            x[j] += c * v[(j, k)];
        }
    }
    Some(x)
}

pub(crate) fn linear_solve(
    jac: DMatrix<f64>,
    rhs: &[f64],
    solver: &LinearSolver,
) -> Result<DVector<f64>, EngineError> {
    let b = DVector::from_column_slice(rhs);
    let out = match solver {
        LinearSolver::Lu => jac.lu().solve(&b),
        LinearSolver::Svd => pseudo_solve(&jac, &b),
    };
    match out {
        Some(dz) if dz.iter().all(|v| v.is_finite()) => Ok(dz),
        _ => Err(EngineError::Singular),
    }
}
