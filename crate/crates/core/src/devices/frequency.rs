use num_complex::Complex64;

use super::DeviceError;

/// `eta = rho + j omega`, the logarithmic derivative of the emf phasor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrequency {
    pub rho: f64,
    pub omega: f64,
}

impl ComplexFrequency {
    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.rho, self.omega)
    }
}

/// Returns the complex frequency and the phasor derivative `eta * e exp(j delta)`.
pub fn complex_frequency(
    e: f64,
    delta: f64,
    rho: f64,
    omega: f64,
) -> Result<(ComplexFrequency, Complex64), DeviceError> {
    if !(e > 0.0) {
        return Err(DeviceError::Domain(format!("emf magnitude must be positive, got {e}")));
    }
    let eta = ComplexFrequency { rho, omega };
    Ok((eta, eta.as_complex() * Complex64::from_polar(e, delta)))
}
