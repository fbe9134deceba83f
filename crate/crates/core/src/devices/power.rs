//! Electrical interface of the internal emf `e∠delta` behind an impedance to
//! the bus voltage `v∠theta`. All functions return `(p, q)` injected into the bus.

use super::{finite, DeviceError};

/// Lossy classical machine: emf behind `r_a + j x'_d`.
pub fn machine_power_lossy(
    e: f64,
    v: f64,
    delta: f64,
    theta: f64,
    r_a: f64,
    x_d_t: f64,
) -> Result<(f64, f64), DeviceError> {
    finite(&[e, v, delta, theta, r_a, x_d_t])?;
    let den = r_a * r_a + x_d_t * x_d_t;
    if den == 0.0 {
        return Err(DeviceError::SingularImpedance);
    }
    let (sin, cos) = (delta - theta).sin_cos();
    let a = e * v * cos - v * v;
    let b = e * v * sin;
    Ok(((a * r_a + b * x_d_t) / den, (a * x_d_t - b * r_a) / den))
}

/// Machine with the armature resistance neglected.
pub fn machine_power_lossless(
    e: f64,
    v: f64,
    delta: f64,
    theta: f64,
    x_d_t: f64,
) -> Result<(f64, f64), DeviceError> {
    finite(&[e, v, delta, theta, x_d_t])?;
    if !(x_d_t > 0.0) {
        return Err(DeviceError::Parameter(format!("x'_d must be positive, got {x_d_t}")));
    }
    let (sin, cos) = (delta - theta).sin_cos();
    Ok((e * v * sin / x_d_t, (e * v * cos - v * v) / x_d_t))
}

/// Purely resistive coupling (the terms of the lossy model proportional to `r_a`
/// with the reactance removed).
pub fn dual_power_resistive(
    e: f64,
    v: f64,
    delta: f64,
    theta: f64,
    r_a: f64,
) -> Result<(f64, f64), DeviceError> {
    finite(&[e, v, delta, theta, r_a])?;
    if r_a == 0.0 {
        return Err(DeviceError::Parameter("r_a must be nonzero".into()));
    }
    let (sin, cos) = (delta - theta).sin_cos();
    Ok(((e * v * cos - v * v) / r_a, -(e * v * sin) / r_a))
}

/// Dual-GFM injection with virtual conductance gain `k = -1/r_a > 0`.
///
/// Active power is even in `delta - theta` and driven by the emf magnitude;
/// reactive power is odd and driven by the angle.
pub fn dual_gfm_power(e: f64, v: f64, delta: f64, theta: f64, k: f64) -> Result<(f64, f64), DeviceError> {
    finite(&[e, v, delta, theta, k])?;
    if !(k > 0.0) {
        return Err(DeviceError::Parameter(format!("K must be positive, got {k}")));
    }
    let (sin, cos) = (delta - theta).sin_cos();
    Ok((k * v * v - k * e * v * cos, k * e * v * sin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn complex_oracle(e: f64, v: f64, delta: f64, theta: f64, r: f64, x: f64) -> (f64, f64) {
        let eb = Complex64::from_polar(e, delta);
        let vb = Complex64::from_polar(v, theta);
        let s = vb * ((eb - vb) / Complex64::new(r, x)).conj();
        (s.re, s.im)
    }

    #[test]
    fn balanced_emf_gives_zero() {
        for (r, x) in [(0.0, 0.3), (0.1, 0.5), (1.0, 0.0)] {
            let (p, q) = machine_power_lossy(1.0, 1.0, 0.4, 0.4, r, x).unwrap();
            assert_eq!((p, q), (0.0, 0.0));
        }
        assert_eq!(dual_power_resistive(1.2, 1.2, 0.3, 0.3, -10.0).unwrap(), (0.0, 0.0));
        assert_eq!(dual_gfm_power(1.0, 1.0, 0.3, 0.3, 0.1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn lossless_closed_forms() {
        let (p, q) = machine_power_lossy(1.0, 1.0, FRAC_PI_6, 0.0, 0.0, 0.5).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!((q - (FRAC_PI_6.cos() - 1.0) / 0.5).abs() < 1e-15);
        assert!((q + 0.26795).abs() < 1e-5);

        let (p, q) = machine_power_lossless(1.0, 1.0, FRAC_PI_2, 0.0, 1.0).unwrap();
        assert!((p - 1.0).abs() < 1e-15 && (q + 1.0).abs() < 1e-15);
        assert_eq!(machine_power_lossless(1.0, 1.0, 0.0, 0.0, 0.7).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn lossy_matches_complex_oracle_at_reference_point() {
        let got = machine_power_lossy(1.05, 0.98, 0.15, 0.0, 0.1, 0.5).unwrap();
        let want = complex_oracle(1.05, 0.98, 0.15, 0.0, 0.1, 0.5);
        assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12);
    }

    #[test]
    fn dual_closed_forms() {
        let (p, q) = dual_power_resistive(1.0, 1.0, FRAC_PI_2, 0.0, -10.0).unwrap();
        assert!((p - 0.1).abs() < 1e-16 && (q - 0.1).abs() < 1e-16);
        let (p, q) = dual_gfm_power(1.0, 1.0, FRAC_PI_2, 0.0, 0.1).unwrap();
        assert!((p - 0.1).abs() < 1e-16 && (q - 0.1).abs() < 1e-16);
    }

    #[test]
    fn dual_matches_extended_precision_reference() {
        // 50-digit evaluation of K v^2 - K e v cos(d - t), K e v sin(d - t)
        // for e = 1.05, v = 0.98, d = 0.2, t = 0.1, K = 0.1
        let p_ref = -6.345_928_607_108_851e-3;
        let q_ref = 1.027_285_857_295_862e-2;
        let (p, q) = dual_gfm_power(1.05, 0.98, 0.2, 0.1, 0.1).unwrap();
        assert!((p - p_ref).abs() < 1e-15, "{p}");
        assert!((q - q_ref).abs() < 1e-15, "{q}");
    }

    #[test]
    fn parameter_errors() {
        assert_eq!(
            machine_power_lossy(1.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            Err(DeviceError::SingularImpedance)
        );
        assert!(machine_power_lossless(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(dual_power_resistive(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert_eq!(dual_gfm_power(f64::NAN, 1.0, 0.0, 0.0, 0.1), Err(DeviceError::NonFinite));
    }

    proptest! {
        #[test]
        fn lossy_equals_complex_power(
            e in 0.5..1.5f64, v in 0.5..1.5f64, ang in -3.2..3.2f64,
            theta in -1.0..1.0f64, r in 0.0..1.0f64, x in 0.05..1.0f64,
        ) {
            let got = machine_power_lossy(e, v, theta + ang, theta, r, x).unwrap();
            let want = complex_oracle(e, v, theta + ang, theta, r, x);
            prop_assert!((got.0 - want.0).abs() < 1e-12);
            prop_assert!((got.1 - want.1).abs() < 1e-12);
        }

        #[test]
        fn resistive_form_is_gain_form(
            e in 0.1..3.0f64, v in 0.5..1.5f64, d in -4.0..4.0f64, t in -4.0..4.0f64, k in 0.01..5.0f64,
        ) {
            let a = dual_power_resistive(e, v, d, t, -1.0 / k).unwrap();
            let b = dual_gfm_power(e, v, d, t, k).unwrap();
            prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }

        #[test]
        fn dual_parity_mirrors_machine(
            e in 0.1..3.0f64, v in 0.5..1.5f64, ang in 0.0..3.2f64, k in 0.01..2.0f64, x in 0.05..1.0f64,
        ) {
            let plus = dual_gfm_power(e, v, ang, 0.0, k).unwrap();
            let minus = dual_gfm_power(e, v, -ang, 0.0, k).unwrap();
            prop_assert!((plus.0 - minus.0).abs() < 1e-14);
            prop_assert!((plus.1 + minus.1).abs() < 1e-14);
            let mp = machine_power_lossless(e, v, ang, 0.0, x).unwrap();
            let mm = machine_power_lossless(e, v, -ang, 0.0, x).unwrap();
            prop_assert!((mp.0 + mm.0).abs() < 1e-12);
            prop_assert!((mp.1 - mm.1).abs() < 1e-12);
        }
    }
}
