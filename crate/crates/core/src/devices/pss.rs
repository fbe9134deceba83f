//! Stabilizer: gain, washout, two lead-lag stages and an output limiter.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PssParams {
    pub gain: f64,
    pub t_w: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for PssParams {
    fn default() -> Self {
        PssParams { gain: 1.0, t_w: 5.0, t1: 1.0, t2: 1.0, t3: 1.0, t4: 1.0, v_min: -0.05, v_max: 0.05 }
    }
}

impl PssParams {
    pub fn validate(&self) -> Result<(), super::DeviceError> {
        if !(self.t_w > 0.0 && self.t2 > 0.0 && self.t4 > 0.0) {
            return Err(super::DeviceError::Parameter(
                "PSS washout and lag time constants must be positive".into(),
            ));
        }
        if !(self.v_min <= self.v_max) {
            return Err(super::DeviceError::Parameter("PSS limits must satisfy v_min <= v_max".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PssState {
    pub washout: f64,
    pub lead1: f64,
    pub lead2: f64,
}

struct Stages {
    washed: f64,
    first: f64,
    second: f64,
}

fn stages(p: &PssParams, s: &PssState, input: f64) -> Stages {
    let washed = p.gain * input - s.washout;
    let first = s.lead1 + p.t1 / p.t2 * (washed - s.lead1);
    let second = s.lead2 + p.t3 / p.t4 * (first - s.lead2);
    Stages { washed, first, second }
}

/// Limited stabilizing signal for the given input deviation.
pub fn pss_output(p: &PssParams, s: &PssState, input: f64) -> f64 {
    stages(p, s, input).second.clamp(p.v_min, p.v_max)
}

/// Derivatives of (washout, lead1, lead2).
pub fn pss_derivatives(p: &PssParams, s: &PssState, input: f64) -> [f64; 3] {
    let st = stages(p, s, input);
    [
        (p.gain * input - s.washout) / p.t_w,
        (st.washed - s.lead1) / p.t2,
        (st.first - s.lead2) / p.t4,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(p: &PssParams, input: impl Fn(f64) -> f64, t_end: f64) -> (PssState, f64) {
        let dt = 1e-3;
        let mut s = PssState::default();
        let mut t = 0.0;
        while t < t_end {
            let d = pss_derivatives(p, &s, input(t));
            s.washout += dt * d[0];
            s.lead1 += dt * d[1];
            s.lead2 += dt * d[2];
            t += dt;
        }
        (s, pss_output(p, &s, input(t)))
    }

    #[test]
    fn washout_blocks_dc() {
        let p = PssParams { gain: 2.0, t1: 0.5, t2: 0.1, t3: 0.4, t4: 0.2, ..Default::default() };
        let (_, out) = run(&p, |_| 0.01, 100.0);
        assert!(out.abs() < 1e-8, "{out}");
    }

    #[test]
    fn equilibrium_output_is_zero() {
        let p = PssParams { gain: 3.0, t1: 0.3, t2: 0.1, ..Default::default() };
        let s = PssState { washout: 3.0 * 0.02, lead1: 0.0, lead2: 0.0 };
        assert_eq!(pss_output(&p, &s, 0.02), 0.0);
        assert_eq!(pss_derivatives(&p, &s, 0.02), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn unit_lead_lags_leave_washed_gain() {
        let p = PssParams { gain: 0.5, v_min: -10.0, v_max: 10.0, ..Default::default() };
        let s = PssState { washout: 0.001, lead1: 0.3, lead2: -0.2 };
        let out = pss_output(&p, &s, 0.01);
        assert!((out - (0.5 * 0.01 - 0.001)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn output_respects_limits(
            washout in -5.0..5.0f64, l1 in -5.0..5.0f64, l2 in -5.0..5.0f64,
            input in -10.0..10.0f64, gain in -50.0..50.0f64,
        ) {
            let p = PssParams { gain, t1: 2.0, t2: 0.05, t3: 1.0, t4: 0.1, ..Default::default() };
            let out = pss_output(&p, &PssState { washout, lead1: l1, lead2: l2 }, input);
            prop_assert!(out >= p.v_min && out <= p.v_max);
        }
    }
}
