use std::fmt::Write as _;

use super::AnalysisError;
use crate::engine::SimResult;

/// Half-widths of the settling bands, in pu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bands {
    pub frequency: f64,
    pub voltage: f64,
}

impl Default for Bands {
    fn default() -> Self {
        Bands { frequency: 1e-3, voltage: 0.01 }
    }
}

/// Scalar summary of a run. Frequencies are the device estimates `omega_est`
/// measured against each device's reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Signed frequency deviation of largest magnitude over the run.
    pub freq_extremum: f64,
    pub freq_extremum_time: f64,
    /// Time after which every monitored signal stays inside its band around
    /// its final value.
    pub settling_time: f64,
    pub settled: bool,
    /// Device-averaged frequency deviation at the last sample.
    pub steady_state_freq_dev: f64,
    /// Largest `|v(t) - v(0)|` over buses and samples.
    pub max_voltage_dev: f64,
    /// Largest `|rho|` over devices at the last sample.
    pub rho_final_max: f64,
    pub t_stop: f64,
}

impl Metrics {
    /// One `key=value` pair per line.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, String); 8] = [
            ("freq_extremum", self.freq_extremum.to_string()),
            ("freq_extremum_time", self.freq_extremum_time.to_string()),
            ("settling_time", self.settling_time.to_string()),
            ("settled", self.settled.to_string()),
            ("steady_state_freq_dev", self.steady_state_freq_dev.to_string()),
            ("max_voltage_dev", self.max_voltage_dev.to_string()),
            ("rho_final_max", self.rho_final_max.to_string()),
            ("t_stop", self.t_stop.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

fn last_outside(values: impl Iterator<Item = f64> + Clone, band: f64) -> Option<usize> {
    let last = values.clone().last()?;
    values.enumerate().filter(|(_, v)| (v - last).abs() > band).map(|(i, _)| i).last()
}

pub fn compute_metrics(result: &SimResult, bands: Bands) -> Result<Metrics, AnalysisError> {
    if !result.complete {
        return Err(AnalysisError::Incomplete);
    }
    if result.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n_dev = result.device_ids.len();
    let n_bus = result.bus_ids.len();
    let times = &result.times;
    let dev = |k: usize, i: usize| result.outputs[k][i].omega_est - result.device_omega_ref[i];

    let (mut freq_extremum, mut freq_extremum_time) = (0.0_f64, 0.0);
    for (k, t) in times.iter().enumerate() {
        for i in 0..n_dev {
            let d = dev(k, i);
            if d.abs() > freq_extremum.abs() {
                freq_extremum = d;
                freq_extremum_time = *t;
            }
        }
    }

    let mut last_out: Option<usize> = None;
    for i in 0..n_dev {
        let series = (0..times.len()).map(move |k| dev(k, i));
        last_out = last_out.max(last_outside(series, bands.frequency));
    }
    for b in 0..n_bus {
        let series = result.y.iter().map(move |y| y[2 * b]);
        last_out = last_out.max(last_outside(series, bands.voltage));
    }
    let settling_time = match last_out {
        None => 0.0,
        Some(k) => times[(k + 1).min(times.len() - 1)],
    };

    let last = times.len() - 1;
    let steady_state_freq_dev =
        if n_dev == 0 { 0.0 } else { (0..n_dev).map(|i| dev(last, i)).sum::<f64>() / n_dev as f64 };
    let v0 = &result.y[0];
    let max_voltage_dev = result
        .y
        .iter()
        .flat_map(|y| (0..n_bus).map(move |b| (y[2 * b] - v0[2 * b]).abs()))
        .fold(0.0, f64::max);
    let rho_final_max = result.outputs[last].iter().map(|o| o.rho.abs()).fold(0.0, f64::max);
    let t_stop = result.t_stop();

    Ok(Metrics {
        freq_extremum,
        freq_extremum_time,
        settling_time,
        settled: settling_time < t_stop || last_out.is_none(),
        steady_state_freq_dev,
        max_voltage_dev,
        rho_final_max,
        t_stop,
    })
}
