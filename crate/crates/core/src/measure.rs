//! Power, delay and full-swing figures from a transient result.

use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::solver::TransientResult;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("output '{output}' never settles across vdd/2 after the input edge at {edge_time:.4e} s")]
    MissingTransition { edge_time: f64, output: String },
    #[error("input waveform never crosses vdd/2")]
    NoInputEdge,
    #[error("window [{0:e}, {1:e}] is empty")]
    EmptyWindow(f64, f64),
    #[error("window [{0:e}, {1:e}] lies outside the simulated span")]
    WindowOutOfRange(f64, f64),
    #[error("no signal named '{0}' in the result")]
    UnknownSignal(String),
    #[error("series lengths differ from the time grid")]
    Length,
}

/// A level crossing located by linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub rising: bool,
}

/// Every crossing of `level`, in time order. A sample exactly on the level
/// counts once, at that sample.
pub fn crossings(times: &[f64], values: &[f64], level: f64) -> Vec<Crossing> {
    let mut out = Vec::new();
    let mut side: Option<bool> = None;
    let mut last_off = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v == level {
            continue;
        }
        let above = v > level;
        if let Some(prev) = side {
            if prev != above {
                let (t0, v0, t1, v1) = (times[last_off], values[last_off], times[i], v);
                let time = t0 + (level - v0) * (t1 - t0) / (v1 - v0);
                out.push(Crossing { time, rising: above });
            }
        }
        side = Some(above);
        last_off = i;
    }
    out
}

/// Time of the first crossing of vdd/2 in `(after, before]` that leaves the
/// side `output` was on at `after` and stays on the new side for at least
/// `sustain` (or until the end of the record).
pub fn settled_crossing(
    times: &[f64],
    output: &[f64],
    vdd: f64,
    after: f64,
    before: f64,
    sustain: f64,
) -> Option<f64> {
    let mid = vdd / 2.0;
    let was_high = crate::solver::result_interpolate(times, output, after) > mid;
    let xs = crossings(times, output, mid);
    (0..xs.len())
        .filter(|&i| xs[i].time > after && xs[i].time <= before && xs[i].rising != was_high)
        .find(|&i| xs.get(i + 1).is_none_or(|next| next.time - xs[i].time >= sustain))
        .map(|i| xs[i].time)
}

/// Delay from every vdd/2 crossing of `input` to the settled output crossing
/// that follows it (searched up to the next input crossing).
pub fn propagation_delay(
    times: &[f64],
    input: &[f64],
    output: &[f64],
    vdd: f64,
    sustain: f64,
) -> Result<Vec<(f64, f64)>, MeasureError> {
    if input.len() != times.len() || output.len() != times.len() {
        return Err(MeasureError::Length);
    }
    let edges = crossings(times, input, vdd / 2.0);
    if edges.is_empty() {
        return Err(MeasureError::NoInputEdge);
    }
    let mut out = Vec::with_capacity(edges.len());
    for (k, edge) in edges.iter().enumerate() {
        let limit = edges.get(k + 1).map_or(f64::INFINITY, |e| e.time);
        let t = settled_crossing(times, output, vdd, edge.time, limit, sustain).ok_or_else(|| {
            MeasureError::MissingTransition {
                edge_time: edge.time,
                output: "output".into(),
            }
        })?;
        out.push((edge.time, t - edge.time));
    }
    Ok(out)
}

/// Integral of the piecewise-linear interpolant of `values` over `[t0, t1]`.
pub fn integrate(times: &[f64], values: &[f64], t0: f64, t1: f64) -> f64 {
    let interp = |t: f64| crate::solver::result_interpolate(times, values, t);
    let mut total = 0.0;
    let mut prev_t = t0;
    let mut prev_v = interp(t0);
    let start = times.partition_point(|&t| t <= t0);
    for i in start..times.len() {
        if times[i] >= t1 {
            break;
        }
        total += 0.5 * (prev_v + values[i]) * (times[i] - prev_t);
        prev_t = times[i];
        prev_v = values[i];
    }
    let v1 = interp(t1);
    total + 0.5 * (prev_v + v1) * (t1 - prev_t)
}

/// Mean power delivered by a DC supply over `window`: `vdd · (−i)` averaged,
/// where `i` is the current into the source's positive terminal.
pub fn average_power(
    result: &TransientResult,
    supply: &str,
    vdd: f64,
    window: (f64, f64),
) -> Result<f64, MeasureError> {
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(MeasureError::EmptyWindow(t0, t1));
    }
    let (first, last) = (result.times[0], *result.times.last().unwrap_or(&0.0));
    let slack = 1e-9 * (last - first).abs();
    if t0 < first - slack || t1 > last + slack {
        return Err(MeasureError::WindowOutOfRange(t0, t1));
    }
    let current = result
        .current(supply)
        .ok_or_else(|| MeasureError::UnknownSignal(supply.to_string()))?;
    let charge = integrate(&result.times, current, t0, t1);
    Ok(-vdd * charge / (t1 - t0))
}

/// Delay of one output after one input edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub edge_time: f64,
    pub input: String,
    pub output: String,
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub circuit: String,
    pub vdd: f64,
    #[serde(rename = "power_w")]
    pub avg_power: f64,
    #[serde(rename = "delay_s")]
    pub worst_delay: f64,
    #[serde(rename = "pdp_j")]
    pub pdp: f64,
    pub transitions: Vec<Transition>,
}

impl Measurement {
    pub fn new(circuit: &str, vdd: f64, avg_power: f64, transitions: Vec<Transition>) -> Self {
        let worst_delay = transitions.iter().map(|t| t.delay).fold(0.0, f64::max);
        Self {
            circuit: circuit.to_string(),
            vdd,
            avg_power,
            worst_delay,
            pdp: avg_power * worst_delay,
            transitions,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measurement serializes")
    }

    pub const CSV_HEADER: &'static str = "design,vdd_v,power_w,delay_s,pdp_j";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6e},{:.6e},{:.6e}",
            self.circuit, self.vdd, self.avg_power, self.worst_delay, self.pdp
        )
    }
}

pub fn pdp(m: &Measurement) -> f64 {
    m.avg_power * m.worst_delay
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogicThresholds {
    pub vdd: f64,
    pub v_high_min: f64,
    pub v_low_max: f64,
    /// Length of the averaging window at the end of each interval, s.
    pub settle_window: f64,
}

impl LogicThresholds {
    /// 0.9·vdd / 0.1·vdd.
    pub fn new(vdd: f64, settle_window: f64) -> Self {
        Self::with_fractions(vdd, 0.9, 0.1, settle_window)
    }

    pub fn with_fractions(vdd: f64, high: f64, low: f64, settle_window: f64) -> Self {
        Self {
            vdd,
            v_high_min: high * vdd,
            v_low_max: low * vdd,
            settle_window,
        }
    }
}

/// Time interval with the expected logic level of every checked output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLevels {
    pub end: f64,
    pub levels: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwingViolation {
    pub output: String,
    pub interval_end: f64,
    pub expected: bool,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwingReport {
    pub checks: usize,
    pub violations: Vec<SwingViolation>,
}

impl SwingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Mean of a node over `[t0, t1]`.
pub fn window_mean(times: &[f64], values: &[f64], t0: f64, t1: f64) -> f64 {
    if t1 <= t0 {
        return crate::solver::result_interpolate(times, values, t0);
    }
    integrate(times, values, t0, t1) / (t1 - t0)
}

/// Compares each output's mean over the last `settle_window` of every
/// interval against the high/low limits.
pub fn full_swing_check(
    result: &TransientResult,
    outputs: &[&str],
    truth: &[ExpectedLevels],
    th: &LogicThresholds,
) -> Result<SwingReport, MeasureError> {
    let mut report = SwingReport {
        checks: 0,
        violations: Vec::new(),
    };
    for (j, name) in outputs.iter().enumerate() {
        let v = result
            .voltage(name)
            .ok_or_else(|| MeasureError::UnknownSignal(name.to_string()))?;
        for interval in truth {
            let mean = window_mean(&result.times, v, interval.end - th.settle_window, interval.end);
            let expected = interval.levels[j];
            let ok = if expected {
                mean >= th.v_high_min
            } else {
                mean <= th.v_low_max
            };
            report.checks += 1;
            if !ok {
                report.violations.push(SwingViolation {
                    output: name.to_string(),
                    interval_end: interval.end,
                    expected,
                    mean,
                });
            }
        }
    }
    Ok(report)
}

/// Per-transition delays as CSV, one row per transition.
pub fn transitions_csv(m: &Measurement) -> String {
    let mut out = String::from("edge_time_s,input,output,delay_s\n");
    for t in &m.transitions {
        let _ = writeln!(out, "{:.6e},{},{},{:.6e}", t.edge_time, t.input, t.output, t.delay);
    }
    out
}
