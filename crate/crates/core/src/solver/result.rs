use std::collections::BTreeMap;
use std::fmt::Write;

use nalgebra::DVector;

use super::mna::Compiled;

/// Node voltages and source branch currents at one solution point.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub voltages: BTreeMap<String, f64>,
    /// Current flowing into each source's positive terminal, A.
    pub source_currents: BTreeMap<String, f64>,
}

impl OperatingPoint {
    pub(super) fn from_solution(c: &Compiled, x: &DVector<f64>) -> Self {
        let n = c.n_nodes();
        Self {
            voltages: c
                .node_names
                .iter()
                .enumerate()
                .map(|(i, name)| (name.clone(), x[i]))
                .collect(),
            source_currents: c
                .sources
                .iter()
                .enumerate()
                .map(|(k, s)| (s.name.clone(), x[n + k]))
                .collect(),
        }
    }

    /// Solution vector in the compiled unknown order.
    pub(super) fn to_vector(&self, c: &Compiled) -> DVector<f64> {
        let mut x = DVector::zeros(c.size());
        for (i, name) in c.node_names.iter().enumerate() {
            x[i] = self.voltages.get(name).copied().unwrap_or(0.0);
        }
        for (k, s) in c.sources.iter().enumerate() {
            x[c.n_nodes() + k] = self.source_currents.get(&s.name).copied().unwrap_or(0.0);
        }
        x
    }

    pub fn voltage(&self, node: &str) -> Option<f64> {
        if node == crate::netlist::GROUND {
            return Some(0.0);
        }
        self.voltages.get(&node.to_ascii_lowercase()).copied()
    }
}

/// Sampled waveforms from one transient run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub times: Vec<f64>,
    pub node_names: Vec<String>,
    /// One series per entry of `node_names`.
    pub node_voltages: Vec<Vec<f64>>,
    pub source_names: Vec<String>,
    /// Current into each source's positive terminal, one series per source.
    pub source_currents: Vec<Vec<f64>>,
}

impl TransientResult {
    pub(super) fn new(c: &Compiled) -> Self {
        Self {
            times: Vec::new(),
            node_names: c.node_names.clone(),
            node_voltages: vec![Vec::new(); c.n_nodes()],
            source_names: c.sources.iter().map(|s| s.name.clone()).collect(),
            source_currents: vec![Vec::new(); c.sources.len()],
        }
    }

    pub(super) fn record(&mut self, t: f64, x: &DVector<f64>) {
        self.times.push(t);
        let n = self.node_names.len();
        for (i, series) in self.node_voltages.iter_mut().enumerate() {
            series.push(x[i]);
        }
        for (k, series) in self.source_currents.iter_mut().enumerate() {
            series.push(x[n + k]);
        }
    }

    pub fn voltage(&self, node: &str) -> Option<&[f64]> {
        let node = node.to_ascii_lowercase();
        self.node_names
            .iter()
            .position(|n| *n == node)
            .map(|i| self.node_voltages[i].as_slice())
    }

    pub fn current(&self, source: &str) -> Option<&[f64]> {
        let source = source.to_ascii_lowercase();
        self.source_names
            .iter()
            .position(|n| *n == source)
            .map(|i| self.source_currents[i].as_slice())
    }

    /// Linear interpolation of a node voltage at time `t`.
    pub fn voltage_at(&self, node: &str, t: f64) -> Option<f64> {
        let v = self.voltage(node)?;
        Some(interpolate(&self.times, v, t))
    }

    /// Header `time,<node>...,i(<source>)...`; 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for n in &self.node_names {
            out.push(',');
            out.push_str(n);
        }
        for s in &self.source_names {
            let _ = write!(out, ",i({s})");
        }
        out.push('\n');
        for (row, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:.8e}");
            for series in self.node_voltages.iter().chain(&self.source_currents) {
                let _ = write!(out, ",{:.8e}", series[row]);
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return values[0];
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return values[last];
    }
    let i = times.partition_point(|&x| x <= t);
    let (t0, t1) = (times[i - 1], times[i]);
    values[i - 1] + (values[i] - values[i - 1]) * (t - t0) / (t1 - t0)
}
