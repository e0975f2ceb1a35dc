//! Stimulus schedule and the buffered benchmark wrapper.

use crate::netlist::{Circuit, Element, Subckt, Waveform};

use super::gates::push_inverter;
use super::{DesignParams, DevicePair};

const INPUTS: [&str; 3] = ["a", "b", "c"];

/// Reflected Gray code over `(a, b, c)` followed by its reverse: 16 slots,
/// neighbouring vectors differ in at most one bit.
pub fn gray_sequence() -> Vec<[bool; 3]> {
    let forward: Vec<[bool; 3]> = (0u8..8)
        .map(|i| i ^ (i >> 1))
        .map(|g| [g & 4 != 0, g & 2 != 0, g & 1 != 0])
        .collect();
    let mut seq = forward.clone();
    seq.extend(forward.into_iter().rev());
    seq
}

/// One single-input change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub slot: usize,
    /// Index into `a b c`.
    pub input: usize,
    /// Nominal 50% point of the ramp, s.
    pub time: f64,
    pub from: [bool; 3],
    pub to: [bool; 3],
}

impl Edge {
    pub fn input_name(&self) -> &'static str {
        INPUTS[self.input]
    }
}

/// Input schedule: slot `k` ramps to `vectors[k]` over `transition`, then
/// holds for `hold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    pub vectors: Vec<[bool; 3]>,
    pub transition: f64,
    pub hold: f64,
}

impl Stimulus {
    pub fn gray(transition: f64, hold: f64) -> Self {
        Self {
            vectors: gray_sequence(),
            transition,
            hold,
        }
    }

    pub fn slot(&self) -> f64 {
        self.transition + self.hold
    }

    pub fn tstop(&self) -> f64 {
        self.vectors.len() as f64 * self.slot()
    }

    pub fn slot_start(&self, k: usize) -> f64 {
        k as f64 * self.slot()
    }

    pub fn slot_end(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.slot()
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for k in 1..self.vectors.len() {
            let (from, to) = (self.vectors[k - 1], self.vectors[k]);
            for input in 0..3 {
                if from[input] != to[input] {
                    out.push(Edge {
                        slot: k,
                        input,
                        time: self.slot_start(k) + 0.5 * self.transition,
                        from,
                        to,
                    });
                }
            }
        }
        out
    }

    /// Piecewise-linear drive for input `input` (0 = a).
    pub fn waveform(&self, input: usize, vdd: f64) -> Waveform {
        let level = |b: bool| if b { vdd } else { 0.0 };
        let mut points = vec![(0.0, level(self.vectors[0][input]))];
        for k in 1..self.vectors.len() {
            let (from, to) = (self.vectors[k - 1][input], self.vectors[k][input]);
            if from != to {
                let t = self.slot_start(k);
                points.push((t, level(from)));
                points.push((t + self.transition, level(to)));
            }
        }
        if points.len() == 1 {
            Waveform::Dc(points[0].1)
        } else {
            Waveform::Pwl(points)
        }
    }
}

/// Hierarchical benchmark circuit plus the schedule that drives it.
#[derive(Debug, Clone, PartialEq)]
pub struct Testbench {
    pub circuit: Circuit,
    pub stimulus: Stimulus,
    pub vdd: f64,
}

impl Testbench {
    /// Wraps a flat adder (terminals `a b c sum cout vdd`, ground `0`) as
    /// subcircuit `dut`, drives it from `stimulus` and loads each output
    /// with two cascaded standard inverters and `load_cap` after the second.
    pub fn new(dut: &Circuit, vdd: f64, stimulus: Stimulus, params: &DesignParams, load_cap: f64) -> Self {
        let mut c = Circuit::new();
        c.models = dut.models.clone();
        c.subckts = dut.subckts.clone();
        let pair = DevicePair::standard(params);
        pair.add_models(&mut c, params);

        let mut sub = Subckt::new("dut", &["a", "b", "c", "sum", "cout", "vdd"]);
        sub.elements = dut.elements.clone();
        c.add_subckt(sub);

        let mut buf = Subckt::new("buf", &["in", "out", "vdd"]);
        let mut body = Circuit::new();
        push_inverter(&mut body, "1", "in", "out", "vdd", "0", pair);
        buf.elements = body.elements;
        c.add_subckt(buf);

        c.push(Element::vsource("vdd", "vdd", "0", Waveform::Dc(vdd)));
        for (i, name) in INPUTS.iter().enumerate() {
            c.push(Element::vsource(&format!("v{name}"), name, "0", stimulus.waveform(i, vdd)));
        }
        c.push(Element::instance("xdut", &["a", "b", "c", "sum", "cout", "vdd"], "dut"));
        for out in ["sum", "cout"] {
            let mid = format!("{out}_b1");
            let end = format!("{out}_b2");
            c.push(Element::instance(&format!("x{out}1"), &[out, &mid, "vdd"], "buf"));
            c.push(Element::instance(&format!("x{out}2"), &[&mid, &end, "vdd"], "buf"));
            c.push(Element::capacitor(&format!("cl{out}"), &end, "0", load_cap));
        }
        Self {
            circuit: c,
            stimulus,
            vdd,
        }
    }
}

/// Gray-code testbench with default devices and a 1 fF final load.
pub fn build_testbench(dut: &Circuit, vdd: f64, transition_time: f64, hold_time: f64) -> Testbench {
    Testbench::new(
        dut,
        vdd,
        Stimulus::gray(transition_time, hold_time),
        &DesignParams::default(),
        1e-15,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adders::{build_adder, AdderKind};
    use std::collections::HashSet;

    #[test]
    fn sequence_is_exhaustive_gray_code() {
        let seq = gray_sequence();
        assert_eq!(seq.len(), 16);
        let distinct: HashSet<_> = seq.iter().collect();
        assert_eq!(distinct.len(), 8);
        for w in seq.windows(2) {
            let diff = (0..3).filter(|&i| w[0][i] != w[1][i]).count();
            assert!(diff <= 1);
        }
        assert_eq!(seq[0], [false, false, false]);
        assert_eq!(seq[15], [false, false, false]);
    }

    #[test]
    fn every_single_input_change_appears_both_ways() {
        let s = Stimulus::gray(10e-12, 200e-12);
        let edges = s.edges();
        assert_eq!(edges.len(), 14);
        for e in &edges {
            assert!(edges.iter().any(|f| f.from == e.to && f.to == e.from));
        }
    }

    #[test]
    fn total_time() {
        let s = Stimulus::gray(10e-12, 200e-12);
        assert!((s.tstop() - 16.0 * 210e-12).abs() < 1e-24);
    }

    #[test]
    fn waveform_follows_schedule() {
        let s = Stimulus::gray(10e-12, 200e-12);
        for i in 0..3 {
            let w = s.waveform(i, 0.9);
            for k in 0..16 {
                let t = s.slot_end(k) - 1e-12;
                let expected = if s.vectors[k][i] { 0.9 } else { 0.0 };
                assert_eq!(w.value_at(t), expected, "input {i} slot {k}");
            }
        }
    }

    #[test]
    fn buffers_add_eight_transistors() {
        let dut = build_adder(AdderKind::Proposed, 0.9).unwrap();
        let tb = build_testbench(&dut, 0.9, 10e-12, 200e-12);
        let flat = tb.circuit.flatten().unwrap();
        flat.validate().unwrap();
        assert_eq!(flat.stats().transistor_count, dut.stats().transistor_count + 8);
        assert_eq!(flat.stats().capacitor_count, dut.stats().capacitor_count + 2);
        assert!(flat.nodes().iter().any(|n| n == "xdut.x"));
    }
}
