//! Capacitive-input threshold inverters: chirality selection and DC check.

use std::fmt;

use serde::Serialize;

use crate::device::{zigzag_ladder, Chirality, CnfetParams, Polarity};
use crate::netlist::{Circuit, Element, ModelCard, Subckt, Waveform};
use crate::oracle::ThresholdGate;
use crate::solver::{dc_operating_point, SolverConfig};

use super::{AdderError, DesignParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateFunction {
    MajorityNot,
    Nand3,
    Nor3,
    Inverter,
}

impl GateFunction {
    pub fn name(self) -> &'static str {
        match self {
            GateFunction::MajorityNot => "majority_not",
            GateFunction::Nand3 => "nand3",
            GateFunction::Nor3 => "nor3",
            GateFunction::Inverter => "inverter",
        }
    }

    /// Allowed switching-threshold interval as fractions of vdd.
    pub fn band(self) -> Band {
        match self {
            GateFunction::MajorityNot | GateFunction::Inverter => Band::new(1.0 / 3.0, 2.0 / 3.0),
            GateFunction::Nand3 => Band::new(2.0 / 3.0, 1.0),
            GateFunction::Nor3 => Band::new(0.0, 1.0 / 3.0),
        }
    }
}

impl fmt::Display for GateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Interval between the two input levels a threshold inverter must separate,
/// as fractions of vdd.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Nearest divider levels on either side of the gate's threshold, over
    /// every binary input assignment.
    pub fn of_gate(gate: &ThresholdGate) -> Band {
        let total: u32 = gate.weights.iter().sum();
        let thr = *gate.threshold.numer() as f64 / *gate.threshold.denom() as f64;
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for mask in 0u32..(1 << gate.weights.len()) {
            let on: u32 = (0..gate.weights.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| gate.weights[i])
                .sum();
            let level = on as f64 / total as f64;
            if level > thr {
                hi = hi.min(level);
            } else {
                lo = lo.max(level);
            }
        }
        Band { lo, hi }
    }

    /// Levels seen through a divider whose output also carries `load`
    /// farads of gate capacitance, split evenly between the rails.
    /// `divider` is the total coupling capacitance.
    pub fn loaded(self, divider: f64, load: f64) -> Band {
        let beta = divider / (divider + load);
        let squeeze = |v: f64| 0.5 + beta * (v - 0.5);
        Band {
            lo: squeeze(self.lo),
            hi: squeeze(self.hi),
        }
    }

    /// Required clearance of the switching threshold from either edge.
    pub const MARGIN: f64 = 1.0 / 30.0;
}

/// Chiralities and tube count chosen for one inverter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DevicePair {
    pub n: Chirality,
    pub p: Chirality,
    /// Tubes per device, both sides.
    pub tubes: u32,
}

impl DevicePair {
    /// (19,0) on both sides: the general-purpose inverter.
    pub fn standard(params: &DesignParams) -> Self {
        let c = Chirality::zigzag(19).expect("semiconducting");
        Self {
            n: c,
            p: c,
            tubes: params.tube_count,
        }
    }

    pub fn with_tubes(self, tubes: u32) -> Self {
        Self { tubes, ..self }
    }

    pub fn n_model(&self) -> String {
        format!("cn{}_{}_t{}", self.n.n(), self.n.m(), self.tubes)
    }

    pub fn p_model(&self) -> String {
        format!("cp{}_{}_t{}", self.p.n(), self.p.m(), self.tubes)
    }

    pub fn add_models(&self, c: &mut Circuit, params: &DesignParams) {
        let card = |chirality, polarity| {
            ModelCard::Cnfet(CnfetParams {
                tube_count: self.tubes,
                ..params.cnfet(chirality, polarity)
            })
        };
        c.add_model(&self.n_model(), card(self.n, Polarity::N));
        c.add_model(&self.p_model(), card(self.p, Polarity::P));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    pub function: GateFunction,
    pub vdd: f64,
    pub input_cap: f64,
    pub n_chirality: Chirality,
    pub p_chirality: Chirality,
    pub tube_count: u32,
}

impl GateSpec {
    /// Picks chiralities for `function` at `vdd`; the inverter uses the
    /// standard pair.
    pub fn synthesize(function: GateFunction, vdd: f64, params: &DesignParams) -> Result<Self, AdderError> {
        let pair = match function {
            GateFunction::Inverter => DevicePair::standard(params),
            _ => select_pair(function.band(), vdd, params)?,
        };
        Ok(Self {
            function,
            vdd,
            input_cap: params.input_cap,
            n_chirality: pair.n,
            p_chirality: pair.p,
            tube_count: pair.tubes,
        })
    }

    pub fn pair(&self) -> DevicePair {
        DevicePair {
            n: self.n_chirality,
            p: self.p_chirality,
            tubes: self.tube_count,
        }
    }
}

/// Switching threshold of an equal-strength square-law inverter: both
/// devices saturated with equal current.
fn predicted_switching(vtn: f64, vtp: f64, vdd: f64) -> f64 {
    (vtn + vdd - vtp) / 2.0
}

/// Chooses the zigzag pair that best centres both thresholds and the
/// switching point inside `band`.
///
/// Each device should stay off at the input level on its far side of the
/// band (full-swing output) and conduct at the near one; the switching point
/// must clear both edges by [`Band::MARGIN`]. Among the pairs without a
/// dead zone (`Vtn + |Vtp| < vdd`) the one with the largest worst-case slack
/// wins. Ties go to the better-centred switching point, then to the lower
/// threshold sum (stronger drive).
pub fn select_pair(band: Band, vdd: f64, params: &DesignParams) -> Result<DevicePair, AdderError> {
    let ladder = zigzag_ladder(params.lattice_constant)?;
    let (lo, hi) = (band.lo * vdd, band.hi * vdd);
    let centre = 0.5 * (lo + hi);
    let margin = Band::MARGIN * vdd;
    let mut best: Option<((f64, f64, f64), DevicePair)> = None;
    for &(n, vtn) in &ladder {
        for &(p, vtp) in &ladder {
            if vtn + vtp >= vdd {
                continue;
            }
            let vm = predicted_switching(vtn, vtp, vdd);
            if vm <= lo + margin || vm >= hi - margin {
                continue;
            }
            let slack = [
                vtn - lo,
                hi - vtn,
                vtp - (vdd - hi),
                (vdd - lo) - vtp,
                vm - lo,
                hi - vm,
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
            let key = (slack, -(vm - centre).abs(), -(vtn + vtp));
            let better = match &best {
                None => true,
                Some((b, _)) => {
                    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9;
                    if !close(key.0, b.0) {
                        key.0 > b.0
                    } else if !close(key.1, b.1) {
                        key.1 > b.1
                    } else {
                        key.2 > b.2 + 1e-9
                    }
                }
            };
            if better {
                best = Some((
                    key,
                    DevicePair {
                        n,
                        p,
                        tubes: params.tube_count,
                    },
                ));
            }
        }
    }
    best.map(|(_, pair)| pair).ok_or(AdderError::Synthesis {
        lo: band.lo,
        hi: band.hi,
        vdd,
    })
}

/// Output-crosses-vdd/2 input voltage of a CNFET inverter, by bisection over
/// DC operating points.
pub fn switching_threshold(pair: DevicePair, vdd: f64, params: &DesignParams) -> Result<f64, AdderError> {
    let mut c = Circuit::new();
    pair.add_models(&mut c, params);
    c.push(Element::vsource("vdd", "vdd", "0", Waveform::Dc(vdd)));
    c.push(Element::vsource("vin", "in", "0", Waveform::Dc(0.0)));
    push_inverter(&mut c, "inv", "in", "out", "vdd", "0", pair);
    let cfg = SolverConfig::default();
    let mut output = |vin: f64| -> Result<f64, AdderError> {
        if let Some(e) = c.elements.iter_mut().find(|e| e.name == "vin") {
            e.kind = crate::netlist::ElementKind::VoltageSource(Waveform::Dc(vin));
        }
        let op = dc_operating_point(&c, &cfg)?;
        Ok(op.voltage("out").unwrap_or(0.0))
    };
    let (mut a, mut b) = (0.0, vdd);
    if output(a)? < vdd / 2.0 || output(b)? > vdd / 2.0 {
        return Err(AdderError::NoSwitching { vdd });
    }
    for _ in 0..50 {
        let mid = 0.5 * (a + b);
        if output(mid)? > vdd / 2.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Checks the measured switching threshold against `band` with the required
/// margin.
pub fn verify_band(pair: DevicePair, band: Band, vdd: f64, params: &DesignParams) -> Result<f64, AdderError> {
    let vm = switching_threshold(pair, vdd, params)?;
    let margin = Band::MARGIN * vdd;
    if vm <= band.lo * vdd + margin || vm >= band.hi * vdd - margin {
        return Err(AdderError::OutOfBand {
            vm,
            lo: band.lo * vdd,
            hi: band.hi * vdd,
        });
    }
    Ok(vm)
}

/// CNFET inverter named `<name>p` / `<name>n`.
pub(crate) fn push_inverter(c: &mut Circuit, name: &str, input: &str, output: &str, vdd: &str, gnd: &str, pair: DevicePair) {
    c.push(Element::cnfet(&format!("q{name}p"), output, input, vdd, &pair.p_model()));
    c.push(Element::cnfet(&format!("q{name}n"), output, input, gnd, &pair.n_model()));
}

/// Subcircuit `<function>` with ports `a b c out vdd gnd` (`a out vdd gnd`
/// for the plain inverter): three equal capacitors into node `x` driving one
/// inverter. Fails unless the measured switching threshold sits inside the
/// function's band.
pub fn build_threshold_inverter_gate(spec: &GateSpec, params: &DesignParams) -> Result<Circuit, AdderError> {
    let pair = spec.pair();
    verify_band(pair, spec.function.band(), spec.vdd, params)?;
    let mut c = Circuit::new();
    pair.add_models(&mut c, params);
    let sub = if spec.function == GateFunction::Inverter {
        let mut s = Subckt::new(spec.function.name(), &["a", "out", "vdd", "gnd"]);
        let mut body = Circuit::new();
        push_inverter(&mut body, "1", "a", "out", "vdd", "gnd", pair);
        s.elements = body.elements;
        s
    } else {
        let mut s = Subckt::new(spec.function.name(), &["a", "b", "c", "out", "vdd", "gnd"]);
        let mut body = Circuit::new();
        for input in ["a", "b", "c"] {
            body.push(Element::capacitor(&format!("c{input}"), input, "x", spec.input_cap));
        }
        push_inverter(&mut body, "1", "x", "out", "vdd", "gnd", pair);
        s.elements = body.elements;
        s
    };
    c.add_subckt(sub);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn band_from_weights() {
        let maj = Band::of_gate(&ThresholdGate::majority_not(3));
        assert!((maj.lo - 1.0 / 3.0).abs() < 1e-12 && (maj.hi - 2.0 / 3.0).abs() < 1e-12);
        let five = Band::of_gate(&ThresholdGate::new(vec![1, 1, 1, 2], Ratio::new(1, 2), true));
        assert!((five.lo - 0.4).abs() < 1e-12 && (five.hi - 0.6).abs() < 1e-12);
        let nand = Band::of_gate(&ThresholdGate::new(vec![1, 1, 1], Ratio::new(5, 6), true));
        assert!((nand.lo - 2.0 / 3.0).abs() < 1e-12 && nand.hi == 1.0);
    }

    #[test]
    fn every_function_synthesizes_at_both_supplies() {
        let params = DesignParams::default();
        for vdd in [0.9, 0.65] {
            for f in [GateFunction::MajorityNot, GateFunction::Nand3, GateFunction::Nor3, GateFunction::Inverter] {
                let spec = GateSpec::synthesize(f, vdd, &params).unwrap();
                let vm = verify_band(spec.pair(), f.band(), vdd, &params).unwrap();
                let band = f.band();
                assert!(vm > band.lo * vdd + vdd / 30.0 && vm < band.hi * vdd - vdd / 30.0, "{f} {vdd}: {vm}");
            }
        }
    }

    #[test]
    fn measured_threshold_matches_square_law() {
        let params = DesignParams::default();
        let pair = DevicePair::standard(&params);
        let vm = switching_threshold(pair, 0.9, &params).unwrap();
        assert!((vm - 0.45).abs() < 1e-6, "{vm}");
    }

    #[test]
    fn impossible_band_is_reported() {
        let err = select_pair(Band::new(0.49, 0.51), 0.9, &DesignParams::default()).unwrap_err();
        assert!(matches!(err, AdderError::Synthesis { .. }));
    }

    #[test]
    fn gate_subcircuit_shape() {
        let params = DesignParams::default();
        let spec = GateSpec::synthesize(GateFunction::MajorityNot, 0.9, &params).unwrap();
        let c = build_threshold_inverter_gate(&spec, &params).unwrap();
        let s = &c.subckts["majority_not"];
        assert_eq!(s.ports, ["a", "b", "c", "out", "vdd", "gnd"]);
        assert_eq!(s.elements.len(), 5);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn out_of_band_pair_is_rejected() {
        let params = DesignParams::default();
        let err = verify_band(DevicePair::standard(&params), GateFunction::Nand3.band(), 0.9, &params).unwrap_err();
        assert!(matches!(err, AdderError::OutOfBand { .. }));
    }
}
