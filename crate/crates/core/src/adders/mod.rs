//! Full-adder netlist constructors and the benchmark testbench.

mod gates;
mod testbench;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{Chirality, CnfetParams, DeviceError, MosfetParams, Polarity};
use crate::netlist::{Circuit, Element, ModelCard};
use crate::oracle::{LogicNetwork, ThresholdGate};
use crate::solver::SolverError;

pub use gates::{
    build_threshold_inverter_gate, select_pair, switching_threshold, verify_band, Band, DevicePair,
    GateFunction, GateSpec,
};
pub use testbench::{build_testbench, gray_sequence, Edge, Stimulus, Testbench};

use gates::push_inverter;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdderError {
    #[error("no zigzag pair puts the switching threshold inside ({lo:.4}, {hi:.4})·vdd at vdd = {vdd} V")]
    Synthesis { lo: f64, hi: f64, vdd: f64 },
    #[error("switching threshold {vm:.4} V outside ({lo:.4}, {hi:.4}) V less margin")]
    OutOfBand { vm: f64, lo: f64, hi: f64 },
    #[error("inverter output never crosses vdd/2 at vdd = {vdd} V")]
    NoSwitching { vdd: f64 },
    #[error("unknown adder '{0}'")]
    UnknownKind(String),
    #[error("device: {0}")]
    Device(#[from] DeviceError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdderKind {
    Proposed,
    CntFa1,
    CntFa2,
    CntFa3,
    CCmos,
    Tga,
}

impl AdderKind {
    /// Table row order.
    pub const ALL: [AdderKind; 6] = [
        AdderKind::CCmos,
        AdderKind::Tga,
        AdderKind::CntFa1,
        AdderKind::CntFa2,
        AdderKind::CntFa3,
        AdderKind::Proposed,
    ];

    pub fn id(self) -> &'static str {
        match self {
            AdderKind::Proposed => "proposed",
            AdderKind::CntFa1 => "cnt_fa1",
            AdderKind::CntFa2 => "cnt_fa2",
            AdderKind::CntFa3 => "cnt_fa3",
            AdderKind::CCmos => "c_cmos",
            AdderKind::Tga => "tga",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AdderKind::Proposed => "Proposed Adder",
            AdderKind::CntFa1 => "CNT-FA1",
            AdderKind::CntFa2 => "CNT-FA2",
            AdderKind::CntFa3 => "CNT-FA3",
            AdderKind::CCmos => "C-CMOS",
            AdderKind::Tga => "TGA",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            AdderKind::Proposed => "capacitive majority-not carry, NAND3/NOR3 threshold inverters, AOI sum stage",
            AdderKind::CntFa1 => "two capacitive majority-not stages, carry fed back with double weight",
            AdderKind::CntFa2 => "capacitive NAND3/NOR3 fed with double weight into the sum majority",
            AdderKind::CntFa3 => "carry coupled into the sum divider through a series capacitor chain",
            AdderKind::CCmos => "complementary mirror adder, reference MOSFETs",
            AdderKind::Tga => "transmission-gate adder, reference MOSFETs (reconstructed)",
        }
    }

    /// Whether settled outputs must reach the tight 0.9/0.1·vdd levels.
    pub fn requires_full_swing(self) -> bool {
        matches!(self, AdderKind::Proposed | AdderKind::CCmos)
    }

    /// Gate-level description of what the circuit computes.
    pub fn logic_network(self) -> LogicNetwork {
        let text = match self {
            AdderKind::Proposed => {
                "inputs a b c\n\
                 nc = !th 1/2 a b c\n\
                 cout = !th 1/2 nc\n\
                 nor = !th 1/6 a b c\n\
                 nand = !th 5/6 a b c\n\
                 sum = !th 3/8 2*nor nand cout\n\
                 outputs sum cout\n"
            }
            AdderKind::CntFa1 => {
                "inputs a b c\n\
                 nc = !th 1/2 a b c\n\
                 cout = !th 1/2 nc\n\
                 nsum = !th 1/2 a b c 2*nc\n\
                 sum = !th 1/2 nsum\n\
                 outputs sum cout\n"
            }
            AdderKind::CntFa2 => {
                "inputs a b c\n\
                 nc = !th 1/2 a b c\n\
                 cout = !th 1/2 nc\n\
                 nor = !th 1/6 a b c\n\
                 nand = !th 5/6 a b c\n\
                 sum = !th 1/2 a b c 2*nand 2*nor\n\
                 outputs sum cout\n"
            }
            AdderKind::CntFa3 => {
                // y = (x + nc/2) / 1.5 with x = (3k + nc) / 10 reduces to
                // y = (k + 2nc) / 5
                "inputs a b c\n\
                 nc = !th 1/2 a b c\n\
                 cout = !th 1/2 nc\n\
                 nsum = !th 1/2 a b c 2*nc\n\
                 sum = !th 1/2 nsum\n\
                 outputs sum cout\n"
            }
            AdderKind::CCmos => {
                "inputs a b c\n\
                 ncout = !th 1/2 a b c\n\
                 nsum = !th 1/2 a b c 2*ncout\n\
                 sum = !th 1/2 nsum\n\
                 cout = !th 1/2 ncout\n\
                 outputs sum cout\n"
            }
            AdderKind::Tga => {
                "inputs a b c\n\
                 nab = !th 3/4 a b\n\
                 p = th 5/8 a b 2*nab\n\
                 npc = !th 3/4 p c\n\
                 sum = th 5/8 p c 2*npc\n\
                 np = !th 1/2 p\n\
                 ta = th 3/4 np a\n\
                 tc = th 3/4 p c\n\
                 cout = th 1/4 ta tc\n\
                 outputs sum cout\n"
            }
        };
        LogicNetwork::parse(text).expect("built-in network is well formed")
    }
}

impl fmt::Display for AdderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for AdderKind {
    type Err = AdderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        AdderKind::ALL
            .into_iter()
            .find(|k| k.id() == key)
            .ok_or_else(|| AdderError::UnknownKind(s.to_string()))
    }
}

/// Bulk-MOSFET sizing for the CMOS reference designs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MosfetSizing {
    /// Threshold magnitude, V.
    pub vth: f64,
    /// A/V².
    pub kp: f64,
    /// 1/V.
    pub lambda: f64,
    /// F.
    pub cg: f64,
}

/// Device and capacitor choices shared by every constructor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignParams {
    /// Unit input capacitor, F.
    pub input_cap: f64,
    pub tube_count: u32,
    /// Tubes per device in inverters whose output drives a coupling
    /// capacitor.
    pub driver_tube_count: u32,
    /// A/V² per tube.
    pub transconductance_per_tube: f64,
    /// F per tube.
    pub gate_capacitance_per_tube: f64,
    /// nm.
    pub lattice_constant: f64,
    pub nmos: MosfetSizing,
    pub pmos: MosfetSizing,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self {
            input_cap: 1e-15,
            tube_count: 3,
            driver_tube_count: 16,
            transconductance_per_tube: crate::device::DEFAULT_TRANSCONDUCTANCE_PER_TUBE,
            gate_capacitance_per_tube: crate::device::DEFAULT_GATE_CAPACITANCE_PER_TUBE,
            lattice_constant: crate::device::DEFAULT_LATTICE_CONSTANT_NM,
            nmos: MosfetSizing {
                vth: 0.25,
                kp: 3e-4,
                lambda: 0.05,
                cg: 1e-16,
            },
            pmos: MosfetSizing {
                vth: 0.25,
                kp: 3e-4,
                lambda: 0.05,
                cg: 1e-16,
            },
        }
    }
}

impl DesignParams {
    pub fn cnfet(&self, chirality: Chirality, polarity: Polarity) -> CnfetParams {
        CnfetParams {
            chirality,
            polarity,
            tube_count: self.tube_count,
            transconductance_per_tube: self.transconductance_per_tube,
            lattice_constant: self.lattice_constant,
            gate_capacitance_per_tube: self.gate_capacitance_per_tube,
        }
    }

    fn mosfet(&self, polarity: Polarity) -> MosfetParams {
        let s = match polarity {
            Polarity::N => self.nmos,
            Polarity::P => self.pmos,
        };
        MosfetParams {
            polarity,
            threshold: s.vth,
            transconductance: s.kp,
            channel_length_modulation: s.lambda,
            gate_capacitance: s.cg,
        }
    }
}

/// Flat circuit with terminal nodes `a b c sum cout vdd` and ground `0`.
pub fn build_adder(kind: AdderKind, vdd: f64) -> Result<Circuit, AdderError> {
    build_adder_with(kind, vdd, &DesignParams::default())
}

pub fn build_adder_with(kind: AdderKind, vdd: f64, params: &DesignParams) -> Result<Circuit, AdderError> {
    let mut b = Builder::new(vdd, params);
    match kind {
        AdderKind::Proposed => b.proposed()?,
        AdderKind::CntFa1 => b.fa1()?,
        AdderKind::CntFa2 => b.fa2()?,
        AdderKind::CntFa3 => b.fa3()?,
        AdderKind::CCmos => b.c_cmos(),
        AdderKind::Tga => b.tga(),
    }
    Ok(b.c)
}

struct Builder<'a> {
    c: Circuit,
    vdd: f64,
    params: &'a DesignParams,
}

impl<'a> Builder<'a> {
    fn new(vdd: f64, params: &'a DesignParams) -> Self {
        Self {
            c: Circuit::new(),
            vdd,
            params,
        }
    }

    fn pair(&mut self, band: Band, tubes: u32) -> Result<DevicePair, AdderError> {
        let pair = select_pair(band, self.vdd, self.params)?.with_tubes(tubes);
        verify_band(pair, band, self.vdd, self.params)?;
        pair.add_models(&mut self.c, self.params);
        Ok(pair)
    }

    fn function(&mut self, f: GateFunction) -> Result<DevicePair, AdderError> {
        let spec = GateSpec::synthesize(f, self.vdd, self.params)?;
        verify_band(spec.pair(), f.band(), self.vdd, self.params)?;
        spec.pair().add_models(&mut self.c, self.params);
        Ok(spec.pair())
    }

    /// Input capacitance of one inverter with `tubes` per device.
    fn gate_load(&self, tubes: u32) -> f64 {
        2.0 * tubes as f64 * self.params.gate_capacitance_per_tube
    }

    /// NOR3 and NAND3 stages on the carry divider, whose levels are pulled
    /// toward mid-rail by the gates hanging on it (`maj` included).
    fn nor_nand(&mut self, x: &str, maj: u32, tubes: u32) -> Result<(), AdderError> {
        let load = self.gate_load(maj) + 2.0 * self.gate_load(tubes);
        let divider = 3.0 * self.params.input_cap;
        for (name, f) in [("nor", GateFunction::Nor3), ("nand", GateFunction::Nand3)] {
            let pair = self.pair(f.band().loaded(divider, load), tubes)?;
            self.inv(name, x, name, pair);
        }
        Ok(())
    }

    fn cap(&mut self, name: &str, a: &str, b: &str, units: f64) {
        self.c.push(Element::capacitor(name, a, b, units * self.params.input_cap));
    }

    fn inv(&mut self, name: &str, input: &str, output: &str, pair: DevicePair) {
        push_inverter(&mut self.c, name, input, output, "vdd", "0", pair);
    }

    /// Three unit capacitors from the inputs onto `node`.
    fn divider(&mut self, prefix: &str, node: &str) {
        for input in ["a", "b", "c"] {
            self.cap(&format!("c{prefix}{input}"), input, node, 1.0);
        }
    }

    /// `nc` = majority-not of the inputs on node `x`, `cout` its inverse.
    fn carry(&mut self, x: &str, maj: DevicePair) -> Result<(), AdderError> {
        self.divider("", x);
        self.inv("maj", x, "nc", maj);
        let inv = self.function(GateFunction::Inverter)?;
        self.inv("cout", "nc", "cout", inv);
        Ok(())
    }

    fn proposed(&mut self) -> Result<(), AdderError> {
        let maj = self.function(GateFunction::MajorityNot)?;
        self.carry("x", maj)?;
        let tubes = self.params.tube_count;
        self.nor_nand("x", tubes, tubes)?;
        // sum = !(nor | nand & cout)
        let std = DevicePair::standard(self.params);
        let (n, p) = (std.n_model(), std.p_model());
        let c = &mut self.c;
        c.push(Element::cnfet("qs1n", "sum", "nor", "0", &n));
        c.push(Element::cnfet("qs2n", "sum", "nand", "s", &n));
        c.push(Element::cnfet("qs3n", "s", "cout", "0", &n));
        c.push(Element::cnfet("qs1p", "t", "nor", "vdd", &p));
        c.push(Element::cnfet("qs2p", "sum", "nand", "t", &p));
        c.push(Element::cnfet("qs3p", "sum", "cout", "t", &p));
        Ok(())
    }

    fn fa1(&mut self) -> Result<(), AdderError> {
        let maj = self.pair(GateFunction::MajorityNot.band(), self.params.driver_tube_count)?;
        self.carry("x1", maj)?;
        self.divider("s", "x2");
        self.cap("csn", "nc", "x2", 2.0);
        let gate = ThresholdGate::new(vec![1, 1, 1, 2], num_rational::Ratio::new(1, 2), true);
        let maj5 = self.pair(Band::of_gate(&gate), self.params.tube_count)?;
        self.inv("maj5", "x2", "nsum", maj5);
        let inv = self.function(GateFunction::Inverter)?;
        self.inv("sum", "nsum", "sum", inv);
        Ok(())
    }

    fn fa2(&mut self) -> Result<(), AdderError> {
        let maj = self.function(GateFunction::MajorityNot)?;
        self.carry("x", maj)?;
        self.nor_nand("x", self.params.tube_count, self.params.driver_tube_count)?;
        self.divider("s", "y");
        self.cap("csnand", "nand", "y", 2.0);
        self.cap("csnor", "nor", "y", 2.0);
        let gate = ThresholdGate::new(vec![1, 1, 1, 2, 2], num_rational::Ratio::new(1, 2), true);
        let maj7 = self.pair(Band::of_gate(&gate), self.params.tube_count)?;
        self.inv("maj7", "y", "sum", maj7);
        Ok(())
    }

    fn fa3(&mut self) -> Result<(), AdderError> {
        // x settles at (3k + nc)/10 and y at (x + nc/2)/1.5 (units of vdd):
        // x ∈ {0.1, 0.4, 0.6, 0.9}, y = 0.4 for even k and 0.6 for odd k
        let band = Band::new(0.4, 0.6);
        let maj = self.pair(band, self.params.driver_tube_count)?;
        self.carry("x", maj)?;
        self.cap("cxy", "x", "y", 1.0);
        self.cap("cny", "nc", "y", 0.5);
        let odd = self.pair(band, self.params.tube_count)?;
        self.inv("par", "y", "nsum", odd);
        let inv = self.function(GateFunction::Inverter)?;
        self.inv("sum", "nsum", "sum", inv);
        Ok(())
    }

    fn mos_models(&mut self) {
        let n = ModelCard::Mosfet(self.params.mosfet(Polarity::N));
        let p = ModelCard::Mosfet(self.params.mosfet(Polarity::P));
        self.c.add_model("nmos", n);
        self.c.add_model("pmos", p);
    }

    fn mn(&mut self, name: &str, d: &str, g: &str, s: &str) {
        self.c.push(Element::mosfet(name, d, g, s, "nmos"));
    }

    fn mp(&mut self, name: &str, d: &str, g: &str, s: &str) {
        self.c.push(Element::mosfet(name, d, g, s, "pmos"));
    }

    fn mos_inv(&mut self, name: &str, input: &str, output: &str) {
        self.mp(&format!("m{name}p"), output, input, "vdd");
        self.mn(&format!("m{name}n"), output, input, "0");
    }

    /// Transmission gate between `x` and `y`, on when `on` is high.
    fn tgate(&mut self, name: &str, x: &str, y: &str, on: &str, off: &str) {
        self.mn(&format!("m{name}n"), y, on, x);
        self.mp(&format!("m{name}p"), y, off, x);
    }

    fn c_cmos(&mut self) {
        self.mos_models();
        // ncout = !(ab + c(a + b))
        self.mn("mc1n", "ncout", "a", "k1");
        self.mn("mc2n", "k1", "b", "0");
        self.mn("mc3n", "ncout", "c", "k2");
        self.mn("mc4n", "k2", "a", "0");
        self.mn("mc5n", "k2", "b", "0");
        self.mp("mc1p", "j1", "a", "vdd");
        self.mp("mc2p", "ncout", "b", "j1");
        self.mp("mc3p", "ncout", "c", "j2");
        self.mp("mc4p", "j2", "a", "vdd");
        self.mp("mc5p", "j2", "b", "vdd");
        // nsum = !(abc + ncout(a + b + c))
        self.mn("ms1n", "nsum", "a", "k3");
        self.mn("ms2n", "k3", "b", "k4");
        self.mn("ms3n", "k4", "c", "0");
        self.mn("ms4n", "nsum", "ncout", "k5");
        self.mn("ms5n", "k5", "a", "0");
        self.mn("ms6n", "k5", "b", "0");
        self.mn("ms7n", "k5", "c", "0");
        self.mp("ms1p", "j3", "a", "vdd");
        self.mp("ms2p", "j4", "b", "j3");
        self.mp("ms3p", "nsum", "c", "j4");
        self.mp("ms4p", "nsum", "ncout", "j5");
        self.mp("ms5p", "j5", "a", "vdd");
        self.mp("ms6p", "j5", "b", "vdd");
        self.mp("ms7p", "j5", "c", "vdd");
        self.mos_inv("cout", "ncout", "cout");
        self.mos_inv("sum", "nsum", "sum");
    }

    fn tga(&mut self) {
        self.mos_models();
        self.mos_inv("ia", "a", "na");
        self.mos_inv("ib", "b", "nb");
        // p = a ? !b : b
        self.tgate("t1", "b", "p", "na", "a");
        self.tgate("t2", "nb", "p", "a", "na");
        self.mos_inv("ip", "p", "np");
        self.mos_inv("ic", "c", "nc");
        // sum = p ? !c : c
        self.tgate("t3", "c", "sum", "np", "p");
        self.tgate("t4", "nc", "sum", "p", "np");
        // cout = p ? c : a
        self.tgate("t5", "a", "cout", "np", "p");
        self.tgate("t6", "c", "cout", "p", "np");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::verify_adder_network;

    #[test]
    fn structural_counts() {
        let expect = [
            (AdderKind::Proposed, 14, 3),
            (AdderKind::CntFa1, 8, 7),
            (AdderKind::CntFa2, 10, 8),
            (AdderKind::CntFa3, 8, 5),
            (AdderKind::CCmos, 28, 0),
            (AdderKind::Tga, 20, 0),
        ];
        for (kind, t, c) in expect {
            let s = build_adder(kind, 0.9).unwrap().stats();
            assert_eq!((s.transistor_count, s.capacitor_count), (t, c), "{kind}");
        }
    }

    #[test]
    fn every_network_is_a_full_adder() {
        for kind in AdderKind::ALL {
            let report = verify_adder_network(&kind.logic_network()).unwrap();
            assert!(report.passed(), "{kind}: {:?}", report.mismatches);
        }
    }

    #[test]
    fn printed_two_weight_majority_is_not_an_adder() {
        // the four-argument form without c ties on 010
        let net = LogicNetwork::parse(
            "inputs a b c\nnc = !th 1/2 a b c\ncout = !th 1/2 nc\nnor = !th 1/6 a b c\n\
             nand = !th 5/6 a b c\nsum = !th 1/2 a b 2*nand 2*nor\noutputs sum cout",
        )
        .unwrap();
        assert!(!verify_adder_network(&net).unwrap().passed());
    }

    #[test]
    fn built_circuits_validate_at_both_supplies() {
        for vdd in [0.9, 0.65] {
            for kind in AdderKind::ALL {
                let c = build_adder(kind, vdd).unwrap();
                c.validate().unwrap();
                let nodes = c.nodes();
                for port in ["a", "b", "c", "sum", "cout", "vdd"] {
                    assert!(nodes.iter().any(|n| n == port), "{kind} lacks {port}");
                }
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in AdderKind::ALL {
            assert_eq!(kind.id().parse::<AdderKind>().unwrap(), kind);
        }
        assert_eq!("C-CMOS".parse::<AdderKind>().unwrap(), AdderKind::CCmos);
        assert!("cpl".parse::<AdderKind>().is_err());
    }
}
