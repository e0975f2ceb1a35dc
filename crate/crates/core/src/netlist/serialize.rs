use std::fmt::Write;

use crate::device::Polarity;

use super::value::format_value as fv;
use super::{Circuit, Element, ElementKind, ModelCard, Waveform};

fn polarity(p: Polarity) -> &'static str {
    match p {
        Polarity::N => "n",
        Polarity::P => "p",
    }
}

pub(super) fn serialize(c: &Circuit) -> String {
    let mut out = String::new();
    for (name, card) in &c.models {
        match card {
            ModelCard::Cnfet(p) => writeln!(
                out,
                ".model {name} cnfet polarity={} n={} m={} tubes={} kp={} a={} cg={}",
                polarity(p.polarity),
                p.chirality.n(),
                p.chirality.m(),
                p.tube_count,
                fv(p.transconductance_per_tube),
                fv(p.lattice_constant),
                fv(p.gate_capacitance_per_tube),
            ),
            ModelCard::Mosfet(p) => writeln!(
                out,
                ".model {name} {} vth={} kp={} lambda={} cg={}",
                match p.polarity {
                    Polarity::N => "nmos",
                    Polarity::P => "pmos",
                },
                fv(p.threshold),
                fv(p.transconductance),
                fv(p.channel_length_modulation),
                fv(p.gate_capacitance),
            ),
        }
        .expect("write to String");
    }
    for sub in c.subckts.values() {
        let mut header = format!(".subckt {}", sub.name);
        for p in &sub.ports {
            header.push(' ');
            header.push_str(p);
        }
        out.push_str(&header);
        out.push('\n');
        for e in &sub.elements {
            out.push_str(&element_line(e));
            out.push('\n');
        }
        out.push_str(&format!(".ends {}\n", sub.name));
    }
    for e in &c.elements {
        out.push_str(&element_line(e));
        out.push('\n');
    }
    out
}

pub(super) fn element_line(e: &Element) -> String {
    let mut parts = vec![e.name.clone()];
    parts.extend(e.nodes.iter().cloned());
    match &e.kind {
        ElementKind::Resistor(v) | ElementKind::Capacitor(v) => parts.push(fv(*v)),
        ElementKind::VoltageSource(Waveform::Dc(v)) => {
            parts.push("dc".into());
            parts.push(fv(*v));
        }
        ElementKind::VoltageSource(Waveform::Pwl(points)) => {
            parts.push("pwl".into());
            for (t, v) in points {
                parts.push(fv(*t));
                parts.push(fv(*v));
            }
        }
        ElementKind::Cnfet { model } | ElementKind::Mosfet { model } => parts.push(model.clone()),
        ElementKind::Instance { subckt } => parts.push(subckt.clone()),
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use crate::netlist::parse;

    #[test]
    fn canonical_form() {
        let c = parse("V1  IN 0   DC 0.9\nR1 in OUT 1k\nC1 out 0 1f").unwrap();
        assert_eq!(c.to_netlist(), "v1 in 0 dc 9e-1\nr1 in out 1e3\nc1 out 0 1e-15\n");
    }

    #[test]
    fn reparse_is_fixed_point() {
        let text = ".model qn cnfet polarity=n n=19\n.model mp pmos vth=0.3 kp=1e-4\n\
                    .subckt inv a y vdd\nQn y a 0 qn\nMp y a vdd mp\n.ends\n\
                    Vdd vdd 0 0.9\nVin a 0 PWL(0 0 10p 0.9)\nX1 a y vdd inv\n";
        let c = parse(text).unwrap();
        let once = c.to_netlist();
        let c2 = parse(&once).unwrap();
        assert_eq!(c2, c);
        assert_eq!(c2.to_netlist(), once);
    }
}
