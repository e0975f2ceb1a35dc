//! Flat element graph over named nodes, its SPICE-subset text form, and
//! subcircuit expansion.

mod flatten;
mod parse;
mod serialize;
pub mod value;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::device::{CnfetParams, DeviceError, MosfetParams};

pub use parse::parse;

/// The distinguished reference node.
pub const GROUND: &str = "0";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("line {line}:{column}: error[E001]: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: error[E002]: unknown model or subcircuit '{name}'")]
    UnknownModel { line: usize, name: String },
    #[error("line {line}: error[E003]: element '{element}' expects {expected} terminals, found {found}")]
    Arity {
        line: usize,
        element: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: error[E004]: duplicate element name '{name}' (first defined on line {first_line})")]
    DuplicateName {
        line: usize,
        name: String,
        first_line: usize,
    },
    #[error("line {line}: error[E005]: {message}")]
    InvalidValue { line: usize, message: String },
    #[error("line {line}: error[E006]: recursive subcircuit instantiation: {chain}")]
    SubcircuitCycle { line: usize, chain: String },
}

impl NetlistError {
    pub fn code(&self) -> &'static str {
        match self {
            NetlistError::Syntax { .. } => "E001",
            NetlistError::UnknownModel { .. } => "E002",
            NetlistError::Arity { .. } => "E003",
            NetlistError::DuplicateName { .. } => "E004",
            NetlistError::InvalidValue { .. } => "E005",
            NetlistError::SubcircuitCycle { .. } => "E006",
        }
    }

    pub fn line(&self) -> usize {
        match self {
            NetlistError::Syntax { line, .. }
            | NetlistError::UnknownModel { line, .. }
            | NetlistError::Arity { line, .. }
            | NetlistError::DuplicateName { line, .. }
            | NetlistError::InvalidValue { line, .. }
            | NetlistError::SubcircuitCycle { line, .. } => *line,
        }
    }
}

/// Independent voltage source waveform.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    Dc(f64),
    /// Breakpoints `(time s, level V)`, strictly increasing in time.
    Pwl(Vec<(f64, f64)>),
}

impl Waveform {
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            Waveform::Dc(v) => *v,
            Waveform::Pwl(points) => {
                let (first, last) = (points[0], points[points.len() - 1]);
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let idx = points.partition_point(|p| p.0 <= t);
                let (t0, v0) = points[idx - 1];
                let (t1, v1) = points[idx];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        let pts: &[(f64, f64)] = match self {
            Waveform::Dc(_) => &[],
            Waveform::Pwl(p) => p,
        };
        pts.iter().map(|p| p.0)
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            Waveform::Dc(v) if !v.is_finite() => Err("DC level must be finite".into()),
            Waveform::Dc(_) => Ok(()),
            Waveform::Pwl(p) if p.is_empty() => Err("PWL needs at least one breakpoint".into()),
            Waveform::Pwl(p) => {
                if p.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return Err("PWL breakpoints must be finite".into());
                }
                if p.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err("PWL times must be strictly increasing".into());
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Resistor(f64),
    Capacitor(f64),
    VoltageSource(Waveform),
    /// Terminals drain, gate, source.
    Cnfet { model: String },
    /// Terminals drain, gate, source.
    Mosfet { model: String },
    Instance { subckt: String },
}

impl ElementKind {
    pub fn letter(&self) -> char {
        match self {
            ElementKind::Resistor(_) => 'r',
            ElementKind::Capacitor(_) => 'c',
            ElementKind::VoltageSource(_) => 'v',
            ElementKind::Cnfet { .. } => 'q',
            ElementKind::Mosfet { .. } => 'm',
            ElementKind::Instance { .. } => 'x',
        }
    }

    /// Fixed terminal count; `None` for instances (set by the subcircuit).
    pub fn arity(&self) -> Option<usize> {
        match self {
            ElementKind::Resistor(_) | ElementKind::Capacitor(_) | ElementKind::VoltageSource(_) => {
                Some(2)
            }
            ElementKind::Cnfet { .. } | ElementKind::Mosfet { .. } => Some(3),
            ElementKind::Instance { .. } => None,
        }
    }

    pub fn is_transistor(&self) -> bool {
        matches!(self, ElementKind::Cnfet { .. } | ElementKind::Mosfet { .. })
    }
}

#[derive(Debug, Clone)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub nodes: Vec<String>,
    /// Source line, when parsed from text.
    pub line: Option<usize>,
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind && self.nodes == other.nodes
    }
}

fn lower(s: &str) -> String {
    s.to_ascii_lowercase()
}

impl Element {
    pub fn new(name: &str, kind: ElementKind, nodes: &[&str]) -> Self {
        Self {
            name: lower(name),
            kind,
            nodes: nodes.iter().map(|n| lower(n)).collect(),
            line: None,
        }
    }

    pub fn resistor(name: &str, a: &str, b: &str, ohms: f64) -> Self {
        Self::new(name, ElementKind::Resistor(ohms), &[a, b])
    }

    pub fn capacitor(name: &str, a: &str, b: &str, farads: f64) -> Self {
        Self::new(name, ElementKind::Capacitor(farads), &[a, b])
    }

    pub fn vsource(name: &str, pos: &str, neg: &str, waveform: Waveform) -> Self {
        Self::new(name, ElementKind::VoltageSource(waveform), &[pos, neg])
    }

    pub fn cnfet(name: &str, drain: &str, gate: &str, source: &str, model: &str) -> Self {
        Self::new(
            name,
            ElementKind::Cnfet { model: lower(model) },
            &[drain, gate, source],
        )
    }

    pub fn mosfet(name: &str, drain: &str, gate: &str, source: &str, model: &str) -> Self {
        Self::new(
            name,
            ElementKind::Mosfet { model: lower(model) },
            &[drain, gate, source],
        )
    }

    pub fn instance(name: &str, nodes: &[&str], subckt: &str) -> Self {
        Self::new(name, ElementKind::Instance { subckt: lower(subckt) }, nodes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelCard {
    Cnfet(CnfetParams),
    Mosfet(MosfetParams),
}

impl ModelCard {
    fn validate(&self) -> Result<(), DeviceError> {
        match self {
            ModelCard::Cnfet(p) => p.validate(),
            ModelCard::Mosfet(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Subckt {
    pub name: String,
    pub ports: Vec<String>,
    pub elements: Vec<Element>,
    pub line: Option<usize>,
}

impl PartialEq for Subckt {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.ports == other.ports && self.elements == other.elements
    }
}

impl Subckt {
    pub fn new(name: &str, ports: &[&str]) -> Self {
        Self {
            name: lower(name),
            ports: ports.iter().map(|p| lower(p)).collect(),
            elements: Vec::new(),
            line: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CircuitStats {
    pub transistor_count: usize,
    pub capacitor_count: usize,
    pub node_count: usize,
}

/// A node referenced by exactly one terminal: usually a typo.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lint {
    pub node: String,
    pub element: String,
    pub line: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    pub models: BTreeMap<String, ModelCard>,
    pub subckts: BTreeMap<String, Subckt>,
    pub elements: Vec<Element>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, element: Element) {
        self.elements.push(element);
    }

    pub fn add_model(&mut self, name: &str, card: ModelCard) {
        self.models.insert(lower(name), card);
    }

    pub fn add_subckt(&mut self, subckt: Subckt) {
        self.subckts.insert(subckt.name.clone(), subckt);
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        let name = lower(name);
        self.elements.iter().find(|e| e.name == name)
    }

    /// Ground first, then every other node in order of first reference.
    pub fn nodes(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = vec![GROUND.to_string()];
        seen.insert(GROUND.to_string());
        for n in self.elements.iter().flat_map(|e| e.nodes.iter()) {
            if seen.insert(n.clone()) {
                out.push(n.clone());
            }
        }
        out
    }

    pub fn has_instances(&self) -> bool {
        self.elements
            .iter()
            .any(|e| matches!(e.kind, ElementKind::Instance { .. }))
    }

    /// Counts by element kind; meaningful on a flattened circuit.
    pub fn stats(&self) -> CircuitStats {
        CircuitStats {
            transistor_count: self.elements.iter().filter(|e| e.kind.is_transistor()).count(),
            capacitor_count: self
                .elements
                .iter()
                .filter(|e| matches!(e.kind, ElementKind::Capacitor(_)))
                .count(),
            node_count: self.nodes().len() - 1,
        }
    }

    /// Nodes (other than ground) referenced by a single terminal.
    pub fn lint(&self) -> Vec<Lint> {
        let mut uses: HashMap<&str, (usize, &Element)> = HashMap::new();
        for e in &self.elements {
            for n in &e.nodes {
                uses.entry(n.as_str()).or_insert((0, e)).0 += 1;
            }
        }
        let mut out: Vec<Lint> = self
            .nodes()
            .iter()
            .filter(|n| n.as_str() != GROUND)
            .filter_map(|n| {
                let (count, e) = uses[n.as_str()];
                (count == 1).then(|| Lint {
                    node: n.clone(),
                    element: e.name.clone(),
                    line: e.line,
                })
            })
            .collect();
        out.sort_by(|a, b| a.line.cmp(&b.line).then(a.node.cmp(&b.node)));
        out
    }

    /// Checks model references, arities, values and name uniqueness.
    pub fn validate(&self) -> Result<(), NetlistError> {
        for (name, card) in &self.models {
            card.validate().map_err(|e| NetlistError::InvalidValue {
                line: 0,
                message: format!("model '{name}': {e}"),
            })?;
        }
        for sub in self.subckts.values() {
            self.validate_scope(&sub.elements)?;
        }
        self.validate_scope(&self.elements)
    }

    fn validate_scope(&self, elements: &[Element]) -> Result<(), NetlistError> {
        let mut names: HashMap<&str, usize> = HashMap::new();
        for e in elements {
            let line = e.line.unwrap_or(0);
            if let Some(first) = names.insert(e.name.as_str(), line) {
                return Err(NetlistError::DuplicateName {
                    line,
                    name: e.name.clone(),
                    first_line: first,
                });
            }
            let expected = match &e.kind {
                ElementKind::Instance { subckt } => match self.subckts.get(subckt) {
                    Some(s) => s.ports.len(),
                    None => {
                        return Err(NetlistError::UnknownModel {
                            line,
                            name: subckt.clone(),
                        })
                    }
                },
                kind => kind.arity().unwrap_or_default(),
            };
            if e.nodes.len() != expected {
                return Err(NetlistError::Arity {
                    line,
                    element: e.name.clone(),
                    expected,
                    found: e.nodes.len(),
                });
            }
            let invalid = |message: String| NetlistError::InvalidValue { line, message };
            match &e.kind {
                ElementKind::Resistor(r) if !(r.is_finite() && *r > 0.0) => {
                    return Err(invalid(format!("resistance of '{}' must be > 0", e.name)));
                }
                ElementKind::Capacitor(c) if !(c.is_finite() && *c > 0.0) => {
                    return Err(invalid(format!("capacitance of '{}' must be > 0", e.name)));
                }
                ElementKind::VoltageSource(w) => {
                    w.validate().map_err(|m| invalid(format!("'{}': {m}", e.name)))?
                }
                ElementKind::Cnfet { model } => match self.models.get(model) {
                    Some(ModelCard::Cnfet(_)) => {}
                    _ => {
                        return Err(NetlistError::UnknownModel {
                            line,
                            name: model.clone(),
                        })
                    }
                },
                ElementKind::Mosfet { model } => match self.models.get(model) {
                    Some(ModelCard::Mosfet(_)) => {}
                    _ => {
                        return Err(NetlistError::UnknownModel {
                            line,
                            name: model.clone(),
                        })
                    }
                },
                _ => {}
            }
        }
        Ok(())
    }

    /// Expands every subcircuit instance; see [`flatten`](Self::flatten).
    pub fn flatten(&self) -> Result<Circuit, NetlistError> {
        flatten::flatten(self)
    }

    /// Canonical text form: lowercase, single spaces, elements in order.
    pub fn to_netlist(&self) -> String {
        serialize::serialize(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pwl_interpolates_and_clamps() {
        let w = Waveform::Pwl(vec![(1.0, 0.0), (2.0, 1.0), (4.0, 1.0)]);
        assert_eq!(w.value_at(0.0), 0.0);
        assert_eq!(w.value_at(1.5), 0.5);
        assert_eq!(w.value_at(3.0), 1.0);
        assert_eq!(w.value_at(9.0), 1.0);
        assert!(Waveform::Pwl(vec![(1.0, 0.0), (1.0, 1.0)]).validate().is_err());
    }

    #[test]
    fn lint_flags_single_use_nodes() {
        let mut c = Circuit::new();
        c.push(Element::vsource("v1", "in", "0", Waveform::Dc(1.0)));
        c.push(Element::resistor("r1", "in", "out", 1e3));
        c.push(Element::resistor("r2", "otu", "0", 1e3));
        let lints: Vec<_> = c.lint().into_iter().map(|l| l.node).collect();
        assert_eq!(lints, vec!["otu".to_string(), "out".to_string()]);
    }

    #[test]
    fn stats_counts_kinds() {
        let mut c = Circuit::new();
        c.push(Element::vsource("v1", "in", "0", Waveform::Dc(1.0)));
        c.push(Element::capacitor("c1", "in", "x", 1e-15));
        let s = c.stats();
        assert_eq!((s.transistor_count, s.capacitor_count, s.node_count), (0, 1, 2));
    }
}
