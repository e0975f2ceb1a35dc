//! Gate-level threshold-logic evaluation, used as the independent reference
//! for every analog adder's Boolean behavior.
//!
//! A capacitive-input inverter sees the weighted mean of its binary inputs
//! (in units of vdd) and switches when that mean crosses its threshold, so
//! each gate is `inverting XOR (Σ wᵢxᵢ / Σ wᵢ > threshold)` with an exact
//! rational threshold.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("majority needs an odd number of at least 3 bits, got {0}")]
    MajorityArity(usize),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("signal '{0}' is used before it is defined")]
    Undefined(String),
    #[error("signal '{0}' is defined twice")]
    Redefined(String),
    #[error("gate '{0}' has zero total weight")]
    ZeroWeight(String),
    #[error("missing value for primary input '{0}'")]
    MissingInput(String),
    #[error("network lacks required port '{0}'")]
    MissingPort(String),
}

/// 1 iff more than half the bits are 1.
pub fn majority(bits: &[bool]) -> Result<bool, OracleError> {
    if bits.len() < 3 || bits.len().is_multiple_of(2) {
        return Err(OracleError::MajorityArity(bits.len()));
    }
    Ok(2 * bits.iter().filter(|&&b| b).count() > bits.len())
}

/// `(sum, cout)` with `cout = Maj(a, b, c)` and
/// `sum = Maj(a, b, c, ¬cout, ¬cout)`.
pub fn fa_truth(a: bool, b: bool, c: bool) -> (bool, bool) {
    let cout = majority(&[a, b, c]).expect("three inputs");
    let sum = majority(&[a, b, c, !cout, !cout]).expect("five inputs");
    (sum, cout)
}

/// The eight input vectors `(a, b, c)` in binary order.
pub fn all_vectors() -> impl Iterator<Item = [bool; 3]> {
    (0u8..8).map(|v| [v & 4 != 0, v & 2 != 0, v & 1 != 0])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdGate {
    pub weights: Vec<u32>,
    /// In units of vdd.
    pub threshold: Ratio<u32>,
    pub inverting: bool,
}

impl ThresholdGate {
    pub fn new(weights: Vec<u32>, threshold: Ratio<u32>, inverting: bool) -> Self {
        Self {
            weights,
            threshold,
            inverting,
        }
    }

    pub fn majority_not(n: usize) -> Self {
        Self::new(vec![1; n], Ratio::new(1, 2), true)
    }

    pub fn eval(&self, inputs: &[bool]) -> bool {
        let total: u32 = self.weights.iter().sum();
        let on: u32 = self
            .weights
            .iter()
            .zip(inputs)
            .filter(|(_, &x)| x)
            .map(|(w, _)| w)
            .sum();
        // on/total > p/q  ⇔  on·q > p·total
        let above = u64::from(on) * u64::from(*self.threshold.denom())
            > u64::from(*self.threshold.numer()) * u64::from(total);
        above != self.inverting
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub output: String,
    pub gate: ThresholdGate,
    pub inputs: Vec<String>,
}

/// Acyclic network of threshold gates in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicNetwork {
    pub inputs: Vec<String>,
    pub gates: Vec<Gate>,
    pub outputs: Vec<String>,
}

impl LogicNetwork {
    pub fn new(inputs: &[&str], gates: Vec<Gate>, outputs: &[&str]) -> Result<Self, OracleError> {
        let net = Self {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            gates,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<(), OracleError> {
        let mut defined: HashSet<&str> = HashSet::new();
        for i in &self.inputs {
            if !defined.insert(i) {
                return Err(OracleError::Redefined(i.clone()));
            }
        }
        for g in &self.gates {
            if let Some(missing) = g.inputs.iter().find(|s| !defined.contains(s.as_str())) {
                return Err(OracleError::Undefined(missing.clone()));
            }
            if g.gate.weights.iter().sum::<u32>() == 0 || g.gate.weights.len() != g.inputs.len() {
                return Err(OracleError::ZeroWeight(g.output.clone()));
            }
            if !defined.insert(&g.output) {
                return Err(OracleError::Redefined(g.output.clone()));
            }
        }
        if let Some(missing) = self.outputs.iter().find(|s| !defined.contains(s.as_str())) {
            return Err(OracleError::Undefined(missing.clone()));
        }
        Ok(())
    }

    /// Parses the text form:
    ///
    /// ```text
    /// inputs a b c
    /// ncout = !th 1/2 a b c      # inverting threshold gate
    /// sum = th 1/2 a b c 2*ncout  # weight 2 on ncout
    /// outputs sum ncout
    /// ```
    pub fn parse(text: &str) -> Result<Self, OracleError> {
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: &str| OracleError::Syntax {
                line,
                message: message.to_string(),
            };
            let mut words = content.split_whitespace();
            let head = words.next().unwrap_or_default();
            match head {
                "inputs" => inputs.extend(words.map(str::to_string)),
                "outputs" => outputs.extend(words.map(str::to_string)),
                _ => {
                    if words.next() != Some("=") {
                        return Err(err("expected '<signal> = [!]th p/q inputs...'"));
                    }
                    let inverting = match words.next() {
                        Some("th") => false,
                        Some("!th") => true,
                        _ => return Err(err("expected 'th' or '!th'")),
                    };
                    let threshold = words
                        .next()
                        .and_then(|t| t.split_once('/'))
                        .and_then(|(p, q)| Some((p.parse::<u32>().ok()?, q.parse::<u32>().ok()?)))
                        .filter(|&(_, q)| q > 0)
                        .map(|(p, q)| Ratio::new(p, q))
                        .ok_or_else(|| err("threshold must be p/q"))?;
                    let mut weights = Vec::new();
                    let mut gate_inputs = Vec::new();
                    for w in words {
                        let (weight, name) = match w.split_once('*') {
                            Some((k, s)) => (k.parse::<u32>().map_err(|_| err("bad weight"))?, s),
                            None => (1, w),
                        };
                        weights.push(weight);
                        gate_inputs.push(name.to_string());
                    }
                    if gate_inputs.is_empty() {
                        return Err(err("gate has no inputs"));
                    }
                    gates.push(Gate {
                        output: head.to_string(),
                        gate: ThresholdGate::new(weights, threshold, inverting),
                        inputs: gate_inputs,
                    });
                }
            }
        }
        let net = Self {
            inputs,
            gates,
            outputs,
        };
        net.validate()?;
        Ok(net)
    }

    /// Evaluates every gate in order; returns the named outputs.
    pub fn eval(&self, assignment: &HashMap<String, bool>) -> Result<HashMap<String, bool>, OracleError> {
        let mut values: HashMap<&str, bool> = HashMap::new();
        for i in &self.inputs {
            let v = *assignment
                .get(i)
                .ok_or_else(|| OracleError::MissingInput(i.clone()))?;
            values.insert(i, v);
        }
        for g in &self.gates {
            let ins: Vec<bool> = g.inputs.iter().map(|s| values[s.as_str()]).collect();
            values.insert(&g.output, g.gate.eval(&ins));
        }
        Ok(self
            .outputs
            .iter()
            .map(|o| (o.clone(), values[o.as_str()]))
            .collect())
    }
}

impl fmt::Display for LogicNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inputs {}", self.inputs.join(" "))?;
        for g in &self.gates {
            write!(
                f,
                "{} = {}th {}/{}",
                g.output,
                if g.gate.inverting { "!" } else { "" },
                g.gate.threshold.numer(),
                g.gate.threshold.denom()
            )?;
            for (w, s) in g.gate.weights.iter().zip(&g.inputs) {
                if *w == 1 {
                    write!(f, " {s}")?;
                } else {
                    write!(f, " {w}*{s}")?;
                }
            }
            writeln!(f)?;
        }
        writeln!(f, "outputs {}", self.outputs.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub inputs: [bool; 3],
    pub output: String,
    pub expected: bool,
    pub actual: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdderReport {
    pub vectors_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl AdderReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// Input vectors with at least one wrong output.
    pub fn failing_vectors(&self) -> usize {
        let set: HashSet<[bool; 3]> = self.mismatches.iter().map(|m| m.inputs).collect();
        set.len()
    }

    pub fn mismatches_on(&self, output: &str) -> usize {
        self.mismatches.iter().filter(|m| m.output == output).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Exhaustive comparison of a network with inputs `a b c` and outputs
/// `sum cout` against [`fa_truth`].
pub fn verify_adder_network(net: &LogicNetwork) -> Result<AdderReport, OracleError> {
    for port in ["a", "b", "c"] {
        if !net.inputs.iter().any(|i| i == port) {
            return Err(OracleError::MissingPort(port.into()));
        }
    }
    for port in ["sum", "cout"] {
        if !net.outputs.iter().any(|o| o == port) {
            return Err(OracleError::MissingPort(port.into()));
        }
    }
    let mut mismatches = Vec::new();
    for v in all_vectors() {
        let assignment: HashMap<String, bool> = ["a", "b", "c"]
            .iter()
            .zip(v)
            .map(|(k, b)| (k.to_string(), b))
            .collect();
        let out = net.eval(&assignment)?;
        let (sum, cout) = fa_truth(v[0], v[1], v[2]);
        for (name, expected) in [("sum", sum), ("cout", cout)] {
            let actual = out[name];
            if actual != expected {
                mismatches.push(Mismatch {
                    inputs: v,
                    output: name.to_string(),
                    expected,
                    actual,
                });
            }
        }
    }
    Ok(AdderReport {
        vectors_checked: 8,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gate(text: &str) -> LogicNetwork {
        LogicNetwork::parse(text).unwrap()
    }

    fn run(net: &LogicNetwork, bits: &[(&str, bool)]) -> HashMap<String, bool> {
        let a = bits.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        net.eval(&a).unwrap()
    }

    #[test]
    fn majority_examples() {
        assert!(majority(&[true, true, false]).unwrap());
        assert!(!majority(&[false, false, false]).unwrap());
        assert!(majority(&[true, false, true, false, true]).unwrap());
        assert_eq!(majority(&[true, false]), Err(OracleError::MajorityArity(2)));
        assert_eq!(majority(&[true]), Err(OracleError::MajorityArity(1)));
    }

    #[test]
    fn fa_truth_examples() {
        assert_eq!(fa_truth(true, true, true), (true, true));
        assert_eq!(fa_truth(true, false, false), (true, false));
        assert_eq!(fa_truth(true, true, false), (false, true));
    }

    #[test]
    fn five_input_majority_is_parity() {
        for [a, b, c] in all_vectors() {
            let (sum, cout) = fa_truth(a, b, c);
            assert_eq!(sum, a ^ b ^ c);
            assert_eq!(cout, (a && b) || (a && c) || (b && c));
        }
    }

    #[test]
    fn single_gate_examples() {
        let maj = gate("inputs a b c\ny = !th 1/2 a b c\noutputs y");
        assert!(!run(&maj, &[("a", true), ("b", true), ("c", false)])["y"]);
        let nand = gate("inputs a b c\ny = !th 5/6 a b c\noutputs y");
        assert!(run(&nand, &[("a", true), ("b", true), ("c", false)])["y"]);
        let nor = gate("inputs a b c\ny = !th 1/6 a b c\noutputs y");
        assert!(run(&nor, &[("a", false), ("b", false), ("c", false)])["y"]);
    }

    #[test]
    fn nand_nor_encodings_match_boolean() {
        let nand = ThresholdGate::new(vec![1, 1, 1], Ratio::new(5, 6), true);
        let nor = ThresholdGate::new(vec![1, 1, 1], Ratio::new(1, 6), true);
        for v in all_vectors() {
            assert_eq!(nand.eval(&v), !(v[0] && v[1] && v[2]));
            assert_eq!(nor.eval(&v), !(v[0] || v[1] || v[2]));
        }
    }

    #[test]
    fn majority_symmetric_and_self_dual() {
        for v in all_vectors() {
            let m = majority(&v).unwrap();
            let perm = [v[2], v[0], v[1]];
            assert_eq!(majority(&perm).unwrap(), m);
            let neg = [!v[0], !v[1], !v[2]];
            assert_eq!(majority(&neg).unwrap(), !m);
        }
    }

    const ADDER: &str = "inputs a b c\n\
                         ncout = !th 1/2 a b c\n\
                         cout = !th 1/2 ncout\n\
                         sum = th 1/2 a b c 2*ncout\n\
                         outputs sum cout\n";

    #[test]
    fn adder_network_verifies() {
        let report = verify_adder_network(&gate(ADDER)).unwrap();
        assert!(report.passed());
        assert_eq!(report.vectors_checked, 8);
    }

    #[test]
    fn swapped_outputs() {
        // sum and cout differ on the six vectors with one or two ones
        let swapped = gate(
            "inputs a b c\n\
             ncout = !th 1/2 a b c\n\
             co = !th 1/2 ncout\n\
             s = th 1/2 a b c 2*ncout\n\
             sum = th 1/2 co\n\
             cout = th 1/2 s\n\
             outputs sum cout",
        );
        let report = verify_adder_network(&swapped).unwrap();
        assert_eq!(report.failing_vectors(), 6);
        assert_eq!(report.mismatches_on("sum"), 6);
        assert_eq!(report.mismatches_on("cout"), 6);
    }

    #[test]
    fn constant_zero_outputs() {
        let zero = gate("inputs a b c\nsum = th 1/1 a\ncout = th 1/1 a\noutputs sum cout");
        let report = verify_adder_network(&zero).unwrap();
        assert_eq!(report.failing_vectors(), 7);
        assert_eq!(report.mismatches_on("sum"), 4);
        assert_eq!(report.mismatches_on("cout"), 4);
        assert!(report.to_json().contains("\"mismatches\""));
    }

    #[test]
    fn text_form_round_trips() {
        let net = gate(ADDER);
        assert_eq!(LogicNetwork::parse(&net.to_string()).unwrap(), net);
    }

    #[test]
    fn rejects_bad_networks() {
        assert_eq!(
            LogicNetwork::parse("inputs a\ny = th 1/2 z\noutputs y"),
            Err(OracleError::Undefined("z".into()))
        );
        assert!(matches!(
            LogicNetwork::parse("inputs a\ny th 1/2 a"),
            Err(OracleError::Syntax { line: 2, .. })
        ));
        assert_eq!(
            LogicNetwork::parse("inputs a\ny = th 1/2 0*a\noutputs y"),
            Err(OracleError::ZeroWeight("y".into()))
        );
        let missing = gate("inputs a b\nsum = th 1/2 a\ncout = th 1/2 b\noutputs sum cout");
        assert_eq!(verify_adder_network(&missing), Err(OracleError::MissingPort("c".into())));
    }
}
