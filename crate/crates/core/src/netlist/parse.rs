//! Line-oriented parser for the SPICE subset.
//!
//! ```text
//! * comment
//! V<name> n+ n- [DC] <value> | PWL(t v t v ...)
//! R<name> a b <value>
//! C<name> a b <value>
//! M<name> d g s <nmos|pmos model>
//! Q<name> d g s <cnfet model>
//! X<name> nodes... <subckt>
//! .model <name> cnfet polarity=n|p n=<int> m=<int> [tubes= kp= a= cg=]
//! .model <name> nmos|pmos vth= kp= [lambda= cg=]
//! .subckt <name> ports... / .ends [name]
//! .end
//! ```

use crate::device::{
    Chirality, CnfetParams, MosfetParams, Polarity, DEFAULT_GATE_CAPACITANCE_PER_TUBE,
    DEFAULT_LATTICE_CONSTANT_NM, DEFAULT_TRANSCONDUCTANCE_PER_TUBE,
};

use super::value::parse_value;
use super::{Circuit, Element, ElementKind, ModelCard, NetlistError, Subckt, Waveform};

#[derive(Debug, Clone)]
struct Token {
    text: String,
    column: usize,
}

struct Line {
    number: usize,
    tokens: Vec<Token>,
}

fn tokenize(number: usize, raw: &str) -> Line {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let is_sep = |c: char| c.is_whitespace() || c == '(' || c == ')' || c == ',';
    for (i, ch) in raw.chars().enumerate() {
        if is_sep(ch) {
            if !current.is_empty() {
                tokens.push(Token {
                    text: std::mem::take(&mut current),
                    column: start + 1,
                });
            }
        } else {
            if current.is_empty() {
                start = i;
            }
            current.push(ch.to_ascii_lowercase());
        }
    }
    if !current.is_empty() {
        tokens.push(Token {
            text: current,
            column: start + 1,
        });
    }
    // glue `key = value` and `key= value` into one token
    let mut glued: Vec<Token> = Vec::with_capacity(tokens.len());
    for t in tokens {
        let joins = glued
            .last()
            .is_some_and(|prev| prev.text.ends_with('=') || t.text.starts_with('='));
        match glued.last_mut() {
            Some(prev) if joins => prev.text.push_str(&t.text),
            _ => glued.push(t),
        }
    }
    Line {
        number,
        tokens: glued,
    }
}

/// Joins `+` continuation lines and drops comments and blank lines.
fn logical_lines(text: &str) -> Vec<Line> {
    let mut out: Vec<Line> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let raw = raw.split(';').next().unwrap_or("");
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('+') {
            let offset = raw.len() - rest.len();
            let cont = tokenize(number, rest);
            if let Some(prev) = out.last_mut() {
                prev.tokens.extend(cont.tokens.into_iter().map(|mut t| {
                    t.column += offset;
                    t
                }));
                continue;
            }
        }
        out.push(tokenize(number, raw));
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn value_of(line: usize, tok: &Token) -> Result<f64, NetlistError> {
    parse_value(&tok.text)
        .ok_or_else(|| syntax(line, tok.column, format!("invalid number '{}'", tok.text)))
}

/// Parses and validates a netlist.
pub fn parse(text: &str) -> Result<Circuit, NetlistError> {
    let mut circuit = Circuit::new();
    let mut open: Option<Subckt> = None;

    for line in logical_lines(text) {
        let first = &line.tokens[0];
        if first.text.starts_with('.') {
            match first.text.as_str() {
                ".end" => break,
                ".model" => {
                    let (name, card) = parse_model(&line)?;
                    if circuit.models.contains_key(&name) {
                        return Err(NetlistError::InvalidValue {
                            line: line.number,
                            message: format!("model '{name}' defined twice"),
                        });
                    }
                    circuit.models.insert(name, card);
                }
                ".subckt" => {
                    if open.is_some() {
                        return Err(syntax(line.number, first.column, "nested .subckt definition"));
                    }
                    let name = line
                        .tokens
                        .get(1)
                        .ok_or_else(|| syntax(line.number, first.column, ".subckt needs a name"))?;
                    if circuit.subckts.contains_key(&name.text) {
                        return Err(NetlistError::InvalidValue {
                            line: line.number,
                            message: format!("subcircuit '{}' defined twice", name.text),
                        });
                    }
                    let ports: Vec<&str> = line.tokens[2..].iter().map(|t| t.text.as_str()).collect();
                    let mut sub = Subckt::new(&name.text, &ports);
                    sub.line = Some(line.number);
                    open = Some(sub);
                }
                ".ends" => {
                    let sub = open
                        .take()
                        .ok_or_else(|| syntax(line.number, first.column, ".ends without .subckt"))?;
                    if let Some(tag) = line.tokens.get(1) {
                        if tag.text != sub.name {
                            return Err(syntax(
                                line.number,
                                tag.column,
                                format!(".ends {} closes .subckt {}", tag.text, sub.name),
                            ));
                        }
                    }
                    circuit.add_subckt(sub);
                }
                other => {
                    return Err(syntax(
                        line.number,
                        first.column,
                        format!("unsupported control card '{other}'"),
                    ))
                }
            }
            continue;
        }
        let element = parse_element(&line)?;
        match open.as_mut() {
            Some(sub) => sub.elements.push(element),
            None => circuit.elements.push(element),
        }
    }
    if let Some(sub) = open {
        return Err(syntax(
            sub.line.unwrap_or(0),
            1,
            format!(".subckt {} is never closed", sub.name),
        ));
    }
    circuit.validate()?;
    Ok(circuit)
}

fn parse_element(line: &Line) -> Result<Element, NetlistError> {
    let toks = &line.tokens;
    let name = &toks[0];
    let n = line.number;
    let letter = name.text.chars().next().unwrap_or(' ');
    let node_list = |count: usize| -> Vec<String> {
        toks[1..=count.min(toks.len() - 1)]
            .iter()
            .map(|t| t.text.clone())
            .collect()
    };
    let arity = |expected: usize, found: usize| NetlistError::Arity {
        line: n,
        element: name.text.clone(),
        expected,
        found,
    };
    let (kind, nodes) = match letter {
        'r' | 'c' => {
            if toks.len() != 4 {
                return Err(arity(2, toks.len().saturating_sub(2)));
            }
            let v = value_of(n, &toks[3])?;
            let kind = if letter == 'r' {
                ElementKind::Resistor(v)
            } else {
                ElementKind::Capacitor(v)
            };
            (kind, node_list(2))
        }
        'v' => {
            if toks.len() < 4 {
                return Err(arity(2, toks.len().saturating_sub(2)));
            }
            (ElementKind::VoltageSource(parse_waveform(line)?), node_list(2))
        }
        'q' | 'm' => {
            if toks.len() != 5 {
                return Err(arity(3, toks.len().saturating_sub(2)));
            }
            let model = toks[4].text.clone();
            let kind = if letter == 'q' {
                ElementKind::Cnfet { model }
            } else {
                ElementKind::Mosfet { model }
            };
            (kind, node_list(3))
        }
        'x' => {
            if toks.len() < 2 {
                return Err(syntax(n, name.column, "instance needs a subcircuit name"));
            }
            let subckt = toks[toks.len() - 1].text.clone();
            (ElementKind::Instance { subckt }, node_list(toks.len() - 2))
        }
        _ => {
            return Err(syntax(
                n,
                name.column,
                format!("unknown element type '{}'", name.text),
            ))
        }
    };
    Ok(Element {
        name: name.text.clone(),
        kind,
        nodes,
        line: Some(n),
    })
}

fn parse_waveform(line: &Line) -> Result<Waveform, NetlistError> {
    let n = line.number;
    let rest = &line.tokens[3..];
    match rest[0].text.as_str() {
        "dc" => {
            if rest.len() != 2 {
                let col = rest.get(2).unwrap_or(&rest[0]).column;
                return Err(syntax(n, col, "DC source takes exactly one value"));
            }
            Ok(Waveform::Dc(value_of(n, &rest[1])?))
        }
        "pwl" => {
            let values = rest[1..]
                .iter()
                .map(|t| value_of(n, t))
                .collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() || values.len() % 2 != 0 {
                return Err(syntax(n, rest[0].column, "PWL needs (time, value) pairs"));
            }
            let points: Vec<(f64, f64)> = values.chunks(2).map(|c| (c[0], c[1])).collect();
            if let Some(i) = points.windows(2).position(|w| w[1].0 <= w[0].0) {
                return Err(syntax(
                    n,
                    rest[1 + 2 * (i + 1)].column,
                    "PWL times must be strictly increasing",
                ));
            }
            Ok(Waveform::Pwl(points))
        }
        _ => {
            if rest.len() != 1 {
                return Err(syntax(n, rest[1].column, "unexpected token after source value"));
            }
            Ok(Waveform::Dc(value_of(n, &rest[0])?))
        }
    }
}

fn parse_model(line: &Line) -> Result<(String, ModelCard), NetlistError> {
    let n = line.number;
    let toks = &line.tokens;
    if toks.len() < 3 {
        return Err(syntax(n, toks[0].column, ".model needs a name and a type"));
    }
    let name = toks[1].text.clone();
    let kind = &toks[2];
    let mut params: Vec<(&str, &Token)> = Vec::new();
    for t in &toks[3..] {
        let (k, v) = t
            .text
            .split_once('=')
            .ok_or_else(|| syntax(n, t.column, format!("expected key=value, found '{}'", t.text)))?;
        if v.is_empty() {
            return Err(syntax(n, t.column, format!("missing value for '{k}'")));
        }
        params.push((k, t));
    }
    let raw = |t: &Token| t.text.split_once('=').map(|(_, v)| v.to_string()).unwrap_or_default();
    let num = |t: &Token| {
        let v = raw(t);
        parse_value(&v).ok_or_else(|| syntax(n, t.column, format!("invalid number '{v}'")))
    };
    let int = |t: &Token| {
        let v = raw(t);
        v.parse::<u32>()
            .map_err(|_| syntax(n, t.column, format!("expected a non-negative integer, found '{v}'")))
    };
    let invalid = |message: String| NetlistError::InvalidValue { line: n, message };

    let card = match kind.text.as_str() {
        "cnfet" => {
            let mut polarity = None;
            let (mut cn, mut cm) = (None, 0u32);
            let mut tubes = 3u32;
            let mut kp = DEFAULT_TRANSCONDUCTANCE_PER_TUBE;
            let mut lattice = DEFAULT_LATTICE_CONSTANT_NM;
            let mut cg = DEFAULT_GATE_CAPACITANCE_PER_TUBE;
            for (k, t) in &params {
                match *k {
                    "polarity" | "type" => {
                        polarity = Some(match raw(t).as_str() {
                            "n" => Polarity::N,
                            "p" => Polarity::P,
                            other => return Err(syntax(n, t.column, format!("polarity must be n or p, found '{other}'"))),
                        })
                    }
                    "n" => cn = Some(int(t)?),
                    "m" => cm = int(t)?,
                    "tubes" => tubes = int(t)?,
                    "kp" => kp = num(t)?,
                    "a" => lattice = num(t)?,
                    "cg" => cg = num(t)?,
                    other => return Err(syntax(n, t.column, format!("unknown cnfet parameter '{other}'"))),
                }
            }
            let polarity = polarity.ok_or_else(|| invalid(format!("model '{name}' needs polarity=n|p")))?;
            let cn = cn.ok_or_else(|| invalid(format!("model '{name}' needs chirality n=")))?;
            let chirality = Chirality::new(cn, cm).map_err(|e| invalid(format!("model '{name}': {e}")))?;
            ModelCard::Cnfet(CnfetParams {
                chirality,
                polarity,
                tube_count: tubes,
                transconductance_per_tube: kp,
                lattice_constant: lattice,
                gate_capacitance_per_tube: cg,
            })
        }
        "nmos" | "pmos" => {
            let polarity = if kind.text == "nmos" { Polarity::N } else { Polarity::P };
            let (mut vth, mut kp, mut lambda, mut cg) = (None, None, 0.0, 0.0);
            for (k, t) in &params {
                match *k {
                    "vth" | "vto" => vth = Some(num(t)?.abs()),
                    "kp" => kp = Some(num(t)?),
                    "lambda" => lambda = num(t)?,
                    "cg" => cg = num(t)?,
                    other => return Err(syntax(n, t.column, format!("unknown mosfet parameter '{other}'"))),
                }
            }
            ModelCard::Mosfet(MosfetParams {
                polarity,
                threshold: vth.ok_or_else(|| invalid(format!("model '{name}' needs vth=")))?,
                transconductance: kp.ok_or_else(|| invalid(format!("model '{name}' needs kp=")))?,
                channel_length_modulation: lambda,
                gate_capacitance: cg,
            })
        }
        other => return Err(syntax(n, kind.column, format!("unknown model type '{other}'"))),
    };
    card.validate()
        .map_err(|e| invalid(format!("model '{name}': {e}")))?;
    Ok((name, card))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_rc() {
        let c = parse("V1 in 0 DC 0.9\nR1 in out 1k\nC1 out 0 1f").unwrap();
        assert_eq!(c.elements.len(), 3);
        assert_eq!(c.nodes(), vec!["0", "in", "out"]);
        assert_eq!(c.elements[1].kind, ElementKind::Resistor(1e3));
        assert_eq!(c.elements[2].kind, ElementKind::Capacitor(1e-15));
    }

    #[test]
    fn crlf_comments_and_continuations() {
        let text = "* title\r\nV1 in 0 PWL(0 0\r\n+ 1n 0.9) ; ramp\r\nR1 in 0 1k\r\n";
        let c = parse(text).unwrap();
        assert_eq!(
            c.elements[0].kind,
            ElementKind::VoltageSource(Waveform::Pwl(vec![(0.0, 0.0), (1e-9, 0.9)]))
        );
        assert_eq!(c.elements[0].line, Some(2));
    }

    #[test]
    fn case_insensitive() {
        let c = parse(".MODEL QN CNFET POLARITY=N N=19 M=0\nQ1 OUT IN 0 qn\nV1 IN 0 1").unwrap();
        assert_eq!(c.elements[0].nodes, vec!["out", "in", "0"]);
        assert!(c.models.contains_key("qn"));
    }

    #[test]
    fn unknown_subckt_is_unknown_model() {
        let err = parse("XQ a b q").unwrap_err();
        assert_eq!(err.code(), "E002");
        assert_eq!(err.line(), 1);
    }

    #[test]
    fn unknown_transistor_model() {
        let err = parse("R1 a 0 1k\nQ1 a b 0 nomodel").unwrap_err();
        assert_eq!((err.code(), err.line()), ("E002", 2));
        // M element pointing at a cnfet card is also unknown as a MOSFET model
        let err = parse(".model qn cnfet polarity=n n=19\nM1 a b 0 qn").unwrap_err();
        assert_eq!(err.code(), "E002");
    }

    #[test]
    fn arity_mismatch() {
        let err = parse("R1 a 0\n").unwrap_err();
        assert_eq!(err.code(), "E003");
        let err = parse(".model qn cnfet polarity=n n=19\nQ1 a b qn").unwrap_err();
        assert_eq!(err.code(), "E003");
        let err = parse(".subckt inv a y\nR1 a y 1k\n.ends\nX1 a inv").unwrap_err();
        assert_eq!((err.code(), err.line()), ("E003", 4));
    }

    #[test]
    fn duplicate_name() {
        let err = parse("R1 a 0 1k\nr1 a 0 2k").unwrap_err();
        assert_eq!(
            err,
            NetlistError::DuplicateName {
                line: 2,
                name: "r1".into(),
                first_line: 1
            }
        );
        assert_eq!(err.code(), "E004");
    }

    #[test]
    fn syntax_errors_carry_column() {
        let err = parse("R1 a 0 1k\nR2 a 0 bogus").unwrap_err();
        assert_eq!(
            err,
            NetlistError::Syntax {
                line: 2,
                column: 8,
                message: "invalid number 'bogus'".into()
            }
        );
        assert_eq!(parse("Z1 a b").unwrap_err().code(), "E001");
        assert_eq!(parse(".tran 1n 10n").unwrap_err().code(), "E001");
    }

    #[test]
    fn invalid_values() {
        assert_eq!(parse("C1 a 0 0").unwrap_err().code(), "E005");
        assert_eq!(parse("R1 a 0 -1k").unwrap_err().code(), "E005");
        let err = parse(".model bad cnfet polarity=n n=9 m=0").unwrap_err();
        assert_eq!(err.code(), "E005");
    }

    #[test]
    fn pwl_order_checked() {
        let err = parse("V1 a 0 PWL(0 0 2n 1 1n 0)").unwrap_err();
        assert_eq!(err.code(), "E001");
    }

    #[test]
    fn model_cards() {
        let c = parse(
            ".model qp cnfet polarity=p n=8 m=0 tubes=2 kp=2e-4 cg=0.02f\n\
             .model mn nmos vth=0.3 kp=200u lambda=0.1",
        )
        .unwrap();
        match c.models["qp"] {
            ModelCard::Cnfet(p) => {
                assert_eq!(p.polarity, Polarity::P);
                assert_eq!(p.tube_count, 2);
                assert_eq!(p.chirality, Chirality::zigzag(8).unwrap());
                assert_eq!(p.gate_capacitance_per_tube, 0.02e-15);
            }
            _ => panic!("expected cnfet card"),
        }
        match c.models["mn"] {
            ModelCard::Mosfet(p) => {
                assert_eq!(p.threshold, 0.3);
                assert!((p.transconductance - 2e-4).abs() < 1e-18);
            }
            _ => panic!("expected mosfet card"),
        }
    }
}
