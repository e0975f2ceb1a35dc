//! Circuit compilation to index form, element stamping and the Newton loop.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::device::{square_law, Polarity};
use crate::netlist::{Circuit, ElementKind, ModelCard, Waveform, GROUND};

use super::{SolverConfig, SolverError};

/// Largest node-voltage change accepted in one Newton iteration, V.
const MAX_VOLTAGE_STEP: f64 = 0.5;

type Node = Option<usize>;

#[derive(Debug, Clone)]
pub(super) struct Source {
    pub name: String,
    pub pos: Node,
    pub neg: Node,
    pub waveform: Waveform,
}

#[derive(Debug, Clone, Copy)]
pub(super) struct Capacitor {
    pub a: Node,
    pub b: Node,
    pub c: f64,
}

#[derive(Debug, Clone, Copy)]
pub(super) struct Transistor {
    pub d: Node,
    pub g: Node,
    pub s: Node,
    pub polarity: Polarity,
    pub k: f64,
    pub vth: f64,
    pub lambda: f64,
}

/// A flattened circuit in index form. Unknowns are the non-ground node
/// voltages followed by one branch current per voltage source.
#[derive(Debug, Clone)]
pub(super) struct Compiled {
    pub node_names: Vec<String>,
    pub node_index: HashMap<String, usize>,
    pub sources: Vec<Source>,
    pub resistors: Vec<(Node, Node, f64)>,
    /// Explicit capacitors followed by transistor gate capacitances.
    pub capacitors: Vec<Capacitor>,
    pub transistors: Vec<Transistor>,
    /// Nodes whose every terminal is a capacitor plate or a transistor gate.
    pub floating: Vec<bool>,
    /// Nodes tied to ground through a voltage source; they need no gmin.
    pub driven: Vec<bool>,
}

impl Compiled {
    pub fn new(c: &Circuit) -> Result<Self, SolverError> {
        if c.has_instances() {
            return Err(SolverError::NotFlattened);
        }
        c.validate()
            .map_err(|e| SolverError::InvalidCircuit(e.to_string()))?;
        let node_names: Vec<String> = c.nodes().into_iter().skip(1).collect();
        let node_index: HashMap<String, usize> = node_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let idx = |n: &String| -> Node {
            if n == GROUND {
                None
            } else {
                Some(node_index[n])
            }
        };

        let mut out = Compiled {
            floating: vec![false; node_names.len()],
            driven: vec![false; node_names.len()],
            node_names: node_names.clone(),
            node_index: node_index.clone(),
            sources: Vec::new(),
            resistors: Vec::new(),
            capacitors: Vec::new(),
            transistors: Vec::new(),
        };
        let mut has_cap = vec![false; node_names.len()];
        let mut conducts = vec![false; node_names.len()];
        let mut gate_caps = Vec::new();
        let mark = |flags: &mut Vec<bool>, n: Node| {
            if let Some(i) = n {
                flags[i] = true;
            }
        };

        for e in &c.elements {
            let nodes: Vec<Node> = e.nodes.iter().map(idx).collect();
            match &e.kind {
                ElementKind::Resistor(r) => {
                    out.resistors.push((nodes[0], nodes[1], 1.0 / r));
                    mark(&mut conducts, nodes[0]);
                    mark(&mut conducts, nodes[1]);
                }
                ElementKind::Capacitor(cap) => {
                    out.capacitors.push(Capacitor {
                        a: nodes[0],
                        b: nodes[1],
                        c: *cap,
                    });
                    mark(&mut has_cap, nodes[0]);
                    mark(&mut has_cap, nodes[1]);
                }
                ElementKind::VoltageSource(w) => {
                    out.sources.push(Source {
                        name: e.name.clone(),
                        pos: nodes[0],
                        neg: nodes[1],
                        waveform: w.clone(),
                    });
                    mark(&mut conducts, nodes[0]);
                    mark(&mut conducts, nodes[1]);
                    if nodes[1].is_none() {
                        mark(&mut out.driven, nodes[0]);
                    }
                }
                ElementKind::Cnfet { model } | ElementKind::Mosfet { model } => {
                    let (polarity, k, vth, lambda, cg) = match c.models[model] {
                        ModelCard::Cnfet(p) => (
                            p.polarity,
                            p.transconductance_per_tube * p.tube_count as f64,
                            p.threshold()
                                .map_err(|err| SolverError::InvalidCircuit(err.to_string()))?,
                            0.0,
                            p.gate_capacitance(),
                        ),
                        ModelCard::Mosfet(p) => (
                            p.polarity,
                            p.transconductance,
                            p.threshold,
                            p.channel_length_modulation,
                            p.gate_capacitance,
                        ),
                    };
                    let (d, g, s) = (nodes[0], nodes[1], nodes[2]);
                    out.transistors.push(Transistor {
                        d,
                        g,
                        s,
                        polarity,
                        k,
                        vth,
                        lambda,
                    });
                    if cg > 0.0 && g != s {
                        gate_caps.push(Capacitor { a: g, b: s, c: cg });
                        mark(&mut has_cap, g);
                        mark(&mut has_cap, s);
                    }
                    mark(&mut conducts, d);
                    mark(&mut conducts, s);
                }
                ElementKind::Instance { .. } => unreachable!("checked above"),
            }
        }
        out.capacitors.extend(gate_caps);
        out.floating = has_cap
            .iter()
            .zip(&conducts)
            .map(|(&cap, &cond)| cap && !cond)
            .collect();
        Ok(out)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn size(&self) -> usize {
        self.node_names.len() + self.sources.len()
    }

    pub fn is_linear(&self) -> bool {
        self.transistors.is_empty()
    }

    /// Floating nodes whose capacitors all lead to other floating nodes.
    pub fn check_dividers(&self) -> Result<(), SolverError> {
        for (i, &fl) in self.floating.iter().enumerate() {
            if !fl {
                continue;
            }
            let anchored = self.capacitors.iter().any(|c| {
                let other = if c.a == Some(i) {
                    c.b
                } else if c.b == Some(i) {
                    c.a
                } else {
                    return false;
                };
                other.is_none_or(|j| !self.floating[j])
            });
            if !anchored {
                return Err(SolverError::IllConditionedDivider {
                    node: self.node_names[i].clone(),
                });
            }
        }
        Ok(())
    }
}

/// Per-capacitor history for the companion models.
#[derive(Debug, Clone)]
pub(super) struct CapState {
    pub v: Vec<f64>,
    pub i: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) enum Companion {
    BackwardEuler,
    Trapezoidal,
}

#[derive(Debug, Clone, Copy)]
pub(super) enum Mode<'a> {
    /// Capacitors open.
    Dc,
    /// Capacitors open; floating-node rows enforce zero stored charge.
    Charge,
    Transient {
        h: f64,
        method: Companion,
        state: &'a CapState,
    },
}

#[derive(Debug, Clone, Copy)]
pub(super) struct Context<'a> {
    pub mode: Mode<'a>,
    pub time: f64,
    pub gmin: f64,
    /// Source value overrides (index into `sources`).
    pub source_override: &'a [Option<f64>],
    /// Node rows replaced by `v = value`.
    pub pins: &'a [Option<f64>],
}

impl Context<'_> {
    fn source_value(&self, c: &Compiled, k: usize) -> f64 {
        self.source_override
            .get(k)
            .copied()
            .flatten()
            .unwrap_or_else(|| c.sources[k].waveform.value_at(self.time))
    }

    fn pinned(&self, i: usize) -> Option<f64> {
        self.pins.get(i).copied().flatten()
    }

    fn charge_row(&self, c: &Compiled, i: usize) -> bool {
        matches!(self.mode, Mode::Charge) && c.floating[i]
    }
}

/// Companion conductance and history current for capacitor `k`.
pub(super) fn companion(cap: &Capacitor, k: usize, h: f64, method: Companion, s: &CapState) -> (f64, f64) {
    match method {
        Companion::BackwardEuler => {
            let g = cap.c / h;
            (g, -g * s.v[k])
        }
        Companion::Trapezoidal => {
            let g = 2.0 * cap.c / h;
            (g, -g * s.v[k] - s.i[k])
        }
    }
}

fn volt(x: &DVector<f64>, n: Node) -> f64 {
    n.map_or(0.0, |i| x[i])
}

struct System {
    m: DMatrix<f64>,
    rhs: DVector<f64>,
    /// Largest element current magnitude incident on each row.
    scale: Vec<f64>,
}

impl System {
    fn new(size: usize) -> Self {
        Self {
            m: DMatrix::zeros(size, size),
            rhs: DVector::zeros(size),
            scale: vec![0.0; size],
        }
    }

    fn add(&mut self, r: Node, c: Node, v: f64) {
        if let (Some(r), Some(c)) = (r, c) {
            self.m[(r, c)] += v;
        }
    }

    /// Linear element `i = g·(va − vb) + i0` flowing a → b.
    fn branch(&mut self, a: Node, b: Node, g: f64, i0: f64, current: f64) {
        self.add(a, a, g);
        self.add(b, b, g);
        self.add(a, b, -g);
        self.add(b, a, -g);
        self.inject(a, b, i0);
        self.note(a, current);
        self.note(b, current);
    }

    fn inject(&mut self, a: Node, b: Node, i0: f64) {
        if let Some(a) = a {
            self.rhs[a] -= i0;
        }
        if let Some(b) = b {
            self.rhs[b] += i0;
        }
    }

    fn note(&mut self, n: Node, current: f64) {
        if let Some(i) = n {
            self.scale[i] = self.scale[i].max(current.abs());
        }
    }
}

fn assemble(c: &Compiled, ctx: &Context, x: &DVector<f64>) -> System {
    let n = c.n_nodes();
    let mut sys = System::new(c.size());

    for i in (0..n).filter(|&i| !c.driven[i]) {
        let v = x[i];
        sys.branch(Some(i), None, ctx.gmin, 0.0, ctx.gmin * v);
    }
    for &(a, b, g) in &c.resistors {
        let i = g * (volt(x, a) - volt(x, b));
        sys.branch(a, b, g, 0.0, i);
    }
    if let Mode::Transient { h, method, state } = ctx.mode {
        for (k, cap) in c.capacitors.iter().enumerate() {
            let (g, i0) = companion(cap, k, h, method, state);
            let i = g * (volt(x, cap.a) - volt(x, cap.b)) + i0;
            sys.branch(cap.a, cap.b, g, i0, i);
        }
    }
    for t in &c.transistors {
        let (vd, vg, vs) = (volt(x, t.d), volt(x, t.g), volt(x, t.s));
        let (vgs, vds) = (vg - vs, vd - vs);
        let r = square_law(t.polarity, t.k, t.vth, t.lambda, vgs, vds);
        let ieq = r.id - r.gm * vgs - r.gds * vds;
        sys.add(t.d, t.d, r.gds);
        sys.add(t.d, t.s, -r.gds - r.gm);
        sys.add(t.d, t.g, r.gm);
        sys.add(t.s, t.d, -r.gds);
        sys.add(t.s, t.s, r.gds + r.gm);
        sys.add(t.s, t.g, -r.gm);
        sys.inject(t.d, t.s, ieq);
        sys.note(t.d, r.id);
        sys.note(t.s, r.id);
    }
    for (k, s) in c.sources.iter().enumerate() {
        let j = Some(n + k);
        let i = x[n + k];
        sys.add(s.pos, j, 1.0);
        sys.add(s.neg, j, -1.0);
        sys.add(j, s.pos, 1.0);
        sys.add(j, s.neg, -1.0);
        sys.rhs[n + k] = ctx.source_value(c, k);
        sys.note(s.pos, i);
        sys.note(s.neg, i);
    }

    // row replacements
    for i in 0..n {
        if let Some(v) = ctx.pinned(i) {
            sys.m.row_mut(i).fill(0.0);
            sys.m[(i, i)] = 1.0;
            sys.rhs[i] = v;
        } else if ctx.charge_row(c, i) {
            sys.m.row_mut(i).fill(0.0);
            sys.rhs[i] = 0.0;
            sys.scale[i] = 0.0;
            for cap in &c.capacitors {
                let other = if cap.a == Some(i) {
                    cap.b
                } else if cap.b == Some(i) {
                    cap.a
                } else {
                    continue;
                };
                sys.add(Some(i), Some(i), cap.c);
                sys.add(Some(i), other, -cap.c);
                sys.scale[i] += cap.c * volt(x, other).abs();
            }
        }
    }
    sys
}

#[derive(Debug, Clone, Copy)]
pub(super) struct NewtonFailure {
    pub residual: f64,
}

/// Worst normalized residual: 1.0 means exactly at tolerance.
fn residual_ratio(c: &Compiled, ctx: &Context, sys: &System, x: &DVector<f64>, cfg: &SolverConfig) -> (f64, f64) {
    let r = &sys.m * x - &sys.rhs;
    let n = c.n_nodes();
    let mut worst: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for i in 0..r.len() {
        let tol = if i >= n || ctx.pinned(i).is_some() {
            cfg.vtol
        } else if ctx.charge_row(c, i) {
            let total: f64 = c
                .capacitors
                .iter()
                .filter(|cap| cap.a == Some(i) || cap.b == Some(i))
                .map(|cap| cap.c)
                .sum();
            cfg.reltol * sys.scale[i] + total * cfg.vtol
        } else {
            cfg.abstol + cfg.reltol * sys.scale[i]
        };
        worst = worst.max(r[i].abs() / tol);
        worst_abs = worst_abs.max(r[i].abs());
    }
    (worst, worst_abs)
}

/// Solves the nonlinear system from the initial guess `x`.
pub(super) fn newton(
    c: &Compiled,
    ctx: &Context,
    mut x: DVector<f64>,
    cfg: &SolverConfig,
) -> Result<(DVector<f64>, usize), NewtonFailure> {
    let n = c.n_nodes();
    let mut last_residual = f64::INFINITY;
    let mut step_small = false;
    for iter in 0..cfg.max_newton_iters {
        let sys = assemble(c, ctx, &x);
        if step_small {
            let (ratio, abs) = residual_ratio(c, ctx, &sys, &x, cfg);
            last_residual = abs;
            if ratio <= 1.0 {
                return Ok((x, iter));
            }
        }
        let Some(next) = sys.m.clone().lu().solve(&sys.rhs) else {
            return Err(NewtonFailure {
                residual: last_residual,
            });
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(NewtonFailure {
                residual: last_residual,
            });
        }
        if c.is_linear() {
            return Ok((next, 1));
        }
        step_small = true;
        let mut limited = next;
        for i in 0..limited.len() {
            let delta = limited[i] - x[i];
            let tol = if i < n { cfg.vtol } else { cfg.abstol };
            if delta.abs() > cfg.reltol * limited[i].abs().max(x[i].abs()) + tol {
                step_small = false;
            }
            if i < n && delta.abs() > MAX_VOLTAGE_STEP {
                limited[i] = x[i] + MAX_VOLTAGE_STEP * delta.signum();
            }
        }
        x = limited;
    }
    Err(NewtonFailure {
        residual: last_residual,
    })
}

/// Capacitor voltages and currents at an accepted solution.
pub(super) fn capacitor_state(
    c: &Compiled,
    x: &DVector<f64>,
    previous: Option<(&CapState, f64, Companion)>,
) -> CapState {
    let v: Vec<f64> = c
        .capacitors
        .iter()
        .map(|cap| volt(x, cap.a) - volt(x, cap.b))
        .collect();
    let i = match previous {
        None => vec![0.0; v.len()],
        Some((prev, h, method)) => c
            .capacitors
            .iter()
            .enumerate()
            .map(|(k, cap)| {
                let (g, i0) = companion(cap, k, h, method, prev);
                g * v[k] + i0
            })
            .collect(),
    };
    CapState { v, i }
}
