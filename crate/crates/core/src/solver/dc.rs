use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::netlist::{Circuit, GROUND};

use super::mna::{newton, Compiled, Context, Mode, NewtonFailure};
use super::{OperatingPoint, SolverConfig, SolverError};

/// Largest gmin tried while stepping, S.
const GMIN_CEILING: f64 = 1e-3;

/// Newton with gmin stepping: relax gmin ×10 until the solve converges (at
/// most [`GMIN_CEILING`]), then tighten back to the target from there.
pub(super) fn solve_with_gmin_stepping(
    c: &Compiled,
    mode: Mode,
    source_override: &[Option<f64>],
    pins: &[Option<f64>],
    cfg: &SolverConfig,
) -> Result<DVector<f64>, SolverError> {
    let ctx = |gmin| Context {
        mode,
        time: 0.0,
        gmin,
        source_override,
        pins,
    };
    let x0 = DVector::zeros(c.size());
    let first = match newton(c, &ctx(cfg.gmin), x0.clone(), cfg) {
        Ok((x, _)) => return Ok(x),
        Err(f) => f,
    };

    let mut gmin = cfg.gmin;
    let mut relaxed = None;
    while gmin < GMIN_CEILING {
        gmin = (gmin * 10.0).min(GMIN_CEILING);
        if let Ok((x, _)) = newton(c, &ctx(gmin), x0.clone(), cfg) {
            relaxed = Some(x);
            break;
        }
    }
    let Some(mut x) = relaxed else {
        return Err(SolverError::Convergence {
            residual: first.residual,
        });
    };
    while gmin > cfg.gmin {
        gmin = (gmin / 10.0).max(cfg.gmin);
        match newton(c, &ctx(gmin), x, cfg) {
            Ok((next, _)) => x = next,
            Err(NewtonFailure { residual }) => return Err(SolverError::Convergence { residual }),
        }
    }
    Ok(x)
}

/// DC operating point with capacitors open and gmin from every node to ground.
pub fn dc_operating_point(c: &Circuit, cfg: &SolverConfig) -> Result<OperatingPoint, SolverError> {
    cfg.validate()?;
    let compiled = Compiled::new(c)?;
    let x = solve_with_gmin_stepping(&compiled, Mode::Dc, &[], &[], cfg)?;
    Ok(OperatingPoint::from_solution(&compiled, &x))
}

/// Operating point in which every purely capacitive node holds the charge
/// sharing value `Σ Cᵢ·Vᵢ / Σ Cᵢ` of its neighbours (zero stored charge),
/// solved jointly with the DC state of every other node.
///
/// `input_levels` overrides node voltages: a grounded source driving a listed
/// node takes that level, any other listed node is held at it directly.
pub fn initialize_floating_nodes(
    c: &Circuit,
    input_levels: &BTreeMap<String, f64>,
    cfg: &SolverConfig,
) -> Result<OperatingPoint, SolverError> {
    cfg.validate()?;
    let compiled = Compiled::new(c)?;
    compiled.check_dividers()?;
    let (overrides, pins) = overrides(&compiled, input_levels)?;
    let x = solve_with_gmin_stepping(&compiled, Mode::Charge, &overrides, &pins, cfg)?;
    Ok(OperatingPoint::from_solution(&compiled, &x))
}

type Overrides = (Vec<Option<f64>>, Vec<Option<f64>>);

fn overrides(c: &Compiled, levels: &BTreeMap<String, f64>) -> Result<Overrides, SolverError> {
    let mut source_override = vec![None; c.sources.len()];
    let mut pins = vec![None; c.n_nodes()];
    for (node, &level) in levels {
        let node = node.to_ascii_lowercase();
        if node == GROUND {
            continue;
        }
        let &i = c
            .node_index
            .get(&node)
            .ok_or_else(|| SolverError::UnknownNode(node.clone()))?;
        match c.sources.iter().position(|s| s.pos == Some(i) && s.neg.is_none()) {
            Some(k) => source_override[k] = Some(level),
            None => pins[i] = Some(level),
        }
    }
    Ok((source_override, pins))
}
