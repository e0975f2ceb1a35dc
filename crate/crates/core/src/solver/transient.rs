use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::netlist::Circuit;

use super::dc::solve_with_gmin_stepping;
use super::mna::{capacitor_state, newton, CapState, Companion, Compiled, Context, Mode};
use super::{
    initialize_floating_nodes, Integration, OperatingPoint, SolverConfig, SolverError,
    TransientResult,
};

/// Fixed-step transient over `[0, tstop]`.
///
/// Starts from the DC operating point, or from charge-conserving initial
/// conditions when `cfg.use_initial_conditions` is set.
pub fn transient(c: &Circuit, cfg: &SolverConfig, tstop: f64) -> Result<TransientResult, SolverError> {
    cfg.validate()?;
    let compiled = Compiled::new(c)?;
    let x0 = if cfg.use_initial_conditions {
        initialize_floating_nodes(c, &BTreeMap::new(), cfg)?.to_vector(&compiled)
    } else {
        solve_with_gmin_stepping(&compiled, Mode::Dc, &[], &[], cfg)?
    };
    run(&compiled, cfg, tstop, x0)
}

/// Fixed-step transient starting from a caller-supplied state.
pub fn transient_from(
    c: &Circuit,
    cfg: &SolverConfig,
    tstop: f64,
    initial: &OperatingPoint,
) -> Result<TransientResult, SolverError> {
    cfg.validate()?;
    let compiled = Compiled::new(c)?;
    let x0 = initial.to_vector(&compiled);
    run(&compiled, cfg, tstop, x0)
}

fn run(c: &Compiled, cfg: &SolverConfig, tstop: f64, x0: DVector<f64>) -> Result<TransientResult, SolverError> {
    if !(tstop.is_finite() && tstop > 0.0) {
        return Err(SolverError::InvalidConfig(format!("tstop must be > 0, got {tstop}")));
    }
    let steps = (tstop / cfg.timestep - 1e-9).ceil().max(1.0) as usize;
    let h = tstop / steps as f64;

    let mut result = TransientResult::new(c);
    let mut x = x0;
    let mut state = capacitor_state(c, &x, None);
    result.record(0.0, &x);

    for n in 1..=steps {
        // one backward-Euler step damps inconsistent initial conditions
        let method = match (n, cfg.integration) {
            (1, _) | (_, Integration::BackwardEuler) => Companion::BackwardEuler,
            (_, Integration::Trapezoidal) => Companion::Trapezoidal,
        };
        let t_prev = (n - 1) as f64 * h;
        let t = if n == steps { tstop } else { n as f64 * h };
        match step(c, cfg, &x, &state, t, t - t_prev, method) {
            Ok((next, next_state)) => {
                x = next;
                state = next_state;
            }
            Err(_) => {
                // retry once as two half steps
                let half = 0.5 * (t - t_prev);
                let (mid, mid_state) = step(c, cfg, &x, &state, t_prev + half, half, method)
                    .map_err(|residual| SolverError::StepFailure { time: t, residual })?;
                let (next, next_state) = step(c, cfg, &mid, &mid_state, t, half, method)
                    .map_err(|residual| SolverError::StepFailure { time: t, residual })?;
                x = next;
                state = next_state;
            }
        }
        result.record(t, &x);
    }
    Ok(result)
}

fn step(
    c: &Compiled,
    cfg: &SolverConfig,
    x: &DVector<f64>,
    state: &CapState,
    t: f64,
    h: f64,
    method: Companion,
) -> Result<(DVector<f64>, CapState), f64> {
    let ctx = Context {
        mode: Mode::Transient { h, method, state },
        time: t,
        gmin: cfg.gmin,
        source_override: &[],
        pins: &[],
    };
    let (next, _) = newton(c, &ctx, x.clone(), cfg).map_err(|f| f.residual)?;
    let next_state = capacitor_state(c, &next, Some((state, h, method)));
    Ok((next, next_state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse;

    fn rc_step() -> Circuit {
        parse("V1 in 0 PWL(0 0 1e-18 0.9)\nR1 in out 1k\nC1 out 0 1f").unwrap()
    }

    #[test]
    fn rc_charging_matches_closed_form() {
        let tau = 1e-12;
        let cfg = SolverConfig {
            timestep: tau / 100.0,
            ..SolverConfig::default()
        };
        // the source rises within the first step, which backward Euler absorbs
        let r = transient(&rc_step(), &cfg, 5.0 * tau).unwrap();
        for k in [1.0, 2.0, 5.0] {
            let t = k * tau;
            let v = r.voltage_at("out", t).unwrap();
            let exact = 0.9 * (1.0 - (-t / tau).exp());
            assert!(((v - exact) / exact).abs() < 1e-3, "t={k}τ: {v} vs {exact}");
        }
    }

    #[test]
    fn dc_state_persists() {
        let c = parse(
            ".model qn cnfet polarity=n n=19\n.model qp cnfet polarity=p n=19\n\
             Vdd vdd 0 0.9\nVin in 0 0\nQp out in vdd qp\nQn out in 0 qn\nC1 out 0 1f",
        )
        .unwrap();
        let cfg = SolverConfig {
            timestep: 1e-12,
            ..SolverConfig::default()
        };
        let r = transient(&c, &cfg, 50e-12).unwrap();
        for series in &r.node_voltages {
            let first = series[0];
            assert!(series.iter().all(|v| (v - first).abs() <= cfg.vtol));
        }
        assert_eq!(r.times[0], 0.0);
        assert!(r.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn floating_divider_settles_to_two_thirds() {
        let c = parse(
            "Va a 0 PWL(0 0 10p 0.9)\nVb b 0 0\nVc c 0 PWL(0 0 10p 0.9)\n\
             C1 a x 1f\nC2 b x 1f\nC3 c x 1f",
        )
        .unwrap();
        let cfg = SolverConfig {
            timestep: 0.2e-12,
            use_initial_conditions: true,
            ..SolverConfig::default()
        };
        let r = transient(&c, &cfg, 100e-12).unwrap();
        let x = *r.voltage("x").unwrap().last().unwrap();
        assert!((x - 0.6).abs() < 1e-6, "{x}");
    }

    #[test]
    fn rejects_bad_tstop() {
        let cfg = SolverConfig::default();
        assert!(matches!(
            transient(&rc_step(), &cfg, 0.0),
            Err(SolverError::InvalidConfig(_))
        ));
    }
}
