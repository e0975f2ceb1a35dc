//! Acceptance criteria. Each check prints one PASS/FAIL line; the test fails
//! if any check fails.

use std::time::{Duration, Instant};

use mvlsim::adders::{build_adder, build_threshold_inverter_gate, AdderKind, GateFunction, GateSpec};
use mvlsim::bench::{run_matrix, BenchConfig};
use mvlsim::device::{diameter, threshold_voltage, Chirality};
use mvlsim::measure::{average_power, propagation_delay};
use mvlsim::netlist::{parse, Circuit, Element, Waveform};
use mvlsim::oracle::{all_vectors, majority};
use mvlsim::report::{paper_reference, Format, Report};
use mvlsim::solver::{transient, Integration, SolverConfig};

const VTH_19_0: f64 = 0.2789;
const VTH_TOL: f64 = 0.0005;
const RC_REL_TOL: f64 = 1e-3;
const RC_RUNTIME: Duration = Duration::from_secs(1);
const MVL_TOL: f64 = 0.05;
const MVL_RUNTIME: Duration = Duration::from_secs(10);
const FULL_SWING_HIGH: f64 = 0.9;
const FULL_SWING_LOW: f64 = 0.1;
const MATRIX_RUNTIME: Duration = Duration::from_secs(300);
const SUPPLIES: [f64; 2] = [0.9, 0.65];
const SHIFT_TOL: f64 = 1e-18;
const TAU_LN2_TOL: f64 = 0.01;
const POWER_REL_TOL: f64 = 1e-9;

struct Ledger {
    failed: Vec<String>,
}

impl Ledger {
    fn check(&mut self, id: &str, name: &str, ok: bool, detail: String) {
        println!("[{}] {id} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(format!("{id} {name}"));
        }
    }
}

fn device_formulas(l: &mut Ledger) {
    let c = Chirality::new(19, 0).unwrap();
    let vth = threshold_voltage(diameter(c, 0.249).unwrap()).unwrap();
    l.check("1a", "Vth of (19,0)", (vth - VTH_19_0).abs() <= VTH_TOL, format!("{vth:.5} V, want {VTH_19_0} ± {VTH_TOL}"));
    let unit = threshold_voltage(1.0).unwrap();
    l.check("1b", "Vth at d = 1 nm", unit == 0.42, format!("{unit} V, want exactly 0.42"));
}

fn solver_fidelity(l: &mut Ledger) {
    let tau = 1e-12;
    let c = parse("V1 in 0 PWL(0 0 1e-18 0.9)\nR1 in out 1k\nC1 out 0 1f").unwrap();
    let cfg = SolverConfig {
        timestep: tau / 100.0,
        integration: Integration::Trapezoidal,
        ..SolverConfig::default()
    };
    let start = Instant::now();
    let r = transient(&c, &cfg, 5.0 * tau).unwrap();
    let elapsed = start.elapsed();
    let mut worst: f64 = 0.0;
    for k in [1.0f64, 2.0, 5.0] {
        let exact = 0.9 * (1.0 - (-k).exp());
        let v = r.voltage_at("out", k * tau).unwrap();
        worst = worst.max(((v - exact) / exact).abs());
    }
    l.check(
        "2",
        "RC step, trapezoidal, dt = tau/100",
        worst < RC_REL_TOL && elapsed < RC_RUNTIME,
        format!("worst relative error {worst:.2e} (< {RC_REL_TOL:.0e}), {elapsed:?} (< {RC_RUNTIME:?})"),
    );
}

/// Majority-not gate with its inputs ramped from ground to `v`.
fn mvl_node(vdd: f64, v: [bool; 3], cfg: &BenchConfig) -> f64 {
    let spec = GateSpec::synthesize(GateFunction::MajorityNot, vdd, &cfg.design).unwrap();
    let mut c: Circuit = build_threshold_inverter_gate(&spec, &cfg.design).unwrap();
    c.push(Element::vsource("vdd", "vdd", "0", Waveform::Dc(vdd)));
    for (i, name) in ["a", "b", "c"].iter().enumerate() {
        let w = if v[i] {
            Waveform::Pwl(vec![(0.0, 0.0), (10e-12, vdd)])
        } else {
            Waveform::Dc(0.0)
        };
        c.push(Element::vsource(&format!("v{name}"), name, "0", w));
    }
    c.push(Element::instance("xg", &["a", "b", "c", "out", "vdd", "0"], GateFunction::MajorityNot.name()));
    let flat = c.flatten().unwrap();
    let solver = SolverConfig {
        use_initial_conditions: true,
        ..cfg.solver_config(0.1e-12)
    };
    let r = transient(&flat, &solver, 60e-12).unwrap();
    *r.voltage("xg.x").unwrap().last().unwrap()
}

fn mvl_levels(l: &mut Ledger) {
    let cfg = BenchConfig::default();
    let vdd = 0.9;
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut levels = Vec::new();
    for v in all_vectors() {
        let k = v.iter().filter(|b| **b).count();
        let x = mvl_node(vdd, v, &cfg);
        let want = k as f64 * vdd / 3.0;
        worst = worst.max((x - want).abs() / vdd);
        levels.push(format!("{k}:{x:.3}"));
    }
    let elapsed = start.elapsed();
    l.check(
        "3",
        "majority-not divider levels at 0.9 V",
        worst <= MVL_TOL && elapsed < MVL_RUNTIME,
        format!(
            "[{}] worst {:.2}% of vdd (≤ {}%), {elapsed:?} (< {MVL_RUNTIME:?})",
            levels.join(" "),
            worst * 100.0,
            MVL_TOL * 100.0
        ),
    );
}

fn logic_and_report(l: &mut Ledger) {
    let cfg = BenchConfig::default();
    let start = Instant::now();
    let outcomes = run_matrix(&AdderKind::ALL, &SUPPLIES, &cfg);
    let elapsed = start.elapsed();
    let mut all_ok = true;
    for (kind, vdd, outcome) in &outcomes {
        match outcome {
            Ok(_) => {
                let th = cfg.thresholds(*kind, *vdd);
                let swing_pinned = !kind.requires_full_swing()
                    || (th.v_high_min == FULL_SWING_HIGH * vdd && th.v_low_max == FULL_SWING_LOW * vdd);
                all_ok &= swing_pinned;
                println!(
                    "    {:<15} {vdd} V: 16 slots x 2 outputs verified, swing limits {:.3}/{:.3} V{}",
                    kind.label(),
                    th.v_high_min,
                    th.v_low_max,
                    if swing_pinned { "" } else { " (NOT the full-swing limits)" }
                );
            }
            Err(e) => {
                all_ok = false;
                println!("    {:<15} {vdd} V: {e}", kind.label());
            }
        }
    }
    l.check(
        "4",
        "every adder matches the truth table at 0.9 V and 0.65 V",
        all_ok && outcomes.len() == 12 && elapsed < MATRIX_RUNTIME,
        format!("{} cells, {elapsed:?} (< {MATRIX_RUNTIME:?})", outcomes.len()),
    );

    let report = Report::new(&cfg, &SUPPLIES, &outcomes);
    let exact_pdp = outcomes.iter().all(|(_, _, o)| match o {
        Ok(c) => c.measurement.pdp == c.measurement.avg_power * c.measurement.worst_delay,
        Err(_) => false,
    }) && report
        .rows
        .iter()
        .all(|r| r.measured.is_some_and(|f| f.pdp_j == f.power_w * f.delay_s));
    l.check("7a", "pdp = power x delay on every measured row", exact_pdp, "bitwise equal".into());

    let md = report.render(Format::Markdown);
    let csv = report.render(Format::Csv);
    let json = report.render(Format::Json);
    let mut verbatim = md.contains("paper (HSPICE, ref model)");
    for vdd in SUPPLIES {
        for p in paper_reference(vdd).unwrap() {
            let line = format!("| {} | {} | {} | {} |", p.design, p.power, p.delay, p.pdp);
            let cells = format!("{},{},{}", p.power, p.delay, p.pdp);
            verbatim &= md.contains(&line) && csv.contains(&cells) && json.contains(p.pdp);
        }
    }
    l.check("7b", "published values carried verbatim and labelled", verbatim, "18 rows in md, csv and json".into());

    let again = run_matrix(&AdderKind::ALL, &SUPPLIES, &cfg);
    let report2 = Report::new(&cfg, &SUPPLIES, &again);
    let identical = [Format::Markdown, Format::Csv, Format::Json]
        .into_iter()
        .all(|f| report.render(f) == report2.render(f));
    l.check("7c", "report byte-identical across two runs", identical, format!("{} bytes of markdown", md.len()));
}

fn structural_counts(l: &mut Ledger) {
    let expected: [(AdderKind, usize, Option<usize>); 4] = [
        (AdderKind::Proposed, 14, Some(3)),
        (AdderKind::CntFa1, 8, Some(7)),
        (AdderKind::CntFa3, 8, Some(5)),
        (AdderKind::CCmos, 28, None),
    ];
    for (kind, t, c) in expected {
        let s = build_adder(kind, 0.9).unwrap().stats();
        let ok = s.transistor_count == t && c.is_none_or(|c| s.capacitor_count == c);
        l.check(
            "5",
            kind.label(),
            ok,
            format!("{}T {}C", s.transistor_count, s.capacitor_count),
        );
    }
}

fn five_input_majority(l: &mut Ledger) {
    let ok = all_vectors().all(|[a, b, c]| {
        let cout = majority(&[a, b, c]).unwrap();
        majority(&[a, b, c, !cout, !cout]).unwrap() == (a ^ b ^ c)
    });
    l.check("6", "Maj(A,B,C,!Cout,!Cout) = A xor B xor C", ok, "8 vectors".into());
}

fn ramp(times: &[f64], t0: f64, width: f64, vdd: f64) -> Vec<f64> {
    times
        .iter()
        .map(|&t| vdd * ((t - t0) / width).clamp(0.0, 1.0))
        .collect()
}

fn measurement_units(l: &mut Ledger) {
    let times: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.1e-12).collect();
    let input = ramp(&times, 20e-12, 10e-12, 0.9);
    let output = ramp(&times, 25e-12, 10e-12, 0.9);
    let d = propagation_delay(&times, &input, &output, 0.9, 1e-12).unwrap()[0].1;
    l.check("8a", "pure shift", (d - 5e-12).abs() <= SHIFT_TOL, format!("{d:e} s for a 5 ps shift"));

    let c = parse("V1 in 0 PWL(0 0 1e-18 0.9)\nR1 in out 1k\nC1 out 0 1f").unwrap();
    let cfg = SolverConfig {
        timestep: 1e-14,
        ..SolverConfig::default()
    };
    let r = transient(&c, &cfg, 5e-12).unwrap();
    let d = propagation_delay(&r.times, r.voltage("in").unwrap(), r.voltage("out").unwrap(), 0.9, 0.5e-12).unwrap()[0].1;
    let want = 1e-12 * std::f64::consts::LN_2;
    let rel = ((d - want) / want).abs();
    l.check("8b", "RC 50% crossing", rel < TAU_LN2_TOL, format!("{d:e} s vs tau ln2, relative {rel:.2e}"));

    let c = parse("V1 in 0 DC 0.9\nR1 in 0 1k").unwrap();
    let cfg = SolverConfig {
        timestep: 1e-12,
        ..SolverConfig::default()
    };
    let r = transient(&c, &cfg, 20e-12).unwrap();
    let p = average_power(&r, "v1", 0.9, (0.0, 20e-12)).unwrap();
    let rel = ((p - 0.81e-3) / 0.81e-3).abs();
    l.check("8c", "DC resistor power", rel < POWER_REL_TOL, format!("{p:e} W vs vdd^2/R, relative {rel:.1e}"));
}

#[test]
fn acceptance() {
    let mut l = Ledger { failed: Vec::new() };
    device_formulas(&mut l);
    solver_fidelity(&mut l);
    mvl_levels(&mut l);
    logic_and_report(&mut l);
    structural_counts(&mut l);
    five_input_majority(&mut l);
    measurement_units(&mut l);
    assert!(l.failed.is_empty(), "failed: {:?}", l.failed);
}
