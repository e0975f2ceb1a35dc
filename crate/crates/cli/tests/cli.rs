use std::process::{Command, Output};

fn mvlsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvlsim"))
        .args(args)
        .env_remove("MVLSIM_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn device_reports_diameter_and_threshold() {
    let o = mvlsim(&["device", "--chirality", "19,0"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("diameter: 1.5059 nm"), "{s}");
    assert!(s.contains("vth: 0.2789 V"), "{s}");
    assert!(s.contains("semiconducting: true"));
}

#[test]
fn device_warns_on_metallic_tube() {
    let o = mvlsim(&["device", "--chirality", "9,0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("semiconducting: false"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("metallic"));
}

#[test]
fn device_solves_for_threshold() {
    let o = mvlsim(&["device", "--target-vth", "0.2789"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("chirality: (19,0)"));
    assert_eq!(mvlsim(&["device", "--target-vth", "10"]).status.code(), Some(2));
}

#[test]
fn simulate_rc_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("rc.sp");
    let csv = dir.path().join("rc.csv");
    // tau = 1 ns, step at t = 0
    std::fs::write(&net, "* rc\nV1 in 0 PWL(0 0 1p 0.9)\nR1 in out 1k\nC1 out 0 1p\n").unwrap();
    let o = mvlsim(&[
        "simulate",
        net.to_str().unwrap(),
        "--tstop",
        "5n",
        "--dt",
        "1p",
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "out").unwrap();
    let mut checked = 0;
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let t = cells[0];
        if t > 10e-12 {
            let expected = 0.9 * (1.0 - (-(t - 0.5e-12) / 1e-9).exp());
            assert!((cells[col] - expected).abs() < 2e-3, "t={t} {} vs {expected}", cells[col]);
            checked += 1;
        }
    }
    assert!(checked > 4000);
}

#[test]
fn simulate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sp");
    std::fs::write(&bad, "R1 a\n").unwrap();
    let o = mvlsim(&["simulate", bad.to_str().unwrap(), "--tstop", "1n", "--dt", "1p"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let good = dir.path().join("good.sp");
    std::fs::write(&good, "V1 in 0 DC 0.9\nR1 in 0 1k\n").unwrap();
    let o = mvlsim(&["simulate", good.to_str().unwrap(), "--tstop", "0", "--dt", "1p"]);
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("missing.sp");
    let o = mvlsim(&["simulate", missing.to_str().unwrap(), "--tstop", "1n", "--dt", "1p"]);
    assert_eq!(o.status.code(), Some(7));

    assert_eq!(mvlsim(&["simulate"]).status.code(), Some(2));
}

#[test]
fn bench_single_cell_with_reference_values() {
    let o = mvlsim(&["bench", "--adders", "proposed", "--vdd", "0.9", "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let measured: Vec<&str> = s.lines().filter(|l| l.contains(",ok,")).collect();
    assert_eq!(measured.len(), 1);
    assert!(measured[0].starts_with("Proposed Adder,0.9,ok,"));
    assert!(measured[0].ends_with(",8.40E-07,1.25E-11,6.17E-18"));
    assert!(s.contains("paper (HSPICE, ref model)"));
    assert!(s.contains("CPL,0.9,not_simulated,,,,4.87E-07,1.57E-10,7.63E-17"));
}

#[test]
fn bench_markdown_is_repeatable_and_writes_charts() {
    let dir = tempfile::tempdir().unwrap();
    let charts = dir.path().join("charts");
    let args = ["bench", "--adders", "proposed,c_cmos", "--vdd", "0.9", "--charts", charts.to_str().unwrap()];
    let first = mvlsim(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = mvlsim(&args);
    assert_eq!(first.stdout, second.stdout);
    let md = stdout(&first);
    assert!(md.contains("| C-CMOS | 6.26E-07 | 5.27E-11 | 3.30E-17 |"));
    assert!(md.contains("transition_time"));
    let c = md.find("| C-CMOS |").unwrap();
    let p = md.find("| Proposed Adder |").unwrap();
    assert!(c < p);
    for metric in ["power", "delay", "pdp"] {
        for ext in ["svg", "csv"] {
            assert!(charts.join(format!("{metric}_0.9.{ext}")).exists());
        }
    }
}

#[test]
fn bench_rejects_bad_arguments() {
    assert_eq!(mvlsim(&["bench", "--adders", "cpl"]).status.code(), Some(2));
    assert_eq!(mvlsim(&["bench", "--format", "xml"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "version = 1\n").unwrap();
    let o = mvlsim(&["bench", "--adders", "proposed", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn adders_list_and_netlist() {
    let o = mvlsim(&["adders", "list"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.lines().any(|l| l.starts_with("proposed") && l.contains("14T  3C")), "{s}");
    assert_eq!(s.lines().count(), 6);

    let o = mvlsim(&["adders", "netlist", "cnt-fa3"]);
    assert!(o.status.success());
    let caps = stdout(&o).lines().filter(|l| l.starts_with('c')).count();
    assert_eq!(caps, 5);
    assert_eq!(mvlsim(&["adders", "netlist", "hybrid"]).status.code(), Some(2));
}
