use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mvlsim::adders::{build_adder_with, AdderKind, Testbench};
use mvlsim::bench::{run_matrix, BenchConfig, BenchError, ConfigError};
use mvlsim::device::{chirality_for_threshold, diameter, threshold_voltage, Chirality, DEFAULT_LATTICE_CONSTANT_NM};
use mvlsim::netlist::value::parse_value;
use mvlsim::netlist::{parse, ElementKind, NetlistError, Waveform};
use mvlsim::report::{Format, Report};
use mvlsim::solver::{transient, Integration, SolverConfig, SolverError};

mod exit {
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const CONVERGENCE: u8 = 4;
    pub const MEASUREMENT: u8 = 5;
    pub const LOGIC: u8 = 6;
    pub const IO: u8 = 7;
    pub const OTHER: u8 = 1;
}

#[derive(Parser)]
#[command(name = "mvlsim", version, about = "CNFET multiple-valued-logic full adder simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transient simulation of a netlist; writes the waveforms as CSV.
    Simulate(SimulateArgs),
    /// Simulate, verify and measure the adders and print the tables.
    Bench(BenchArgs),
    /// Diameter and threshold of a chirality, or the chirality for a threshold.
    Device(DeviceArgs),
    /// Built-in adder designs.
    Adders {
        #[command(subcommand)]
        command: AddersCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IcMode {
    /// Start from the DC operating point.
    Op,
    /// Start from charge-conserving initial conditions (all capacitors empty).
    Charge,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Be,
    Trap,
}

#[derive(Args)]
struct SimulateArgs {
    netlist: PathBuf,
    /// Stop time, s (SPICE suffixes allowed).
    #[arg(long, value_parser = spice_value)]
    tstop: f64,
    /// Fixed time step, s.
    #[arg(long, value_parser = spice_value)]
    dt: f64,
    /// Overrides the level of a DC source named `vdd`.
    #[arg(long, value_parser = spice_value)]
    vdd: Option<f64>,
    #[arg(long, value_enum, default_value = "op")]
    ic: IcMode,
    #[arg(long, value_enum, default_value = "trap")]
    method: Method,
    /// Output CSV; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated designs (default: all, in table order).
    #[arg(long, value_delimiter = ',')]
    adders: Vec<String>,
    /// Comma-separated supply voltages.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.9, 0.65])]
    vdd: Vec<f64>,
    #[arg(long, default_value = "md")]
    format: String,
    /// Directory for `<metric>_<vdd>.{svg,csv}` charts.
    #[arg(long)]
    charts: Option<PathBuf>,
    /// Configuration file (otherwise $MVLSIM_CONFIG, otherwise built in).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DeviceTarget {
    /// Roll-up vector as `n,m`.
    #[arg(long)]
    chirality: Option<String>,
    /// Threshold voltage to match, V.
    #[arg(long)]
    target_vth: Option<f64>,
}

#[derive(Args)]
struct DeviceArgs {
    #[command(flatten)]
    target: DeviceTarget,
    /// Allowed threshold miss for `--target-vth`, V.
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    /// Lattice constant, nm.
    #[arg(long, default_value_t = DEFAULT_LATTICE_CONSTANT_NM)]
    lattice: f64,
}

#[derive(Subcommand)]
enum AddersCommand {
    /// Designs with their device counts.
    List,
    /// Print the netlist of one design.
    Netlist {
        design: String,
        #[arg(long, default_value_t = 0.9)]
        vdd: f64,
        /// Wrap the design in the benchmark testbench.
        #[arg(long)]
        testbench: bool,
    },
}

fn spice_value(s: &str) -> Result<f64, String> {
    parse_value(s).ok_or_else(|| format!("not a number: `{s}`"))
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<NetlistError> for Failure {
    fn from(e: NetlistError) -> Self {
        Failure::new(exit::PARSE, e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let code = match e {
            SolverError::InvalidConfig(_) => exit::USAGE,
            SolverError::Convergence { .. } | SolverError::StepFailure { .. } => exit::CONVERGENCE,
            _ => exit::OTHER,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Io { .. } => exit::IO,
            _ => exit::PARSE,
        };
        Failure::new(code, e.to_string())
    }
}

fn bench_code(e: &BenchError) -> u8 {
    match e {
        BenchError::Netlist(_) => exit::PARSE,
        BenchError::Solver(SolverError::Convergence { .. } | SolverError::StepFailure { .. }) => exit::CONVERGENCE,
        BenchError::Measure(_) | BenchError::Swing(_) => exit::MEASUREMENT,
        BenchError::Logic(_) | BenchError::Oracle(_) => exit::LOGIC,
        _ => exit::OTHER,
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(exit::IO, format!("{}: {e}", path.display()))
}

fn write_output(path: Option<&Path>, body: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| io_failure(p, e)),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::new(exit::IO, e.to_string())),
    }
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    if !(args.tstop.is_finite() && args.tstop > 0.0) {
        return Err(Failure::new(exit::USAGE, "--tstop must be positive"));
    }
    if !(args.dt.is_finite() && args.dt > 0.0 && args.dt <= args.tstop) {
        return Err(Failure::new(exit::USAGE, "--dt must be positive and no larger than --tstop"));
    }
    let text = fs::read_to_string(&args.netlist).map_err(|e| io_failure(&args.netlist, e))?;
    let mut circuit = parse(&text)?.flatten()?;
    if let Some(vdd) = args.vdd {
        let source = circuit
            .elements
            .iter_mut()
            .find(|e| e.name == "vdd" && matches!(e.kind, ElementKind::VoltageSource(_)))
            .ok_or_else(|| Failure::new(exit::USAGE, "--vdd given but the netlist has no source named vdd"))?;
        source.kind = ElementKind::VoltageSource(Waveform::Dc(vdd));
    }
    let cfg = SolverConfig {
        timestep: args.dt,
        integration: match args.method {
            Method::Be => Integration::BackwardEuler,
            Method::Trap => Integration::Trapezoidal,
        },
        use_initial_conditions: matches!(args.ic, IcMode::Charge),
        ..SolverConfig::default()
    };
    let result = transient(&circuit, &cfg, args.tstop)?;
    write_output(args.output.as_deref(), &result.to_csv())
}

fn parse_kinds(names: &[String]) -> Result<Vec<AdderKind>, Failure> {
    if names.is_empty() {
        return Ok(AdderKind::ALL.to_vec());
    }
    let mut kinds: Vec<AdderKind> = names
        .iter()
        .map(|n| n.parse().map_err(|e: mvlsim::adders::AdderError| Failure::new(exit::USAGE, e.to_string())))
        .collect::<Result<_, _>>()?;
    kinds.sort_by_key(|k| AdderKind::ALL.iter().position(|a| a == k));
    kinds.dedup();
    Ok(kinds)
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let format: Format = args.format.parse().map_err(|e: String| Failure::new(exit::USAGE, e))?;
    let kinds = parse_kinds(&args.adders)?;
    if args.vdd.is_empty() || args.vdd.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Failure::new(exit::USAGE, "--vdd values must be positive"));
    }
    let cfg = BenchConfig::resolve(args.config.as_deref())?;
    let outcomes = run_matrix(&kinds, &args.vdd, &cfg);
    let report = Report::new(&cfg, &args.vdd, &outcomes);
    write_output(args.output.as_deref(), &report.render(format))?;
    if let Some(dir) = &args.charts {
        mvlsim::charts::write_charts(&report, dir).map_err(|e| io_failure(dir, e))?;
    }
    let mut code = None;
    for (kind, vdd, outcome) in &outcomes {
        if let Err(e) = outcome {
            eprintln!("{} at {vdd} V: {e}", kind.label());
            code.get_or_insert(bench_code(e));
        }
    }
    match code {
        Some(c) => Err(Failure::new(c, "some benchmark cells failed")),
        None => Ok(()),
    }
}

fn device(args: &DeviceArgs) -> Result<(), Failure> {
    let usage = |e: mvlsim::device::DeviceError| Failure::new(exit::USAGE, e.to_string());
    if let Some(spec) = &args.target.chirality {
        let (n, m) = spec
            .split_once(',')
            .and_then(|(n, m)| Some((n.trim().parse().ok()?, m.trim().parse().ok()?)))
            .ok_or_else(|| Failure::new(exit::USAGE, format!("expected --chirality n,m, got `{spec}`")))?;
        let c = Chirality::new(n, m).map_err(usage)?;
        let d = diameter(c, args.lattice).map_err(usage)?;
        let vth = threshold_voltage(d).map_err(usage)?;
        println!("chirality: ({n},{m})");
        println!("diameter: {d:.4} nm");
        println!("vth: {vth:.4} V");
        println!("semiconducting: {}", c.is_semiconducting());
        if !c.is_semiconducting() {
            eprintln!("warning: ({n},{m}) is metallic and cannot form a transistor channel");
        }
    } else if let Some(target) = args.target.target_vth {
        let c = chirality_for_threshold(target, args.tolerance, args.lattice).map_err(usage)?;
        let d = diameter(c, args.lattice).map_err(usage)?;
        let vth = threshold_voltage(d).map_err(usage)?;
        println!("chirality: ({},{})", c.n(), c.m());
        println!("diameter: {d:.4} nm");
        println!("vth: {vth:.4} V");
    }
    Ok(())
}

fn adders(cmd: &AddersCommand) -> Result<(), Failure> {
    let params = BenchConfig::resolve(None)?;
    match cmd {
        AddersCommand::List => {
            for kind in AdderKind::ALL {
                let stats = build_adder_with(kind, 0.9, &params.design)
                    .map_err(|e| Failure::new(exit::OTHER, e.to_string()))?
                    .stats();
                println!(
                    "{:<9} {:<15} {:>2}T {:>2}C  {}",
                    kind.id(),
                    kind.label(),
                    stats.transistor_count,
                    stats.capacitor_count,
                    kind.description()
                );
            }
        }
        AddersCommand::Netlist { design, vdd, testbench } => {
            let kind: AdderKind = design.parse().map_err(|e: mvlsim::adders::AdderError| Failure::new(exit::USAGE, e.to_string()))?;
            let dut = build_adder_with(kind, *vdd, &params.design).map_err(|e| Failure::new(exit::OTHER, e.to_string()))?;
            let circuit = if *testbench {
                Testbench::new(&dut, *vdd, params.stimulus(), &params.design, params.stimulus.load_cap).circuit
            } else {
                dut
            };
            print!("{}", circuit.to_netlist());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
        Command::Device(a) => device(a),
        Command::Adders { command } => adders(command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
