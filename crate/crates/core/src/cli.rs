//! The `pgopt` command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad input file, 3 invalid flags,
//! 4 verification failure, 5 resource guard.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use thiserror::Error;

use crate::anneal::{anneal, suggested_t0, write_trace, AnnealConfig, OptimizedFile, Schedule, ScheduleKind};
use crate::bench::{self, BenchError, ExperimentConfig, GroupKey};
use crate::block::CxBlock;
use crate::circuit::{Angle, PhaseCircuit};
use crate::cost::{circuit_cost, compile_circuit, Gate};
use crate::oracle::{assert_equivalent, circuit_unitary, reconstructed_unitary};
use crate::topology::{Topology, TopologyFile};

pub const EXIT_IO: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_BAD_FLAGS: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;
pub const EXIT_RESOURCE: i32 = 5;

/// Environment variable capping `bench` worker threads.
pub const THREADS_ENV: &str = "PGOPT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadInput(String),
    #[error("{0}")]
    BadFlags(String),
    #[error("{0}")]
    VerifyFailed(String),
    #[error("{0}")]
    Resource(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::BadInput(_) => EXIT_BAD_INPUT,
            CliError::BadFlags(_) => EXIT_BAD_FLAGS,
            CliError::VerifyFailed(_) => EXIT_VERIFY_FAILED,
            CliError::Resource(_) => EXIT_RESOURCE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pgopt", version, about = "Optimise mixed ZX phase gadget circuits for a qubit topology")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Qasm,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random mixed ZX phase circuit.
    Random {
        #[arg(long)]
        qubits: usize,
        #[arg(long)]
        gadgets: usize,
        #[arg(long, default_value_t = 1)]
        min_legs: usize,
        #[arg(long)]
        max_legs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the nearest-neighbour CX count of a circuit.
    Cost {
        #[arg(long)]
        circuit: PathBuf,
        /// `line:N`, `cycle:N`, `grid:RxC` or a topology JSON file.
        #[arg(long)]
        topology: String,
        /// Layer repetitions K.
        #[arg(long, default_value_t = 1)]
        reps: u32,
    },
    /// Anneal a conjugating CX block for a circuit.
    Optimize {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        topology: String,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 1)]
        reps: u32,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, value_enum, default_value_t = CliSchedule::Linear)]
        schedule: CliSchedule,
        /// Initial temperature, or `auto` for 2m + 2.
        #[arg(long, default_value = "10")]
        t0: String,
        #[arg(long, default_value_t = 0.1)]
        t1: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-iteration CSV trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check `P = C ∘ P′ ∘ C†` for an optimized circuit with the dense oracle.
    Verify {
        #[arg(long)]
        optimized: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Compile a circuit (or optimized circuit) to nearest-neighbour CX gates and rotations.
    Compile {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        topology: String,
        #[arg(long, value_enum, default_value_t = OutputFormat::Qasm)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment sweep from a TOML or JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        aggregate: Option<PathBuf>,
        /// Comma-separated summary keys: qubits, gadgets, schedule, t0, iterations, time_bin.
        #[arg(long, default_value = "qubits,gadgets")]
        group_by: String,
        /// Gnuplot data (`x mean p10 p90`) against the first group key.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
        /// Write zero timing columns so output is byte-reproducible.
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliSchedule {
    Linear,
    Geometric,
    Reciprocal,
    Logarithmic,
}

impl From<CliSchedule> for ScheduleKind {
    fn from(s: CliSchedule) -> Self {
        match s {
            CliSchedule::Linear => ScheduleKind::Linear,
            CliSchedule::Geometric => ScheduleKind::Geometric,
            CliSchedule::Reciprocal => ScheduleKind::Reciprocal,
            CliSchedule::Logarithmic => ScheduleKind::Logarithmic,
        }
    }
}

/// Parses arguments and runs, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_FLAGS } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn load_topology(spec: &str) -> Result<Topology, CliError> {
    if let Ok(t) = spec.parse::<Topology>() {
        return Ok(t);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::BadFlags(format!(
            "topology {spec:?} is neither line:N, cycle:N, grid:RxC nor an existing file"
        )));
    }
    let file: TopologyFile = read_json(path)?;
    Topology::try_from(file).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn check_width(circuit: &PhaseCircuit, topology: &Topology) -> Result<(), CliError> {
    if circuit.num_qubits() != topology.num_qubits() {
        return Err(CliError::BadInput(format!(
            "circuit has {} qubits but topology has {}",
            circuit.num_qubits(),
            topology.num_qubits()
        )));
    }
    Ok(())
}

fn write_output(path: Option<&Path>, contents: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(contents)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    text.into_bytes()
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Random {
            qubits,
            gadgets,
            min_legs,
            max_legs,
            seed,
            out,
        } => {
            let max_legs = max_legs.unwrap_or(qubits.min(3).max(min_legs));
            let circuit = PhaseCircuit::random(qubits, gadgets, min_legs, max_legs, seed)
                .map_err(|e| CliError::BadFlags(e.to_string()))?;
            write_output(out.as_deref(), &to_json(&circuit))
        }
        Command::Cost {
            circuit,
            topology,
            reps,
        } => {
            let topology = load_topology(&topology)?;
            let circuit: PhaseCircuit = read_json(&circuit)?;
            check_width(&circuit, &topology)?;
            println!("{}", u64::from(reps) * circuit_cost(&circuit, &topology));
            Ok(())
        }
        Command::Optimize {
            circuit,
            topology,
            layers,
            reps,
            iters,
            schedule,
            t0,
            t1,
            seed,
            out,
            trace,
        } => {
            let topology = load_topology(&topology)?;
            let circuit: PhaseCircuit = read_json(&circuit)?;
            check_width(&circuit, &topology)?;
            let t0 = if t0 == "auto" {
                suggested_t0(circuit.len())
            } else {
                t0.parse()
                    .map_err(|_| CliError::BadFlags(format!("--t0 must be a number or auto, got {t0:?}")))?
            };
            let config = AnnealConfig {
                iterations: iters,
                num_layers: layers,
                repetitions: reps,
                seed,
                schedule: Schedule::new(schedule.into(), t0, t1).map_err(|e| CliError::BadFlags(e.to_string()))?,
            };
            config.validate().map_err(|e| CliError::BadFlags(e.to_string()))?;
            let result = anneal(&circuit, &topology, &config).map_err(|e| CliError::BadInput(e.to_string()))?;
            eprintln!(
                "cost {} -> {} ({} block gates)",
                result.initial_cost,
                result.final_cost,
                result.block.gate_count()
            );
            if let Some(path) = trace {
                let file = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                write_trace(&result.trace, file).map_err(|e| CliError::Io(e.to_string()))?;
            }
            write_output(out.as_deref(), &to_json(&result.to_file()))
        }
        Command::Verify { optimized, tol } => {
            let file: OptimizedFile = read_json(&optimized)?;
            let report = verify(&file, tol)?;
            println!("max deviation {:e}", report);
            Ok(())
        }
        Command::Compile {
            circuit,
            topology,
            format,
            out,
        } => {
            let topology = load_topology(&topology)?;
            let value: serde_json::Value = read_json(&circuit)?;
            let gates = if value.get("original").is_some() {
                let file: OptimizedFile = serde_json::from_value(value)
                    .map_err(|e| CliError::BadInput(format!("{}: {e}", circuit.display())))?;
                check_width(&file.conjugated, &topology)?;
                let block = CxBlock::from_layers(&topology, &file.block.layers)
                    .map_err(|e| CliError::BadInput(e.to_string()))?;
                compile_optimized(&block, &file.conjugated, &topology)
            } else {
                let c: PhaseCircuit = serde_json::from_value(value)
                    .map_err(|e| CliError::BadInput(format!("{}: {e}", circuit.display())))?;
                check_width(&c, &topology)?;
                compile_circuit(&c, &topology)
            };
            let bytes = match format {
                OutputFormat::Json => to_json(&CompiledFile {
                    qubits: topology.num_qubits(),
                    gates,
                }),
                OutputFormat::Qasm => to_qasm(&gates, topology.num_qubits())?.into_bytes(),
            };
            write_output(out.as_deref(), &bytes)
        }
        Command::Bench {
            config,
            out,
            aggregate,
            group_by,
            gnuplot,
            no_timing,
        } => {
            let mut cfg = load_experiment(&config)?;
            if no_timing {
                cfg.record_timing = false;
            }
            let keys = group_by
                .split(',')
                .map(|k| {
                    GroupKey::parse(k.trim()).ok_or_else(|| CliError::BadFlags(format!("unknown group key {k:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let threads = match std::env::var(THREADS_ENV) {
                Ok(v) => Some(
                    v.parse::<usize>()
                        .ok()
                        .filter(|&n| n > 0)
                        .ok_or_else(|| CliError::BadFlags(format!("{THREADS_ENV} must be a positive integer")))?,
                ),
                Err(_) => None,
            };
            let records = bench::run_experiment_with_threads(&cfg, threads).map_err(|e| match e {
                BenchError::TooManyRuns { .. } => CliError::Resource(e.to_string()),
                BenchError::Config(_) => CliError::BadInput(e.to_string()),
                other => CliError::Io(other.to_string()),
            })?;
            let mut buf = Vec::new();
            bench::write_records(&records, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
            write_output(Some(&out), &buf)?;
            let rows = bench::summarize(&records, &keys);
            if let Some(path) = aggregate {
                let mut buf = Vec::new();
                bench::write_summary(&rows, &keys, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
                write_output(Some(&path), &buf)?;
            }
            if let Some(path) = gnuplot {
                let mut buf = Vec::new();
                bench::write_gnuplot(&records, keys[0], &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
                write_output(Some(&path), &buf)?;
            }
            let timed: Vec<_> = records.iter().filter(|r| r.wall_time_seconds > 0.0).collect();
            if !timed.is_empty() {
                let iters: f64 = timed.iter().map(|r| r.iterations as f64).sum();
                let secs: f64 = timed.iter().map(|r| r.wall_time_seconds).sum();
                eprintln!(
                    "{} runs, mean {:.2} us/iteration",
                    records.len(),
                    secs / iters * 1e6
                );
            } else {
                eprintln!("{} runs", records.len());
            }
            Ok(())
        }
    }
}

fn load_experiment(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = read_text(path)?;
    let bad = |e: String| CliError::BadInput(format!("{}: {e}", path.display()));
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| bad(e.to_string()))
    }
}

/// Oracle check of an optimized file; returns the maximum entry deviation.
pub fn verify(file: &OptimizedFile, tol: f64) -> Result<f64, CliError> {
    let block = file.block().map_err(|e| CliError::BadInput(e.to_string()))?;
    if file.conjugated.num_qubits() != file.original.num_qubits() || file.conjugated.len() != file.original.len() {
        return Err(CliError::VerifyFailed(
            "conjugated and original circuits differ in shape".to_string(),
        ));
    }
    let expected = circuit_unitary(&file.original).map_err(|e| CliError::BadInput(e.to_string()))?;
    let actual = reconstructed_unitary(&block, &file.conjugated).map_err(|e| CliError::BadInput(e.to_string()))?;
    let eq = assert_equivalent(&expected, &actual, tol, false);
    if eq.equivalent {
        Ok(eq.max_deviation)
    } else {
        Err(CliError::VerifyFailed(format!(
            "unitaries differ: max deviation {:e} > {tol:e}",
            eq.max_deviation
        )))
    }
}

/// Time-ordered gates for `C ∘ P′ ∘ C†`: the block adjoint (outer layer
/// first), the compiled gadgets, then the block (layer 0 first).
pub fn compile_optimized(block: &CxBlock, conjugated: &PhaseCircuit, topology: &Topology) -> Vec<Gate> {
    let mut gates = Vec::new();
    for l in (0..block.num_layers()).rev() {
        gates.extend(block.layer(l).map(Gate::cx));
    }
    gates.extend(compile_circuit(conjugated, topology));
    for l in 0..block.num_layers() {
        gates.extend(block.layer(l).map(Gate::cx));
    }
    gates
}

#[derive(serde::Serialize)]
struct CompiledFile {
    qubits: usize,
    gates: Vec<Gate>,
}

/// `-2θ` in qelib1 `rz`/`rx` convention, as an exact multiple of pi.
fn qasm_angle(angle: &Angle) -> Result<String, CliError> {
    let Angle::Pi(r) = angle else {
        return Err(CliError::BadInput(format!(
            "QASM export needs concrete angles, found parameter {angle}"
        )));
    };
    let v = *r * Rational64::from_integer(-2);
    let (n, d) = (*v.numer(), *v.denom());
    Ok(match (n, d) {
        (0, _) => "0".to_string(),
        (1, 1) => "pi".to_string(),
        (-1, 1) => "-pi".to_string(),
        (n, 1) => format!("{n}*pi"),
        (1, d) => format!("pi/{d}"),
        (-1, d) => format!("-pi/{d}"),
        (n, d) => format!("{n}*pi/{d}"),
    })
}

pub fn to_qasm(gates: &[Gate], num_qubits: usize) -> Result<String, CliError> {
    let mut s = String::new();
    s.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    s.push_str("// Gadget rotations exp(i*theta*Z) and exp(i*theta*X) are emitted as\n");
    s.push_str("// rz(-2*theta) and rx(-2*theta), since rz(phi) = exp(-i*phi*Z/2).\n");
    let _ = writeln!(s, "qreg q[{num_qubits}];");
    for g in gates {
        let _ = match g {
            Gate::Cx { control, target } => writeln!(s, "cx q[{control}],q[{target}];"),
            Gate::RotZ { qubit, angle } => writeln!(s, "rz({}) q[{qubit}];", qasm_angle(angle)?),
            Gate::RotX { qubit, angle } => writeln!(s, "rx({}) q[{qubit}];", qasm_angle(angle)?),
        };
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qasm_angles() {
        assert_eq!(qasm_angle(&Angle::pi_frac(1, 4)).unwrap(), "-pi/2");
        assert_eq!(qasm_angle(&Angle::pi_frac(1, 2)).unwrap(), "-pi");
        assert_eq!(qasm_angle(&Angle::pi_frac(3, 8)).unwrap(), "-3*pi/4");
        assert_eq!(qasm_angle(&Angle::zero()).unwrap(), "0");
        assert!(qasm_angle(&Angle::param("t")).is_err());
    }

    #[test]
    fn flag_errors_map_to_exit_three() {
        assert_eq!(run(["pgopt", "optimize"]), EXIT_BAD_FLAGS);
        assert_eq!(run(["pgopt", "frobnicate"]), EXIT_BAD_FLAGS);
        assert_eq!(run(["pgopt", "--help"]), 0);
    }

    #[test]
    fn missing_input_is_exit_two() {
        assert_eq!(
            run(["pgopt", "cost", "--circuit", "/nonexistent.json", "--topology", "line:3"]),
            EXIT_BAD_INPUT
        );
    }
}
