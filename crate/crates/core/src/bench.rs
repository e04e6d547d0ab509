//! Random-circuit experiment sweeps.
//!
//! An [`ExperimentConfig`] spans a grid of hyper-parameters; every point of
//! the grid times every circuit index is one independent annealing run.
//! Runs are independent, so with the `parallel` feature they execute on a
//! rayon pool; results come back in enumeration order either way.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anneal::{anneal, AnnealConfig, AnnealError, Schedule, ScheduleKind};
use crate::circuit::{CircuitError, PhaseCircuit};
use crate::cost::circuit_cost;
use crate::topology::{Topology, TopologyError};

pub const DEFAULT_MAX_RUNS: usize = 1_000_000;

/// Width of the wall-time bins used by [`GroupKey::TimeBin`], in seconds.
pub const TIME_BIN_SECONDS: f64 = 0.5;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("experiment has {runs} runs, above the cap of {cap}")]
    TooManyRuns { runs: usize, cap: usize },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Anneal(#[from] AnnealError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}

/// Inclusive range `start, start + step, …, ≤ stop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSweep {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
}

impl IterationSweep {
    pub fn single(iterations: usize) -> Self {
        IterationSweep {
            start: iterations,
            stop: iterations,
            step: 1,
        }
    }

    pub fn values(&self) -> Vec<usize> {
        if self.step == 0 || self.start > self.stop {
            return Vec::new();
        }
        (self.start..=self.stop).step_by(self.step).collect()
    }
}

fn default_t1() -> f64 {
    0.1
}

fn default_max_runs() -> usize {
    DEFAULT_MAX_RUNS
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `(rows, cols)` of each square-lattice topology.
    pub grids: Vec<(usize, usize)>,
    pub gadgets_per_layer: Vec<usize>,
    pub t0_values: Vec<f64>,
    pub schedule_kinds: Vec<ScheduleKind>,
    pub iteration_sweep: IterationSweep,
    pub circuits_per_config: usize,
    pub repetitions: u32,
    pub block_layers: usize,
    pub min_legs: usize,
    pub max_legs: usize,
    pub base_seed: u64,
    #[serde(default = "default_t1")]
    pub t1: f64,
    #[serde(default = "default_max_runs")]
    pub max_runs: usize,
    /// When false, timing columns are written as zero so output is
    /// byte-reproducible.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// The full published sweep: 4×4, 5×5 and 6×6 grids, 10 to 35 gadgets
    /// per layer, four initial temperatures, linear and geometric schedules,
    /// 100 to 5000 iterations, 50 circuits per point.
    pub fn published_sweep() -> Self {
        ExperimentConfig {
            grids: vec![(4, 4), (5, 5), (6, 6)],
            gadgets_per_layer: (10..=35).step_by(5).collect(),
            t0_values: vec![1.0, 5.0, 10.0, 20.0],
            schedule_kinds: vec![ScheduleKind::Linear, ScheduleKind::Geometric],
            iteration_sweep: IterationSweep {
                start: 100,
                stop: 5000,
                step: 100,
            },
            circuits_per_config: 50,
            repetitions: 5,
            block_layers: 3,
            min_legs: 2,
            max_legs: 3,
            base_seed: 0,
            t1: default_t1(),
            max_runs: DEFAULT_MAX_RUNS,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.grids.is_empty()
            || self.gadgets_per_layer.is_empty()
            || self.t0_values.is_empty()
            || self.schedule_kinds.is_empty()
        {
            return bad("grids, gadgets_per_layer, t0_values and schedule_kinds must be non-empty");
        }
        if self.iteration_sweep.step == 0 {
            return bad("iteration_sweep.step must be positive");
        }
        if self.iteration_sweep.values().is_empty() {
            return bad("iteration_sweep is empty");
        }
        if self.circuits_per_config == 0 {
            return bad("circuits_per_config must be positive");
        }
        if self.grids.iter().any(|&(r, c)| r == 0 || c == 0) {
            return bad("grid dimensions must be positive");
        }
        for &t0 in &self.t0_values {
            Schedule::new(ScheduleKind::Linear, t0, self.t1)?;
        }
        if self.repetitions == 0 || self.block_layers == 0 {
            return bad("repetitions and block_layers must be positive");
        }
        let smallest = self.grids.iter().map(|&(r, c)| r * c).min().unwrap_or(0);
        if !(1 <= self.min_legs && self.min_legs <= self.max_legs && self.max_legs <= smallest) {
            return bad("need 1 <= min_legs <= max_legs <= qubits of every grid");
        }
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        self.grids.len()
            * self.gadgets_per_layer.len()
            * self.t0_values.len()
            * self.schedule_kinds.len()
            * self.iteration_sweep.values().len()
            * self.circuits_per_config
    }

    fn runs(&self) -> Vec<RunSpec> {
        let iterations = self.iteration_sweep.values();
        let mut out = Vec::with_capacity(self.run_count());
        for &(rows, cols) in &self.grids {
            for &gadgets in &self.gadgets_per_layer {
                for &t0 in &self.t0_values {
                    for &schedule in &self.schedule_kinds {
                        for &iters in &iterations {
                            for index in 0..self.circuits_per_config {
                                let circuit_seed = stable_seed(&[
                                    self.base_seed,
                                    rows as u64,
                                    cols as u64,
                                    gadgets as u64,
                                    index as u64,
                                ]);
                                let anneal_seed = stable_seed(&[
                                    circuit_seed,
                                    schedule as u64,
                                    t0.to_bits(),
                                    iters as u64,
                                ]);
                                out.push(RunSpec {
                                    rows,
                                    cols,
                                    gadgets,
                                    t0,
                                    schedule,
                                    iterations: iters,
                                    circuit_seed,
                                    anneal_seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Order-sensitive hash of a tuple of words via SplitMix64 finalisation.
///
/// Depends only on the input words, so seeds are reproducible across
/// machines, thread counts and builds.
pub fn stable_seed(words: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    words.iter().fold(0x5EED_u64, |h, &w| mix(h ^ mix(w)))
}

#[derive(Debug, Clone, Copy)]
struct RunSpec {
    rows: usize,
    cols: usize,
    gadgets: usize,
    t0: f64,
    schedule: ScheduleKind,
    iterations: usize,
    circuit_seed: u64,
    anneal_seed: u64,
}

/// One annealing run. Columns serialise in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub qubits: usize,
    pub gadgets: usize,
    pub schedule: ScheduleKind,
    pub t0: f64,
    pub iterations: usize,
    pub seed: u64,
    pub original_cost: u64,
    pub optimized_cost: u64,
    pub reduction_fraction: f64,
    pub wall_time_seconds: f64,
    pub iterations_per_second: f64,
}

fn execute(cfg: &ExperimentConfig, spec: &RunSpec) -> Result<RunRecord, BenchError> {
    let topology = Topology::grid(spec.rows, spec.cols)?;
    let n = topology.num_qubits();
    let circuit = PhaseCircuit::random(n, spec.gadgets, cfg.min_legs, cfg.max_legs, spec.circuit_seed)?;
    let original_cost = u64::from(cfg.repetitions) * circuit_cost(&circuit, &topology);

    let (optimized_cost, elapsed) = if spec.iterations == 0 {
        (original_cost, 0.0)
    } else {
        let config = AnnealConfig {
            iterations: spec.iterations,
            num_layers: cfg.block_layers,
            repetitions: cfg.repetitions,
            seed: spec.anneal_seed,
            schedule: Schedule::new(spec.schedule, spec.t0, cfg.t1)?,
        };
        let start = Instant::now();
        let result = anneal(&circuit, &topology, &config)?;
        (result.final_cost, start.elapsed().as_secs_f64())
    };

    let (wall, rate) = if cfg.record_timing && elapsed > 0.0 {
        (elapsed, spec.iterations as f64 / elapsed)
    } else {
        (0.0, 0.0)
    };
    let reduction_fraction = if original_cost > 0 {
        (original_cost - optimized_cost) as f64 / original_cost as f64
    } else {
        0.0
    };
    Ok(RunRecord {
        qubits: n,
        gadgets: spec.gadgets,
        schedule: spec.schedule,
        t0: spec.t0,
        iterations: spec.iterations,
        seed: spec.anneal_seed,
        original_cost,
        optimized_cost,
        reduction_fraction,
        wall_time_seconds: wall,
        iterations_per_second: rate,
    })
}

fn prepare(cfg: &ExperimentConfig) -> Result<Vec<RunSpec>, BenchError> {
    cfg.validate()?;
    let runs = cfg.run_count();
    if runs > cfg.max_runs {
        return Err(BenchError::TooManyRuns {
            runs,
            cap: cfg.max_runs,
        });
    }
    Ok(cfg.runs())
}

/// Runs every configuration on the current thread.
pub fn run_experiment_sequential(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, BenchError> {
    prepare(cfg)?.iter().map(|spec| execute(cfg, spec)).collect()
}

/// Runs configurations on the global rayon pool.
#[cfg(feature = "parallel")]
pub fn run_experiment_parallel(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, BenchError> {
    use rayon::prelude::*;
    prepare(cfg)?.par_iter().map(|spec| execute(cfg, spec)).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, BenchError> {
    run_experiment_with_threads(cfg, None)
}

/// Runs with at most `threads` workers (`None`: all cores). Output order and
/// content do not depend on the thread count.
pub fn run_experiment_with_threads(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<Vec<RunRecord>, BenchError> {
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(1) => run_experiment_sequential(cfg),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| BenchError::ThreadPool(e.to_string()))?
                .install(|| run_experiment_parallel(cfg)),
            None => run_experiment_parallel(cfg),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        run_experiment_sequential(cfg)
    }
}

pub fn write_records<W: Write>(records: &[RunRecord], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns a summary can be grouped by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKey {
    Qubits,
    Gadgets,
    Schedule,
    T0,
    Iterations,
    /// Wall time rounded down to a multiple of [`TIME_BIN_SECONDS`].
    TimeBin,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Qubits => "qubits",
            GroupKey::Gadgets => "gadgets",
            GroupKey::Schedule => "schedule",
            GroupKey::T0 => "t0",
            GroupKey::Iterations => "iterations",
            GroupKey::TimeBin => "time_bin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            GroupKey::Qubits,
            GroupKey::Gadgets,
            GroupKey::Schedule,
            GroupKey::T0,
            GroupKey::Iterations,
            GroupKey::TimeBin,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    fn value(self, r: &RunRecord) -> KeyValue {
        match self {
            GroupKey::Qubits => KeyValue::Int(r.qubits as u64),
            GroupKey::Gadgets => KeyValue::Int(r.gadgets as u64),
            GroupKey::Schedule => KeyValue::Text(r.schedule.name().to_string()),
            GroupKey::T0 => KeyValue::Real(r.t0),
            GroupKey::Iterations => KeyValue::Int(r.iterations as u64),
            GroupKey::TimeBin => {
                KeyValue::Real((r.wall_time_seconds / TIME_BIN_SECONDS).floor() * TIME_BIN_SECONDS)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum KeyValue {
    Int(u64),
    Real(f64),
    Text(String),
}

impl KeyValue {
    fn rank(&self) -> u8 {
        match self {
            KeyValue::Int(_) => 0,
            KeyValue::Real(_) => 1,
            KeyValue::Text(_) => 2,
        }
    }
}

impl PartialEq for KeyValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for KeyValue {}

impl PartialOrd for KeyValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for KeyValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (KeyValue::Int(a), KeyValue::Int(b)) => a.cmp(b),
            (KeyValue::Real(a), KeyValue::Real(b)) => a.total_cmp(b),
            (KeyValue::Text(a), KeyValue::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for KeyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyValue::Int(v) => write!(f, "{v}"),
            KeyValue::Real(v) => write!(f, "{v}"),
            KeyValue::Text(v) => f.write_str(v),
        }
    }
}

/// Statistics of `reduction_fraction` over one group of records.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: Vec<KeyValue>,
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub mean_wall_time: f64,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Groups records by `group_by` (sorted by key) and summarises each group.
pub fn summarize(records: &[RunRecord], group_by: &[GroupKey]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<Vec<KeyValue>, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = group_by.iter().map(|k| k.value(r)).collect();
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, rows)| {
            let mut values: Vec<f64> = rows.iter().map(|r| r.reduction_fraction).collect();
            values.sort_by(f64::total_cmp);
            let mut times: Vec<f64> = rows.iter().map(|r| r.wall_time_seconds).collect();
            times.sort_by(f64::total_cmp);
            let count = values.len();
            // sum sorted values so the result is independent of record order
            let mean = values.iter().sum::<f64>() / count as f64;
            SummaryRow {
                key,
                count,
                mean,
                min: values[0],
                max: values[count - 1],
                p10: percentile(&values, 0.1),
                p50: percentile(&values, 0.5),
                p90: percentile(&values, 0.9),
                mean_wall_time: times.iter().sum::<f64>() / count as f64,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], group_by: &[GroupKey], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = group_by.iter().map(|k| k.name()).collect();
    header.extend(["count", "mean", "min", "max", "p10", "p50", "p90", "mean_wall_time"]);
    w.write_record(&header)?;
    for row in rows {
        let mut fields: Vec<String> = row.key.iter().map(ToString::to_string).collect();
        fields.push(row.count.to_string());
        for v in [row.mean, row.min, row.max, row.p10, row.p50, row.p90, row.mean_wall_time] {
            fields.push(v.to_string());
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated `x mean p10 p90` lines for plotting against one key.
pub fn write_gnuplot<W: Write>(records: &[RunRecord], x: GroupKey, mut out: W) -> Result<(), BenchError> {
    writeln!(out, "# {} mean p10 p90", x.name())?;
    for row in summarize(records, &[x]) {
        writeln!(out, "{} {} {} {}", row.key[0], row.mean, row.p10, row.p90)?;
    }
    Ok(())
}
