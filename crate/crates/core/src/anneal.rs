//! Simulated annealing over CX blocks.
//!
//! The walk starts from the empty block and proposes one uniformly random
//! valid gate flip per iteration. The cost of a configuration is
//! `2·gates(C) + K·cost(C†(P))`, and an increase `Δ > 0` is accepted with
//! probability `2^(−Δ/t)`.

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::{conjugate_full, BlockError, BlockFile, ConjugatedState, CxBlock, GateFlip};
use crate::circuit::PhaseCircuit;
use crate::cost::{circuit_cost, CostCache};
use crate::topology::Topology;

/// Below this temperature the walk is purely greedy.
pub const GREEDY_TEMPERATURE: f64 = 1e-12;

const FULL_RECOMPUTE_PERIOD: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum AnnealError {
    #[error("schedule needs t0 >= t1 > 0, got t0 = {t0}, t1 = {t1}")]
    BadSchedule { t0: f64, t1: f64 },
    #[error("{0} must be at least 1")]
    NonPositive(&'static str),
    #[error("circuit has {circuit} qubits but topology has {topology}")]
    WidthMismatch { circuit: usize, topology: usize },
    #[error("unknown schedule {0:?}: expected linear, geometric, reciprocal or logarithmic")]
    UnknownSchedule(String),
    #[error(transparent)]
    Block(#[from] BlockError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Linear,
    Geometric,
    Reciprocal,
    Logarithmic,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 4] = [
        ScheduleKind::Linear,
        ScheduleKind::Geometric,
        ScheduleKind::Reciprocal,
        ScheduleKind::Logarithmic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Linear => "linear",
            ScheduleKind::Geometric => "geometric",
            ScheduleKind::Reciprocal => "reciprocal",
            ScheduleKind::Logarithmic => "logarithmic",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleKind {
    type Err = AnnealError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScheduleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| AnnealError::UnknownSchedule(s.to_string()))
    }
}

/// Temperature curve from `t0` at the first iteration to `t1` at the last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub t0: f64,
    pub t1: f64,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, t0: f64, t1: f64) -> Result<Self, AnnealError> {
        let s = Schedule { kind, t0, t1 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), AnnealError> {
        if !(self.t1 > 0.0 && self.t0 >= self.t1 && self.t0.is_finite()) {
            return Err(AnnealError::BadSchedule { t0: self.t0, t1: self.t1 });
        }
        Ok(())
    }

    /// Temperature at iteration `k` of `n`.
    pub fn temperature(&self, k: usize, n: usize) -> f64 {
        let (t0, t1) = (self.t0, self.t1);
        if n <= 1 {
            return t0;
        }
        let k = k.min(n - 1) as f64;
        let last = (n - 1) as f64;
        match self.kind {
            ScheduleKind::Linear => t0 + k * (t1 - t0) / last,
            ScheduleKind::Geometric => t0 * (t1 / t0).powf(k / last),
            ScheduleKind::Reciprocal => {
                let beta = (t0 / t1 - 1.0) / last;
                t0 / (1.0 + beta * k)
            }
            ScheduleKind::Logarithmic => t1 + (t0 - t1) * (1.0 - (1.0 + k).ln() / (n as f64).ln()),
        }
    }
}

/// Probability `2^(−Δ/t)` of accepting a cost change `Δ`; 1 for `Δ ≤ 0`.
pub fn accept_probability(delta: i64, temperature: f64) -> f64 {
    if delta <= 0 {
        1.0
    } else if temperature < GREEDY_TEMPERATURE {
        0.0
    } else {
        (-(delta as f64) * std::f64::consts::LN_2 / temperature).exp()
    }
}

/// `2m + 2` for `m` gadgets: the conventional end of the exploration phase.
pub fn suggested_t0(num_gadgets: usize) -> f64 {
    2.0 * num_gadgets as f64 + 2.0
}

/// `2·gates + K·layer_cost`.
pub fn combined_cost(block_gates: usize, layer_cost: u64, repetitions: u32) -> u64 {
    2 * block_gates as u64 + u64::from(repetitions) * layer_cost
}

/// Total cost of a conjugated state with `K` repetitions of the layer.
pub fn total_cost(state: &ConjugatedState<'_>, topology: &Topology, repetitions: u32) -> u64 {
    combined_cost(
        state.block().gate_count(),
        circuit_cost(state.conjugated(), topology),
        repetitions,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub iterations: usize,
    pub num_layers: usize,
    pub repetitions: u32,
    pub seed: u64,
    pub schedule: Schedule,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            iterations: 1000,
            num_layers: 3,
            repetitions: 1,
            seed: 0,
            schedule: Schedule {
                kind: ScheduleKind::Linear,
                t0: 10.0,
                t1: 0.1,
            },
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<(), AnnealError> {
        if self.iterations == 0 {
            return Err(AnnealError::NonPositive("iterations"));
        }
        if self.num_layers == 0 {
            return Err(AnnealError::NonPositive("num_layers"));
        }
        if self.repetitions == 0 {
            return Err(AnnealError::NonPositive("repetitions"));
        }
        self.schedule.validate()
    }
}

/// One row of the annealing trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub temp: f64,
    pub delta: i64,
    pub accepted: bool,
    pub cost: u64,
    pub best_cost: u64,
}

/// Result of an annealing run: `P = C ∘ P′ ∘ C†` with `C = block`,
/// `P′ = conjugated` and `P = original`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedCircuit {
    pub block: CxBlock,
    pub conjugated: PhaseCircuit,
    pub original: PhaseCircuit,
    pub repetitions: u32,
    pub initial_cost: u64,
    pub final_cost: u64,
    pub trace: Vec<TraceRecord>,
}

impl OptimizedCircuit {
    pub fn to_file(&self) -> OptimizedFile {
        OptimizedFile {
            original: self.original.clone(),
            block: self.block.to_file(),
            conjugated: self.conjugated.clone(),
            repetitions: self.repetitions,
            final_cost: self.final_cost,
        }
    }

    pub fn reduction_fraction(&self) -> f64 {
        if self.initial_cost == 0 {
            0.0
        } else {
            (self.initial_cost - self.final_cost) as f64 / self.initial_cost as f64
        }
    }
}

/// JSON form of an optimized circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedFile {
    pub original: PhaseCircuit,
    pub block: BlockFile,
    pub conjugated: PhaseCircuit,
    pub repetitions: u32,
    pub final_cost: u64,
}

impl OptimizedFile {
    /// Rebuilds the block, checking qubit range and layer matchings.
    pub fn block(&self) -> Result<CxBlock, BlockError> {
        CxBlock::from_gates(self.original.num_qubits(), &self.block.layers)
    }
}

/// Valid flips per layer, rebuilt only for layers changed since last use.
struct FlipTable {
    layers: Vec<Option<Vec<GateFlip>>>,
}

impl FlipTable {
    fn new(num_layers: usize) -> Self {
        FlipTable {
            layers: vec![None; num_layers],
        }
    }

    fn invalidate(&mut self, layer: usize) {
        self.layers[layer] = None;
    }

    fn sample<R: Rng>(&mut self, block: &CxBlock, topology: &Topology, rng: &mut R) -> Option<GateFlip> {
        for (l, slot) in self.layers.iter_mut().enumerate() {
            if slot.is_none() {
                *slot = Some(block.valid_flips_in_layer(topology, l));
            }
        }
        let total: usize = self.layers.iter().flatten().map(Vec::len).sum();
        if total == 0 {
            return None;
        }
        let mut idx = rng.gen_range(0..total);
        for flips in self.layers.iter().flatten() {
            if idx < flips.len() {
                return Some(flips[idx]);
            }
            idx -= flips.len();
        }
        unreachable!("index within total")
    }
}

/// Runs simulated annealing and returns the best configuration seen.
pub fn anneal(
    circuit: &PhaseCircuit,
    topology: &Topology,
    config: &AnnealConfig,
) -> Result<OptimizedCircuit, AnnealError> {
    config.validate()?;
    if circuit.num_qubits() != topology.num_qubits() {
        return Err(AnnealError::WidthMismatch {
            circuit: circuit.num_qubits(),
            topology: topology.num_qubits(),
        });
    }
    let reps = config.repetitions;
    let n = config.iterations;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache = CostCache::new();
    let mut state = ConjugatedState::new(circuit, config.num_layers)?;
    let mut flips = FlipTable::new(config.num_layers);

    let mut gadget_costs: Vec<u32> = circuit
        .gadgets()
        .iter()
        .map(|g| cache.cost(g.legs(), topology))
        .collect();
    let mut layer_cost: u64 = gadget_costs.iter().map(|&c| u64::from(c)).sum();
    let initial_cost = combined_cost(0, layer_cost, reps);
    let mut cost = initial_cost;
    let mut best_cost = cost;
    let mut best_block = state.block().clone();
    let mut trace = Vec::with_capacity(n);
    let mut saved: Vec<(usize, u32)> = Vec::new();
    let mut changed = FixedBitSet::with_capacity(circuit.len());

    for iter in 0..n {
        let temp = config.schedule.temperature(iter, n);
        let Some(flip) = flips.sample(state.block(), topology, &mut rng) else {
            break;
        };
        state.flip(flip)?;

        saved.clear();
        changed.clear();
        changed.extend(state.touched());
        let mut new_layer_cost = layer_cost;
        for k in changed.ones() {
            let old = gadget_costs[k];
            let new = cache.cost(state.conjugated().gadgets()[k].legs(), topology);
            saved.push((k, old));
            gadget_costs[k] = new;
            new_layer_cost = new_layer_cost - u64::from(old) + u64::from(new);
        }
        let new_cost = combined_cost(state.block().gate_count(), new_layer_cost, reps);
        let delta = new_cost as i64 - cost as i64;
        let accepted = delta <= 0 || rng.gen::<f64>() < accept_probability(delta, temp);

        if accepted {
            cost = new_cost;
            layer_cost = new_layer_cost;
            flips.invalidate(flip.layer);
            if cost < best_cost {
                best_cost = cost;
                best_block = state.block().clone();
            }
        } else {
            state.flip(flip)?;
            for &(k, old) in &saved {
                gadget_costs[k] = old;
            }
        }

        if cfg!(debug_assertions) && (iter + 1) % FULL_RECOMPUTE_PERIOD == 0 {
            debug_assert_eq!(cost, total_cost(&state, topology, reps));
        }

        trace.push(TraceRecord {
            iter,
            temp,
            delta,
            accepted,
            cost,
            best_cost,
        });
    }

    let conjugated = conjugate_full(circuit, &best_block);
    Ok(OptimizedCircuit {
        block: best_block,
        conjugated,
        original: circuit.clone(),
        repetitions: reps,
        initial_cost,
        final_cost: best_cost,
        trace,
    })
}

/// Writes a trace as CSV with header `iter,temp,delta,accepted,cost,best_cost`.
pub fn write_trace<W: std::io::Write>(trace: &[TraceRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
