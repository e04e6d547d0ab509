//! Topology-aware optimisation of mixed ZX phase gadget circuits.
//!
//! A phase circuit `P` is conjugated by a layered block `C` of
//! nearest-neighbour CX gates, giving `P = C ∘ P′ ∘ C†` where `P′` has the same
//! gadgets with different legs. Simulated annealing searches for the block
//! minimising `2·gates(C) + K·cost(P′)`, where `cost` counts the
//! nearest-neighbour CX gates needed to implement each gadget on the
//! topology and `K` is the number of repeated layers.
//!
//! Modules, bottom up:
//! - [`topology`]: qubit connectivity and distances
//! - [`circuit`]: phase gadgets, circuits and CX conjugation
//! - [`cost`]: spanning-tree cost model and gadget compilation
//! - [`block`]: CX blocks and incremental flips
//! - [`anneal`]: the annealing loop and temperature schedules
//! - [`oracle`]: dense unitaries for checking all of the above
//! - [`bench`]: random-circuit experiment sweeps
//! - [`cli`]: the `pgopt` command line

pub mod anneal;
pub mod bench;
pub mod block;
pub mod circuit;
pub mod cli;
pub mod cost;
pub mod oracle;
pub mod topology;

pub use anneal::{anneal, AnnealConfig, OptimizedCircuit, Schedule, ScheduleKind};
pub use block::{conjugate_full, ConjugatedState, CxBlock, GateFlip};
pub use circuit::{Angle, Basis, CxGate, PhaseCircuit, PhaseGadget};
pub use cost::{circuit_cost, compile_gadget, gadget_cost};
pub use topology::Topology;
