//! Layered blocks of nearest-neighbour CX gates and incremental conjugation.
//!
//! Layer 0 sits next to the phase circuit. With `G_l` the product of layer
//! `l`'s gates, the block unitary is `U_C = G_{L−1} ⋯ G_0` and the conjugated
//! circuit is `P′ = U_C† · P · U_C`, so that `P = U_C · P′ · U_C†`.
//! [`conjugate_full`] builds `P′` by conjugating with the outermost layer
//! first and layer 0 last.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{CxGate, PhaseCircuit};
use crate::topology::Topology;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlockError {
    #[error("block needs at least one layer")]
    NoLayers,
    #[error("layer {layer} out of range for {num_layers} layers")]
    LayerOutOfRange { layer: usize, num_layers: usize },
    #[error("CX({control}, {target}) is not a topology edge")]
    NotNearestNeighbour { control: usize, target: usize },
    #[error("flip ({layer}; {control}, {target}) is not valid for this block")]
    InvalidFlip {
        layer: usize,
        control: usize,
        target: usize,
    },
    #[error("block is for {block} qubits, circuit has {circuit}")]
    WidthMismatch { block: usize, circuit: usize },
}

/// Adds or removes `CX(control, target)` at `layer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateFlip {
    pub layer: usize,
    pub control: usize,
    pub target: usize,
}

impl GateFlip {
    pub fn new(layer: usize, control: usize, target: usize) -> Self {
        GateFlip {
            layer,
            control,
            target,
        }
    }

    pub fn gate(&self) -> CxGate {
        CxGate {
            control: self.control,
            target: self.target,
        }
    }
}

/// Fixed number of layers, each a partial matching of oriented CX gates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CxBlock {
    num_qubits: usize,
    /// `slots[l][q]` is the gate at layer `l` touching qubit `q`, if any.
    slots: Vec<Vec<Option<CxGate>>>,
    gate_count: usize,
}

impl CxBlock {
    pub fn new(num_qubits: usize, num_layers: usize) -> Result<Self, BlockError> {
        if num_layers == 0 {
            return Err(BlockError::NoLayers);
        }
        Ok(CxBlock {
            num_qubits,
            slots: vec![vec![None; num_qubits]; num_layers],
            gate_count: 0,
        })
    }

    /// Builds a block from explicit layers, checking adjacency and matching.
    pub fn from_layers(topology: &Topology, layers: &[Vec<CxGate>]) -> Result<Self, BlockError> {
        for g in layers.iter().flatten() {
            if !topology.is_edge(g.control, g.target) {
                return Err(BlockError::NotNearestNeighbour {
                    control: g.control,
                    target: g.target,
                });
            }
        }
        Self::from_gates(topology.num_qubits(), layers)
    }

    /// Like [`CxBlock::from_layers`] without a topology: only checks qubit
    /// range and the per-layer matching.
    pub fn from_gates(num_qubits: usize, layers: &[Vec<CxGate>]) -> Result<Self, BlockError> {
        let mut block = CxBlock::new(num_qubits, layers.len())?;
        for (l, gates) in layers.iter().enumerate() {
            for g in gates {
                let flip = GateFlip::new(l, g.control, g.target);
                if !block.is_valid_flip(flip) || block.gate_at(l, g.control).is_some() {
                    return Err(BlockError::InvalidFlip {
                        layer: l,
                        control: g.control,
                        target: g.target,
                    });
                }
                block.toggle(flip);
            }
        }
        Ok(block)
    }

    pub fn num_layers(&self) -> usize {
        self.slots.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Total CX gates over all layers.
    pub fn gate_count(&self) -> usize {
        self.gate_count
    }

    pub fn is_empty(&self) -> bool {
        self.gate_count == 0
    }

    pub fn gate_at(&self, layer: usize, qubit: usize) -> Option<CxGate> {
        self.slots[layer][qubit]
    }

    /// Gates of one layer, sorted by control qubit.
    pub fn layer(&self, layer: usize) -> impl Iterator<Item = CxGate> + '_ {
        self.slots[layer]
            .iter()
            .enumerate()
            .filter_map(|(q, g)| g.filter(|g| g.control == q))
    }

    pub fn layers(&self) -> Vec<Vec<CxGate>> {
        (0..self.num_layers()).map(|l| self.layer(l).collect()).collect()
    }

    /// A flip is valid if it removes the exact gate present at its layer, or
    /// adds a gate where neither qubit is in use at that layer.
    pub fn is_valid_flip(&self, f: GateFlip) -> bool {
        if f.layer >= self.num_layers() || f.control >= self.num_qubits || f.target >= self.num_qubits {
            return false;
        }
        if f.control == f.target {
            return false;
        }
        let row = &self.slots[f.layer];
        match (row[f.control], row[f.target]) {
            (None, None) => true,
            (Some(a), Some(b)) => a == b && a == f.gate(),
            _ => false,
        }
    }

    /// Applies a flip already known to be valid.
    fn toggle(&mut self, f: GateFlip) {
        let row = &mut self.slots[f.layer];
        if row[f.control].is_some() {
            row[f.control] = None;
            row[f.target] = None;
            self.gate_count -= 1;
        } else {
            row[f.control] = Some(f.gate());
            row[f.target] = Some(f.gate());
            self.gate_count += 1;
        }
    }

    /// Gates strictly below `f` in the causal order where `(l₁; a) < (l₂; b)`
    /// whenever `l₁ < l₂` and the gates share a qubit, closed transitively.
    ///
    /// Returned as `(layer, gate)` in descending layer order, sorted by
    /// control within a layer.
    pub fn past_set(&self, f: GateFlip) -> Vec<(usize, CxGate)> {
        let mut touched = FixedBitSet::with_capacity(self.num_qubits);
        touched.insert(f.control);
        touched.insert(f.target);
        let mut out = Vec::new();
        for l in (0..f.layer.min(self.num_layers())).rev() {
            let start = out.len();
            for g in self.layer(l) {
                if touched.contains(g.control) || touched.contains(g.target) {
                    out.push((l, g));
                }
            }
            for &(_, g) in &out[start..] {
                touched.insert(g.control);
                touched.insert(g.target);
            }
        }
        out
    }

    /// Every valid flip: each layer, each topology edge, both orientations.
    pub fn valid_flips(&self, topology: &Topology) -> Vec<GateFlip> {
        (0..self.num_layers())
            .flat_map(|l| self.valid_flips_in_layer(topology, l))
            .collect()
    }

    pub fn valid_flips_in_layer(&self, topology: &Topology, layer: usize) -> Vec<GateFlip> {
        let mut out = Vec::new();
        for &(a, b) in topology.edges() {
            for (c, t) in [(a, b), (b, a)] {
                let f = GateFlip::new(layer, c, t);
                if self.is_valid_flip(f) {
                    out.push(f);
                }
            }
        }
        out
    }

    pub fn to_file(&self) -> BlockFile {
        BlockFile {
            layers: self.layers(),
        }
    }
}

/// JSON form: `{"layers": [[{"control": i, "target": j}, ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFile {
    pub layers: Vec<Vec<CxGate>>,
}

/// Conjugates a copy of `circuit` by every gate of `block`, outermost layer
/// first.
pub fn conjugate_full(circuit: &PhaseCircuit, block: &CxBlock) -> PhaseCircuit {
    let mut out = circuit.clone();
    for l in (0..block.num_layers()).rev() {
        for g in block.layer(l) {
            out.conjugate_by_cx(g);
        }
    }
    out
}

/// A block together with the circuit it conjugates, kept in sync under flips.
#[derive(Debug, Clone)]
pub struct ConjugatedState<'a> {
    original: &'a PhaseCircuit,
    block: CxBlock,
    conjugated: PhaseCircuit,
    touched: FixedBitSet,
}

impl<'a> ConjugatedState<'a> {
    /// Starts from the empty block.
    pub fn new(original: &'a PhaseCircuit, num_layers: usize) -> Result<Self, BlockError> {
        let block = CxBlock::new(original.num_qubits(), num_layers)?;
        Self::with_block(original, block)
    }

    pub fn with_block(original: &'a PhaseCircuit, block: CxBlock) -> Result<Self, BlockError> {
        if block.num_qubits() != original.num_qubits() {
            return Err(BlockError::WidthMismatch {
                block: block.num_qubits(),
                circuit: original.num_qubits(),
            });
        }
        Ok(ConjugatedState {
            original,
            conjugated: conjugate_full(original, &block),
            touched: FixedBitSet::with_capacity(original.len()),
            block,
        })
    }

    pub fn original(&self) -> &'a PhaseCircuit {
        self.original
    }

    pub fn block(&self) -> &CxBlock {
        &self.block
    }

    pub fn conjugated(&self) -> &PhaseCircuit {
        &self.conjugated
    }

    pub fn into_parts(self) -> (CxBlock, PhaseCircuit) {
        (self.block, self.conjugated)
    }

    /// Flips one gate and updates the conjugated circuit in place.
    ///
    /// The past set of the flipped gate is peeled off from layer 0 outwards,
    /// the gate itself is toggled, and the past set is reapplied inwards.
    /// Gates outside the past set commute with the flipped gate.
    pub fn flip(&mut self, f: GateFlip) -> Result<(), BlockError> {
        if f.layer >= self.block.num_layers() {
            return Err(BlockError::LayerOutOfRange {
                layer: f.layer,
                num_layers: self.block.num_layers(),
            });
        }
        if !self.block.is_valid_flip(f) {
            return Err(BlockError::InvalidFlip {
                layer: f.layer,
                control: f.control,
                target: f.target,
            });
        }
        self.touched.clear();
        let past = self.block.past_set(f);
        for &(_, g) in past.iter().rev() {
            self.conjugated.conjugate_by_cx_tracked(g, &mut self.touched);
        }
        self.block.toggle(f);
        self.conjugated.conjugate_by_cx_tracked(f.gate(), &mut self.touched);
        for &(_, g) in &past {
            self.conjugated.conjugate_by_cx_tracked(g, &mut self.touched);
        }
        Ok(())
    }

    /// Gadgets whose legs were modified at any point of the last flip.
    pub fn touched(&self) -> impl Iterator<Item = usize> + '_ {
        self.touched.ones()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cx(c: usize, t: usize) -> CxGate {
        CxGate::new(c, t).unwrap()
    }

    #[test]
    fn validity_rules() {
        let t = Topology::grid(3, 3).unwrap();
        let empty = CxBlock::new(9, 4).unwrap();
        assert!(empty.is_valid_flip(GateFlip::new(0, 0, 1)));

        let mut layers = vec![Vec::new(); 4];
        layers[3].push(cx(5, 4));
        let b = CxBlock::from_layers(&t, &layers).unwrap();
        assert!(b.is_valid_flip(GateFlip::new(3, 5, 4)));
        assert!(!b.is_valid_flip(GateFlip::new(3, 4, 5)));
        assert!(!b.is_valid_flip(GateFlip::new(3, 4, 1)));
        assert!(b.is_valid_flip(GateFlip::new(2, 4, 5)));
        assert!(!b.is_valid_flip(GateFlip::new(4, 0, 1)));
    }

    #[test]
    fn from_layers_rejects_bad_blocks() {
        let t = Topology::grid(3, 3).unwrap();
        assert!(matches!(
            CxBlock::from_layers(&t, &[vec![cx(0, 4)]]),
            Err(BlockError::NotNearestNeighbour { .. })
        ));
        assert!(matches!(
            CxBlock::from_layers(&t, &[vec![cx(0, 1), cx(1, 2)]]),
            Err(BlockError::InvalidFlip { .. })
        ));
        assert_eq!(CxBlock::new(3, 0), Err(BlockError::NoLayers));
    }

    #[test]
    fn flip_enumeration() {
        let t = Topology::line(3).unwrap();
        let b = CxBlock::new(3, 2).unwrap();
        assert_eq!(b.gate_count(), 0);
        assert_eq!(b.valid_flips(&t).len(), 8);

        let full = CxBlock::from_layers(&Topology::line(4).unwrap(), &[vec![cx(0, 1), cx(3, 2)]]).unwrap();
        let flips = full.valid_flips(&Topology::line(4).unwrap());
        assert_eq!(flips, vec![GateFlip::new(0, 0, 1), GateFlip::new(0, 3, 2)]);
        assert_eq!(full.gate_count(), 2);
    }

    #[test]
    fn past_set_examples() {
        let t = Topology::grid(3, 3).unwrap();
        let empty = CxBlock::new(9, 3).unwrap();
        assert!(empty.past_set(GateFlip::new(2, 0, 1)).is_empty());

        let b = CxBlock::from_layers(&t, &[vec![cx(6, 7)], vec![cx(8, 5)], vec![]]).unwrap();
        assert!(b.past_set(GateFlip::new(2, 0, 1)).is_empty());

        // chain 0-1 @2 <- 1-4 @1 <- 4-7 @0, plus unrelated 2-5 @0
        let b = CxBlock::from_layers(&t, &[vec![cx(4, 7), cx(2, 5)], vec![cx(1, 4)], vec![]]).unwrap();
        assert_eq!(b.past_set(GateFlip::new(2, 0, 1)), vec![(1, cx(1, 4)), (0, cx(4, 7))]);
    }

    #[test]
    fn single_gate_flip_is_plain_conjugation() {
        let c = PhaseCircuit::random(4, 8, 1, 3, 11).unwrap();
        let mut s = ConjugatedState::new(&c, 2).unwrap();
        s.flip(GateFlip::new(1, 2, 3)).unwrap();
        let mut expected = c.clone();
        expected.conjugate_by_cx(cx(2, 3));
        assert_eq!(s.conjugated(), &expected);
        assert_eq!(conjugate_full(&c, s.block()), expected);
        assert_eq!(conjugate_full(&c, &CxBlock::new(4, 3).unwrap()), c);
    }

    #[test]
    fn invalid_flip_leaves_state() {
        let c = PhaseCircuit::random(3, 4, 1, 2, 1).unwrap();
        let mut s = ConjugatedState::new(&c, 1).unwrap();
        s.flip(GateFlip::new(0, 0, 1)).unwrap();
        let before = (s.block().clone(), s.conjugated().clone());
        assert!(s.flip(GateFlip::new(0, 1, 2)).is_err());
        assert!(s.flip(GateFlip::new(5, 1, 2)).is_err());
        assert_eq!((s.block().clone(), s.conjugated().clone()), before);
    }

    /// Down-set by explicit transitive closure over all gate pairs.
    fn brute_down_set(block: &CxBlock, f: GateFlip) -> Vec<(usize, CxGate)> {
        let mut nodes: Vec<(usize, CxGate)> = (0..block.num_layers())
            .flat_map(|l| block.layer(l).map(move |g| (l, g)))
            .collect();
        let target = (f.layer, f.gate());
        if !nodes.contains(&target) {
            nodes.push(target);
        }
        let n = nodes.len();
        let shares = |a: CxGate, b: CxGate| a.touches(b.control) || a.touches(b.target);
        let mut below = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                below[i][j] = nodes[i].0 < nodes[j].0 && shares(nodes[i].1, nodes[j].1);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if below[i][k] && below[k][j] {
                        below[i][j] = true;
                    }
                }
            }
        }
        let t = nodes.iter().position(|&x| x == target).unwrap();
        let mut out: Vec<_> = (0..n).filter(|&i| below[i][t]).map(|i| nodes[i]).collect();
        out.sort_by_key(|&(l, g)| (std::cmp::Reverse(l), g.control));
        out
    }

    #[test]
    fn random_flip_sequences_match_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..200 {
            let (r, c) = [(1, 2), (2, 2), (1, 5), (2, 3), (3, 3)][case % 5];
            let t = Topology::grid(r, c).unwrap();
            let n = r * c;
            let layers = rng.gen_range(1..=4);
            let circuit = PhaseCircuit::random_with(&mut rng, n, 10, 1, n.min(3)).unwrap();
            let mut s = ConjugatedState::new(&circuit, layers).unwrap();
            for _ in 0..30 {
                let flips = s.block().valid_flips(&t);
                let f = flips[rng.gen_range(0..flips.len())];
                assert_eq!(s.block().past_set(f), brute_down_set(s.block(), f));
                let snapshot = (s.block().clone(), s.conjugated().clone());
                s.flip(f).unwrap();
                assert_eq!(s.conjugated(), &conjugate_full(&circuit, s.block()));
                if rng.gen_bool(0.3) {
                    s.flip(f).unwrap();
                    assert_eq!((s.block().clone(), s.conjugated().clone()), snapshot);
                }
            }
        }
    }
}
