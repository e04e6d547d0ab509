//! Nearest-neighbour CX cost of phase gadgets on a topology.
//!
//! A gadget is implemented as a rotation on one leg conjugated by a tree of
//! CX gates spanning its legs. A tree edge between legs at distance `d`
//! expands to a ladder of `2d − 1` nearest-neighbour CX gates on each side of
//! the rotation, so its weight is `4d − 2`. The cheapest tree is a minimum
//! spanning tree of the complete graph on the legs under that weight.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::circuit::{Angle, Basis, CxGate, PhaseCircuit, PhaseGadget};
use crate::topology::Topology;

/// CX weight of a spanning-tree edge between legs at distance `d`.
#[inline]
pub fn edge_weight(d: u32) -> u32 {
    4 * d - 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MstEdge {
    /// Leg already in the tree when the edge was added.
    pub parent: usize,
    /// Leg attached by this edge.
    pub child: usize,
    pub distance: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetCost {
    pub value: u32,
    /// Tree root (the lowest-index leg).
    pub root: usize,
    /// Edges in the order Prim added them.
    pub mst_edges: Vec<MstEdge>,
}

/// Prim's algorithm over `legs`, starting from the lowest leg.
///
/// Each step picks the cheapest `(weight, child, parent)` triple, so ties go to
/// the lowest child index and then the lowest parent index.
pub fn mst(legs: &[usize], topology: &Topology) -> GadgetCost {
    let k = legs.len();
    let mut mst_edges = Vec::with_capacity(k.saturating_sub(1));
    let root = legs.first().copied().unwrap_or(0);
    let mut value = 0;
    if k > 1 {
        // best[v] = (distance, parent) for legs still outside the tree
        let mut best: Vec<Option<(u32, usize)>> = legs
            .iter()
            .map(|&v| Some((topology.distance(root, v), root)))
            .collect();
        best[0] = None;
        for _ in 1..k {
            let (idx, (d, parent)) = best
                .iter()
                .enumerate()
                .filter_map(|(i, b)| b.map(|b| (i, b)))
                .min_by_key(|&(i, (d, p))| (d, legs[i], p))
                .expect("legs remain outside the tree");
            let child = legs[idx];
            best[idx] = None;
            value += edge_weight(d);
            mst_edges.push(MstEdge {
                parent,
                child,
                distance: d,
            });
            for (i, b) in best.iter_mut().enumerate() {
                if let Some((bd, bp)) = b {
                    let nd = topology.distance(child, legs[i]);
                    if (nd, child) < (*bd, *bp) {
                        *b = Some((nd, child));
                    }
                }
            }
        }
    }
    GadgetCost {
        value,
        root,
        mst_edges,
    }
}

pub fn gadget_cost(gadget: &PhaseGadget, topology: &Topology) -> GadgetCost {
    mst(&gadget.leg_list(), topology)
}

/// MST weight only, without recording edges.
pub fn legs_cost(legs: &FixedBitSet, topology: &Topology) -> u32 {
    let mut buf = [0usize; 16];
    let count = legs.count_ones(..);
    if count <= 1 {
        return 0;
    }
    if count > buf.len() {
        return mst(&legs.ones().collect::<Vec<_>>(), topology).value;
    }
    for (slot, q) in buf.iter_mut().zip(legs.ones()) {
        *slot = q;
    }
    let legs = &buf[..count];
    let mut key = [u32::MAX; 16];
    let mut in_tree = [false; 16];
    in_tree[0] = true;
    for i in 1..count {
        key[i] = topology.distance(legs[0], legs[i]);
    }
    let mut total = 0;
    for _ in 1..count {
        let mut pick = 0;
        let mut pick_d = u32::MAX;
        for i in 1..count {
            if !in_tree[i] && key[i] < pick_d {
                pick = i;
                pick_d = key[i];
            }
        }
        in_tree[pick] = true;
        total += edge_weight(pick_d);
        for i in 1..count {
            if !in_tree[i] {
                key[i] = key[i].min(topology.distance(legs[pick], legs[i]));
            }
        }
    }
    total
}

pub fn circuit_cost(circuit: &PhaseCircuit, topology: &Topology) -> u64 {
    circuit
        .gadgets()
        .iter()
        .map(|g| u64::from(legs_cost(g.legs(), topology)))
        .sum()
}

/// Memoised gadget costs keyed by leg set. Costs do not depend on basis.
///
/// One cache belongs to one topology; keep it per annealing run.
#[derive(Debug, Default)]
pub struct CostCache {
    map: HashMap<FixedBitSet, u32>,
}

impl CostCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cost(&mut self, legs: &FixedBitSet, topology: &Topology) -> u32 {
        if legs.count_ones(..) <= 1 {
            return 0;
        }
        if let Some(&c) = self.map.get(legs) {
            return c;
        }
        let c = legs_cost(legs, topology);
        self.map.insert(legs.clone(), c);
        c
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Element of a compiled circuit. Rotations are `exp(i·angle·Z)` and
/// `exp(i·angle·X)` on a single qubit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    Cx { control: usize, target: usize },
    RotZ { qubit: usize, angle: Angle },
    RotX { qubit: usize, angle: Angle },
}

impl Gate {
    pub fn cx(g: CxGate) -> Self {
        Gate::Cx {
            control: g.control,
            target: g.target,
        }
    }

    pub fn is_cx(&self) -> bool {
        matches!(self, Gate::Cx { .. })
    }
}

/// Compiles a gadget to nearest-neighbour CX gates around one rotation.
///
/// The parity of the legs is gathered onto the MST root by visiting tree
/// edges leaves-first. An edge whose child sits at distance `d` from its
/// parent along path `p_0 = child, …, p_d = parent` becomes the ladder
/// `W_d = CX(p_{d−1}, p_d) · W_{d−1} · CX(p_{d−1}, p_d)`, `W_1 = CX(p_0, p_1)`,
/// which adds `p_0` into `p_d` whatever the intermediate qubits hold. MST
/// paths never pass through other legs, so legs only change as ladder ends.
/// X gadgets use the same tree with every CX reversed.
pub fn compile_gadget(gadget: &PhaseGadget, topology: &Topology) -> Vec<Gate> {
    let tree = gadget_cost(gadget, topology);
    let mut forward: Vec<CxGate> = Vec::with_capacity(tree.value as usize / 2);
    for edge in tree.mst_edges.iter().rev() {
        let path = topology.shortest_path(edge.child, edge.parent);
        ladder(&path, &mut forward);
    }
    if gadget.basis() == Basis::X {
        for g in &mut forward {
            std::mem::swap(&mut g.control, &mut g.target);
        }
    }
    let rotation = match gadget.basis() {
        Basis::Z => Gate::RotZ {
            qubit: tree.root,
            angle: gadget.angle().clone(),
        },
        Basis::X => Gate::RotX {
            qubit: tree.root,
            angle: gadget.angle().clone(),
        },
    };
    let mut out = Vec::with_capacity(2 * forward.len() + 1);
    out.extend(forward.iter().copied().map(Gate::cx));
    out.push(rotation);
    out.extend(forward.iter().rev().copied().map(Gate::cx));
    out
}

fn ladder(path: &[usize], out: &mut Vec<CxGate>) {
    let d = path.len() - 1;
    let step = |k: usize| CxGate {
        control: path[k - 1],
        target: path[k],
    };
    if d == 1 {
        out.push(step(1));
        return;
    }
    out.push(step(d));
    ladder(&path[..d], out);
    out.push(step(d));
}

/// Compiles every gadget in order.
pub fn compile_circuit(circuit: &PhaseCircuit, topology: &Topology) -> Vec<Gate> {
    circuit
        .gadgets()
        .iter()
        .flat_map(|g| compile_gadget(g, topology))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimum over all labelled spanning trees of the leg set, enumerated via
    /// Prüfer sequences.
    fn brute_force_mst(legs: &[usize], t: &Topology) -> u32 {
        let k = legs.len();
        if k <= 1 {
            return 0;
        }
        if k == 2 {
            return edge_weight(t.distance(legs[0], legs[1]));
        }
        let mut best = u32::MAX;
        let total = k.pow((k - 2) as u32);
        for code in 0..total {
            let mut seq = Vec::with_capacity(k - 2);
            let mut c = code;
            for _ in 0..k - 2 {
                seq.push(c % k);
                c /= k;
            }
            let mut degree = vec![1; k];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut weight = 0;
            for &s in &seq {
                let leaf = (0..k).find(|&i| degree[i] == 1).unwrap();
                weight += edge_weight(t.distance(legs[leaf], legs[s]));
                degree[leaf] -= 1;
                degree[s] -= 1;
            }
            let rest: Vec<_> = (0..k).filter(|&i| degree[i] == 1).collect();
            weight += edge_weight(t.distance(legs[rest[0]], legs[rest[1]]));
            best = best.min(weight);
        }
        best
    }

    #[test]
    fn worked_grid_example() {
        let g = Topology::grid(3, 3).unwrap();
        let gadget = PhaseGadget::z(Angle::param("theta"), &[0, 3, 5, 6], 9).unwrap();
        let cost = gadget_cost(&gadget, &g);
        assert_eq!(cost.value, 10);
        let mut edges: Vec<_> = cost
            .mst_edges
            .iter()
            .map(|e| (e.parent.min(e.child), e.parent.max(e.child), e.distance))
            .collect();
        edges.sort();
        assert_eq!(edges, vec![(0, 3, 1), (3, 5, 2), (3, 6, 1)]);
        assert_eq!(legs_cost(gadget.legs(), &g), 10);
    }

    #[test]
    fn small_cases() {
        let g = Topology::grid(3, 3).unwrap();
        let one = PhaseGadget::x(Angle::zero(), &[4], 9).unwrap();
        assert_eq!(gadget_cost(&one, &g).value, 0);
        let far = PhaseGadget::z(Angle::zero(), &[0, 8], 9).unwrap();
        assert_eq!(gadget_cost(&far, &g).value, 14);
        assert_eq!(brute_force_mst(&[0, 8], &g), 14);

        let mut c = PhaseCircuit::new(9).unwrap();
        assert_eq!(circuit_cost(&c, &g), 0);
        c.add(Basis::Z, Angle::zero(), &[0, 3, 5, 6]).unwrap();
        assert_eq!(circuit_cost(&c, &g), 10);
    }

    #[test]
    fn ladder_shapes() {
        let mut out = Vec::new();
        ladder(&[0, 1, 2, 3], &mut out);
        let pairs: Vec<_> = out.iter().map(|g| (g.control, g.target)).collect();
        assert_eq!(pairs, vec![(2, 3), (1, 2), (0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn compiled_counts() {
        let g = Topology::grid(3, 3).unwrap();
        let gadget = PhaseGadget::z(Angle::param("theta"), &[0, 3, 5, 6], 9).unwrap();
        let gates = compile_gadget(&gadget, &g);
        assert_eq!(gates.iter().filter(|x| x.is_cx()).count(), 10);
        assert_eq!(gates.len(), 11);
        assert_eq!(gates[5], Gate::RotZ { qubit: 0, angle: Angle::param("theta") });
        for gate in &gates {
            if let Gate::Cx { control, target } = gate {
                assert!(g.is_edge(*control, *target));
            }
        }
        let single = PhaseGadget::x(Angle::pi_frac(1, 4), &[2], 9).unwrap();
        assert_eq!(
            compile_gadget(&single, &g),
            vec![Gate::RotX { qubit: 2, angle: Angle::pi_frac(1, 4) }]
        );
    }

    #[test]
    fn cache_agrees() {
        let g = Topology::grid(4, 4).unwrap();
        let c = PhaseCircuit::random(16, 40, 1, 4, 3).unwrap();
        let mut cache = CostCache::new();
        for gadget in c.gadgets() {
            assert_eq!(cache.cost(gadget.legs(), &g), gadget_cost(gadget, &g).value);
            assert_eq!(cache.cost(gadget.legs(), &g), legs_cost(gadget.legs(), &g));
        }
    }

    fn random_gadget() -> impl Strategy<Value = (Topology, PhaseCircuit)> {
        (1usize..=4, 1usize..=4, any::<u64>()).prop_map(|(r, c, seed)| {
            let t = Topology::grid(r, c).unwrap();
            let n = r * c;
            (t, PhaseCircuit::random(n, 6, 1, n.min(6), seed).unwrap())
        })
    }

    proptest! {
        #[test]
        fn mst_is_optimal_and_even((t, c) in random_gadget()) {
            for g in c.gadgets() {
                let cost = gadget_cost(g, &t);
                prop_assert_eq!(cost.value % 2, 0);
                prop_assert_eq!(cost.value == 0, g.num_legs() <= 1);
                prop_assert_eq!(cost.value, brute_force_mst(&g.leg_list(), &t));
                prop_assert_eq!(cost.value, legs_cost(g.legs(), &t));
                let sum: u32 = cost.mst_edges.iter().map(|e| edge_weight(e.distance)).sum();
                prop_assert_eq!(sum, cost.value);
                let cx = compile_gadget(g, &t).iter().filter(|x| x.is_cx()).count();
                prop_assert_eq!(cx as u32, cost.value);
            }
        }

        #[test]
        fn adjacent_leg_adds_at_most_two((t, c) in random_gadget(), pick: prop::sample::Index) {
            for g in c.gadgets() {
                let legs = g.leg_list();
                let anchor = legs[pick.index(legs.len())];
                for &nb in t.neighbours(anchor) {
                    if g.legs().contains(nb) {
                        continue;
                    }
                    let mut bigger = g.legs().clone();
                    bigger.insert(nb);
                    prop_assert!(legs_cost(&bigger, &t) <= legs_cost(g.legs(), &t) + 2);
                }
            }
        }

        #[test]
        fn circuit_cost_is_sum_of_gadgets(n in 1usize..10, m in 0usize..20, seed: u64) {
            let t = Topology::line(n).unwrap();
            let c = PhaseCircuit::random(n, m, 1, n.min(3), seed).unwrap();
            let expected: u64 = c.gadgets().iter().map(|g| u64::from(brute_force_mst(&g.leg_list(), &t))).sum();
            prop_assert_eq!(circuit_cost(&c, &t), expected);
        }
    }
}
