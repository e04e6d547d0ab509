use pgopt::anneal::{anneal, total_cost, AnnealConfig, Schedule, ScheduleKind};
use pgopt::block::{conjugate_full, ConjugatedState, CxBlock, GateFlip};
use pgopt::circuit::{Angle, Basis, CxGate, PhaseCircuit, PhaseGadget};
use pgopt::cost::{circuit_cost, compile_circuit, compile_gadget};
use pgopt::oracle::{
    assert_equivalent, circuit_unitary, cx_unitary, gadget_unitary, gates_unitary, reconstructed_unitary,
};
use pgopt::topology::Topology;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn random_block(rng: &mut ChaCha8Rng, topology: &Topology, layers: usize, flips: usize) -> CxBlock {
    let circuit = PhaseCircuit::new(topology.num_qubits()).unwrap();
    let mut state = ConjugatedState::new(&circuit, layers).unwrap();
    for _ in 0..flips {
        let options = state.block().valid_flips(topology);
        if let Some(&f) = options.choose(rng) {
            state.flip(f).unwrap();
        }
    }
    state.into_parts().0
}

#[test]
fn single_cx_conjugation_preserves_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..150 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=6);
        let circuit = PhaseCircuit::random_with(&mut rng, n, m, 1, n).unwrap();
        let c = rng.gen_range(0..n);
        let mut t = rng.gen_range(0..n - 1);
        if t >= c {
            t += 1;
        }
        let gate = CxGate::new(c, t).unwrap();
        let mut conj = circuit.clone();
        conj.conjugate_by_cx(gate);
        // P' = CX · P · CX
        let cx = cx_unitary(gate, n).unwrap();
        let expected = cx.mul(&circuit_unitary(&circuit).unwrap()).mul(&cx);
        let eq = assert_equivalent(&expected, &circuit_unitary(&conj).unwrap(), TOL, false);
        assert!(eq.equivalent, "case {case}: deviation {}", eq.max_deviation);
    }
}

#[test]
fn compiled_gadgets_match_gadget_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let topologies = [
        Topology::line(5).unwrap(),
        Topology::cycle(6).unwrap(),
        Topology::grid(3, 3).unwrap(),
        Topology::grid(2, 4).unwrap(),
    ];
    for case in 0..200 {
        let t = &topologies[case % topologies.len()];
        let n = t.num_qubits();
        let k = rng.gen_range(1..=n.min(5));
        let legs = rand::seq::index::sample(&mut rng, n, k).into_vec();
        let basis = if rng.gen() { Basis::Z } else { Basis::X };
        let angle = Angle::pi_frac(rng.gen_range(1..16), 8);
        let g = PhaseGadget::new(basis, angle, legs, n).unwrap();
        let gates = compile_gadget(&g, t);
        for gate in &gates {
            if let pgopt::cost::Gate::Cx { control, target } = *gate {
                assert!(t.is_edge(control, target), "non-adjacent cx({control},{target})");
            }
        }
        let u = gates_unitary(&gates, n).unwrap();
        let eq = assert_equivalent(&gadget_unitary(&g).unwrap(), &u, TOL, false);
        assert!(eq.equivalent, "case {case}: deviation {}", eq.max_deviation);
    }
}

#[test]
fn compiled_circuit_matches_circuit_unitary() {
    let t = Topology::grid(2, 3).unwrap();
    for seed in 0..20 {
        let circuit = PhaseCircuit::random(6, 8, 1, 4, seed).unwrap();
        let gates = compile_circuit(&circuit, &t);
        let cx = gates.iter().filter(|g| g.is_cx()).count() as u64;
        assert_eq!(cx, circuit_cost(&circuit, &t));
        let eq = assert_equivalent(
            &circuit_unitary(&circuit).unwrap(),
            &gates_unitary(&gates, 6).unwrap(),
            TOL,
            false,
        );
        assert!(eq.equivalent);
    }
}

#[test]
fn full_conjugation_reconstructs_original() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = Topology::grid(2, 3).unwrap();
    for _ in 0..40 {
        let circuit = PhaseCircuit::random_with(&mut rng, 6, 6, 1, 4).unwrap();
        let block = random_block(&mut rng, &t, 3, 12);
        let conj = conjugate_full(&circuit, &block);
        let eq = assert_equivalent(
            &circuit_unitary(&circuit).unwrap(),
            &reconstructed_unitary(&block, &conj).unwrap(),
            TOL,
            false,
        );
        assert!(eq.equivalent, "deviation {}", eq.max_deviation);
    }
}

#[test]
fn incremental_flips_stay_equivalent() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = Topology::line(5).unwrap();
    let circuit = PhaseCircuit::random(5, 7, 1, 4, 99).unwrap();
    let target = circuit_unitary(&circuit).unwrap();
    let mut state = ConjugatedState::new(&circuit, 4).unwrap();
    for step in 0..60 {
        let options = state.block().valid_flips(&t);
        let f: GateFlip = *options.choose(&mut rng).unwrap();
        state.flip(f).unwrap();
        let eq = assert_equivalent(
            &target,
            &reconstructed_unitary(state.block(), state.conjugated()).unwrap(),
            TOL,
            false,
        );
        assert!(eq.equivalent, "step {step}");
    }
}

#[test]
fn annealed_results_check_out_three_ways() {
    let t = Topology::grid(2, 3).unwrap();
    for seed in 0..10 {
        let circuit = PhaseCircuit::random(6, 8, 2, 4, seed).unwrap();
        let config = AnnealConfig {
            iterations: 800,
            num_layers: 3,
            repetitions: 3,
            seed,
            schedule: Schedule::new(ScheduleKind::Geometric, 10.0, 0.1).unwrap(),
        };
        let r = anneal(&circuit, &t, &config).unwrap();
        assert_eq!(conjugate_full(&circuit, &r.block), r.conjugated);
        let state = ConjugatedState::with_block(&circuit, r.block.clone()).unwrap();
        assert_eq!(total_cost(&state, &t, 3), r.final_cost);
        assert!(r.final_cost <= r.initial_cost);
        let eq = assert_equivalent(
            &circuit_unitary(&circuit).unwrap(),
            &reconstructed_unitary(&r.block, &r.conjugated).unwrap(),
            TOL,
            false,
        );
        assert!(eq.equivalent);
    }
}
