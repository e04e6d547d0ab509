//! Dense unitary semantics for small circuits.
//!
//! Basis state index bit `q` is the value of qubit `q`. Gadgets use
//! `exp(iθP) = cos θ·I + i sin θ·P`, exact because `P² = I` for Pauli
//! tensors. Every operator is applied to the matrix in place, so building a
//! circuit unitary costs `O(4ⁿ)` per gate.

use num_complex::Complex64;
use thiserror::Error;

use crate::block::CxBlock;
use crate::circuit::{Angle, Basis, CxGate, PhaseCircuit, PhaseGadget};
use crate::cost::Gate;

/// Largest register the oracle will build matrices for.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} qubits exceeds the oracle limit of {MAX_QUBITS}")]
    TooLarge(usize),
    #[error("parametric angle {0} has no concrete value")]
    Parametric(String),
    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
}

/// Square `2ⁿ × 2ⁿ` complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    num_qubits: usize,
    data: Vec<Complex64>,
}

impl Unitary {
    pub fn identity(num_qubits: usize) -> Result<Self, OracleError> {
        if num_qubits > MAX_QUBITS {
            return Err(OracleError::TooLarge(num_qubits));
        }
        let dim = 1 << num_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Ok(Unitary { num_qubits, data })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn scaled(&self, factor: Complex64) -> Unitary {
        Unitary {
            num_qubits: self.num_qubits,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn adjoint(&self) -> Unitary {
        let dim = self.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[c * dim + r] = self.data[r * dim + c].conj();
            }
        }
        Unitary {
            num_qubits: self.num_qubits,
            data,
        }
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Unitary) -> Unitary {
        assert_eq!(self.num_qubits, rhs.num_qubits);
        let dim = self.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for k in 0..dim {
                let a = self.data[r * dim + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * dim..(k + 1) * dim];
                for (out, &b) in data[r * dim..(r + 1) * dim].iter_mut().zip(row) {
                    *out += a * b;
                }
            }
        }
        Unitary {
            num_qubits: self.num_qubits,
            data,
        }
    }

    /// Largest entry of `|U·U† − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = self.mul(&self.adjoint());
        let id = Unitary::identity(self.num_qubits).expect("same size");
        max_deviation(&prod, &id)
    }

    fn check_qubit(&self, q: usize) -> Result<(), OracleError> {
        if q >= self.num_qubits {
            return Err(OracleError::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Left-multiplies by `CX(control, target)`.
    pub fn apply_cx(&mut self, gate: CxGate) -> Result<(), OracleError> {
        self.check_qubit(gate.control)?;
        self.check_qubit(gate.target)?;
        let dim = self.dim();
        let (c, t) = (1usize << gate.control, 1usize << gate.target);
        for r in 0..dim {
            if r & c != 0 && r & t == 0 {
                let s = r | t;
                for col in 0..dim {
                    self.data.swap(r * dim + col, s * dim + col);
                }
            }
        }
        Ok(())
    }

    /// Left-multiplies by `exp(iθP)` with `P` the Pauli tensor `basis^{mask}`.
    pub fn apply_pauli_rotation(&mut self, basis: Basis, mask: usize, theta: f64) {
        let dim = self.dim();
        let (cos, sin) = (theta.cos(), theta.sin());
        match basis {
            Basis::Z => {
                for r in 0..dim {
                    let sign = if (r & mask).count_ones() & 1 == 0 { 1.0 } else { -1.0 };
                    let phase = Complex64::new(cos, sign * sin);
                    for z in &mut self.data[r * dim..(r + 1) * dim] {
                        *z *= phase;
                    }
                }
            }
            Basis::X => {
                let i_sin = Complex64::new(0.0, sin);
                for r in 0..dim {
                    let s = r ^ mask;
                    if s < r {
                        continue;
                    }
                    for col in 0..dim {
                        let a = self.data[r * dim + col];
                        let b = self.data[s * dim + col];
                        self.data[r * dim + col] = a * cos + b * i_sin;
                        self.data[s * dim + col] = b * cos + a * i_sin;
                    }
                }
            }
        }
    }

    pub fn apply_gadget(&mut self, gadget: &PhaseGadget) -> Result<(), OracleError> {
        if gadget.num_qubits() != self.num_qubits {
            return Err(OracleError::QubitOutOfRange {
                qubit: gadget.num_qubits().saturating_sub(1),
                num_qubits: self.num_qubits,
            });
        }
        let theta = concrete(gadget.angle())?;
        let mask = gadget.legs().ones().fold(0usize, |m, q| m | (1 << q));
        self.apply_pauli_rotation(gadget.basis(), mask, theta);
        Ok(())
    }
}

fn concrete(angle: &Angle) -> Result<f64, OracleError> {
    angle
        .radians()
        .ok_or_else(|| OracleError::Parametric(angle.to_string()))
}

pub fn gadget_unitary(gadget: &PhaseGadget) -> Result<Unitary, OracleError> {
    let mut u = Unitary::identity(gadget.num_qubits())?;
    u.apply_gadget(gadget)?;
    Ok(u)
}

pub fn cx_unitary(gate: CxGate, num_qubits: usize) -> Result<Unitary, OracleError> {
    let mut u = Unitary::identity(num_qubits)?;
    u.apply_cx(gate)?;
    Ok(u)
}

/// Pauli tensor `basis^{legs}` as a matrix (the generator of a gadget).
pub fn pauli_unitary(basis: Basis, legs: &[usize], num_qubits: usize) -> Result<Unitary, OracleError> {
    let mut u = Unitary::identity(num_qubits)?;
    for &q in legs {
        u.check_qubit(q)?;
    }
    let mask = legs.iter().fold(0usize, |m, q| m | (1 << q));
    // exp(i·π/2·P) = i·P
    u.apply_pauli_rotation(basis, mask, std::f64::consts::FRAC_PI_2);
    Ok(u.scaled(Complex64::new(0.0, -1.0)))
}

/// Product of the gadget unitaries, first gadget applied first.
pub fn circuit_unitary(circuit: &PhaseCircuit) -> Result<Unitary, OracleError> {
    let mut u = Unitary::identity(circuit.num_qubits())?;
    for g in circuit.gadgets() {
        u.apply_gadget(g)?;
    }
    Ok(u)
}

/// `U_C = G_{L−1} ⋯ G_0`: layer 0 is applied first.
pub fn block_unitary(block: &CxBlock) -> Result<Unitary, OracleError> {
    let mut u = Unitary::identity(block.num_qubits())?;
    for l in 0..block.num_layers() {
        for g in block.layer(l) {
            u.apply_cx(g)?;
        }
    }
    Ok(u)
}

/// Unitary of a compiled gate list, first gate applied first.
pub fn gates_unitary(gates: &[Gate], num_qubits: usize) -> Result<Unitary, OracleError> {
    let mut u = Unitary::identity(num_qubits)?;
    for gate in gates {
        match gate {
            Gate::Cx { control, target } => u.apply_cx(CxGate {
                control: *control,
                target: *target,
            })?,
            Gate::RotZ { qubit, angle } | Gate::RotX { qubit, angle } => {
                u.check_qubit(*qubit)?;
                let basis = if matches!(gate, Gate::RotZ { .. }) { Basis::Z } else { Basis::X };
                u.apply_pauli_rotation(basis, 1 << qubit, concrete(angle)?);
            }
        }
    }
    Ok(u)
}

/// `U_C · U(P′) · U_C†`, which must equal `U(P)` for a sound optimisation.
pub fn reconstructed_unitary(block: &CxBlock, conjugated: &PhaseCircuit) -> Result<Unitary, OracleError> {
    let c = block_unitary(block)?;
    Ok(c.mul(&circuit_unitary(conjugated)?).mul(&c.adjoint()))
}

fn max_deviation(u: &Unitary, v: &Unitary) -> f64 {
    u.data
        .iter()
        .zip(&v.data)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equivalence {
    pub equivalent: bool,
    pub max_deviation: f64,
}

/// Compares two unitaries entrywise.
///
/// With `up_to_global_phase`, `v` is first rotated by the phase that aligns
/// it with `u` at `u`'s largest-magnitude entry.
pub fn assert_equivalent(u: &Unitary, v: &Unitary, tol: f64, up_to_global_phase: bool) -> Equivalence {
    if u.num_qubits != v.num_qubits {
        return Equivalence {
            equivalent: false,
            max_deviation: f64::INFINITY,
        };
    }
    let deviation = if up_to_global_phase {
        let (idx, _) = u
            .data
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
        let (a, b) = (u.data[idx], v.data[idx]);
        if b.norm() == 0.0 {
            f64::INFINITY
        } else {
            let phase = (a / b) / (a / b).norm();
            max_deviation(u, &v.scaled(phase))
        }
    } else {
        max_deviation(u, v)
    };
    Equivalence {
        equivalent: deviation <= tol,
        max_deviation: deviation,
    }
}
