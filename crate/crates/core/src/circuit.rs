//! Mixed ZX phase circuits.
//!
//! A circuit is an ordered list of Z and X phase gadgets. Each gadget's legs
//! are a fixed-width bitset over the circuit's qubits, which is one column of
//! the leg matrix of its basis; [`PhaseCircuit::encode`] exposes the
//! two-matrix view explicitly.

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use num_rational::Rational64;
use num_traits::{Signed, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("circuit must have at least one qubit")]
    NoQubits,
    #[error("phase gadget has no legs")]
    NoLegs,
    #[error("leg {leg} is out of range for {num_qubits} qubits")]
    LegOutOfRange { leg: usize, num_qubits: usize },
    #[error("gadget is sized for {found} qubits, circuit has {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("invalid leg range: need 1 <= min_legs ({min}) <= max_legs ({max}) <= qubits ({n})")]
    BadLegRange { min: usize, max: usize, n: usize },
    #[error("qubits must be distinct, got {0:?}")]
    DuplicateQubits(Vec<usize>),
    #[error("CX control and target must differ (qubit {0})")]
    CxSameQubit(usize),
    #[error("invalid angle {0:?}")]
    BadAngle(String),
    #[error("inconsistent leg matrices: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn dual(self) -> Basis {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }
}

/// Gadget angle: an exact multiple of π in `[0, 2π)`, or a named parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Angle {
    /// Multiple of π, always reduced and normalised to `[0, 2)`.
    Pi(Rational64),
    /// Symbolic parameter, optionally scaled by a rational coefficient.
    Param { name: String, coeff: Option<Rational64> },
}

impl Angle {
    pub fn zero() -> Self {
        Angle::Pi(Rational64::zero())
    }

    /// `num/den · π`, normalised to `[0, 2π)`.
    pub fn pi_frac(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let two = Rational64::from_integer(2);
        let mut r = Rational64::new(num, den) % two;
        if r.is_negative() {
            r += two;
        }
        Angle::Pi(r)
    }

    pub fn param(name: impl Into<String>) -> Self {
        Angle::Param {
            name: name.into(),
            coeff: None,
        }
    }

    pub fn is_concrete(&self) -> bool {
        matches!(self, Angle::Pi(_))
    }

    /// Value in radians, `None` for parameters.
    pub fn radians(&self) -> Option<f64> {
        match self {
            Angle::Pi(r) => Some(*r.numer() as f64 / *r.denom() as f64 * std::f64::consts::PI),
            Angle::Param { .. } => None,
        }
    }

    pub fn negated(&self) -> Angle {
        match self {
            Angle::Pi(r) => Angle::pi_frac(-*r.numer(), *r.denom()),
            Angle::Param { name, coeff } => Angle::Param {
                name: name.clone(),
                coeff: Some(-coeff.unwrap_or_else(|| Rational64::from_integer(1))),
            },
        }
    }
}

fn fmt_ratio(r: &Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_ratio(s: &str) -> Option<Rational64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: i64 = d.trim().parse().ok()?;
            (d != 0).then_some(())?;
            Some(Rational64::new(n.trim().parse().ok()?, d))
        }
        None => Some(Rational64::from_integer(s.parse().ok()?)),
    }
}

/// Formats concrete angles as `"p/q pi"` (or `"p pi"`, or `"0"`).
impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Pi(r) if r.is_zero() => write!(f, "0"),
            Angle::Pi(r) => write!(f, "{} pi", fmt_ratio(r)),
            Angle::Param { name, coeff: None } => write!(f, "{name}"),
            Angle::Param {
                name,
                coeff: Some(c),
            } => write!(f, "{}*{name}", fmt_ratio(c)),
        }
    }
}

/// Parses `"p/q pi"`, `"p pi"`, `"pi"`, `"-p/q pi"` or `"0"`.
impl FromStr for Angle {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CircuitError::BadAngle(s.to_string());
        let t = s.trim();
        if t == "0" {
            return Ok(Angle::zero());
        }
        let coeff = t.strip_suffix("pi").ok_or_else(bad)?.trim();
        let r = match coeff {
            "" => Rational64::from_integer(1),
            "-" => Rational64::from_integer(-1),
            c => parse_ratio(c.trim_end_matches('*')).ok_or_else(bad)?,
        };
        Ok(Angle::pi_frac(*r.numer(), *r.denom()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AngleRepr {
    Text(String),
    Param {
        param: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coeff: Option<String>,
    },
}

impl TryFrom<AngleRepr> for Angle {
    type Error = CircuitError;

    fn try_from(repr: AngleRepr) -> Result<Self, Self::Error> {
        match repr {
            AngleRepr::Text(s) => s.parse(),
            AngleRepr::Param { param, coeff } => {
                if param.is_empty() {
                    return Err(CircuitError::BadAngle(String::new()));
                }
                let coeff = coeff
                    .map(|c| parse_ratio(&c).ok_or(CircuitError::BadAngle(c)))
                    .transpose()?;
                Ok(Angle::Param { name: param, coeff })
            }
        }
    }
}

impl From<&Angle> for AngleRepr {
    fn from(a: &Angle) -> Self {
        match a {
            Angle::Pi(_) => AngleRepr::Text(a.to_string()),
            Angle::Param { name, coeff } => AngleRepr::Param {
                param: name.clone(),
                coeff: coeff.as_ref().map(fmt_ratio),
            },
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        AngleRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Angle::try_from(AngleRepr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// A CX gate: control is the Z qubit, target the X qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CxGate {
    pub control: usize,
    pub target: usize,
}

impl CxGate {
    pub fn new(control: usize, target: usize) -> Result<Self, CircuitError> {
        if control == target {
            return Err(CircuitError::CxSameQubit(control));
        }
        Ok(CxGate { control, target })
    }

    pub fn touches(&self, q: usize) -> bool {
        self.control == q || self.target == q
    }
}

/// `exp(i·angle·P)` where `P` is `basis` on every leg and identity elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseGadget {
    basis: Basis,
    angle: Angle,
    legs: FixedBitSet,
}

impl PhaseGadget {
    pub fn new(
        basis: Basis,
        angle: Angle,
        legs: impl IntoIterator<Item = usize>,
        num_qubits: usize,
    ) -> Result<Self, CircuitError> {
        let mut bits = FixedBitSet::with_capacity(num_qubits);
        for leg in legs {
            if leg >= num_qubits {
                return Err(CircuitError::LegOutOfRange { leg, num_qubits });
            }
            bits.insert(leg);
        }
        Self::from_bits(basis, angle, bits)
    }

    pub fn from_bits(basis: Basis, angle: Angle, legs: FixedBitSet) -> Result<Self, CircuitError> {
        if legs.is_clear() {
            return Err(CircuitError::NoLegs);
        }
        Ok(PhaseGadget { basis, angle, legs })
    }

    pub fn z(angle: Angle, legs: &[usize], num_qubits: usize) -> Result<Self, CircuitError> {
        Self::new(Basis::Z, angle, legs.iter().copied(), num_qubits)
    }

    pub fn x(angle: Angle, legs: &[usize], num_qubits: usize) -> Result<Self, CircuitError> {
        Self::new(Basis::X, angle, legs.iter().copied(), num_qubits)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn angle(&self) -> &Angle {
        &self.angle
    }

    pub fn legs(&self) -> &FixedBitSet {
        &self.legs
    }

    pub fn leg_list(&self) -> Vec<usize> {
        self.legs.ones().collect()
    }

    pub fn num_legs(&self) -> usize {
        self.legs.count_ones(..)
    }

    pub fn num_qubits(&self) -> usize {
        self.legs.len()
    }

    /// Conjugates by a single CX; returns whether the legs changed.
    ///
    /// Z gadgets pick up or drop the control when the target is a leg; X
    /// gadgets pick up or drop the target when the control is a leg.
    #[inline]
    pub fn conjugate_by_cx(&mut self, gate: CxGate) -> bool {
        let (watch, toggle) = match self.basis {
            Basis::Z => (gate.target, gate.control),
            Basis::X => (gate.control, gate.target),
        };
        if self.legs.contains(watch) {
            self.legs.toggle(toggle);
            true
        } else {
            false
        }
    }
}

/// Ordered sequence of Z and X phase gadgets on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CircuitFile", into = "CircuitFile")]
pub struct PhaseCircuit {
    num_qubits: usize,
    gadgets: Vec<PhaseGadget>,
}

impl PhaseCircuit {
    pub fn new(num_qubits: usize) -> Result<Self, CircuitError> {
        if num_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        Ok(PhaseCircuit {
            num_qubits,
            gadgets: Vec::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gadgets(&self) -> &[PhaseGadget] {
        &self.gadgets
    }

    pub fn len(&self) -> usize {
        self.gadgets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gadgets.is_empty()
    }

    pub fn push(&mut self, gadget: PhaseGadget) -> Result<&mut Self, CircuitError> {
        if gadget.num_qubits() != self.num_qubits {
            return Err(CircuitError::WidthMismatch {
                expected: self.num_qubits,
                found: gadget.num_qubits(),
            });
        }
        self.gadgets.push(gadget);
        Ok(self)
    }

    pub fn add(&mut self, basis: Basis, angle: Angle, legs: &[usize]) -> Result<&mut Self, CircuitError> {
        let g = PhaseGadget::new(basis, angle, legs.iter().copied(), self.num_qubits)?;
        self.push(g)
    }

    /// Appends the seven Z gadgets of a CCZ on `a, b, c`.
    pub fn ccz(&mut self, a: usize, b: usize, c: usize) -> Result<&mut Self, CircuitError> {
        for g in ccz(self.num_qubits, a, b, c)? {
            self.push(g)?;
        }
        Ok(self)
    }

    pub fn conjugate_by_cx(&mut self, gate: CxGate) {
        for g in &mut self.gadgets {
            g.conjugate_by_cx(gate);
        }
    }

    /// Conjugates by `gate`, flagging every gadget whose legs changed.
    pub(crate) fn conjugate_by_cx_tracked(&mut self, gate: CxGate, touched: &mut FixedBitSet) {
        for (k, g) in self.gadgets.iter_mut().enumerate() {
            if g.conjugate_by_cx(gate) {
                touched.insert(k);
            }
        }
    }

    /// Random circuit: each gadget has a uniform basis, a leg count uniform in
    /// `[min_legs, max_legs]`, a uniform leg subset of that size and an angle
    /// uniform over `kπ/4` for `k = 1..=7`.
    pub fn random(
        num_qubits: usize,
        num_gadgets: usize,
        min_legs: usize,
        max_legs: usize,
        seed: u64,
    ) -> Result<Self, CircuitError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(&mut rng, num_qubits, num_gadgets, min_legs, max_legs)
    }

    pub fn random_with<R: Rng + ?Sized>(
        rng: &mut R,
        num_qubits: usize,
        num_gadgets: usize,
        min_legs: usize,
        max_legs: usize,
    ) -> Result<Self, CircuitError> {
        if !(1 <= min_legs && min_legs <= max_legs && max_legs <= num_qubits) {
            return Err(CircuitError::BadLegRange {
                min: min_legs,
                max: max_legs,
                n: num_qubits,
            });
        }
        let mut circuit = PhaseCircuit::new(num_qubits)?;
        for _ in 0..num_gadgets {
            let basis = if rng.gen::<bool>() { Basis::Z } else { Basis::X };
            let k = rng.gen_range(min_legs..=max_legs);
            let legs = sample(rng, num_qubits, k);
            let angle = Angle::pi_frac(rng.gen_range(1..=7), 4);
            circuit.push(PhaseGadget::new(basis, angle, legs, num_qubits)?)?;
        }
        Ok(circuit)
    }

    /// Splits the circuit into Z and X leg matrices, column positions and angles.
    pub fn encode(&self) -> LegMatrices {
        let n = self.num_qubits;
        let mut out = LegMatrices {
            num_qubits: n,
            lz: vec![Vec::new(); n],
            lx: vec![Vec::new(); n],
            pos_z: Vec::new(),
            pos_x: Vec::new(),
            angles: Vec::with_capacity(self.len()),
        };
        for (pos, g) in self.gadgets.iter().enumerate() {
            let (matrix, positions) = match g.basis {
                Basis::Z => (&mut out.lz, &mut out.pos_z),
                Basis::X => (&mut out.lx, &mut out.pos_x),
            };
            positions.push(pos);
            for (q, row) in matrix.iter_mut().enumerate() {
                row.push(u8::from(g.legs.contains(q)));
            }
            out.angles.push(g.angle.clone());
        }
        out
    }

    pub fn decode(m: &LegMatrices) -> Result<Self, CircuitError> {
        let n = m.num_qubits;
        let err = |msg: String| Err(CircuitError::Decode(msg));
        if m.lz.len() != n || m.lx.len() != n {
            return err(format!("matrices need {n} rows"));
        }
        let total = m.pos_z.len() + m.pos_x.len();
        if m.angles.len() != total {
            return err(format!("{} angles for {total} gadgets", m.angles.len()));
        }
        for (name, matrix, positions) in [("L_z", &m.lz, &m.pos_z), ("L_x", &m.lx, &m.pos_x)] {
            if matrix.iter().any(|row| row.len() != positions.len()) {
                return err(format!("{name} rows must have {} columns", positions.len()));
            }
            if positions.windows(2).any(|w| w[0] >= w[1]) {
                return err(format!("{name} positions are not strictly increasing"));
            }
        }
        let mut slots: Vec<Option<(Basis, usize)>> = vec![None; total];
        for (basis, positions) in [(Basis::Z, &m.pos_z), (Basis::X, &m.pos_x)] {
            for (col, &p) in positions.iter().enumerate() {
                match slots.get_mut(p) {
                    Some(slot @ None) => *slot = Some((basis, col)),
                    Some(Some(_)) => return err(format!("position {p} used twice")),
                    None => return err(format!("position {p} out of range")),
                }
            }
        }
        let mut circuit = PhaseCircuit::new(n)?;
        for (slot, angle) in slots.into_iter().zip(&m.angles) {
            let (basis, col) = slot.expect("positions partition 0..m");
            let matrix = if basis == Basis::Z { &m.lz } else { &m.lx };
            let legs = (0..n).filter(|&q| matrix[q][col] != 0);
            circuit.push(PhaseGadget::new(basis, angle.clone(), legs, n)?)?;
        }
        Ok(circuit)
    }
}

/// The seven Z gadgets implementing CCZ on `a, b, c` up to global phase.
///
/// Uses `π·abc = (π/4)(a + b + c − a⊕b − a⊕c − b⊕c + a⊕b⊕c)` with each parity
/// `s = (1 − Z_s)/2`: odd-sized subsets get angle `−π/8`, pairs `+π/8`.
pub fn ccz(num_qubits: usize, a: usize, b: usize, c: usize) -> Result<Vec<PhaseGadget>, CircuitError> {
    if a == b || a == c || b == c {
        return Err(CircuitError::DuplicateQubits(vec![a, b, c]));
    }
    let subsets: [&[usize]; 7] = [&[a], &[b], &[c], &[a, b], &[a, c], &[b, c], &[a, b, c]];
    subsets
        .iter()
        .map(|legs| {
            let angle = if legs.len() % 2 == 1 {
                Angle::pi_frac(-1, 8)
            } else {
                Angle::pi_frac(1, 8)
            };
            PhaseGadget::z(angle, legs, num_qubits)
        })
        .collect()
}

/// Two-matrix view of a circuit: `lz[q][k]` is 1 iff qubit `q` is a leg of
/// the `k`-th Z gadget, which sits at circuit position `pos_z[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegMatrices {
    pub num_qubits: usize,
    pub lz: Vec<Vec<u8>>,
    pub lx: Vec<Vec<u8>>,
    pub pos_z: Vec<usize>,
    pub pos_x: Vec<usize>,
    pub angles: Vec<Angle>,
}

#[derive(Serialize, Deserialize)]
struct GadgetFile {
    basis: Basis,
    angle: Angle,
    legs: Vec<usize>,
}

/// JSON form: `{"qubits": N, "gadgets": [{"basis", "angle", "legs"}, ...]}`.
#[derive(Serialize, Deserialize)]
struct CircuitFile {
    qubits: usize,
    gadgets: Vec<GadgetFile>,
}

impl TryFrom<CircuitFile> for PhaseCircuit {
    type Error = CircuitError;

    fn try_from(file: CircuitFile) -> Result<Self, Self::Error> {
        let mut circuit = PhaseCircuit::new(file.qubits)?;
        for g in file.gadgets {
            circuit.push(PhaseGadget::new(g.basis, g.angle, g.legs, file.qubits)?)?;
        }
        Ok(circuit)
    }
}

impl From<PhaseCircuit> for CircuitFile {
    fn from(c: PhaseCircuit) -> Self {
        CircuitFile {
            qubits: c.num_qubits,
            gadgets: c
                .gadgets
                .into_iter()
                .map(|g| GadgetFile {
                    basis: g.basis,
                    legs: g.legs.ones().collect(),
                    angle: g.angle,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(basis: Basis, legs: &[usize]) -> PhaseGadget {
        PhaseGadget::new(basis, Angle::pi_frac(1, 4), legs.iter().copied(), 2).unwrap()
    }

    #[test]
    fn conjugation_rules() {
        let cx = CxGate::new(0, 1).unwrap();
        let cases = [
            (Basis::Z, vec![1], vec![0, 1]),
            (Basis::Z, vec![0], vec![0]),
            (Basis::Z, vec![0, 1], vec![1]),
            (Basis::X, vec![0, 1], vec![0]),
            (Basis::X, vec![1], vec![1]),
            (Basis::X, vec![0], vec![0, 1]),
        ];
        for (basis, before, after) in cases {
            let mut g = single(basis, &before);
            let changed = g.conjugate_by_cx(cx);
            assert_eq!(g.leg_list(), after, "{basis:?} {before:?}");
            assert_eq!(changed, before != after);
        }
    }

    #[test]
    fn angle_parsing_and_normalisation() {
        assert_eq!("1/2 pi".parse::<Angle>().unwrap(), Angle::pi_frac(1, 2));
        assert_eq!("-1/4 pi".parse::<Angle>().unwrap(), Angle::pi_frac(7, 4));
        assert_eq!("pi".parse::<Angle>().unwrap(), Angle::pi_frac(1, 1));
        assert_eq!("3 pi".parse::<Angle>().unwrap(), Angle::pi_frac(1, 1));
        assert_eq!("2/4 pi".parse::<Angle>().unwrap().to_string(), "1/2 pi");
        assert_eq!(Angle::pi_frac(4, 2).to_string(), "0");
        assert_eq!("0".parse::<Angle>().unwrap(), Angle::zero());
        assert!("1/0 pi".parse::<Angle>().is_err());
        assert!("half".parse::<Angle>().is_err());
        assert_eq!(Angle::pi_frac(1, 8).negated(), Angle::pi_frac(15, 8));
    }

    #[test]
    fn gadgets_need_legs() {
        assert_eq!(PhaseGadget::z(Angle::zero(), &[], 3), Err(CircuitError::NoLegs));
        assert_eq!(
            PhaseGadget::z(Angle::zero(), &[3], 3),
            Err(CircuitError::LegOutOfRange { leg: 3, num_qubits: 3 })
        );
        assert!(CxGate::new(2, 2).is_err());
    }

    #[test]
    fn random_shapes() {
        let c = PhaseCircuit::random(6, 10, 1, 3, 7).unwrap();
        assert_eq!(c.len(), 10);
        assert!(c.gadgets().iter().all(|g| (1..=3).contains(&g.num_legs())));
        assert!(PhaseCircuit::random(4, 0, 1, 1, 0).unwrap().is_empty());
        assert_eq!(PhaseCircuit::random(6, 10, 1, 3, 7), PhaseCircuit::random(6, 10, 1, 3, 7));
        assert!(PhaseCircuit::random(3, 1, 0, 1, 0).is_err());
        assert!(PhaseCircuit::random(3, 1, 2, 1, 0).is_err());
        assert!(PhaseCircuit::random(3, 1, 1, 4, 0).is_err());
    }

    #[test]
    fn random_leg_counts_are_uniform() {
        let c = PhaseCircuit::random(16, 1000, 2, 3, 2024).unwrap();
        let twos = c.gadgets().iter().filter(|g| g.num_legs() == 2).count() as f64;
        let threes = c.len() as f64 - twos;
        // chi-squared with one degree of freedom, 99.9% critical value
        let chi2 = ((twos - 500.0).powi(2) + (threes - 500.0).powi(2)) / 500.0;
        assert!(chi2 < 10.83, "chi2 = {chi2}");
        assert!((twos / 1000.0 - 0.5).abs() < 0.05);
        let zs = c.gadgets().iter().filter(|g| g.basis() == Basis::Z).count();
        assert!((400..600).contains(&zs));
    }

    #[test]
    fn ccz_structure() {
        let gadgets = ccz(3, 0, 1, 2).unwrap();
        assert_eq!(gadgets.len(), 7);
        assert!(gadgets.iter().all(|g| g.basis() == Basis::Z));
        assert!(ccz(3, 0, 1, 1).is_err());

        let mut c = PhaseCircuit::new(3).unwrap();
        c.ccz(0, 1, 2).unwrap();
        let before = c.clone();
        let cx = CxGate::new(2, 0).unwrap();
        c.conjugate_by_cx(cx);
        c.conjugate_by_cx(cx);
        assert_eq!(c, before);
    }

    fn encode_example() -> PhaseCircuit {
        let mut c = PhaseCircuit::new(3).unwrap();
        c.add(Basis::Z, Angle::pi_frac(1, 2), &[0, 1]).unwrap();
        c.add(Basis::X, Angle::pi_frac(1, 1), &[0, 2]).unwrap();
        c.add(Basis::X, Angle::pi_frac(7, 4), &[1, 2]).unwrap();
        c.add(Basis::Z, Angle::pi_frac(1, 4), &[0, 2]).unwrap();
        c.add(Basis::X, Angle::pi_frac(1, 2), &[0, 1]).unwrap();
        c
    }

    #[test]
    fn encode_matches_worked_example() {
        let m = encode_example().encode();
        assert_eq!(m.lz, vec![vec![1, 1], vec![1, 0], vec![0, 1]]);
        assert_eq!(m.lx, vec![vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 0]]);
        assert_eq!(m.pos_z, vec![0, 3]);
        assert_eq!(m.pos_x, vec![1, 2, 4]);
        let angles: Vec<_> = m.angles.iter().map(|a| a.to_string()).collect();
        assert_eq!(angles, ["1/2 pi", "1 pi", "7/4 pi", "1/4 pi", "1/2 pi"]);
        assert_eq!(PhaseCircuit::decode(&m).unwrap(), encode_example());
    }

    #[test]
    fn encode_empty_and_decode_errors() {
        let m = PhaseCircuit::new(2).unwrap().encode();
        assert!(m.pos_z.is_empty() && m.pos_x.is_empty() && m.angles.is_empty());
        assert!(m.lz.iter().all(|r| r.is_empty()));

        let mut bad = encode_example().encode();
        bad.pos_x = vec![1, 2, 5];
        assert!(PhaseCircuit::decode(&bad).is_err());
        let mut bad = encode_example().encode();
        bad.angles.pop();
        assert!(PhaseCircuit::decode(&bad).is_err());
        let mut bad = encode_example().encode();
        bad.lz[1].push(1);
        assert!(PhaseCircuit::decode(&bad).is_err());
        let mut bad = encode_example().encode();
        bad.pos_z = vec![3, 0];
        assert!(PhaseCircuit::decode(&bad).is_err());
    }

    #[test]
    fn json_format() {
        let mut c = PhaseCircuit::new(3).unwrap();
        c.add(Basis::Z, Angle::pi_frac(1, 2), &[0, 1]).unwrap();
        c.add(Basis::X, Angle::param("theta"), &[2]).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(
            text,
            r#"{"qubits":3,"gadgets":[{"basis":"Z","angle":"1/2 pi","legs":[0,1]},{"basis":"X","angle":{"param":"theta"},"legs":[2]}]}"#
        );
        let back: PhaseCircuit = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);

        let scaled: PhaseCircuit = serde_json::from_str(
            r#"{"qubits":1,"gadgets":[{"basis":"Z","angle":{"param":"t","coeff":"-1/2"},"legs":[0]}]}"#,
        )
        .unwrap();
        assert!(!scaled.gadgets()[0].angle().is_concrete());
        assert!(serde_json::from_str::<PhaseCircuit>(
            r#"{"qubits":1,"gadgets":[{"basis":"Z","angle":"0","legs":[]}]}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(n in 1usize..8, m in 0usize..12, seed: u64) {
            let max = n.min(4);
            let c = PhaseCircuit::random(n, m, 1, max, seed).unwrap();
            prop_assert_eq!(PhaseCircuit::decode(&c.encode()).unwrap(), c);
        }

        #[test]
        fn conjugation_is_an_involution_preserving_structure(
            n in 2usize..8, m in 0usize..12, seed: u64, a: prop::sample::Index, b: prop::sample::Index,
        ) {
            let c = PhaseCircuit::random(n, m, 1, n, seed).unwrap();
            let control = a.index(n);
            let target = (control + 1 + b.index(n - 1)) % n;
            let gate = CxGate::new(control, target).unwrap();
            let mut d = c.clone();
            d.conjugate_by_cx(gate);
            for (x, y) in c.gadgets().iter().zip(d.gadgets()) {
                prop_assert_eq!(x.basis(), y.basis());
                prop_assert_eq!(x.angle(), y.angle());
                prop_assert!(y.num_legs() >= 1);
            }
            d.conjugate_by_cx(gate);
            prop_assert_eq!(d, c);
        }
    }
}
