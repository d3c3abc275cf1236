use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate alphabet of the variational circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    RX,
    RY,
    RZ,
    CRX,
    CRY,
    CRZ,
    CNOT,
    SWAP,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::CRX,
        GateKind::CRY,
        GateKind::CRZ,
        GateKind::CNOT,
        GateKind::SWAP,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ => 1,
            _ => 2,
        }
    }

    /// Rotation gates take an angle; CNOT and SWAP do not.
    pub fn is_rotation(self) -> bool {
        !matches!(self, GateKind::CNOT | GateKind::SWAP)
    }

    pub fn is_controlled_rotation(self) -> bool {
        matches!(self, GateKind::CRX | GateKind::CRY | GateKind::CRZ)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CRX => "CRX",
            GateKind::CRY => "CRY",
            GateKind::CRZ => "CRZ",
            GateKind::CNOT => "CNOT",
            GateKind::SWAP => "SWAP",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidGate(format!("unknown gate kind `{s}`")))
    }
}

/// Where a gate takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamRef {
    /// Index into the trainable parameter vector.
    Slot(usize),
    /// Fixed angle in radians, normalized to `[0, 2π)`.
    Angle(f64),
    /// No angle (CNOT, SWAP).
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub param: ParamRef,
}

impl Gate {
    pub fn slot(kind: GateKind, qubits: &[usize], slot: usize) -> Self {
        Gate {
            kind,
            qubits: qubits.to_vec(),
            param: ParamRef::Slot(slot),
        }
    }

    pub fn fixed(kind: GateKind, qubits: &[usize], angle: f64) -> Self {
        Gate {
            kind,
            qubits: qubits.to_vec(),
            param: ParamRef::Angle(normalize_angle(angle)),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate {
            kind: GateKind::CNOT,
            qubits: vec![control, target],
            param: ParamRef::None,
        }
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Gate {
            kind: GateKind::SWAP,
            qubits: vec![a, b],
            param: ParamRef::None,
        }
    }

    /// Checks arity, distinctness and the parameter/kind pairing.
    pub fn validate(&self, width: usize) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} expects {} qubit(s), got {}",
                self.kind,
                self.kind.arity(),
                self.qubits.len()
            )));
        }
        for &q in &self.qubits {
            if q >= width {
                return Err(Error::QubitOutOfRange { qubit: q, width });
            }
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidGate(format!(
                "{} acts on identical qubits {}",
                self.kind, self.qubits[0]
            )));
        }
        match (self.kind.is_rotation(), self.param) {
            (true, ParamRef::None) => Err(Error::InvalidGate(format!(
                "{} requires a slot or an angle",
                self.kind
            ))),
            (false, ParamRef::Slot(_) | ParamRef::Angle(_)) => Err(Error::InvalidGate(format!(
                "{} carries no parameter",
                self.kind
            ))),
            (_, ParamRef::Angle(a)) if !a.is_finite() => {
                Err(Error::InvalidGate(format!("non-finite angle {a}")))
            }
            _ => Ok(()),
        }
    }

    /// Resolves the gate angle against a parameter vector. Returns 0 for
    /// parameterless gates.
    pub fn angle(&self, theta: &[f64]) -> f64 {
        match self.param {
            ParamRef::Slot(i) => theta[i],
            ParamRef::Angle(a) => a,
            ParamRef::None => 0.0,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Shortest distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (normalize_angle(a) - normalize_angle(b)).abs();
    d.min(TAU - d).min(PI)
}

pub type Mat2 = [[C64; 2]; 2];

/// Matrix form of a gate at a given angle.
#[derive(Debug, Clone, Copy)]
pub enum GateMatrix {
    /// One-qubit unitary on `qubits[0]`.
    Single(Mat2),
    /// Unitary applied to `qubits[1]` when `qubits[0]` is |1⟩.
    Controlled(Mat2),
    Swap,
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn rx(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

pub fn rz(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]]
}

pub const PAULI_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];

/// Hadamard, used by tests and basis changes.
pub const HADAMARD: Mat2 = [
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)],
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)],
];

fn scale(m: Mat2, s: C64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

/// Unitary of `kind` at angle `theta`.
///
/// Controlled rotations apply `e^{iθ/2}·R(θ)` to the target, which is the
/// textbook controlled rotation followed by a phase gate `P(θ/2)` on the
/// control. This makes every parameterized gate 2π-periodic with generator
/// spectrum `{0, 1}`, so angles can be wrapped to `[0, 2π)` and the two-term
/// shift rule is exact. `CRZ` reduces to the controlled phase gate.
pub fn gate_matrix(kind: GateKind, theta: f64) -> GateMatrix {
    let phase = || C64::from_polar(1.0, theta / 2.0);
    match kind {
        GateKind::RX => GateMatrix::Single(rx(theta)),
        GateKind::RY => GateMatrix::Single(ry(theta)),
        GateKind::RZ => GateMatrix::Single(rz(theta)),
        GateKind::CRX => GateMatrix::Controlled(scale(rx(theta), phase())),
        GateKind::CRY => GateMatrix::Controlled(scale(ry(theta), phase())),
        GateKind::CRZ => GateMatrix::Controlled(scale(rz(theta), phase())),
        GateKind::CNOT => GateMatrix::Controlled(PAULI_X),
        GateKind::SWAP => GateMatrix::Swap,
    }
}

pub fn dagger(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

pub fn conj(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[0][1].conj()],
        [m[1][0].conj(), m[1][1].conj()],
    ]
}

impl GateMatrix {
    pub fn dagger(&self) -> GateMatrix {
        match self {
            GateMatrix::Single(m) => GateMatrix::Single(dagger(m)),
            GateMatrix::Controlled(m) => GateMatrix::Controlled(dagger(m)),
            GateMatrix::Swap => GateMatrix::Swap,
        }
    }

    pub fn conj(&self) -> GateMatrix {
        match self {
            GateMatrix::Single(m) => GateMatrix::Single(conj(m)),
            GateMatrix::Controlled(m) => GateMatrix::Controlled(conj(m)),
            GateMatrix::Swap => GateMatrix::Swap,
        }
    }
}
