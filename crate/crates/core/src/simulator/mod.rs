//! Statevector simulation with the small gate set the walk circuits use.
//!
//! Basis index bit `q` is the value of qubit `q`. Two engines share the gate
//! semantics: [`Statevector`] stores all `2^q` amplitudes, [`SparseState`]
//! stores only nonzero ones and is what makes 20+ qubit walk circuits cheap,
//! since almost every gate there is a basis permutation.

mod gate;
mod layout;
mod phase;
mod sparse;

use nalgebra::Complex;
use thiserror::Error;

pub use gate::{Circuit, Control, Gate, Qubit, Register, C64};
pub use layout::{bits_for, RegisterLayout, ValueEncoding};
pub use phase::{
    inverse_qft, phase_estimate_accept, phase_estimate_accept_circuit, phase_estimation_circuit,
    phase_kernel, precision_bits, qft, random_unitary, Acceptance, EstimateMode, Spectrum,
};
pub use sparse::SparseState;

pub(crate) use gate::{unitarity_deviation, Local};

/// Norm tolerance for states.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("state has {state} qubits but the circuit acts on {circuit}")]
    DimensionMismatch { state: usize, circuit: usize },
    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("{0}")]
    Input(String),
}

/// Target wires of a gate, the offsets they address in a basis index, and
/// the mask of those wires.
pub(crate) fn target_offsets(gate: &Gate) -> (Vec<usize>, usize) {
    let targets = gate.targets();
    let mask = targets.iter().fold(0usize, |m, &q| m | 1 << q);
    let offsets = (0..1usize << targets.len())
        .map(|j| {
            targets
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &q)| acc | ((j >> i & 1) << q))
        })
        .collect();
    (offsets, mask)
}

/// Applies a local action to the amplitudes gathered in `buf`, writing the
/// result to `out`.
pub(crate) fn act(local: &Local<'_>, buf: &[C64], out: &mut [C64]) {
    match local {
        Local::Identity => out.copy_from_slice(buf),
        Local::Perm(p) => {
            for (j, &a) in buf.iter().enumerate() {
                out[p.apply(j)] = a;
            }
        }
        Local::Mat2(m) => {
            out[0] = m[0] * buf[0] + m[1] * buf[1];
            out[1] = m[2] * buf[0] + m[3] * buf[1];
        }
        Local::Matrix(m) => {
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (j, &b) in buf.iter().enumerate() {
                    acc += m[(i, j)] * b;
                }
                *o = acc;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = Complex::new(1.0, 0.0);
        Statevector { num_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, SimError> {
        if !amps.len().is_power_of_two() {
            return Err(SimError::Input(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::Input(format!("state norm² is {norm}")));
        }
        Ok(Statevector {
            num_qubits: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability that `reg` reads `value`.
    pub fn probability_of(&self, reg: Register, value: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| reg.read(*i) == value)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.validate(self.num_qubits)?;
        let (offsets, mask) = target_offsets(gate);
        let mut buf = vec![C64::new(0.0, 0.0); offsets.len()];
        let mut out = buf.clone();
        for rest in 0..self.amps.len() {
            if rest & mask != 0 {
                continue;
            }
            let local = gate.local(rest);
            if matches!(local, Local::Identity) {
                continue;
            }
            for (b, &o) in buf.iter_mut().zip(&offsets) {
                *b = self.amps[rest | o];
            }
            act(&local, &buf, &mut out);
            for (&v, &o) in out.iter().zip(&offsets) {
                self.amps[rest | o] = v;
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, circuit: &Circuit) -> Result<(), SimError> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(SimError::DimensionMismatch {
                state: self.num_qubits,
                circuit: circuit.num_qubits(),
            });
        }
        for g in circuit.gates() {
            self.apply_gate(g)?;
        }
        Ok(())
    }
}

/// Runs `circuit` on `state`.
pub fn apply(circuit: &Circuit, mut state: Statevector) -> Result<Statevector, SimError> {
    state.apply(circuit)?;
    Ok(state)
}
