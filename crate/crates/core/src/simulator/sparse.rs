use std::collections::HashMap;

use super::{act, target_offsets, Circuit, Gate, Local, SimError, Statevector, C64};

/// Amplitudes below this squared magnitude are dropped after each gate.
const PRUNE: f64 = 1e-30;

/// Statevector holding only nonzero amplitudes.
#[derive(Debug, Clone)]
pub struct SparseState {
    num_qubits: usize,
    amps: HashMap<usize, C64>,
}

impl SparseState {
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = HashMap::new();
        amps.insert(index, C64::new(1.0, 0.0));
        SparseState { num_qubits, amps }
    }

    pub fn from_entries(
        num_qubits: usize,
        entries: impl IntoIterator<Item = (usize, C64)>,
    ) -> Self {
        SparseState {
            num_qubits,
            amps: entries
                .into_iter()
                .filter(|(_, a)| a.norm_sqr() > PRUNE)
                .collect(),
        }
    }

    pub fn from_dense(state: &Statevector) -> Self {
        Self::from_entries(
            state.num_qubits(),
            state.amplitudes().iter().copied().enumerate(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Number of stored amplitudes.
    pub fn support(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps.get(&index).copied().unwrap_or_default()
    }

    /// Stored entries sorted by basis index.
    pub fn entries(&self) -> Vec<(usize, C64)> {
        let mut e: Vec<(usize, C64)> = self.amps.iter().map(|(&i, &a)| (i, a)).collect();
        e.sort_unstable_by_key(|(i, _)| *i);
        e
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries().iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.validate(self.num_qubits)?;
        let (offsets, mask) = target_offsets(gate);
        let mut rests: Vec<usize> = self.amps.keys().map(|i| i & !mask).collect();
        rests.sort_unstable();
        rests.dedup();
        let mut next: HashMap<usize, C64> = HashMap::with_capacity(self.amps.len());
        let mut buf = vec![C64::new(0.0, 0.0); offsets.len()];
        let mut out = buf.clone();
        for rest in rests {
            let local = gate.local(rest);
            for (b, &o) in buf.iter_mut().zip(&offsets) {
                *b = self.amplitude(rest | o);
            }
            match local {
                Local::Identity | Local::Perm(_) => {
                    act(&local, &buf, &mut out);
                    for (&v, &o) in out.iter().zip(&offsets) {
                        if v != C64::default() {
                            next.insert(rest | o, v);
                        }
                    }
                }
                _ => {
                    act(&local, &buf, &mut out);
                    for (&v, &o) in out.iter().zip(&offsets) {
                        if v.norm_sqr() > PRUNE {
                            next.insert(rest | o, v);
                        }
                    }
                }
            }
        }
        self.amps = next;
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
