use super::{Qubit, Register};
use crate::csp::{CspInstance, ProblemKind};

/// Bits needed to hold `0..=x`.
pub fn bits_for(x: usize) -> usize {
    (usize::BITS - x.leading_zeros()) as usize
}

/// How a domain value is stored in a value register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueEncoding {
    /// Value `v` stored as the integer `v`, 0 meaning unassigned.
    Plain,
    /// Two bits: high bit = assigned, low bit = truth value. Pattern `01` is
    /// never used.
    BooleanPair,
}

impl ValueEncoding {
    pub fn of(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::GraphColoring => ValueEncoding::Plain,
            ProblemKind::Sat => ValueEncoding::BooleanPair,
        }
    }

    pub fn encode(self, value: usize) -> usize {
        match self {
            ValueEncoding::Plain => value,
            ValueEncoding::BooleanPair if value == 0 => 0,
            ValueEncoding::BooleanPair => value + 1,
        }
    }

    pub fn decode(self, bits: usize) -> Option<usize> {
        match self {
            ValueEncoding::Plain => Some(bits),
            ValueEncoding::BooleanPair => match bits {
                0 => Some(0),
                1 => None,
                b => Some(b - 1),
            },
        }
    }
}

/// Qubit allocation for the walk circuits, lowest qubits first in field
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    /// Depth of the current vertex.
    pub level: Register,
    /// Sits directly above `level` so the two form one wider register.
    pub level_flag: Qubit,
    pub values: Vec<Register>,
    /// Candidate child value.
    pub anc: Register,
    /// Bit `w-1` set when value `w` yields a child.
    pub children: Register,
    pub counter: Register,
    pub predicate: Qubit,
    /// Set when the level equals the subtree root level.
    pub root_flag: Qubit,
    /// Set when `anc` holds a value.
    pub anc_flag: Qubit,
    pub phase: Option<Register>,
    pub encoding: ValueEncoding,
    n: usize,
    d: usize,
    num_qubits: usize,
}

impl RegisterLayout {
    pub fn new(inst: &CspInstance) -> Self {
        Self::build(inst, None)
    }

    pub fn with_phase_bits(inst: &CspInstance, bits: usize) -> Self {
        Self::build(inst, Some(bits))
    }

    fn build(inst: &CspInstance, phase_bits: Option<usize>) -> Self {
        let encoding = ValueEncoding::of(inst.kind());
        let nu = bits_for(inst.n());
        let delta = match encoding {
            ValueEncoding::Plain => bits_for(inst.d()),
            ValueEncoding::BooleanPair => 2,
        };
        let mu = bits_for(inst.num_constraints());
        let mut next = 0;
        let mut take = |w: usize| {
            let r = Register::new(next, w);
            next += w;
            r
        };
        let level = take(nu);
        let level_flag = take(1).offset;
        let values = (0..inst.n()).map(|_| take(delta)).collect();
        let anc = take(delta);
        let children = take(inst.d());
        let counter = take(mu);
        let predicate = take(1).offset;
        let root_flag = take(1).offset;
        let anc_flag = take(1).offset;
        let phase = phase_bits.map(&mut take);
        RegisterLayout {
            level,
            level_flag,
            values,
            anc,
            children,
            counter,
            predicate,
            root_flag,
            anc_flag,
            phase,
            encoding,
            n: inst.n(),
            d: inst.d(),
            num_qubits: next,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn value_width(&self) -> usize {
        self.anc.width
    }

    /// `level` with the overflow flag as its most significant bit.
    pub fn level_extended(&self) -> Register {
        Register::new(self.level.offset, self.level.width + 1)
    }

    /// Every named register with its name, in qubit order.
    pub fn registers(&self) -> Vec<(String, Register)> {
        let mut r = vec![
            ("level".to_string(), self.level),
            ("level_flag".to_string(), Register::new(self.level_flag, 1)),
        ];
        for (i, v) in self.values.iter().enumerate() {
            r.push((format!("x{}", i + 1), *v));
        }
        r.push(("anc".into(), self.anc));
        r.push(("children".into(), self.children));
        r.push(("counter".into(), self.counter));
        r.push(("p".into(), Register::new(self.predicate, 1)));
        r.push(("root_flag".into(), Register::new(self.root_flag, 1)));
        r.push(("anc_flag".into(), Register::new(self.anc_flag, 1)));
        if let Some(p) = self.phase {
            r.push(("phase".into(), p));
        }
        r
    }

    /// Mask of the work qubits that start and end every walk step at zero.
    pub fn ancilla_mask(&self) -> usize {
        [
            Register::new(self.level_flag, 1),
            self.anc,
            self.children,
            self.counter,
            Register::new(self.predicate, 1),
            Register::new(self.root_flag, 1),
            Register::new(self.anc_flag, 1),
        ]
        .iter()
        .fold(0, |m, r| m | r.mask())
    }

    /// Basis index for the vertex with the given depth and (unencoded)
    /// values, all ancillas clear.
    pub fn embed(&self, level: usize, values: &[usize]) -> usize {
        assert_eq!(values.len(), self.n);
        let mut idx = self.level.write(0, level);
        for (reg, &v) in self.values.iter().zip(values) {
            idx = reg.write(idx, self.encoding.encode(v));
        }
        idx
    }

    /// Inverse of [`embed`](Self::embed) on the level and value registers.
    /// `None` if any value register holds an invalid pattern.
    pub fn extract(&self, basis: usize) -> Option<(usize, Vec<usize>)> {
        let values = self
            .values
            .iter()
            .map(|r| self.encoding.decode(r.read(basis)).filter(|&v| v <= self.d))
            .collect::<Option<Vec<_>>>()?;
        Some((self.level.read(basis), values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::Literal;

    #[test]
    fn bits_for_examples() {
        assert_eq!(bits_for(0), 0);
        assert_eq!(bits_for(1), 1);
        assert_eq!(bits_for(3), 2);
        assert_eq!(bits_for(4), 3);
    }

    #[test]
    fn registers_are_disjoint_and_cover() {
        let inst = CspInstance::graph_coloring(4, 3, &[(0, 1), (1, 2)]).unwrap();
        let lay = RegisterLayout::with_phase_bits(&inst, 3);
        let regs = lay.registers();
        let mut seen = vec![false; lay.num_qubits()];
        for (_, r) in &regs {
            for q in r.qubits() {
                assert!(!std::mem::replace(&mut seen[q], true), "qubit {q} reused");
            }
        }
        assert!(seen.iter().all(|&s| s));
        // ν = 3, 4 values of 2 bits, m = 2 edges + 4 assigned checks
        assert_eq!(lay.level.width, 3);
        assert_eq!(lay.value_width(), 2);
        assert_eq!(lay.counter.width, 3);
        assert_eq!(lay.level_flag, lay.level.end());
    }

    #[test]
    fn sat_uses_pair_encoding() {
        let inst = CspInstance::sat(2, vec![vec![Literal::pos(0), Literal::neg(1)]]).unwrap();
        let lay = RegisterLayout::new(&inst);
        assert_eq!(lay.encoding, ValueEncoding::BooleanPair);
        let idx = lay.embed(2, &[1, 2]);
        assert_eq!(lay.values[0].read(idx), 0b10);
        assert_eq!(lay.values[1].read(idx), 0b11);
        assert_eq!(lay.extract(idx), Some((2, vec![1, 2])));
        assert_eq!(lay.extract(lay.values[0].write(idx, 1)), None);
    }
}
