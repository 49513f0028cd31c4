use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};

use super::SimError;

pub type C64 = Complex<f64>;
pub type Qubit = usize;

pub(crate) const UNITARY_TOL: f64 = 1e-10;

/// Contiguous block of qubits read as a little-endian integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Register {
    pub offset: usize,
    pub width: usize,
}

impl Register {
    pub fn new(offset: usize, width: usize) -> Self {
        Register { offset, width }
    }

    pub fn qubit(&self, i: usize) -> Qubit {
        assert!(
            i < self.width,
            "bit {i} outside register of width {}",
            self.width
        );
        self.offset + i
    }

    pub fn qubits(&self) -> Vec<Qubit> {
        (self.offset..self.offset + self.width).collect()
    }

    pub fn end(&self) -> usize {
        self.offset + self.width
    }

    pub fn mask(&self) -> usize {
        ((1usize << self.width) - 1) << self.offset
    }

    pub fn read(&self, basis: usize) -> usize {
        (basis & self.mask()) >> self.offset
    }

    pub fn write(&self, basis: usize, value: usize) -> usize {
        debug_assert!(value < 1 << self.width);
        (basis & !self.mask()) | (value << self.offset)
    }

    /// Controls that hold exactly when the register reads `value`.
    pub fn equals(&self, value: usize) -> Vec<Control> {
        (0..self.width)
            .map(|i| Control {
                qubit: self.offset + i,
                when: value >> i & 1 == 1,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: Qubit,
    /// Required value of the control qubit.
    pub when: bool,
}

impl Control {
    pub fn on(qubit: Qubit) -> Self {
        Control { qubit, when: true }
    }

    pub fn off(qubit: Qubit) -> Self {
        Control { qubit, when: false }
    }

    pub(crate) fn holds(&self, basis: usize) -> bool {
        (basis >> self.qubit & 1 == 1) == self.when
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    X(Qubit),
    H(Qubit),
    Z(Qubit),
    /// `diag(1, e^{iθ})`.
    Phase(Qubit, f64),
    Swap(Qubit, Qubit),
    /// `|x⟩ → |x + k mod 2^w⟩` on the little-endian `target` qubits.
    AddConstMod {
        target: Vec<Qubit>,
        k: i64,
    },
    /// Applies `table[s]` to `target` where `s` is the value of `selector`.
    Multiplexed {
        selector: Vec<Qubit>,
        target: Vec<Qubit>,
        table: Arc<[DMatrix<C64>]>,
    },
    Controlled {
        controls: Vec<Control>,
        gate: Box<Gate>,
    },
}

/// Action of a gate on its target subspace for one setting of the other
/// qubits.
pub(crate) enum Local<'a> {
    Identity,
    Perm(Perm),
    Mat2([C64; 4]),
    Matrix(&'a DMatrix<C64>),
}

#[derive(Clone, Copy)]
pub(crate) enum Perm {
    Flip,
    SwapPair,
    Add { k: i64, width: usize },
}

impl Perm {
    pub(crate) fn apply(self, j: usize) -> usize {
        match self {
            Perm::Flip => j ^ 1,
            Perm::SwapPair => ((j & 1) << 1) | (j >> 1 & 1),
            Perm::Add { k, width } => {
                let m = 1i64 << width;
                (j as i64 + k).rem_euclid(m) as usize
            }
        }
    }
}

impl Gate {
    pub fn cx(control: Qubit, target: Qubit) -> Gate {
        Gate::X(target).controlled([Control::on(control)])
    }

    pub fn mcx(controls: impl IntoIterator<Item = Control>, target: Qubit) -> Gate {
        Gate::X(target).controlled(controls)
    }

    pub fn cz(control: Qubit, target: Qubit) -> Gate {
        Gate::Z(target).controlled([Control::on(control)])
    }

    pub fn cswap(control: Qubit, a: Qubit, b: Qubit) -> Gate {
        Gate::Swap(a, b).controlled([Control::on(control)])
    }

    pub fn add_const_mod(reg: Register, k: i64) -> Gate {
        Gate::AddConstMod {
            target: reg.qubits(),
            k,
        }
    }

    /// Checks that the table has one unitary of the right size per selector
    /// value.
    pub fn multiplexed(
        selector: Vec<Qubit>,
        target: Vec<Qubit>,
        table: Vec<DMatrix<C64>>,
    ) -> Result<Gate, SimError> {
        if table.len() != 1 << selector.len() {
            return Err(SimError::InvalidGate(format!(
                "multiplexer with {} selector qubits needs {} entries, got {}",
                selector.len(),
                1usize << selector.len(),
                table.len()
            )));
        }
        let dim = 1 << target.len();
        for m in &table {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(SimError::InvalidGate(format!(
                    "table entry is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let dev = unitarity_deviation(m);
            if dev > UNITARY_TOL {
                return Err(SimError::NotUnitary(dev));
            }
        }
        Ok(Gate::Multiplexed {
            selector,
            target,
            table: table.into(),
        })
    }

    /// Adds controls, merging with any existing ones.
    pub fn controlled(self, controls: impl IntoIterator<Item = Control>) -> Gate {
        let mut extra: Vec<Control> = controls.into_iter().collect();
        if extra.is_empty() {
            return self;
        }
        match self {
            Gate::Controlled { mut controls, gate } => {
                controls.append(&mut extra);
                Gate::Controlled { controls, gate }
            }
            g => Gate::Controlled {
                controls: extra,
                gate: Box::new(g),
            },
        }
    }

    pub fn targets(&self) -> Vec<Qubit> {
        match self {
            Gate::X(q) | Gate::H(q) | Gate::Z(q) | Gate::Phase(q, _) => vec![*q],
            Gate::Swap(a, b) => vec![*a, *b],
            Gate::AddConstMod { target, .. } | Gate::Multiplexed { target, .. } => target.clone(),
            Gate::Controlled { gate, .. } => gate.targets(),
        }
    }

    /// Qubits the gate reads without changing: controls and selectors.
    pub fn conditions(&self) -> Vec<Qubit> {
        match self {
            Gate::Multiplexed { selector, .. } => selector.clone(),
            Gate::Controlled { controls, gate } => {
                let mut q: Vec<Qubit> = controls.iter().map(|c| c.qubit).collect();
                q.extend(gate.conditions());
                q
            }
            _ => vec![],
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Phase(q, theta) => Gate::Phase(*q, -theta),
            Gate::AddConstMod { target, k } => Gate::AddConstMod {
                target: target.clone(),
                k: -k,
            },
            Gate::Multiplexed {
                selector,
                target,
                table,
            } => Gate::Multiplexed {
                selector: selector.clone(),
                target: target.clone(),
                table: table.iter().map(|m| m.adjoint()).collect::<Vec<_>>().into(),
            },
            Gate::Controlled { controls, gate } => Gate::Controlled {
                controls: controls.clone(),
                gate: Box::new(gate.inverse()),
            },
            g => g.clone(),
        }
    }

    /// True when the gate maps basis states to basis states without phases.
    pub fn is_permutation(&self) -> bool {
        match self {
            Gate::X(_) | Gate::Swap(..) | Gate::AddConstMod { .. } => true,
            Gate::Controlled { gate, .. } => gate.is_permutation(),
            _ => false,
        }
    }

    pub(crate) fn local(&self, rest: usize) -> Local<'_> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match self {
            Gate::X(_) => Local::Perm(Perm::Flip),
            Gate::Swap(..) => Local::Perm(Perm::SwapPair),
            Gate::AddConstMod { target, k } => Local::Perm(Perm::Add {
                k: *k,
                width: target.len(),
            }),
            Gate::H(_) => {
                let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                Local::Mat2([h, h, h, -h])
            }
            Gate::Z(_) => Local::Mat2([one, zero, zero, -one]),
            Gate::Phase(_, theta) => Local::Mat2([one, zero, zero, C64::from_polar(1.0, *theta)]),
            Gate::Multiplexed {
                selector, table, ..
            } => {
                let sel = selector
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (i, &q)| acc | ((rest >> q & 1) << i));
                Local::Matrix(&table[sel])
            }
            Gate::Controlled { controls, gate } => {
                if controls.iter().all(|c| c.holds(rest)) {
                    gate.local(rest)
                } else {
                    Local::Identity
                }
            }
        }
    }

    pub(crate) fn validate(&self, num_qubits: usize) -> Result<(), SimError> {
        let targets = self.targets();
        let conditions = self.conditions();
        let mut all: Vec<Qubit> = targets.iter().chain(conditions.iter()).copied().collect();
        if let Some(&q) = all.iter().find(|&&q| q >= num_qubits) {
            return Err(SimError::InvalidGate(format!(
                "qubit {q} outside a {num_qubits}-qubit circuit"
            )));
        }
        all.sort_unstable();
        let before = all.len();
        all.dedup();
        if all.len() != before {
            return Err(SimError::InvalidGate(format!(
                "gate reuses a wire: {}",
                self.describe()
            )));
        }
        if let Gate::AddConstMod { target, .. } = self.innermost() {
            if target.len() > 62 {
                return Err(SimError::InvalidGate("adder wider than 62 qubits".into()));
            }
        }
        Ok(())
    }

    fn innermost(&self) -> &Gate {
        match self {
            Gate::Controlled { gate, .. } => gate.innermost(),
            g => g,
        }
    }

    /// One-line text form: name, controls, targets, parameters.
    pub fn describe(&self) -> String {
        let (controls, inner): (Vec<Control>, &Gate) = match self {
            Gate::Controlled { controls, gate } => {
                let mut c = controls.clone();
                let mut g: &Gate = gate;
                while let Gate::Controlled { controls, gate } = g {
                    c.extend(controls.iter().copied());
                    g = gate;
                }
                (c, g)
            }
            g => (vec![], g),
        };
        let list = |qs: &[Qubit]| {
            qs.iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        let name = match inner {
            Gate::X(_) => "x",
            Gate::H(_) => "h",
            Gate::Z(_) => "z",
            Gate::Phase(..) => "phase",
            Gate::Swap(..) => "swap",
            Gate::AddConstMod { .. } => "addmod",
            Gate::Multiplexed { .. } => "mux",
            Gate::Controlled { .. } => unreachable!("flattened above"),
        };
        s.push_str(name);
        if !controls.is_empty() {
            let c: Vec<String> = controls
                .iter()
                .map(|c| format!("{}{}", if c.when { '+' } else { '-' }, c.qubit))
                .collect();
            let _ = write!(s, " ctrl=[{}]", c.join(","));
        }
        let _ = write!(s, " tgt=[{}]", list(&inner.targets()));
        match inner {
            Gate::Phase(_, theta) => {
                let _ = write!(s, " theta={theta}");
            }
            Gate::AddConstMod { k, .. } => {
                let _ = write!(s, " k={k}");
            }
            Gate::Multiplexed {
                selector, table, ..
            } => {
                let _ = write!(s, " sel=[{}] table={}", list(selector), table.len());
            }
            _ => {}
        }
        s
    }
}

pub(crate) fn unitarity_deviation(m: &DMatrix<C64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let prod = m.adjoint() * m;
    let mut dev: f64 = 0.0;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((prod[(i, j)] - C64::new(expect, 0.0)).norm());
        }
    }
    dev
}

/// Ordered gate list on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Appends a gate.
    ///
    /// # Panics
    ///
    /// If the gate touches a wire outside the circuit or uses a wire twice.
    pub fn push(&mut self, gate: Gate) -> &mut Self {
        if let Err(e) = gate.validate(self.num_qubits) {
            panic!("{e}");
        }
        self.gates.push(gate);
        self
    }

    pub fn try_push(&mut self, gate: Gate) -> Result<&mut Self, SimError> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> &mut Self {
        for g in gates {
            self.push(g);
        }
        self
    }

    pub fn append(&mut self, other: &Circuit) -> &mut Self {
        self.extend(other.gates.iter().cloned())
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Basis image of `basis` when every gate acting on it is a permutation;
    /// `None` as soon as a gate would create a superposition or a phase.
    pub fn map_basis(&self, basis: usize) -> Option<usize> {
        let mut idx = basis;
        for gate in &self.gates {
            let targets = gate.targets();
            let rest = targets.iter().fold(idx, |acc, &q| acc & !(1 << q));
            match gate.local(rest) {
                Local::Identity => {}
                Local::Perm(p) => {
                    let j = targets
                        .iter()
                        .enumerate()
                        .fold(0, |acc, (i, &q)| acc | ((idx >> q & 1) << i));
                    let out = p.apply(j);
                    idx = targets
                        .iter()
                        .enumerate()
                        .fold(rest, |acc, (i, &q)| acc | ((out >> i & 1) << q));
                }
                Local::Mat2(_) | Local::Matrix(_) => return None,
            }
        }
        Some(idx)
    }

    /// Line-per-gate text dump.
    pub fn dump(&self) -> String {
        let mut s = format!("qubits {}\n", self.num_qubits);
        for g in &self.gates {
            s.push_str(&g.describe());
            s.push('\n');
        }
        s
    }
}
