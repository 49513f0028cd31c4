//! Qubit-level `R_A` and `R_B`.
//!
//! Both reflections share one shape: a prefix `F` that moves the walk state
//! into "parent plus candidate child value" form and computes the flags the
//! reflection needs, the multiplexed reflection itself, then `F⁻¹`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::classical::BacktrackTree;
use crate::csp::CspInstance;
use crate::simulator::{
    inverse_qft, Circuit, Control, Gate, Register, RegisterLayout, SparseState, C64,
};

use super::predicate::{complete_predicate_gates, partial_predicate_gates};
use super::{WalkError, WalkOptions};

/// Tolerance for leakage out of the tree subspace.
const LEAK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    A,
    B,
}

pub fn build_ra_circuit(
    inst: &CspInstance,
    layout: &RegisterLayout,
    opts: &WalkOptions,
) -> Result<Circuit, WalkError> {
    build_reflection(inst, layout, opts, Part::A)
}

pub fn build_rb_circuit(
    inst: &CspInstance,
    layout: &RegisterLayout,
    opts: &WalkOptions,
) -> Result<Circuit, WalkError> {
    build_reflection(inst, layout, opts, Part::B)
}

fn build_reflection(
    inst: &CspInstance,
    layout: &RegisterLayout,
    opts: &WalkOptions,
    part: Part,
) -> Result<Circuit, WalkError> {
    let n = inst.n();
    let d = inst.d();
    if d > opts.max_branching {
        return Err(WalkError::Resource(format!(
            "domain size {d} exceeds the multiplexer cap {}",
            opts.max_branching
        )));
    }
    if opts.root_level > n {
        return Err(WalkError::Input(format!(
            "root level {} beyond depth {n}",
            opts.root_level
        )));
    }
    let r0 = opts.root_level;
    let level = layout.level;
    let anc = layout.anc;
    let mut prefix: Vec<Gate> = Vec::new();

    // 1: child-parity levels hand their last value to anc
    for l in r0 + 1..=n {
        let child_parity = (l - r0) % 2 == usize::from(part == Part::A);
        if child_parity {
            let v = layout.values[l - 1];
            for b in 0..anc.width {
                prefix.push(Gate::Swap(anc.qubit(b), v.qubit(b)).controlled(level.equals(l)));
            }
        }
    }

    // 2: is the parent a solution
    prefix.extend(complete_predicate_gates(inst, layout, layout.predicate)?);

    // 4: step up to the parent when anc holds a value
    let f = layout.anc_flag;
    let anc_set = [Gate::X(f), Gate::mcx(anc.equals(0), f)];
    prefix.extend(anc_set.iter().cloned());
    prefix.push(Gate::add_const_mod(level, -1).controlled([Control::on(f)]));
    prefix.extend(anc_set.iter().rev().cloned());

    // root flag, read at the parent level
    prefix.push(Gate::mcx(level.equals(r0), layout.root_flag));

    // 5: children set, one candidate value at a time
    let floor = if opts.skip_settled { r0 } else { 0 };
    for w in 1..=d {
        let code = layout.encoding.encode(w);
        let mut write = Vec::new();
        for l in r0..n {
            let v = layout.values[l];
            for b in (0..v.width).filter(|b| code >> b & 1 == 1) {
                write.push(Gate::X(v.qubit(b)).controlled(level.equals(l)));
            }
        }
        prefix.extend(write.iter().cloned());
        prefix.extend(partial_predicate_gates(
            inst,
            layout,
            layout.children.qubit(w - 1),
            floor,
        )?);
        prefix.extend(write.into_iter().rev());
    }

    // 6: reflect anc about the diffusion state picked by the children set
    let mut controls = vec![Control::off(layout.predicate)];
    let mut selector = layout.children.qubits();
    if part == Part::A {
        selector.push(layout.root_flag);
    } else {
        controls.push(Control::off(layout.root_flag));
    }
    if let Some(q) = opts.control {
        controls.push(Control::on(q));
    }
    let table = (0..1usize << selector.len())
        .map(|s| {
            let at_root = s >> d & 1 == 1;
            let weight = if at_root { n } else { 1 };
            let children: Vec<usize> = (1..=d).filter(|w| s >> (w - 1) & 1 == 1).collect();
            reflection_matrix(layout, weight, &children)
        })
        .collect();
    let reflect = Gate::multiplexed(selector, anc.qubits(), table)?.controlled(controls);

    let mut circ = Circuit::new(layout.num_qubits());
    for g in &prefix {
        circ.try_push(g.clone())?;
    }
    circ.try_push(reflect)?;
    for g in prefix.iter().rev() {
        circ.try_push(g.inverse())?;
    }
    Ok(circ)
}

/// `I - 2|φ⟩⟨φ|` over the encoded values of one value register.
fn reflection_matrix(layout: &RegisterLayout, weight: usize, children: &[usize]) -> DMatrix<C64> {
    let dim = 1 << layout.value_width();
    let mut phi = DVector::<f64>::zeros(dim);
    phi[0] = 1.0;
    for &w in children {
        phi[layout.encoding.encode(w)] = (weight as f64).sqrt();
    }
    let phi = phi.normalize();
    (DMatrix::identity(dim, dim) - 2.0 * &phi * phi.transpose()).map(|x| C64::new(x, 0.0))
}

/// A circuit restricted to the embedded vertices of one subtree.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub matrix: DMatrix<C64>,
    /// Largest norm² any basis vertex sends outside the subtree span.
    pub leakage: f64,
}

fn embed_vertex(layout: &RegisterLayout, tree: &BacktrackTree, v: usize) -> usize {
    let vx = tree.vertex(v);
    let mut values = vx.prefix.clone();
    values.resize(layout.n(), 0);
    layout.embed(vx.depth, &values)
}

/// Columns are the images of the embedded vertices of `tree.subtree(root)`,
/// rows the same vertices.
pub fn restrict_to_tree(
    circuit: &Circuit,
    layout: &RegisterLayout,
    tree: &BacktrackTree,
    root: usize,
) -> Result<Restriction, WalkError> {
    let basis = tree.subtree(root);
    let embedded: Vec<usize> = basis
        .iter()
        .map(|&v| embed_vertex(layout, tree, v))
        .collect();
    let row: HashMap<usize, usize> = embedded.iter().enumerate().map(|(k, &b)| (b, k)).collect();
    let dim = basis.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    let mut leakage: f64 = 0.0;
    for (col, &b) in embedded.iter().enumerate() {
        let mut state = SparseState::basis(layout.num_qubits(), b);
        state.apply(circuit)?;
        let mut lost = 0.0;
        for (idx, amp) in state.entries() {
            match row.get(&idx) {
                Some(&r) => matrix[(r, col)] = amp,
                None => lost += amp.norm_sqr(),
            }
        }
        leakage = leakage.max(lost);
    }
    Ok(Restriction { matrix, leakage })
}

/// Circuit-built `R_A`, `R_B` on the span of one subtree.
#[derive(Debug, Clone)]
pub struct CircuitOperators {
    pub basis: Vec<usize>,
    pub r_a: DMatrix<C64>,
    pub r_b: DMatrix<C64>,
}

impl CircuitOperators {
    pub fn walk_step(&self) -> DMatrix<C64> {
        &self.r_b * &self.r_a
    }

    pub fn root_state(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.basis.len());
        v[0] = C64::new(1.0, 0.0);
        v
    }
}

fn subtree_options(tree: &BacktrackTree, root: usize, base: &WalkOptions) -> WalkOptions {
    WalkOptions {
        root_level: tree.vertex(root).depth,
        ..base.clone()
    }
}

/// Builds both circuits for the subtree at `root` and restricts them to its
/// span. Leakage above `1e-8` is an error.
pub fn circuit_operators(
    tree: &BacktrackTree,
    root: usize,
    opts: &WalkOptions,
) -> Result<CircuitOperators, WalkError> {
    let inst = tree.instance();
    let layout = RegisterLayout::new(inst);
    let opts = subtree_options(tree, root, opts);
    let ra = restrict_to_tree(
        &build_ra_circuit(inst, &layout, &opts)?,
        &layout,
        tree,
        root,
    )?;
    let rb = restrict_to_tree(
        &build_rb_circuit(inst, &layout, &opts)?,
        &layout,
        tree,
        root,
    )?;
    let leak = ra.leakage.max(rb.leakage);
    if leak > LEAK_TOL {
        return Err(WalkError::Resource(format!(
            "walk circuit leaks {leak:e} out of the tree span"
        )));
    }
    Ok(CircuitOperators {
        basis: tree.subtree(root),
        r_a: ra.matrix,
        r_b: rb.matrix,
    })
}

/// Prefix-form inputs at levels from `root_level` up whose ancillas are not
/// clean after the circuit. Values range over `1..=d`.
pub fn ancilla_violations(
    circuit: &Circuit,
    layout: &RegisterLayout,
    root_level: usize,
) -> Result<Vec<usize>, WalkError> {
    let mask = layout.ancilla_mask();
    let mut bad = Vec::new();
    let mut prefixes: Vec<Vec<usize>> = vec![vec![]];
    for level in 0..=layout.n() {
        if level >= root_level {
            for p in &prefixes {
                let mut values = p.clone();
                values.resize(layout.n(), 0);
                let input = layout.embed(level, &values);
                let mut state = SparseState::basis(layout.num_qubits(), input);
                state.apply(circuit)?;
                if state
                    .entries()
                    .iter()
                    .any(|(i, a)| i & mask != 0 && a.norm_sqr() > LEAK_TOL)
                {
                    bad.push(input);
                }
            }
        }
        prefixes = prefixes
            .into_iter()
            .flat_map(|p| {
                (1..=layout.d()).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(bad)
}

/// Acceptance probability from running phase estimation on the full qubit
/// circuits: `bits` phase qubits, controlled walk steps, inverse Fourier
/// transform, probability of reading 0.
pub fn circuit_phase_accept(
    tree: &BacktrackTree,
    root: usize,
    bits: u32,
    opts: &WalkOptions,
) -> Result<f64, WalkError> {
    let inst = tree.instance();
    let layout = RegisterLayout::with_phase_bits(inst, bits as usize);
    let phase: Register = layout.phase.expect("phase register requested");
    let mut state = SparseState::basis(layout.num_qubits(), embed_vertex(&layout, tree, root));
    let mut h = Circuit::new(layout.num_qubits());
    h.extend(phase.qubits().into_iter().map(Gate::H));
    state.apply(&h)?;
    for j in 0..bits as usize {
        let ctrl = WalkOptions {
            control: Some(phase.qubit(j)),
            ..subtree_options(tree, root, opts)
        };
        let mut step = build_ra_circuit(inst, &layout, &ctrl)?;
        step.append(&build_rb_circuit(inst, &layout, &ctrl)?);
        for _ in 0..1u64 << j {
            state.apply(&step)?;
        }
    }
    let mut iqft = Circuit::new(layout.num_qubits());
    iqft.extend(inverse_qft(phase));
    state.apply(&iqft)?;
    Ok(state
        .entries()
        .iter()
        .filter(|(i, _)| phase.read(*i) == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}
