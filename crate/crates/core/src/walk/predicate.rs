//! Counter-based predicate circuits.
//!
//! Each constraint gadget adds one to a counter when its constraint is
//! violated. The predicate bit is flipped when the counter reads zero, then
//! every gadget is run backwards so only the predicate bit changes.

use crate::csp::{Constraint, CspInstance, Literal};
use crate::simulator::{
    bits_for, Circuit, Control, Gate, Qubit, Register, RegisterLayout, ValueEncoding,
};

use super::WalkError;

/// Value registers and the counter a gadget works on.
#[derive(Debug, Clone, Copy)]
pub struct CheckWires<'a> {
    pub values: &'a [Register],
    pub counter: Register,
    pub encoding: ValueEncoding,
}

impl<'a> CheckWires<'a> {
    pub fn of(layout: &'a RegisterLayout) -> Self {
        CheckWires {
            values: &layout.values,
            counter: layout.counter,
            encoding: layout.encoding,
        }
    }

    fn increment(&self, controls: Vec<Control>) -> Gate {
        Gate::add_const_mod(self.counter, 1).controlled(controls)
    }
}

fn with(enable: &[Control], more: Vec<Control>) -> Vec<Control> {
    enable.iter().copied().chain(more).collect()
}

/// Counter += 1 when `v_i` is unassigned.
pub fn gadget_vertex_assigned(w: &CheckWires, i: usize, enable: &[Control]) -> Vec<Gate> {
    vec![w.increment(with(enable, w.values[i].equals(0)))]
}

/// Counter += 1 when `v_j = v_k`: XOR `v_j` into `v_k`, test for zero, undo.
pub fn gadget_edge_differs(w: &CheckWires, j: usize, k: usize, enable: &[Control]) -> Vec<Gate> {
    let (vj, vk) = (w.values[j], w.values[k]);
    let xor: Vec<Gate> = (0..vj.width)
        .map(|b| Gate::cx(vj.qubit(b), vk.qubit(b)))
        .collect();
    let mut gates = xor.clone();
    gates.push(w.increment(with(enable, vk.equals(0))));
    gates.extend(xor);
    gates
}

fn require_pairs(w: &CheckWires) -> Result<(), WalkError> {
    if w.encoding != ValueEncoding::BooleanPair {
        return Err(WalkError::Input(
            "boolean gadget on a non-SAT layout".into(),
        ));
    }
    Ok(())
}

/// Flips the truth bit of `v_i` when it is assigned; leaves `∗` alone.
pub fn gadget_bool_negate(w: &CheckWires, i: usize) -> Result<Gate, WalkError> {
    require_pairs(w)?;
    let v = w.values[i];
    Ok(Gate::cx(v.qubit(1), v.qubit(0)))
}

/// Counter += 1 when every literal of the clause reads false.
pub fn gadget_clause(
    w: &CheckWires,
    literals: &[Literal],
    enable: &[Control],
) -> Result<Vec<Gate>, WalkError> {
    require_pairs(w)?;
    let negations = literals
        .iter()
        .filter(|l| l.negated)
        .map(|l| gadget_bool_negate(w, l.var))
        .collect::<Result<Vec<_>, _>>()?;
    let all_false = literals
        .iter()
        .flat_map(|l| {
            let v = w.values[l.var];
            [Control::on(v.qubit(1)), Control::off(v.qubit(0))]
        })
        .collect();
    let mut gates = negations.clone();
    gates.push(w.increment(with(enable, all_false)));
    gates.extend(negations);
    Ok(gates)
}

pub fn constraint_gadget(
    w: &CheckWires,
    c: &Constraint,
    enable: &[Control],
) -> Result<Vec<Gate>, WalkError> {
    Ok(match c {
        Constraint::Assigned(i) => gadget_vertex_assigned(w, *i, enable),
        Constraint::EdgeDiffers(j, k) => gadget_edge_differs(w, *j, *k, enable),
        Constraint::Clause(lits) => gadget_clause(w, lits, enable)?,
    })
}

fn check_layout(inst: &CspInstance, layout: &RegisterLayout) -> Result<(), WalkError> {
    if layout.n() != inst.n() || layout.d() != inst.d() {
        return Err(WalkError::Layout(format!(
            "layout is for n={}, d={}; instance has n={}, d={}",
            layout.n(),
            layout.d(),
            inst.n(),
            inst.d()
        )));
    }
    if layout.encoding != ValueEncoding::of(inst.kind()) {
        return Err(WalkError::Layout(
            "value encoding differs from problem kind".into(),
        ));
    }
    if layout.counter.width < bits_for(inst.num_constraints()) {
        return Err(WalkError::Layout(format!(
            "counter of {} bits cannot count {} constraints",
            layout.counter.width,
            inst.num_constraints()
        )));
    }
    Ok(())
}

fn counted(body: Vec<Gate>, counter: Register, target: Qubit, extra: &[Control]) -> Vec<Gate> {
    let undo: Vec<Gate> = body.iter().rev().map(Gate::inverse).collect();
    let mut gates = body;
    gates.push(Gate::mcx(with(extra, counter.equals(0)), target));
    gates.extend(undo);
    gates
}

/// `target ^= P(v)` where `P` is true exactly on solutions.
pub(crate) fn complete_predicate_gates(
    inst: &CspInstance,
    layout: &RegisterLayout,
    target: Qubit,
) -> Result<Vec<Gate>, WalkError> {
    check_layout(inst, layout)?;
    let wires = CheckWires::of(layout);
    let mut body = Vec::new();
    for c in inst.constraints() {
        body.extend(constraint_gadget(&wires, c, &[])?);
    }
    Ok(counted(body, layout.counter, target, &[]))
}

/// `target ^= [no constraint with milestone ≤ ℓ is violated]`, where `ℓ` is
/// the level register. Constraints with milestone below `floor` are left
/// out.
pub(crate) fn partial_predicate_gates(
    inst: &CspInstance,
    layout: &RegisterLayout,
    target: Qubit,
    floor: usize,
) -> Result<Vec<Gate>, WalkError> {
    check_layout(inst, layout)?;
    let checks: Vec<&Constraint> = inst
        .constraints()
        .iter()
        .filter(|c| !c.is_assigned_check())
        .collect();
    if checks
        .windows(2)
        .any(|w| w[0].milestone() > w[1].milestone())
    {
        return Err(WalkError::Unsorted);
    }
    let wires = CheckWires::of(layout);
    let ext = layout.level_extended();
    let flag = [Control::on(layout.level_flag)];
    // ext = 2^ν + ℓ - M keeps its top bit exactly when M ≤ ℓ
    let mut body = vec![Gate::X(layout.level_flag)];
    let mut shift = 0;
    for c in checks.into_iter().filter(|c| c.milestone() >= floor) {
        let m = c.milestone();
        if m != shift {
            body.push(Gate::add_const_mod(ext, shift as i64 - m as i64));
            shift = m;
        }
        body.extend(constraint_gadget(&wires, c, &flag)?);
    }
    Ok(counted(body, layout.counter, target, &[]))
}

/// Complete predicate into `layout.predicate`.
pub fn build_predicate_circuit(
    inst: &CspInstance,
    layout: &RegisterLayout,
) -> Result<Circuit, WalkError> {
    let mut c = Circuit::new(layout.num_qubits());
    c.extend(complete_predicate_gates(inst, layout, layout.predicate)?);
    Ok(c)
}

/// Partial predicate on `v_1..v_{ℓ+1}` into `layout.predicate`.
pub fn build_partial_predicate_circuit(
    inst: &CspInstance,
    layout: &RegisterLayout,
) -> Result<Circuit, WalkError> {
    let mut c = Circuit::new(layout.num_qubits());
    c.extend(partial_predicate_gates(inst, layout, layout.predicate, 0)?);
    Ok(c)
}

/// Extra wires for checking the constraints in `k` blocks side by side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelLayout {
    pub base: RegisterLayout,
    /// `copies[0]` is the base value registers.
    pub copies: Vec<Vec<Register>>,
    /// `counters[0]` is the base counter.
    pub counters: Vec<Register>,
    /// One bit per block, set when the block passes.
    pub results: Register,
    /// Constraint index range per block.
    pub blocks: Vec<std::ops::Range<usize>>,
    num_qubits: usize,
}

impl ParallelLayout {
    pub fn new(inst: &CspInstance, k: usize) -> Result<Self, WalkError> {
        let m = inst.num_constraints();
        if k == 0 || k > m {
            return Err(WalkError::Resource(format!(
                "cannot split {m} constraints into {k} blocks"
            )));
        }
        let base = RegisterLayout::new(inst);
        let mut next = base.num_qubits();
        let mut take = |w: usize| {
            let r = Register::new(next, w);
            next += w;
            r
        };
        let mut copies = vec![base.values.clone()];
        for _ in 1..k {
            copies.push(base.values.iter().map(|r| take(r.width)).collect());
        }
        let mut blocks = Vec::with_capacity(k);
        let mut start = 0;
        for c in 0..k {
            let len = m / k + usize::from(c < m % k);
            blocks.push(start..start + len);
            start += len;
        }
        let mut counters = vec![base.counter];
        for b in &blocks[1..] {
            counters.push(take(bits_for(b.len())));
        }
        let results = take(k);
        Ok(ParallelLayout {
            base,
            copies,
            counters,
            results,
            blocks,
            num_qubits: next,
        })
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }
}

/// Same function as [`build_predicate_circuit`], with the constraints
/// checked in `k` independent blocks on copies of the value registers.
pub fn build_parallel_predicate(
    inst: &CspInstance,
    layout: &ParallelLayout,
) -> Result<Circuit, WalkError> {
    let base = &layout.base;
    check_layout(inst, base)?;
    if layout.blocks.last().map(|b| b.end) != Some(inst.num_constraints()) {
        return Err(WalkError::Layout(
            "blocks do not cover the constraints".into(),
        ));
    }
    let mut body = Vec::new();
    // fan out by doubling: copy c is filled from copy c - 2^⌊log2 c⌋
    for c in 1..layout.k() {
        let src = c - (1 << c.ilog2());
        for (from, to) in layout.copies[src].iter().zip(&layout.copies[c]) {
            body.extend((0..from.width).map(|b| Gate::cx(from.qubit(b), to.qubit(b))));
        }
    }
    for (c, block) in layout.blocks.iter().enumerate() {
        let wires = CheckWires {
            values: &layout.copies[c],
            counter: layout.counters[c],
            encoding: base.encoding,
        };
        for con in &inst.constraints()[block.clone()] {
            body.extend(constraint_gadget(&wires, con, &[])?);
        }
    }
    for (c, counter) in layout.counters.iter().enumerate() {
        body.push(Gate::mcx(counter.equals(0), layout.results.qubit(c)));
    }
    let undo: Vec<Gate> = body.iter().rev().map(Gate::inverse).collect();
    let mut circ = Circuit::new(layout.num_qubits());
    circ.extend(body);
    circ.push(Gate::mcx(
        layout.results.equals((1 << layout.k()) - 1),
        base.predicate,
    ));
    circ.extend(undo);
    Ok(circ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{Assignment, TriBool};
    use crate::heuristics::VariableOrder;

    fn coloring(n: usize, d: usize, edges: &[(usize, usize)]) -> CspInstance {
        CspInstance::graph_coloring(n, d, edges)
            .unwrap()
            .reordered(VariableOrder::identity(n).perm())
    }

    fn all_values(n: usize, d: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..=d).map(move |v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Runs a permutation circuit on a value tuple and returns the output
    /// index.
    fn run(circ: &Circuit, basis: usize) -> usize {
        circ.map_basis(basis)
            .expect("predicate circuits are permutations")
    }

    #[test]
    fn triangle_examples() {
        let inst = coloring(3, 3, &[(0, 1), (1, 2), (0, 2)]);
        let lay = RegisterLayout::new(&inst);
        let circ = build_predicate_circuit(&inst, &lay).unwrap();
        let out = run(&circ, lay.embed(3, &[1, 2, 3]));
        assert_eq!(out, lay.embed(3, &[1, 2, 3]) | 1 << lay.predicate);
        let input = lay.embed(3, &[1, 1, 2]);
        assert_eq!(run(&circ, input), input);
    }

    #[test]
    fn complete_predicate_exhaustive() {
        for (n, d, edges) in [
            (3, 3, vec![(0, 1), (1, 2), (0, 2)]),
            (4, 2, vec![(0, 1), (2, 3)]),
            (4, 3, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]),
        ] {
            let inst = coloring(n, d, &edges);
            let lay = RegisterLayout::new(&inst);
            let circ = build_predicate_circuit(&inst, &lay).unwrap();
            for v in all_values(n, d) {
                let input = lay.embed(0, &v);
                let expect =
                    inst.eval_predicate(&Assignment::new(v.clone())).unwrap() == TriBool::True;
                let out = run(&circ, input);
                assert_eq!(out, input | usize::from(expect) << lay.predicate, "{v:?}");
            }
        }
    }

    #[test]
    fn partial_predicate_flag_examples() {
        // n = 3 so ν = 2; a single edge with milestone 1
        let inst = coloring(3, 2, &[(0, 1)]);
        let lay = RegisterLayout::new(&inst);
        let circ = build_partial_predicate_circuit(&inst, &lay).unwrap();
        // ℓ = 2: the edge is checked and violated
        let input = lay.embed(2, &[1, 1, 2]);
        assert_eq!(run(&circ, input), input);
        // ℓ = 0: the edge is skipped
        let input = lay.embed(0, &[1, 1, 0]);
        assert_eq!(run(&circ, input), input | 1 << lay.predicate);
    }

    #[test]
    fn partial_predicate_exhaustive() {
        for (n, d, edges) in [
            (3, 3, vec![(0, 1), (1, 2), (0, 2)]),
            (4, 2, vec![(1, 3), (0, 2)]),
            (4, 3, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]),
            (4, 1, vec![]),
        ] {
            let inst = coloring(n, d, &edges);
            let lay = RegisterLayout::new(&inst);
            let circ = build_partial_predicate_circuit(&inst, &lay).unwrap();
            for v in all_values(n, d) {
                let filled = v.iter().take_while(|&&x| x != 0).count();
                for ell in 0..filled {
                    let mut prefix = v[..=ell].to_vec();
                    prefix.resize(n, 0);
                    let a = Assignment::new(prefix.clone());
                    let expect = inst.eval_partial_predicate(&a, ell).unwrap();
                    let input = lay.embed(ell, &prefix);
                    assert_eq!(
                        run(&circ, input),
                        input | usize::from(expect) << lay.predicate,
                        "{prefix:?} at {ell}"
                    );
                }
            }
        }
    }

    #[test]
    fn unsorted_constraints_rejected() {
        let inst = CspInstance::graph_coloring(3, 2, &[(1, 2), (0, 1)]).unwrap();
        let lay = RegisterLayout::new(&inst);
        assert_eq!(
            build_partial_predicate_circuit(&inst, &lay).unwrap_err(),
            WalkError::Unsorted
        );
    }

    #[test]
    fn sat_gadgets() {
        let inst = CspInstance::sat(2, vec![vec![Literal::pos(0), Literal::neg(1)]]).unwrap();
        let lay = RegisterLayout::new(&inst);
        let wires = CheckWires::of(&lay);
        let mut neg = Circuit::new(lay.num_qubits());
        neg.push(gadget_bool_negate(&wires, 0).unwrap());
        let v = lay.values[0];
        assert_eq!(neg.map_basis(v.write(0, 0b11)), Some(v.write(0, 0b10)));
        assert_eq!(neg.map_basis(0), Some(0));
        // x1 false, x2 true: both literals false
        let mut clause = Circuit::new(lay.num_qubits());
        clause.extend(gadget_clause(&wires, &[Literal::pos(0), Literal::neg(1)], &[]).unwrap());
        let input = lay.embed(2, &[1, 2]);
        assert_eq!(clause.map_basis(input), Some(lay.counter.write(input, 1)));
        let input = lay.embed(2, &[2, 2]);
        assert_eq!(clause.map_basis(input), Some(input));

        let col = coloring(2, 2, &[(0, 1)]);
        let col_lay = RegisterLayout::new(&col);
        assert!(gadget_bool_negate(&CheckWires::of(&col_lay), 0).is_err());
    }

    #[test]
    fn edge_gadget_counts_equal_colors() {
        let inst = coloring(2, 3, &[(0, 1)]);
        let lay = RegisterLayout::new(&inst);
        let mut c = Circuit::new(lay.num_qubits());
        c.extend(gadget_edge_differs(&CheckWires::of(&lay), 0, 1, &[]));
        let input = lay.embed(2, &[2, 2]);
        assert_eq!(c.map_basis(input), Some(lay.counter.write(input, 1)));
        let input = lay.embed(2, &[2, 3]);
        assert_eq!(c.map_basis(input), Some(input));
    }

    #[test]
    fn sat_predicates_exhaustive() {
        let inst = CspInstance::sat(
            3,
            vec![
                vec![Literal::pos(0), Literal::neg(1)],
                vec![Literal::neg(0), Literal::pos(2)],
                vec![Literal::pos(1), Literal::neg(2), Literal::neg(0)],
            ],
        )
        .unwrap()
        .reordered(&[0, 1, 2]);
        let lay = RegisterLayout::new(&inst);
        let full = build_predicate_circuit(&inst, &lay).unwrap();
        let partial = build_partial_predicate_circuit(&inst, &lay).unwrap();
        for v in all_values(3, 2) {
            let a = Assignment::new(v.clone());
            let input = lay.embed(0, &v);
            let expect = inst.eval_predicate(&a).unwrap() == TriBool::True;
            assert_eq!(
                run(&full, input),
                input | usize::from(expect) << lay.predicate
            );
            let filled = v.iter().take_while(|&&x| x != 0).count();
            if filled == 3 {
                for ell in 0..3 {
                    let input = lay.embed(ell, &v);
                    let expect = inst.eval_partial_predicate(&a, ell).unwrap();
                    assert_eq!(
                        run(&partial, input),
                        input | usize::from(expect) << lay.predicate
                    );
                }
            }
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let tri = coloring(3, 2, &[(0, 1), (1, 2), (0, 2)]);
        let m = tri.num_constraints();
        let serial_lay = RegisterLayout::new(&tri);
        let serial = build_predicate_circuit(&tri, &serial_lay).unwrap();
        for k in [1, 2, 3, m] {
            let lay = ParallelLayout::new(&tri, k).unwrap();
            let par = build_parallel_predicate(&tri, &lay).unwrap();
            for v in all_values(3, 2) {
                let input = lay.base.embed(0, &v);
                assert_eq!(run(&par, input), run(&serial, input), "k={k} {v:?}");
            }
        }
        assert!(ParallelLayout::new(&tri, 0).is_err());
        assert!(ParallelLayout::new(&tri, m + 1).is_err());
    }

    #[test]
    fn parallel_matches_serial_on_sat() {
        let inst = CspInstance::sat(
            3,
            vec![
                vec![Literal::pos(0), Literal::neg(1)],
                vec![Literal::neg(2), Literal::pos(1)],
            ],
        )
        .unwrap();
        let serial_lay = RegisterLayout::new(&inst);
        let serial = build_predicate_circuit(&inst, &serial_lay).unwrap();
        let lay = ParallelLayout::new(&inst, 3).unwrap();
        let par = build_parallel_predicate(&inst, &lay).unwrap();
        for v in all_values(3, 2) {
            let input = lay.base.embed(0, &v);
            assert_eq!(run(&par, input), run(&serial, input));
        }
    }
}
