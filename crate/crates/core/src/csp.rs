//! CSP instances `⟨X, D, C⟩`, the three-valued predicate, and DIMACS I/O.
//!
//! Variables are indexed `0..n`. Values live in the extended domain
//! `{∗} ∪ {1..d}` with `∗` stored as [`UNASSIGNED`] (0). For SAT instances
//! value 1 means false and value 2 means true.

use std::fmt;

use thiserror::Error;

/// Stored value of an unassigned variable.
pub const UNASSIGNED: usize = 0;
/// Domain value encoding boolean false.
pub const SAT_FALSE: usize = 1;
/// Domain value encoding boolean true.
pub const SAT_TRUE: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CspError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("invalid assignment: {0}")]
    Assignment(String),
}

fn parse_err(line: usize, msg: impl Into<String>) -> CspError {
    CspError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    GraphColoring,
    Sat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal {
            var,
            negated: false,
        }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    /// Truth value under `value`, or `None` when the variable is unassigned.
    pub fn eval(&self, value: usize) -> Option<bool> {
        match value {
            UNASSIGNED => None,
            v => Some((v == SAT_TRUE) != self.negated),
        }
    }

    fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }
}

/// The three constraint shapes the predicate circuits know how to check.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Variable has a value. Generated automatically so that completeness is
    /// itself a constraint.
    Assigned(usize),
    /// The two variables take different values.
    EdgeDiffers(usize, usize),
    /// Disjunction of literals.
    Clause(Vec<Literal>),
}

/// Status of one constraint under a (partial) assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintStatus {
    Satisfied,
    Violated,
    Open,
}

impl Constraint {
    pub fn scope(&self) -> Vec<usize> {
        match self {
            Constraint::Assigned(i) => vec![*i],
            Constraint::EdgeDiffers(j, k) => vec![*j, *k],
            Constraint::Clause(lits) => lits.iter().map(|l| l.var).collect(),
        }
    }

    /// `M_i`: largest variable index in the scope (0-based, so this is the
    /// 1-based maximum minus one).
    pub fn milestone(&self) -> usize {
        self.scope().into_iter().max().unwrap_or(0)
    }

    pub fn is_assigned_check(&self) -> bool {
        matches!(self, Constraint::Assigned(_))
    }

    /// Evaluates against `values`. An `Assigned` check is never reported as
    /// violated; it only withholds `Satisfied` until the variable is set.
    pub fn status(&self, values: &[usize]) -> ConstraintStatus {
        match self {
            Constraint::Assigned(i) => {
                if values[*i] == UNASSIGNED {
                    ConstraintStatus::Open
                } else {
                    ConstraintStatus::Satisfied
                }
            }
            Constraint::EdgeDiffers(j, k) => {
                let (a, b) = (values[*j], values[*k]);
                if a == UNASSIGNED || b == UNASSIGNED {
                    ConstraintStatus::Open
                } else if a == b {
                    ConstraintStatus::Violated
                } else {
                    ConstraintStatus::Satisfied
                }
            }
            Constraint::Clause(lits) => {
                let mut open = false;
                for lit in lits {
                    match lit.eval(values[lit.var]) {
                        Some(true) => return ConstraintStatus::Satisfied,
                        Some(false) => {}
                        None => open = true,
                    }
                }
                if open {
                    ConstraintStatus::Open
                } else {
                    ConstraintStatus::Violated
                }
            }
        }
    }

    fn relabel(&self, pos: &[usize]) -> Constraint {
        match self {
            Constraint::Assigned(i) => Constraint::Assigned(pos[*i]),
            Constraint::EdgeDiffers(j, k) => Constraint::EdgeDiffers(pos[*j], pos[*k]),
            Constraint::Clause(lits) => Constraint::Clause(
                lits.iter()
                    .map(|l| Literal {
                        var: pos[l.var],
                        negated: l.negated,
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriBool {
    True,
    Indeterminate,
    False,
}

/// Values for all `n` variables; `0` is `∗`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment(vec![UNASSIGNED; n])
    }

    pub fn new(values: Vec<usize>) -> Self {
        Assignment(values)
    }

    /// Assigns `prefix` to the first variables and leaves the rest as `∗`.
    pub fn from_prefix(n: usize, prefix: &[usize]) -> Self {
        let mut values = vec![UNASSIGNED; n];
        values[..prefix.len()].copy_from_slice(prefix);
        Assignment(values)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of leading assigned variables.
    pub fn prefix_len(&self) -> usize {
        self.0.iter().take_while(|&&v| v != UNASSIGNED).count()
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|&v| v != UNASSIGNED)
    }

    pub fn into_values(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&v| {
                if v == UNASSIGNED {
                    "*".to_string()
                } else {
                    v.to_string()
                }
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspInstance {
    kind: ProblemKind,
    n: usize,
    d: usize,
    constraints: Vec<Constraint>,
}

impl CspInstance {
    pub fn new(
        kind: ProblemKind,
        n: usize,
        d: usize,
        constraints: Vec<Constraint>,
    ) -> Result<Self, CspError> {
        if n == 0 {
            return Err(CspError::Instance("need at least one variable".into()));
        }
        if d == 0 {
            return Err(CspError::Instance("domain must be nonempty".into()));
        }
        if kind == ProblemKind::Sat && d != 2 {
            return Err(CspError::Instance(format!("SAT needs d = 2, got {d}")));
        }
        for c in &constraints {
            let scope = c.scope();
            if scope.is_empty() {
                return Err(CspError::Instance("empty constraint scope".into()));
            }
            if let Some(&v) = scope.iter().find(|&&v| v >= n) {
                return Err(CspError::Instance(format!(
                    "variable {} out of range 1..={n}",
                    v + 1
                )));
            }
            match c {
                Constraint::EdgeDiffers(j, k) if j == k => {
                    return Err(CspError::Instance(format!("self-loop on vertex {}", j + 1)));
                }
                Constraint::Clause(lits) => {
                    if kind != ProblemKind::Sat {
                        return Err(CspError::Instance("clause in a non-SAT instance".into()));
                    }
                    let mut vars: Vec<usize> = lits.iter().map(|l| l.var).collect();
                    vars.sort_unstable();
                    vars.dedup();
                    if vars.len() != lits.len() {
                        return Err(CspError::Instance("clause repeats a variable".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(CspInstance {
            kind,
            n,
            d,
            constraints,
        })
    }

    /// Coloring of a graph on `n` vertices with `d` colors. Edges are 0-based
    /// pairs; one `Assigned` check per vertex is appended after the edges.
    pub fn graph_coloring(n: usize, d: usize, edges: &[(usize, usize)]) -> Result<Self, CspError> {
        let mut constraints: Vec<Constraint> = edges
            .iter()
            .map(|&(j, k)| Constraint::EdgeDiffers(j, k))
            .collect();
        constraints.extend((0..n).map(Constraint::Assigned));
        Self::new(ProblemKind::GraphColoring, n, d, constraints)
    }

    /// CNF formula over `n` boolean variables, plus per-variable `Assigned`
    /// checks.
    pub fn sat(n: usize, clauses: Vec<Vec<Literal>>) -> Result<Self, CspError> {
        let mut constraints: Vec<Constraint> =
            clauses.into_iter().map(Constraint::Clause).collect();
        constraints.extend((0..n).map(Constraint::Assigned));
        Self::new(ProblemKind::Sat, n, 2, constraints)
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// `m`, including the generated `Assigned` checks.
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn milestones(&self) -> Vec<usize> {
        self.constraints.iter().map(Constraint::milestone).collect()
    }

    pub fn is_milestone_sorted(&self) -> bool {
        self.constraints
            .windows(2)
            .all(|w| w[0].milestone() <= w[1].milestone())
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.constraints.iter().filter_map(|c| match c {
            Constraint::EdgeDiffers(j, k) => Some((*j, *k)),
            _ => None,
        })
    }

    pub fn clauses(&self) -> impl Iterator<Item = &[Literal]> + '_ {
        self.constraints.iter().filter_map(|c| match c {
            Constraint::Clause(l) => Some(l.as_slice()),
            _ => None,
        })
    }

    /// Relabels variables so that position `k` of `perm` becomes variable `k`,
    /// then stable-sorts the constraints by milestone.
    pub fn reordered(&self, perm: &[usize]) -> CspInstance {
        assert_eq!(perm.len(), self.n, "permutation length");
        let mut pos = vec![0; self.n];
        for (k, &v) in perm.iter().enumerate() {
            pos[v] = k;
        }
        let mut constraints: Vec<Constraint> =
            self.constraints.iter().map(|c| c.relabel(&pos)).collect();
        constraints.sort_by_key(Constraint::milestone);
        CspInstance {
            kind: self.kind,
            n: self.n,
            d: self.d,
            constraints,
        }
    }

    fn check_assignment(&self, a: &Assignment) -> Result<(), CspError> {
        if a.len() != self.n {
            return Err(CspError::Assignment(format!(
                "length {} for {} variables",
                a.len(),
                self.n
            )));
        }
        if let Some(&v) = a.values().iter().find(|&&v| v > self.d) {
            return Err(CspError::Assignment(format!(
                "value {v} exceeds d = {}",
                self.d
            )));
        }
        Ok(())
    }

    /// The predicate `P`: `True` for solutions, `False` once some constraint
    /// is already violated by the assigned values, `Indeterminate` otherwise.
    pub fn eval_predicate(&self, a: &Assignment) -> Result<TriBool, CspError> {
        self.check_assignment(a)?;
        Ok(self.predicate_unchecked(a.values()))
    }

    pub(crate) fn predicate_unchecked(&self, values: &[usize]) -> TriBool {
        let mut all_satisfied = true;
        for c in &self.constraints {
            match c.status(values) {
                ConstraintStatus::Violated => return TriBool::False,
                ConstraintStatus::Open => all_satisfied = false,
                ConstraintStatus::Satisfied => {}
            }
        }
        if all_satisfied && values.iter().all(|&v| v != UNASSIGNED) {
            TriBool::True
        } else {
            TriBool::Indeterminate
        }
    }

    /// Partial predicate on the prefix `x_0..=x_ell`: true when no
    /// non-`Assigned` constraint with milestone `≤ ell` is violated.
    pub fn eval_partial_predicate(&self, a: &Assignment, ell: usize) -> Result<bool, CspError> {
        self.check_assignment(a)?;
        if ell >= self.n {
            return Err(CspError::Assignment(format!(
                "level {ell} out of range 0..{}",
                self.n
            )));
        }
        if a.values()[..=ell].contains(&UNASSIGNED) {
            return Err(CspError::Assignment(format!(
                "first {} variables must be assigned",
                ell + 1
            )));
        }
        Ok(self.partial_unchecked(a.values(), ell))
    }

    pub(crate) fn partial_unchecked(&self, values: &[usize], ell: usize) -> bool {
        self.constraints
            .iter()
            .filter(|c| !c.is_assigned_check() && c.milestone() <= ell)
            .all(|c| c.status(values) != ConstraintStatus::Violated)
    }

    /// Canonical DIMACS text (`p edge` or `p cnf`). The generated `Assigned`
    /// checks are implicit in both dialects and not written.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        match self.kind {
            ProblemKind::GraphColoring => {
                let edges: Vec<_> = self.edges().collect();
                out.push_str(&format!("p edge {} {}\n", self.n, edges.len()));
                for (j, k) in edges {
                    out.push_str(&format!("e {} {}\n", j + 1, k + 1));
                }
            }
            ProblemKind::Sat => {
                let clauses: Vec<_> = self.clauses().collect();
                out.push_str(&format!("p cnf {} {}\n", self.n, clauses.len()));
                for clause in clauses {
                    for lit in clause {
                        out.push_str(&format!("{} ", lit.to_dimacs()));
                    }
                    out.push_str("0\n");
                }
            }
        }
        out
    }
}

fn parse_index(tok: &str, n: usize, line: usize) -> Result<usize, CspError> {
    let v: usize = tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad vertex index {tok:?}")))?;
    if v == 0 || v > n {
        return Err(parse_err(
            line,
            format!("vertex index {v} out of range 1..={n}"),
        ));
    }
    Ok(v - 1)
}

fn parse_count(tok: Option<&str>, line: usize, what: &str) -> Result<usize, CspError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(line, format!("bad {what} in problem line")))
}

/// Parses a DIMACS `.col` graph (`p edge N M`, `e u v`) as a `d`-coloring
/// problem.
pub fn parse_dimacs_graph(text: &str, d: usize) -> Result<CspInstance, CspError> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            None | Some("c") => {}
            Some("p") => {
                if n.is_some() {
                    return Err(parse_err(line, "duplicate problem line"));
                }
                match toks.next() {
                    Some("edge") | Some("col") => {}
                    other => {
                        return Err(parse_err(line, format!("expected 'p edge', got {other:?}")))
                    }
                }
                let nv = parse_count(toks.next(), line, "vertex count")?;
                parse_count(toks.next(), line, "edge count")?;
                if nv == 0 {
                    return Err(parse_err(line, "graph needs at least one vertex"));
                }
                n = Some(nv);
            }
            Some("e") => {
                let nv = n.ok_or_else(|| parse_err(line, "edge before problem line"))?;
                let u = parse_index(toks.next().unwrap_or(""), nv, line)?;
                let v = parse_index(toks.next().unwrap_or(""), nv, line)?;
                if u == v {
                    return Err(parse_err(line, format!("self-loop on vertex {}", u + 1)));
                }
                edges.push((u, v));
            }
            Some(tok) => return Err(parse_err(line, format!("unexpected token {tok:?}"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(0, "missing problem line"))?;
    CspInstance::graph_coloring(n, d, &edges).map_err(|e| parse_err(0, e.to_string()))
}

/// Parses DIMACS CNF. Repeated literals inside a clause are merged and
/// tautological clauses are dropped.
pub fn parse_dimacs_cnf(text: &str) -> Result<CspInstance, CspError> {
    let mut n: Option<usize> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut current_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
            continue;
        }
        if trimmed.starts_with('p') {
            if n.is_some() {
                return Err(parse_err(line, "duplicate problem line"));
            }
            let mut toks = trimmed.split_whitespace().skip(1);
            if toks.next() != Some("cnf") {
                return Err(parse_err(line, "expected 'p cnf'"));
            }
            let nv = parse_count(toks.next(), line, "variable count")?;
            parse_count(toks.next(), line, "clause count")?;
            if nv == 0 {
                return Err(parse_err(line, "formula needs at least one variable"));
            }
            n = Some(nv);
            continue;
        }
        let nv = n.ok_or_else(|| parse_err(line, "clause before problem line"))?;
        for tok in trimmed.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| parse_err(line, format!("bad literal {tok:?}")))?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(parse_err(line, "empty clause"));
                }
                if let Some(clause) = normalize_clause(std::mem::take(&mut current)) {
                    clauses.push(clause);
                }
                continue;
            }
            let var = lit.unsigned_abs() as usize;
            if var > nv {
                return Err(parse_err(
                    line,
                    format!("variable {var} out of range 1..={nv}"),
                ));
            }
            if current.is_empty() {
                current_line = line;
            }
            current.push(Literal {
                var: var - 1,
                negated: lit < 0,
            });
        }
    }
    if !current.is_empty() {
        return Err(parse_err(current_line, "clause not terminated by 0"));
    }
    let n = n.ok_or_else(|| parse_err(0, "missing problem line"))?;
    CspInstance::sat(n, clauses).map_err(|e| parse_err(0, e.to_string()))
}

fn normalize_clause(mut lits: Vec<Literal>) -> Option<Vec<Literal>> {
    let mut seen: Vec<Literal> = Vec::with_capacity(lits.len());
    for lit in lits.drain(..) {
        if seen
            .iter()
            .any(|l| l.var == lit.var && l.negated != lit.negated)
        {
            return None;
        }
        if !seen.contains(&lit) {
            seen.push(lit);
        }
    }
    Some(seen)
}

/// Dispatches on the problem line: `p cnf` is SAT, anything else is a graph
/// that needs `colors`.
pub fn parse_dimacs(text: &str, colors: Option<usize>) -> Result<CspInstance, CspError> {
    let header = text
        .lines()
        .enumerate()
        .find(|(_, l)| l.trim_start().starts_with('p'));
    match header {
        Some((_, l)) if l.split_whitespace().nth(1) == Some("cnf") => parse_dimacs_cnf(text),
        Some((idx, _)) => {
            let d = colors.ok_or_else(|| parse_err(idx + 1, "graph input needs a color count"))?;
            parse_dimacs_graph(text, d)
        }
        None => Err(parse_err(0, "missing problem line")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle(d: usize) -> CspInstance {
        CspInstance::graph_coloring(3, d, &[(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    // Checker written against the problem definitions rather than constraint
    // statuses.
    fn brute_is_solution(inst: &CspInstance, values: &[usize]) -> bool {
        if values.contains(&UNASSIGNED) {
            return false;
        }
        match inst.kind() {
            ProblemKind::GraphColoring => inst.edges().all(|(j, k)| values[j] != values[k]),
            ProblemKind::Sat => inst
                .clauses()
                .all(|cl| cl.iter().any(|l| (values[l.var] == SAT_TRUE) ^ l.negated)),
        }
    }

    fn all_assignments(n: usize, lo: usize, d: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (lo..=d).map(move |v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn all_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .collect();
        (0..1u32 << pairs.len())
            .map(|mask| {
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &p)| p)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn predicate_examples() {
        let t = triangle(3);
        let p = |v: Vec<usize>| t.eval_predicate(&Assignment::new(v)).unwrap();
        assert_eq!(p(vec![1, 2, 3]), TriBool::True);
        assert_eq!(p(vec![1, 1, 0]), TriBool::False);
        assert_eq!(p(vec![0, 0, 0]), TriBool::Indeterminate);
    }

    #[test]
    fn predicate_rejects_bad_length() {
        let t = triangle(3);
        assert!(matches!(
            t.eval_predicate(&Assignment::new(vec![1, 2])),
            Err(CspError::Assignment(_))
        ));
        assert!(t.eval_predicate(&Assignment::new(vec![1, 2, 4])).is_err());
    }

    #[test]
    fn partial_predicate_examples() {
        let t = triangle(3);
        assert!(t
            .eval_partial_predicate(&Assignment::from_prefix(3, &[1, 2]), 1)
            .unwrap());
        assert!(!t
            .eval_partial_predicate(&Assignment::from_prefix(3, &[1, 1]), 1)
            .unwrap());

        // (x1 ∨ ¬x2) ∧ (x2 ∨ x3) with x1 = 0, x2 = 1
        let cnf = CspInstance::sat(
            3,
            vec![
                vec![Literal::pos(0), Literal::neg(1)],
                vec![Literal::pos(1), Literal::pos(2)],
            ],
        )
        .unwrap();
        let a = Assignment::from_prefix(3, &[SAT_FALSE, SAT_TRUE]);
        assert!(!cnf.eval_partial_predicate(&a, 1).unwrap());
    }

    #[test]
    fn partial_predicate_needs_assigned_prefix() {
        let t = triangle(3);
        assert!(t
            .eval_partial_predicate(&Assignment::from_prefix(3, &[1]), 1)
            .is_err());
        assert!(t
            .eval_partial_predicate(&Assignment::new(vec![1, 2, 3]), 3)
            .is_err());
    }

    #[test]
    fn milestone_examples() {
        assert_eq!(Constraint::EdgeDiffers(0, 1).milestone(), 1);
        assert_eq!(Constraint::Assigned(0).milestone(), 0);
        let c = Constraint::Clause(vec![Literal::pos(1), Literal::neg(3)]);
        assert_eq!(c.milestone(), 3);
    }

    #[test]
    fn reorder_sorts_by_milestone() {
        let inst = CspInstance::graph_coloring(4, 2, &[(0, 3), (1, 2)]).unwrap();
        assert!(!inst.is_milestone_sorted());
        let r = inst.reordered(&[0, 1, 2, 3]);
        assert!(r.is_milestone_sorted());
        let ms = r.milestones();
        assert_eq!(ms, vec![0, 1, 2, 2, 3, 3]);
        // position 0 holds original vertex 3
        let r = inst.reordered(&[3, 2, 1, 0]);
        assert!(r.constraints().contains(&Constraint::EdgeDiffers(3, 0)));
        assert!(r.constraints().contains(&Constraint::EdgeDiffers(2, 1)));
    }

    #[test]
    fn parse_graph_examples() {
        let inst = parse_dimacs_graph("p edge 3 3\ne 1 2\ne 1 3\ne 2 3", 3).unwrap();
        assert_eq!(inst.edges().count(), 3);
        assert_eq!(inst.num_constraints(), 6);
        assert_eq!(inst, triangle(3));

        let err = parse_dimacs_graph("p edge 3 1\ne 0 5", 3).unwrap_err();
        assert_eq!(err, parse_err(2, "vertex index 0 out of range 1..=3"));
        assert!(matches!(
            parse_dimacs_graph("p edge 3 0\np edge 3 0", 2),
            Err(CspError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_dimacs_graph("p foo 3 0", 2),
            Err(CspError::Parse { line: 1, .. })
        ));
        assert!(parse_dimacs_graph("c only a comment\n", 2).is_err());
        assert!(parse_dimacs_graph("p edge 2 1\ne 2 2", 2).is_err());
    }

    #[test]
    fn parse_cnf_examples() {
        let inst = parse_dimacs_cnf("p cnf 2 1\n1 -2 0").unwrap();
        let clauses: Vec<_> = inst.clauses().collect();
        assert_eq!(clauses, vec![&[Literal::pos(0), Literal::neg(1)][..]]);
        assert_eq!(inst.d(), 2);

        assert!(matches!(
            parse_dimacs_cnf("p cnf 2 1\n1 3 0"),
            Err(CspError::Parse { line: 2, .. })
        ));
        assert!(parse_dimacs_cnf("p cnf 2 1\n1 -2").is_err());
        // tautology dropped, duplicate merged
        let inst = parse_dimacs_cnf("c x\np cnf 2 2\n1 -1 0\n2 2 0\n").unwrap();
        let clauses: Vec<_> = inst.clauses().collect();
        assert_eq!(clauses, vec![&[Literal::pos(1)][..]]);
    }

    #[test]
    fn parse_dispatch() {
        assert_eq!(
            parse_dimacs("p cnf 1 1\n1 0\n", None).unwrap().kind(),
            ProblemKind::Sat
        );
        assert!(parse_dimacs("p edge 2 1\ne 1 2\n", None).is_err());
        assert_eq!(
            parse_dimacs("p edge 2 1\ne 1 2\n", Some(2)).unwrap().kind(),
            ProblemKind::GraphColoring
        );
    }

    #[test]
    fn predicate_matches_brute_force_exhaustively() {
        for n in 1..=4 {
            for edges in all_graphs(n) {
                for d in 1..=3 {
                    let inst = CspInstance::graph_coloring(n, d, &edges).unwrap();
                    for v in all_assignments(n, 1, d) {
                        let got = inst.eval_predicate(&Assignment::new(v.clone())).unwrap();
                        assert_eq!(got == TriBool::True, brute_is_solution(&inst, &v));
                        // complete assignments are never indeterminate
                        assert_ne!(got, TriBool::Indeterminate);
                        let partial = inst
                            .eval_partial_predicate(&Assignment::new(v.clone()), n - 1)
                            .unwrap();
                        assert_eq!(partial, got != TriBool::False);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_false_is_monotone() {
        for n in 1..=4 {
            for edges in all_graphs(n) {
                let inst = CspInstance::graph_coloring(n, 2, &edges).unwrap();
                for v in all_assignments(n, 1, 2) {
                    for ell in 0..n {
                        let prefix = Assignment::from_prefix(n, &v[..=ell]);
                        if !inst.eval_partial_predicate(&prefix, ell).unwrap() {
                            assert_eq!(
                                inst.eval_predicate(&Assignment::new(v.clone())).unwrap(),
                                TriBool::False
                            );
                        }
                    }
                }
            }
        }
    }

    fn arb_cnf() -> impl Strategy<Value = (usize, Vec<Vec<i64>>)> {
        (1usize..=4).prop_flat_map(|n| {
            let lit = (1..=n as i64, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v });
            (
                Just(n),
                prop::collection::vec(prop::collection::vec(lit, 1..=3), 0..5),
            )
        })
    }

    fn cnf_text(n: usize, clauses: &[Vec<i64>]) -> String {
        let mut s = format!("p cnf {n} {}\n", clauses.len());
        for c in clauses {
            for l in c {
                s.push_str(&format!("{l} "));
            }
            s.push_str("0\n");
        }
        s
    }

    proptest! {
        #[test]
        fn cnf_round_trip((n, clauses) in arb_cnf()) {
            let inst = parse_dimacs_cnf(&cnf_text(n, &clauses)).unwrap();
            let again = parse_dimacs_cnf(&inst.to_dimacs()).unwrap();
            prop_assert_eq!(inst, again);
        }

        #[test]
        fn graph_round_trip(n in 2usize..8, raw in prop::collection::vec((0usize..8, 0usize..8), 0..12)) {
            let edges: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
            let inst = CspInstance::graph_coloring(n, 3, &edges).unwrap();
            let again = parse_dimacs_graph(&inst.to_dimacs(), 3).unwrap();
            prop_assert_eq!(inst, again);
        }

        #[test]
        fn sat_predicate_matches_brute_force((n, clauses) in arb_cnf()) {
            let inst = parse_dimacs_cnf(&cnf_text(n, &clauses)).unwrap();
            for v in all_assignments(n, 1, 2) {
                let got = inst.eval_predicate(&Assignment::new(v.clone())).unwrap();
                prop_assert_eq!(got == TriBool::True, brute_is_solution(&inst, &v));
            }
        }
    }
}
