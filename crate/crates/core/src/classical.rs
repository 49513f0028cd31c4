//! Classical backtracking, explicit backtracking trees, and the emulated
//! detection benchmark.
//!
//! Everything here works on an instance that has already been renumbered into
//! a variable order, so "the next variable" is always position `depth`.

use std::collections::HashMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::csp::{Assignment, CspInstance, TriBool};
use crate::heuristics::{Heuristic, VariableOrder};

pub const DEFAULT_TREE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassicalError {
    #[error("backtracking tree exceeds {cap} vertices")]
    TreeCap { cap: usize },
    #[error("{0}")]
    Input(String),
}

/// Depth-first backtracking in value order. Returns the first solution, in
/// original variable numbering.
pub fn backtrack_solve(inst: &CspInstance, order: &VariableOrder) -> Option<Assignment> {
    let ordered = order.apply(inst);
    let mut values = vec![0; inst.n()];
    if dfs_solve(&ordered, &mut values, 0) {
        Some(order.restore(&Assignment::new(values)))
    } else {
        None
    }
}

fn dfs_solve(inst: &CspInstance, values: &mut [usize], depth: usize) -> bool {
    match inst.predicate_unchecked(values) {
        TriBool::True => return true,
        TriBool::False => return false,
        TriBool::Indeterminate => {}
    }
    if depth == inst.n() {
        return false;
    }
    for w in 1..=inst.d() {
        values[depth] = w;
        if dfs_solve(inst, values, depth + 1) {
            return true;
        }
    }
    values[depth] = 0;
    false
}

/// True when some extension of `prefix` (ordered numbering) is a solution.
pub fn subtree_has_solution(ordered: &CspInstance, prefix: &[usize]) -> bool {
    let mut values = Assignment::from_prefix(ordered.n(), prefix).into_values();
    dfs_solve(ordered, &mut values, prefix.len())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeVertex {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Values of the first `depth` ordered variables.
    pub prefix: Vec<usize>,
    pub marked: bool,
    /// Child ids in increasing value order.
    pub children: Vec<usize>,
}

impl TreeVertex {
    /// Value given to the last assigned variable, if any.
    pub fn last_value(&self) -> Option<usize> {
        self.prefix.last().copied()
    }
}

/// Rooted tree of the partial assignments visited by backtracking whose
/// predicate is not false. Vertex 0 is the root; ids follow DFS pre-order.
#[derive(Debug, Clone)]
pub struct BacktrackTree {
    instance: CspInstance,
    order: VariableOrder,
    vertices: Vec<TreeVertex>,
    by_prefix: HashMap<Vec<usize>, usize>,
}

impl BacktrackTree {
    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: usize) -> &TreeVertex {
        &self.vertices[id]
    }

    pub fn vertices(&self) -> &[TreeVertex] {
        &self.vertices
    }

    /// The instance in ordered numbering.
    pub fn instance(&self) -> &CspInstance {
        &self.instance
    }

    pub fn order(&self) -> &VariableOrder {
        &self.order
    }

    pub fn find_prefix(&self, prefix: &[usize]) -> Option<usize> {
        self.by_prefix.get(prefix).copied()
    }

    /// Full assignment (ordered numbering) for a vertex.
    pub fn assignment(&self, id: usize) -> Assignment {
        Assignment::from_prefix(self.instance.n(), &self.vertices[id].prefix)
    }

    /// `a` followed by the assigned values, e.g. `a12`; the root is `a`.
    pub fn label(&self, id: usize) -> String {
        let mut s = String::from("a");
        for v in &self.vertices[id].prefix {
            s.push_str(&v.to_string());
        }
        s
    }

    /// Resolves a label produced by [`label`](Self::label). `a0` also names
    /// the root.
    pub fn find_label(&self, label: &str) -> Option<usize> {
        let digits = label.strip_prefix('a')?;
        if digits == "0" {
            return Some(0);
        }
        let prefix: Option<Vec<usize>> = digits
            .chars()
            .map(|c| c.to_digit(10).map(|v| v as usize))
            .collect();
        self.find_prefix(&prefix?)
    }

    /// Vertex ids of the subtree rooted at `id`, in DFS pre-order.
    pub fn subtree(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.vertices[v].children.iter().rev());
        }
        out
    }

    /// Marks, per vertex, whether its subtree contains a solution.
    pub fn solvable_flags(&self) -> Vec<bool> {
        let mut flags: Vec<bool> = self.vertices.iter().map(|v| v.marked).collect();
        // children always have larger ids than their parent
        for id in (0..self.vertices.len()).rev() {
            if flags[id] {
                if let Some(p) = self.vertices[id].parent {
                    flags[p] = true;
                }
            }
        }
        flags
    }
}

/// Builds the backtracking tree of `inst` under `order`. With `fix_first`,
/// the root keeps only the child giving the first ordered variable that
/// value.
pub fn build_tree(
    inst: &CspInstance,
    order: &VariableOrder,
    fix_first: Option<usize>,
    cap: usize,
) -> Result<BacktrackTree, ClassicalError> {
    if order.len() != inst.n() {
        return Err(ClassicalError::Input(format!(
            "order has {} variables, instance has {}",
            order.len(),
            inst.n()
        )));
    }
    if let Some(w) = fix_first {
        if w == 0 || w > inst.d() {
            return Err(ClassicalError::Input(format!(
                "fixed first value {w} outside 1..={}",
                inst.d()
            )));
        }
    }
    let ordered = order.apply(inst);
    let n = ordered.n();
    let mut vertices: Vec<TreeVertex> = Vec::new();
    let mut values = vec![0usize; n];
    // (parent id, depth of the new vertex, value); root pushed separately
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();

    let root_pred = ordered.predicate_unchecked(&values);
    vertices.push(TreeVertex {
        id: 0,
        parent: None,
        depth: 0,
        prefix: vec![],
        marked: root_pred == TriBool::True,
        children: vec![],
    });
    if root_pred == TriBool::Indeterminate {
        match fix_first {
            Some(w) => stack.push((0, 1, w)),
            None => stack.extend((1..=ordered.d()).rev().map(|w| (0, 1, w))),
        }
    }
    while let Some((parent, depth, w)) = stack.pop() {
        let prefix_len = depth - 1;
        values[..prefix_len].copy_from_slice(&vertices[parent].prefix);
        values[prefix_len] = w;
        values[depth..].iter_mut().for_each(|v| *v = 0);
        let pred = ordered.predicate_unchecked(&values);
        if pred == TriBool::False {
            continue;
        }
        if vertices.len() >= cap {
            return Err(ClassicalError::TreeCap { cap });
        }
        let id = vertices.len();
        vertices.push(TreeVertex {
            id,
            parent: Some(parent),
            depth,
            prefix: values[..depth].to_vec(),
            marked: pred == TriBool::True,
            children: vec![],
        });
        vertices[parent].children.push(id);
        if pred == TriBool::Indeterminate && depth < n {
            stack.extend((1..=ordered.d()).rev().map(|v| (id, depth + 1, v)));
        }
    }
    let by_prefix = vertices.iter().map(|v| (v.prefix.clone(), v.id)).collect();
    Ok(BacktrackTree {
        instance: ordered,
        order: order.clone(),
        vertices,
        by_prefix,
    })
}

/// Stand-in for quantum detection: does the subtree under `vertex` contain a
/// marked vertex?
pub fn emulated_detect(tree: &BacktrackTree, vertex: usize) -> bool {
    tree.subtree(vertex)
        .into_iter()
        .any(|v| tree.vertex(v).marked)
}

/// The view of a backtracking tree needed by the hybrid descent.
pub trait SearchTree {
    type Node: Clone;
    fn root(&self) -> Self::Node;
    fn children(&self, node: &Self::Node) -> Vec<Self::Node>;
    fn is_marked(&self, node: &Self::Node) -> bool;
}

impl SearchTree for BacktrackTree {
    type Node = usize;

    fn root(&self) -> usize {
        0
    }

    fn children(&self, node: &usize) -> Vec<usize> {
        self.vertices[*node].children.clone()
    }

    fn is_marked(&self, node: &usize) -> bool {
        self.vertices[*node].marked
    }
}

/// Backtracking tree explored lazily; nodes are value prefixes.
pub struct ImplicitTree<'a> {
    ordered: &'a CspInstance,
}

impl<'a> ImplicitTree<'a> {
    pub fn new(ordered: &'a CspInstance) -> Self {
        ImplicitTree { ordered }
    }

    fn predicate(&self, prefix: &[usize]) -> TriBool {
        self.ordered
            .predicate_unchecked(Assignment::from_prefix(self.ordered.n(), prefix).values())
    }
}

impl SearchTree for ImplicitTree<'_> {
    type Node = Vec<usize>;

    fn root(&self) -> Vec<usize> {
        vec![]
    }

    fn children(&self, node: &Vec<usize>) -> Vec<Vec<usize>> {
        if node.len() >= self.ordered.n() || self.predicate(node) != TriBool::Indeterminate {
            return vec![];
        }
        (1..=self.ordered.d())
            .map(|w| {
                let mut c = node.clone();
                c.push(w);
                c
            })
            .filter(|c| self.predicate(c) != TriBool::False)
            .collect()
    }

    fn is_marked(&self, node: &Vec<usize>) -> bool {
        self.predicate(node) == TriBool::True
    }
}

#[derive(Debug, Clone)]
pub struct Descent<N> {
    pub solution: Option<N>,
    /// Every detection call including the one on the root.
    pub calls: usize,
    pub transcript: Vec<(N, bool)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DescentError<N, E> {
    /// Detection accepted `node`, which is unmarked, but rejected all of its
    /// children.
    Inconclusive {
        node: N,
    },
    Detect(E),
}

/// Hybrid finding: detect on the root, then repeatedly scan children in
/// value order and re-root at the first one that accepts, until a marked
/// vertex accepts.
pub fn hybrid_find<T, E, F>(
    tree: &T,
    mut detect: F,
) -> Result<Descent<T::Node>, DescentError<T::Node, E>>
where
    T: SearchTree,
    T::Node: std::fmt::Debug,
    F: FnMut(&T::Node) -> Result<bool, E>,
{
    let mut transcript = Vec::new();
    let mut call = |node: &T::Node, transcript: &mut Vec<(T::Node, bool)>| {
        let verdict = detect(node).map_err(DescentError::Detect)?;
        transcript.push((node.clone(), verdict));
        Ok::<bool, DescentError<T::Node, E>>(verdict)
    };
    let root = tree.root();
    if !call(&root, &mut transcript)? {
        return Ok(Descent {
            solution: None,
            calls: transcript.len(),
            transcript,
        });
    }
    let mut current = root;
    loop {
        if tree.is_marked(&current) {
            return Ok(Descent {
                solution: Some(current),
                calls: transcript.len(),
                transcript,
            });
        }
        let mut next = None;
        for child in tree.children(&current) {
            if call(&child, &mut transcript)? {
                next = Some(child);
                break;
            }
        }
        match next {
            Some(child) => current = child,
            None => return Err(DescentError::Inconclusive { node: current }),
        }
    }
}

/// One row of the heuristic benchmark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub heuristic: String,
    pub edges: usize,
    pub mean_calls: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
}

impl BenchResult {
    pub fn mean(&self, heuristic: Heuristic, edges: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.heuristic == heuristic.name() && r.edges == edges)
            .map(|r| r.mean_calls)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf8 csv")
    }
}

/// Uniform simple graph on `n` vertices with exactly `edges` edges.
pub fn random_graph(n: usize, edges: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .collect();
    let mut picked: Vec<usize> = index::sample(rng, pairs.len(), edges).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pairs[i]).collect()
}

/// Generator for sample `sample` at edge count `edges`; independent of how
/// samples are scheduled.
pub fn sample_rng(seed: u64, edges: usize, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((edges as u64) << 32) | sample as u64);
    rng
}

/// Mean number of emulated detection calls made by the hybrid descent, per
/// heuristic and edge count, over `samples` random graphs.
pub fn bench_heuristics(
    n: usize,
    d: usize,
    edge_counts: &[usize],
    samples: usize,
    seed: u64,
) -> Result<BenchResult, ClassicalError> {
    if n == 0 || d == 0 {
        return Err(ClassicalError::Input("need n ≥ 1 and d ≥ 1".into()));
    }
    if samples == 0 {
        return Err(ClassicalError::Input("need at least one sample".into()));
    }
    let max_edges = n * (n - 1) / 2;
    if let Some(&e) = edge_counts.iter().find(|&&e| e > max_edges) {
        return Err(ClassicalError::Input(format!(
            "{e} edges exceed the {max_edges} possible on {n} vertices"
        )));
    }
    let mut rows = Vec::new();
    for &edges in edge_counts {
        let per_sample: Vec<[usize; 4]> = (0..samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = sample_rng(seed, edges, s);
                let graph = random_graph(n, edges, &mut rng);
                let inst = CspInstance::graph_coloring(n, d, &graph).expect("valid random graph");
                Heuristic::ALL.map(|h| emulated_calls(&h.order(&inst).apply(&inst)))
            })
            .collect();
        for (hi, h) in Heuristic::ALL.iter().enumerate() {
            let total: usize = per_sample.iter().map(|c| c[hi]).sum();
            rows.push(BenchRow {
                heuristic: h.name().to_string(),
                edges,
                mean_calls: total as f64 / samples as f64,
                samples,
                seed,
            });
        }
    }
    Ok(BenchResult { rows })
}

/// Detection calls made by the hybrid descent when detection is replaced by
/// classical backtracking.
pub fn emulated_calls(ordered: &CspInstance) -> usize {
    let tree = ImplicitTree::new(ordered);
    let descent = hybrid_find(&tree, |prefix: &Vec<usize>| {
        Ok::<_, std::convert::Infallible>(subtree_has_solution(ordered, prefix))
    })
    .expect("exact detection never contradicts itself");
    descent.calls
}
