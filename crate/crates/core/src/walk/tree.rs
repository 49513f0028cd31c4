use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::classical::BacktrackTree;
use crate::simulator::C64;

/// `(|∗⟩ + √i Σ_{w∈S} |w⟩) / √(1 + i|S|)` over the basis `∗, 1, …, d`.
pub fn diffusion_state(i: usize, s: &[usize], d: usize) -> DVector<f64> {
    assert!(i >= 1, "weight index starts at 1");
    let mut v = DVector::zeros(d + 1);
    v[0] = 1.0;
    let w = (i as f64).sqrt();
    for &x in s {
        assert!((1..=d).contains(&x), "child value {x} outside 1..={d}");
        v[x] = w;
    }
    let norm = (1.0 + (i * s.len()) as f64).sqrt();
    v / norm
}

/// `R_A` and `R_B` on the span of one subtree's vertices.
#[derive(Debug, Clone)]
pub struct TreeOperators {
    basis: Vec<usize>,
    index: HashMap<usize, usize>,
    r_a: DMatrix<f64>,
    r_b: DMatrix<f64>,
}

pub fn build_tree_operators(tree: &BacktrackTree) -> TreeOperators {
    TreeOperators::for_subtree(tree, tree.root())
}

impl TreeOperators {
    /// Operators for the subtree rooted at `root`. The root weight is the
    /// number of variables of the whole instance.
    pub fn for_subtree(tree: &BacktrackTree, root: usize) -> Self {
        let basis = tree.subtree(root);
        let index: HashMap<usize, usize> = basis.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let dim = basis.len();
        let n = tree.instance().n();
        let root_depth = tree.vertex(root).depth;
        let mut r_a = DMatrix::identity(dim, dim);
        let mut r_b = DMatrix::identity(dim, dim);
        for &x in &basis {
            let vx = tree.vertex(x);
            if vx.marked {
                continue;
            }
            // the root is always even, so R_B never touches it
            let even = (vx.depth - root_depth).is_multiple_of(2);
            let weight = if x == root { n as f64 } else { 1.0 };
            let mut block = vec![(index[&x], 1.0)];
            block.extend(vx.children.iter().map(|c| (index[c], weight.sqrt())));
            let norm2 = 1.0 + weight * vx.children.len() as f64;
            let target = if even { &mut r_a } else { &mut r_b };
            for &(a, pa) in &block {
                for &(b, pb) in &block {
                    target[(a, b)] -= 2.0 * pa * pb / norm2;
                }
            }
        }
        TreeOperators {
            basis,
            index,
            r_a,
            r_b,
        }
    }

    /// Vertex ids in matrix order; the subtree root comes first.
    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, vertex: usize) -> Option<usize> {
        self.index.get(&vertex).copied()
    }

    pub fn r_a(&self) -> &DMatrix<f64> {
        &self.r_a
    }

    pub fn r_b(&self) -> &DMatrix<f64> {
        &self.r_b
    }

    /// `R_B R_A` as a complex matrix.
    pub fn walk_step(&self) -> DMatrix<C64> {
        (&self.r_b * &self.r_a).map(|x| C64::new(x, 0.0))
    }

    /// `|r⟩` for the subtree root.
    pub fn root_state(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = C64::new(1.0, 0.0);
        v
    }
}
