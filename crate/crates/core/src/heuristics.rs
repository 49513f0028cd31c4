//! Static variable-ordering heuristics.
//!
//! An order is computed once, classically, before any tree or circuit is
//! built. Neighborhoods come from `EdgeDiffers` constraints and, for SAT,
//! from variables sharing a clause. Ties are always broken by the lower
//! variable index so every heuristic is a pure function of the instance.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::csp::{Assignment, Constraint, CspInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heuristic {
    Naive,
    /// Maximum cardinality.
    MaxCardinality,
    /// Maximum degree.
    MaxDegree,
    /// Minimum width.
    MinWidth,
}

impl Heuristic {
    pub const ALL: [Heuristic; 4] = [
        Heuristic::Naive,
        Heuristic::MaxCardinality,
        Heuristic::MaxDegree,
        Heuristic::MinWidth,
    ];

    pub fn order(self, inst: &CspInstance) -> VariableOrder {
        match self {
            Heuristic::Naive => order_naive(inst),
            Heuristic::MaxCardinality => order_mc(inst),
            Heuristic::MaxDegree => order_md(inst),
            Heuristic::MinWidth => order_mw(inst),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::Naive => "naive",
            Heuristic::MaxCardinality => "mc",
            Heuristic::MaxDegree => "md",
            Heuristic::MinWidth => "mw",
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Heuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Heuristic::Naive),
            "mc" => Ok(Heuristic::MaxCardinality),
            "md" => Ok(Heuristic::MaxDegree),
            "mw" => Ok(Heuristic::MinWidth),
            other => Err(format!("unknown heuristic {other:?} (naive, mc, md, mw)")),
        }
    }
}

/// `perm[k]` is the original variable placed at position `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableOrder {
    perm: Vec<usize>,
    heuristic: Heuristic,
}

impl VariableOrder {
    /// Returns `None` unless `perm` is a bijection on `0..perm.len()`.
    pub fn new(perm: Vec<usize>, heuristic: Heuristic) -> Option<Self> {
        let mut seen = vec![false; perm.len()];
        for &v in &perm {
            if v >= perm.len() || std::mem::replace(&mut seen[v], true) {
                return None;
            }
        }
        Some(VariableOrder { perm, heuristic })
    }

    pub fn identity(n: usize) -> Self {
        VariableOrder {
            perm: (0..n).collect(),
            heuristic: Heuristic::Naive,
        }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn heuristic(&self) -> Heuristic {
        self.heuristic
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Instance with variables renumbered into this order.
    pub fn apply(&self, inst: &CspInstance) -> CspInstance {
        inst.reordered(&self.perm)
    }

    /// Maps an assignment over ordered positions back to original variables.
    pub fn restore(&self, ordered: &Assignment) -> Assignment {
        let mut values = vec![0; self.perm.len()];
        for (k, &v) in self.perm.iter().enumerate() {
            values[v] = ordered.values()[k];
        }
        Assignment::new(values)
    }
}

/// Adjacency: two variables are neighbors when some edge or clause mentions
/// both.
pub fn neighborhoods(inst: &CspInstance) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); inst.n()];
    for c in inst.constraints() {
        match c {
            Constraint::Assigned(_) => {}
            Constraint::EdgeDiffers(j, k) => {
                adj[*j].insert(*k);
                adj[*k].insert(*j);
            }
            Constraint::Clause(lits) => {
                for a in lits {
                    for b in lits {
                        if a.var != b.var {
                            adj[a.var].insert(b.var);
                        }
                    }
                }
            }
        }
    }
    adj
}

pub fn order_naive(inst: &CspInstance) -> VariableOrder {
    VariableOrder::identity(inst.n())
}

pub fn order_md(inst: &CspInstance) -> VariableOrder {
    let adj = neighborhoods(inst);
    let mut perm: Vec<usize> = (0..inst.n()).collect();
    perm.sort_by_key(|&v| std::cmp::Reverse(adj[v].len()));
    VariableOrder {
        perm,
        heuristic: Heuristic::MaxDegree,
    }
}

pub fn order_mc(inst: &CspInstance) -> VariableOrder {
    let adj = neighborhoods(inst);
    let n = inst.n();
    let mut placed = vec![false; n];
    let mut links = vec![0usize; n];
    let mut perm = Vec::with_capacity(n);
    for _ in 0..n {
        // max by (links to placed, degree), earliest index on ties
        let next = (0..n)
            .filter(|&v| !placed[v])
            .fold(None::<usize>, |best, v| match best {
                Some(b) if (links[b], adj[b].len()) >= (links[v], adj[v].len()) => Some(b),
                _ => Some(v),
            })
            .expect("unplaced vertex");
        placed[next] = true;
        perm.push(next);
        for &u in &adj[next] {
            links[u] += 1;
        }
    }
    VariableOrder {
        perm,
        heuristic: Heuristic::MaxCardinality,
    }
}

pub fn order_mw(inst: &CspInstance) -> VariableOrder {
    let adj = neighborhoods(inst);
    let n = inst.n();
    let mut degree: Vec<usize> = adj.iter().map(BTreeSet::len).collect();
    let mut removed = vec![false; n];
    let mut removal = Vec::with_capacity(n);
    for _ in 0..n {
        let next = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| degree[v])
            .expect("remaining vertex");
        removed[next] = true;
        removal.push(next);
        for &u in &adj[next] {
            if !removed[u] {
                degree[u] -= 1;
            }
        }
    }
    removal.reverse();
    VariableOrder {
        perm: removal,
        heuristic: Heuristic::MinWidth,
    }
}
