//! Detection by phase estimation of the walk step, the detect-and-descend
//! finder built on it, and acceptance-probability sweeps.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::classical::{
    build_tree, hybrid_find, BacktrackTree, ClassicalError, DescentError, DEFAULT_TREE_CAP,
};
use crate::csp::{CspInstance, TriBool};
use crate::heuristics::VariableOrder;
use crate::simulator::{precision_bits, SimError, Spectrum, C64};
use crate::walk::{circuit_operators, TreeOperators, WalkError, WalkOptions};

/// Acceptance fraction at or above which detection reports a solution.
pub const ACCEPT_THRESHOLD: f64 = 0.375;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriverError {
    #[error(transparent)]
    Tree(#[from] ClassicalError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("detection inconclusive at {label}: it accepted but none of its children did")]
    Inconclusive { label: String },
    #[error("no tree vertex has label {0:?}")]
    UnknownLabel(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Exact,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Tree,
    Circuit,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "sample" => Ok(Mode::Sample),
            _ => Err(format!("unknown mode {s:?} (exact, sample)")),
        }
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tree" => Ok(Backend::Tree),
            "circuit" => Ok(Backend::Circuit),
            _ => Err(format!("unknown backend {s:?} (tree, circuit)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SolutionExists,
    NoSolution,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::SolutionExists => "solution exists",
            Verdict::NoSolution => "no solution",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub beta: f64,
    pub gamma: f64,
    pub delta_fail: f64,
    /// Replaces the computed repetition count.
    pub k_override: Option<usize>,
    /// Fixed precision; otherwise derived from the subtree size plus
    /// `bits_margin`.
    pub bits: Option<u32>,
    pub bits_margin: u32,
    pub mode: Mode,
    pub backend: Backend,
    pub seed: u64,
    pub walk: WalkOptions,
    pub tree_cap: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            beta: 1.0,
            gamma: 4.0,
            delta_fail: 0.01,
            k_override: None,
            bits: None,
            bits_margin: 2,
            mode: Mode::Exact,
            backend: Backend::Tree,
            seed: 0,
            walk: WalkOptions::default(),
            tree_cap: DEFAULT_TREE_CAP,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        let bad = |m: &str| Err(DriverError::Config(m.into()));
        if self.beta.is_nan() || self.beta <= 0.0 {
            return bad("beta must be positive");
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return bad("gamma must be positive");
        }
        if !(self.delta_fail > 0.0 && self.delta_fail < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if self.k_override == Some(0) {
            return bad("K must be at least 1");
        }
        if self.bits == Some(0) {
            return bad("precision must be at least 1 bit");
        }
        Ok(())
    }

    /// `K = ⌈γ ln(1/δ)⌉`, at least 1.
    pub fn repetitions(&self) -> usize {
        self.k_override
            .unwrap_or_else(|| (self.gamma * (1.0 / self.delta_fail).ln()).ceil() as usize)
            .max(1)
    }

    pub fn bits_for(&self, tree_size: usize, n: usize) -> u32 {
        self.bits
            .unwrap_or_else(|| precision_bits(tree_size, n, self.beta) + self.bits_margin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    pub label: String,
    pub subtree_size: usize,
    pub bits: u32,
    pub k: usize,
    pub p_accept: f64,
    /// Accepting runs out of `k`, in sample mode.
    pub accept_count: Option<usize>,
    pub verdict: Verdict,
}

fn walk_operator(
    tree: &BacktrackTree,
    vertex: usize,
    backend: Backend,
    walk: &WalkOptions,
) -> Result<(DMatrix<C64>, DVector<C64>), DriverError> {
    Ok(match backend {
        Backend::Tree => {
            let ops = TreeOperators::for_subtree(tree, vertex);
            (ops.walk_step(), ops.root_state())
        }
        Backend::Circuit => {
            let ops = circuit_operators(tree, vertex, walk)?;
            (ops.walk_step(), ops.root_state())
        }
    })
}

/// Runs detection on the subtree rooted at `vertex`.
pub fn detect(
    tree: &BacktrackTree,
    vertex: usize,
    cfg: &DetectionConfig,
) -> Result<DetectionResult, DriverError> {
    cfg.validate()?;
    let size = tree.subtree(vertex).len();
    let bits = cfg.bits_for(size, tree.instance().n());
    let k = cfg.repetitions();
    let (u, psi) = walk_operator(tree, vertex, cfg.backend, &cfg.walk)?;
    let p_accept = Spectrum::of(&u, &psi)?.acceptance(bits);
    let (accept_count, verdict) = match cfg.mode {
        Mode::Exact => (None, p_accept >= ACCEPT_THRESHOLD),
        Mode::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(vertex as u64);
            let count = (0..k).filter(|_| rng.random::<f64>() < p_accept).count();
            (Some(count), 8 * count >= 3 * k)
        }
    };
    Ok(DetectionResult {
        label: tree.label(vertex),
        subtree_size: size,
        bits,
        k,
        p_accept,
        accept_count,
        verdict: if verdict {
            Verdict::SolutionExists
        } else {
            Verdict::NoSolution
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindStatus {
    Solution,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptEntry {
    pub label: String,
    pub verdict: Verdict,
    pub p_accept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindResult {
    pub status: FindStatus,
    /// Values in original variable numbering.
    pub assignment: Option<Vec<usize>>,
    pub detection_calls: usize,
    pub transcript: Vec<TranscriptEntry>,
}

impl FindResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Detects on the whole tree, then descends through the first accepting
/// child at each level until a solution vertex accepts.
pub fn find(
    inst: &CspInstance,
    order: &VariableOrder,
    cfg: &DetectionConfig,
) -> Result<FindResult, DriverError> {
    cfg.validate()?;
    let tree = build_tree(inst, order, None, cfg.tree_cap)?;
    find_in_tree(&tree, cfg)
}

pub fn find_in_tree(
    tree: &BacktrackTree,
    cfg: &DetectionConfig,
) -> Result<FindResult, DriverError> {
    let mut transcript = Vec::new();
    let descent = hybrid_find(tree, |&v| {
        let r = detect(tree, v, cfg)?;
        transcript.push(TranscriptEntry {
            label: r.label,
            verdict: r.verdict,
            p_accept: r.p_accept,
        });
        Ok::<bool, DriverError>(r.verdict == Verdict::SolutionExists)
    });
    let descent = match descent {
        Ok(d) => d,
        Err(DescentError::Detect(e)) => return Err(e),
        Err(DescentError::Inconclusive { node }) => {
            return Err(DriverError::Inconclusive {
                label: tree.label(node),
            })
        }
    };
    let assignment = descent.solution.map(|v| {
        let ordered = tree.assignment(v);
        debug_assert_eq!(tree.instance().eval_predicate(&ordered), Ok(TriBool::True));
        tree.order().restore(&ordered).into_values()
    });
    Ok(FindResult {
        status: if assignment.is_some() {
            FindStatus::Solution
        } else {
            FindStatus::None
        },
        assignment,
        detection_calls: descent.calls,
        transcript,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub precision_bits: u32,
    pub p_accept: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    pub fn get(&self, label: &str, bits: u32) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.label == label && r.precision_bits == bits)
            .map(|r| r.p_accept)
    }
}

/// Exact acceptance probability for each labelled subtree root at each
/// precision in `bits`.
pub fn acceptance_sweep(
    tree: &BacktrackTree,
    labels: &[String],
    bits: RangeInclusive<u32>,
    backend: Backend,
    walk: &WalkOptions,
) -> Result<SweepTable, DriverError> {
    if *bits.start() == 0 {
        return Err(DriverError::Config(
            "precision must be at least 1 bit".into(),
        ));
    }
    let mut rows = Vec::new();
    for label in labels {
        let v = tree
            .find_label(label)
            .ok_or_else(|| DriverError::UnknownLabel(label.clone()))?;
        let (u, psi) = walk_operator(tree, v, backend, walk)?;
        let spectrum = Spectrum::of(&u, &psi)?;
        for b in bits.clone() {
            rows.push(SweepRow {
                label: label.clone(),
                precision_bits: b,
                p_accept: spectrum.acceptance(b),
            });
        }
    }
    Ok(SweepTable { rows })
}
