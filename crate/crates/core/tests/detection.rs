use nalgebra::DMatrix;
use qbacktrack::classical::{build_tree, emulated_detect, DEFAULT_TREE_CAP};
use qbacktrack::driver::{acceptance_sweep, detect, find, FindStatus};
use qbacktrack::simulator::C64;
use qbacktrack::walk::{circuit_operators, circuit_phase_accept};
use qbacktrack::{
    Assignment, Backend, BacktrackTree, CspInstance, DetectionConfig, Heuristic, Literal, Mode,
    TreeOperators, TriBool, VariableOrder, Verdict, WalkOptions,
};
use rayon::prelude::*;

fn tree(inst: &CspInstance) -> BacktrackTree {
    build_tree(
        inst,
        &VariableOrder::identity(inst.n()),
        None,
        DEFAULT_TREE_CAP,
    )
    .unwrap()
}

fn all_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .collect();
    (0..1usize << pairs.len())
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

fn coloring_corpus(max_n: usize, colors: &[usize]) -> Vec<CspInstance> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for g in all_graphs(n) {
            for &d in colors {
                out.push(CspInstance::graph_coloring(n, d, &g).unwrap());
            }
        }
    }
    out
}

/// Every CNF on three variables drawn from a fixed clause pool.
fn sat_corpus() -> Vec<CspInstance> {
    let pool = [
        vec![Literal::pos(0), Literal::neg(1)],
        vec![Literal::neg(0), Literal::pos(2)],
        vec![Literal::pos(1), Literal::pos(2)],
        vec![Literal::neg(0), Literal::neg(1), Literal::neg(2)],
        vec![Literal::neg(2)],
        vec![Literal::pos(0)],
    ];
    (1..1usize << pool.len())
        .map(|mask| {
            let clauses = pool
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, c)| c.clone())
                .collect();
            CspInstance::sat(3, clauses).unwrap()
        })
        .collect()
}

fn max_diff(c: &DMatrix<C64>, t: &DMatrix<f64>) -> f64 {
    c.iter()
        .zip(t.iter())
        .fold(0.0, |a, (x, y)| a.max((x - C64::new(*y, 0.0)).norm()))
}

#[test]
fn backends_agree_on_corpus() {
    let mut corpus = coloring_corpus(4, &[1, 2]);
    corpus.extend(sat_corpus());
    let opts = WalkOptions::default();
    corpus.par_iter().for_each(|inst| {
        let t = tree(inst);
        for root in 0..t.len() {
            let ops = TreeOperators::for_subtree(&t, root);
            let circ = circuit_operators(&t, root, &opts).unwrap();
            let d = max_diff(&circ.r_a, ops.r_a()).max(max_diff(&circ.r_b, ops.r_b()));
            assert!(d < 1e-8, "{} at {}: {d:e}", inst.to_dimacs(), t.label(root));
        }
    });
}

#[test]
fn marked_vertex_blocks_are_identity() {
    for inst in coloring_corpus(3, &[2, 3]) {
        let t = tree(&inst);
        let ops = TreeOperators::for_subtree(&t, t.root());
        for v in t.vertices().iter().filter(|v| v.marked) {
            let k = ops.index_of(v.id).unwrap();
            let own = if v.depth % 2 == 0 {
                ops.r_a()
            } else {
                ops.r_b()
            };
            for j in 0..ops.dim() {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert_eq!(own[(j, k)], expect);
            }
        }
    }
}

#[test]
fn detection_sound_on_corpus() {
    let mut corpus = coloring_corpus(4, &[1, 2, 3]);
    corpus.extend(sat_corpus());
    let cfg = DetectionConfig::default();
    corpus.par_iter().for_each(|inst| {
        let t = tree(inst);
        for v in 0..t.len() {
            let r = detect(&t, v, &cfg).unwrap();
            assert_eq!(
                r.verdict == Verdict::SolutionExists,
                emulated_detect(&t, v),
                "{} at {} with p = {}",
                inst.to_dimacs(),
                r.label,
                r.p_accept
            );
        }
    });
}

#[test]
fn sample_mode_concentrates_at_large_k() {
    let corpus = coloring_corpus(4, &[2, 3]);
    let seeds = 0..4u64;
    let (failures, total) = corpus
        .par_iter()
        .map(|inst| {
            let t = tree(inst);
            let mut fail = 0;
            let mut total = 0;
            for v in 0..t.len() {
                let exact = detect(&t, v, &DetectionConfig::default()).unwrap().verdict;
                for seed in seeds.clone() {
                    let cfg = DetectionConfig {
                        mode: Mode::Sample,
                        k_override: Some(200),
                        seed,
                        ..DetectionConfig::default()
                    };
                    total += 1;
                    if detect(&t, v, &cfg).unwrap().verdict != exact {
                        fail += 1;
                    }
                }
            }
            (fail, total)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let rate = failures as f64 / total as f64;
    assert!(
        rate < 0.05,
        "{failures} of {total} sampled verdicts disagree"
    );
}

#[test]
fn sweep_stabilizes_at_high_precision() {
    let mut checked = 0;
    for inst in coloring_corpus(4, &[2, 3]) {
        let t = tree(&inst);
        if t.len() > 50 {
            continue;
        }
        let table = acceptance_sweep(
            &t,
            &["a".to_string()],
            8..=12,
            Backend::Tree,
            &WalkOptions::default(),
        )
        .unwrap();
        for b in 8..12 {
            let (p, q) = (table.get("a", b).unwrap(), table.get("a", b + 1).unwrap());
            assert!(
                (p - q).abs() < 0.01,
                "{} at b={b}: {p} vs {q}",
                inst.to_dimacs()
            );
        }
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn triangle_with_pendant_rejected() {
    let inst = CspInstance::graph_coloring(4, 2, &[(0, 1), (1, 2), (0, 2), (0, 3)]).unwrap();
    let t = tree(&inst);
    let bits = DetectionConfig::default().bits_for(t.len(), 4);
    let table = acceptance_sweep(
        &t,
        &["a".to_string()],
        1..=12,
        Backend::Tree,
        &WalkOptions::default(),
    )
    .unwrap();
    for b in bits..=12 {
        assert!(table.get("a", b).unwrap() < 0.375, "b={b}");
    }
    assert_eq!(
        detect(&t, 0, &DetectionConfig::default()).unwrap().verdict,
        Verdict::NoSolution
    );
}

#[test]
fn marked_singleton_always_accepts() {
    let inst = CspInstance::graph_coloring(2, 2, &[(0, 1)]).unwrap();
    let t = tree(&inst);
    let leaf = t.find_label("a12").unwrap();
    assert!(t.vertex(leaf).marked);
    let table = acceptance_sweep(
        &t,
        &["a12".to_string()],
        1..=8,
        Backend::Circuit,
        &WalkOptions::default(),
    )
    .unwrap();
    for b in 1..=8 {
        assert!((table.get("a12", b).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn unmarked_singleton_never_accepts() {
    // a leaf at depth n - 1 whose only child would be an improper coloring
    let inst = CspInstance::graph_coloring(2, 1, &[(0, 1)]).unwrap();
    let t = tree(&inst);
    assert_eq!(t.len(), 2);
    let leaf = t.find_label("a1").unwrap();
    let cfg = DetectionConfig {
        bits: Some(1),
        ..DetectionConfig::default()
    };
    let r = detect(&t, leaf, &cfg).unwrap();
    assert!(r.p_accept.abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::NoSolution);
}

#[test]
fn full_circuit_phase_estimation_matches_eigen_route() {
    let cases = [
        CspInstance::graph_coloring(3, 2, &[(0, 1), (1, 2)]).unwrap(),
        CspInstance::graph_coloring(3, 2, &[(0, 1), (1, 2), (0, 2)]).unwrap(),
        CspInstance::sat(2, vec![vec![Literal::pos(0), Literal::neg(1)]]).unwrap(),
    ];
    for inst in &cases {
        let t = tree(inst);
        for root in [0, t.len() - 1] {
            for bits in 1..=3 {
                let exact = detect(
                    &t,
                    root,
                    &DetectionConfig {
                        bits: Some(bits),
                        ..DetectionConfig::default()
                    },
                )
                .unwrap()
                .p_accept;
                let circ = circuit_phase_accept(&t, root, bits, &WalkOptions::default()).unwrap();
                assert!(
                    (exact - circ).abs() < 1e-8,
                    "{} {root} {bits}: {exact} {circ}",
                    inst.to_dimacs()
                );
            }
        }
    }
}

#[test]
fn find_on_corpus() {
    let corpus = coloring_corpus(4, &[2, 3]);
    corpus.par_iter().for_each(|inst| {
        for h in Heuristic::ALL {
            let order = h.order(inst);
            let r = find(inst, &order, &DetectionConfig::default()).unwrap();
            assert!(r.detection_calls <= 1 + inst.d() * inst.n());
            assert_eq!(r.detection_calls, r.transcript.len());
            let solvable = emulated_detect(&tree(inst), 0);
            match (r.status, r.assignment) {
                (FindStatus::Solution, Some(a)) => {
                    assert!(solvable);
                    assert_eq!(inst.eval_predicate(&Assignment::new(a)), Ok(TriBool::True));
                }
                (FindStatus::None, None) => assert!(!solvable),
                other => panic!("inconsistent result {other:?}"),
            }
        }
    });
}

#[test]
fn circuit_backend_find_matches_tree_backend() {
    for inst in coloring_corpus(3, &[2]) {
        let order = VariableOrder::identity(inst.n());
        let tree_run = find(&inst, &order, &DetectionConfig::default()).unwrap();
        let circ_run = find(
            &inst,
            &order,
            &DetectionConfig {
                backend: Backend::Circuit,
                ..DetectionConfig::default()
            },
        )
        .unwrap();
        assert_eq!(tree_run.assignment, circ_run.assignment);
        assert_eq!(tree_run.detection_calls, circ_run.detection_calls);
    }
}
