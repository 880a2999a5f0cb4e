mod common;

use adjustkit::analysis::{StructureReport, DEFAULT_MAX_BLOCK};
use adjustkit::dag::{linear_sem_population, Dag, Node};
use adjustkit::subset::enumerate_subsets;
use adjustkit::SubsetId;
use common::{random_dag, rng, s, GOLDEN};
use rand::Rng;

#[test]
fn catalog_collections() {
    for g in &GOLDEN {
        let got = g.graph().true_collection().unwrap();
        let want = g.separated();
        assert_eq!(got.p(), g.p, "{}", g.name);
        assert_eq!(
            got.iter().collect::<Vec<_>>(),
            want.iter().collect::<Vec<_>>(),
            "{}",
            g.name
        );
    }
}

// Reports are computed from the written collections, so they exercise the
// set analysis on its own.
#[test]
fn written_form_structure_reports() {
    for g in &GOLDEN {
        let report = StructureReport::new(&g.collection(), DEFAULT_MAX_BLOCK);
        let minimal: Vec<SubsetId> = g.minimal.iter().map(|m| s(m, g.p)).collect();
        let mut got = report.locally_minimal.clone();
        got.sort_by_key(|a| (a.len(), a.mask()));
        assert_eq!(got, minimal, "{}", g.name);
        assert_eq!(report.unique_minimal, g.unique.map(|u| s(u, g.p)), "{}", g.name);
        assert_eq!(report.colliders, s(g.colliders, g.p), "{}", g.name);
        assert_eq!(report.refined_colliders, s(g.refined, g.p), "{}", g.name);
    }
}

// Flipping X3 -> X1 to X1 -> X3 makes {1} sufficient: X1 is then no longer a
// descendant of the collider X3.
#[test]
fn collider_descendant_matters() {
    let a = GOLDEN[4].graph().true_collection().unwrap();
    let b = GOLDEN[7].graph().true_collection().unwrap();
    assert!(!a.contains(s(&[1], 4)));
    assert!(b.contains(s(&[1], 4)));
    assert_eq!(b.len(), a.len() + 1);
}

// The linear-Gaussian population agrees with the descendant rule: f is
// clearly positive on every `opened` set. Unit weights can cancel across
// paths, so the weights are drawn generically.
#[test]
fn opened_sets_have_positive_population_criterion() {
    let mut r = rng(5);
    for g in GOLDEN.iter().filter(|g| !g.opened.is_empty()) {
        let dag = g.graph();
        let weights: Vec<f64> = dag.edges().iter().map(|_| r.random_range(0.5..1.5)).collect();
        let pop = linear_sem_population(&dag, &weights, &vec![1.0; g.p]).unwrap();
        for set in g.opened {
            let f = pop.f(s(set, g.p)).unwrap();
            assert!(f > 1e-3, "{} {:?}: {f}", g.name, set);
        }
        let (zero, _) = pop.zero_set(1e-10).unwrap();
        assert_eq!(zero.iter().collect::<Vec<_>>(), g.separated().iter().collect::<Vec<_>>(), "{}", g.name);
    }
}

#[test]
fn worked_separation_queries() {
    let g = GOLDEN[0].graph();
    assert!(g.d_separated(Node::Y, Node::T, s(&[1], 6)));
    assert!(!g.d_separated(Node::Y, Node::T, s(&[1, 5], 6)));

    let hidden = GOLDEN[3].graph();
    assert!(hidden.d_separated(Node::Y, Node::T, s(&[1, 4], 4)));
    assert!(!hidden.d_separated(Node::Y, Node::T, s(&[1], 4)));
}

#[test]
fn markov_boundaries() {
    let g = GOLDEN[0].graph();
    assert_eq!(g.markov_boundary(Node::Y).unwrap(), s(&[1, 4], 6));
    assert_eq!(g.markov_boundary(Node::T).unwrap(), s(&[2, 6], 6));

    let fork = GOLDEN[1].graph();
    let by = fork.markov_boundary(Node::Y).unwrap();
    let bt = fork.markov_boundary(Node::T).unwrap();
    assert_eq!(by, s(&[1, 2], 4));
    assert_eq!(bt, s(&[1, 4], 4));
    assert_eq!(by.intersection(bt), s(&[1], 4));
}

fn check_against_paths(g: &Dag) {
    let p = g.p();
    let nodes: Vec<Node> = [Node::Y, Node::T].into_iter().chain((1..=p).map(Node::X)).collect();
    for (i, &u) in nodes.iter().enumerate() {
        for &v in &nodes[i + 1..] {
            for z in enumerate_subsets(p).unwrap() {
                let touches = |n: Node| matches!(n, Node::X(k) if z.contains(k));
                if touches(u) || touches(v) {
                    continue;
                }
                assert_eq!(
                    g.d_separated(u, v, z),
                    g.d_separated_by_paths(u, v, z),
                    "{u} vs {v} given {z} in\n{}",
                    g.to_edge_list()
                );
            }
        }
    }
}

#[test]
fn reachability_agrees_with_path_enumeration() {
    for g in &GOLDEN {
        check_against_paths(&g.graph());
    }
    let mut r = rng(2024);
    for i in 0..100 {
        let p = r.random_range(2..=7);
        let density = [0.2, 0.35, 0.5][i % 3];
        let g = random_dag(&mut r, p, density, i % 2 == 0);
        check_against_paths(&g);
    }
}

#[test]
fn fork_design_population_zero_set() {
    let g = GOLDEN[1].graph();
    let weights = vec![1.0; g.edges().len()];
    let pop = linear_sem_population(&g, &weights, &[1.0; 4]).unwrap();
    let (zero, min_excluded) = pop.zero_set(1e-10).unwrap();
    assert_eq!(
        zero.iter().collect::<Vec<_>>(),
        GOLDEN[1].collection().iter().collect::<Vec<_>>()
    );
    assert!(min_excluded > 0.01, "{min_excluded}");
}

#[test]
fn edge_list_round_trip() {
    for g in &GOLDEN {
        let dag = g.graph();
        assert_eq!(Dag::parse(&dag.to_edge_list()).unwrap(), dag);
    }
}
