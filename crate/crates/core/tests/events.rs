mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use thingc::events::{
    build_behavior, check_region, compose_events, detect_send_events, witness_holds, EventError,
};
use thingc::transform::simplify_level1;
use thingc::validate::flow_relation;
use thingc::{BehaviorEdge, BehaviorGraph, Model, ModelBuilder, Severity, StageKind};

fn corpus(name: &str) -> Model {
    thingc::corpus::get(name).unwrap().model()
}

fn behavior(name: &str) -> BehaviorGraph {
    let m = corpus(name);
    build_behavior(&m, &m.events)
}

fn edges(g: &BehaviorGraph) -> Vec<(&str, &str)> {
    g.edges
        .iter()
        .map(|e| (e.from.as_str(), e.to.as_str()))
        .collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn event_counts() {
    for (name, n) in [
        ("book_borrow", 4),
        ("box_arrival", 10),
        ("control_light", 11),
        ("atm", 7),
    ] {
        assert_eq!(corpus(name).events.len(), n, "{name}");
    }
}

#[test]
fn first_book_event_region_is_clean() {
    let m = corpus("book_borrow");
    assert!(check_region(&m, m.event("E1").unwrap()).is_empty());
}

#[test]
fn region_on_a_removed_stage_dangles() {
    let mut m = corpus("book_borrow");
    m.stages.retain(|s| s.id != "s_req_c");
    let diags = check_region(&m, m.event("E1").unwrap());
    assert!(
        diags.iter().any(|d| d.code == "region-dangling"),
        "{diags:?}"
    );
}

#[test]
fn shared_process_stage_is_an_overlap_warning() {
    let mut b = ModelBuilder::new();
    b.machine("root", None)
        .stage(StageKind::Create, "c", "root")
        .stage(StageKind::Process, "p", "root")
        .flow("x", "c", "p")
        .event("A", "a", &["c", "f1", "p"])
        .event("B", "b", &["p"]);
    let m = b.build().unwrap();
    let diags = thingc::events::check_all_regions(&m);
    // reported from both sides
    assert_eq!(diags.len(), 2, "{diags:?}");
    for d in &diags {
        assert_eq!(d.code, "region-overlap");
        assert_eq!(d.severity, Severity::Warning);
    }
}

#[test]
fn disconnected_region_is_reported() {
    let mut b = ModelBuilder::new();
    b.machine("root", None)
        .stage(StageKind::Create, "c", "root")
        .stage(StageKind::Process, "p", "root")
        .stage(StageKind::Create, "lonely", "root")
        .flow("x", "c", "p")
        .event("A", "a", &["c", "p", "lonely"]);
    let m = b.build().unwrap();
    let diags = check_region(&m, &m.events[0]);
    assert!(
        diags.iter().any(|d| d.code == "region-disconnected"),
        "{diags:?}"
    );
}

#[test]
fn book_borrow_is_a_linear_chain() {
    let g = behavior("book_borrow");
    assert_eq!(g.nodes, ["E1", "E2", "E3", "E4"]);
    assert_eq!(edges(&g), [("E1", "E2"), ("E2", "E3"), ("E3", "E4")]);
}

#[test]
fn atm_has_startup_and_shutdown_chains() {
    let g = behavior("atm");
    let comps = g.weak_components();
    assert_eq!(
        comps,
        [vec!["E1", "E2", "E3", "E4"], vec!["E5", "E6", "E7"]]
    );
    assert_eq!(
        edges(&g),
        [
            ("E1", "E2"),
            ("E2", "E3"),
            ("E3", "E4"),
            ("E5", "E6"),
            ("E6", "E7")
        ]
    );
}

#[test]
fn control_light_repeats_while_held() {
    let g = behavior("control_light");
    assert!(g.has_cycle());
    let scc = g.scc_ids();
    for e in ["E4", "E5", "E6", "E9", "E10", "E11"] {
        assert_eq!(scc[e], scc["E11"], "{e}");
    }
}

#[test]
fn corpus_witnesses_hold() {
    for (name, m) in common::corpus_models() {
        let g = build_behavior(&m, &m.events);
        for e in &g.edges {
            assert!(witness_holds(&m, &m.events, e), "{name}: {e:?}");
        }
    }
}

#[test]
fn forged_witness_is_rejected() {
    let m = corpus("book_borrow");
    let forged = BehaviorEdge {
        from: "E1".into(),
        to: "E4".into(),
        witness: vec!["f_req2".into()],
    };
    assert!(!witness_holds(&m, &m.events, &forged));
}

#[test]
fn composing_all_book_events_collapses_the_graph() {
    let g = behavior("book_borrow");
    let c = compose_events(&g, &["E1", "E2", "E3", "E4"], "Borrow Book").unwrap();
    assert_eq!(c.nodes, ["Borrow Book"]);
    assert!(c.edges.is_empty());
    assert_eq!(c.internal["Borrow Book"].len(), 3);
}

#[test]
fn composing_atm_startup() {
    let g = behavior("atm");
    let c = compose_events(&g, &["E1", "E2", "E3", "E4"], "Startup").unwrap();
    assert_eq!(c.nodes, ["Startup", "E5", "E6", "E7"]);
    assert_eq!(edges(&c), [("E5", "E6"), ("E6", "E7")]);
    assert_eq!(c.composed["Startup"], ["E1", "E2", "E3", "E4"]);
}

#[test]
fn composing_control_light_basic_flow() {
    let g = behavior("control_light");
    let basic = ["E1", "E2", "E3", "E4", "E5", "E7", "E8"];
    let c = compose_events(&g, &basic, "Control Light").unwrap();
    let nodes: BTreeSet<String> = c.nodes.iter().cloned().collect();
    assert_eq!(nodes, set(&["Control Light", "E6", "E9", "E10", "E11"]));
    assert!(c.has_cycle());
    let scc = c.scc_ids();
    assert!(c.nodes.iter().all(|n| scc[n] == scc["Control Light"]));
}

#[test]
fn compose_errors() {
    let g = behavior("atm");
    assert_eq!(
        compose_events(&g, &[], "X").unwrap_err(),
        EventError::EmptyMembers
    );
    assert_eq!(
        compose_events(&g, &["E1", "E9"], "X").unwrap_err().code(),
        "unknown-member"
    );
    assert_eq!(
        compose_events(&g, &["E1", "E2"], "E5").unwrap_err(),
        EventError::NameTaken("E5".into())
    );
}

#[test]
fn book_borrow_send_events() {
    let m = corpus("book_borrow");
    let sends = detect_send_events(&m);
    assert_eq!(sends.len(), 2);
    assert!(sends[0].name.contains("request"));
    assert!(sends[1].name.contains("book"));
}

#[test]
fn box_arrival_send_events_match_the_flow_relation() {
    let m = corpus("box_arrival");
    assert_eq!(detect_send_events(&m).len(), flow_relation(&m).len());
}

#[test]
fn send_events_vanish_after_level1_on_corpus() {
    for (name, m) in common::corpus_models() {
        assert!(!detect_send_events(&m).is_empty(), "{name}");
        assert!(
            detect_send_events(&simplify_level1(&m).unwrap()).is_empty(),
            "{name}"
        );
    }
}

/// Transitive closure, Warshall style.
fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

fn graph_strategy() -> impl Strategy<Value = (BehaviorGraph, Vec<(usize, usize)>, Vec<usize>)> {
    (2usize..9).prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::btree_set((0..n, 0..n), 0..20),
            proptest::collection::btree_set(0..n, 1..n),
        )
            .prop_map(|(n, edges, members)| {
                let edges: Vec<(usize, usize)> = edges.into_iter().collect();
                let g = BehaviorGraph {
                    nodes: (0..n).map(|i| format!("N{i}")).collect(),
                    edges: edges
                        .iter()
                        .map(|&(a, b)| BehaviorEdge {
                            from: format!("N{a}"),
                            to: format!("N{b}"),
                            witness: Vec::new(),
                        })
                        .collect(),
                    ..Default::default()
                };
                (g, edges, members.into_iter().collect())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn random_model_witnesses_hold(m in common::model_strategy()) {
        let g = build_behavior(&m, &m.events);
        prop_assert_eq!(g.nodes.len(), m.events.len());
        for e in &g.edges {
            prop_assert!(witness_holds(&m, &m.events, e), "{:?}", e);
        }
    }

    #[test]
    fn random_models_lose_send_events_at_level1(m in common::model_strategy()) {
        prop_assert!(detect_send_events(&simplify_level1(&m).unwrap()).is_empty());
    }

    // A path between outside nodes survives composition; a new one appears
    // exactly when the source reaches a member and a member reaches the target.
    #[test]
    fn composition_and_reachability((g, edges, members) in graph_strategy()) {
        let n = g.nodes.len();
        let r = closure(n, &edges);
        let names: Vec<&str> = members.iter().map(|&i| g.nodes[i].as_str()).collect();
        let c = compose_events(&g, &names, "Mega").unwrap();
        prop_assert!(c.nodes.contains(&"Mega".to_string()));
        prop_assert_eq!(c.nodes.len(), n - members.len() + 1);
        for x in (0..n).filter(|i| !members.contains(i)) {
            for y in (0..n).filter(|i| !members.contains(i)) {
                let via = members.iter().any(|&a| r[x][a])
                    && members.iter().any(|&b| r[b][y]);
                let expected = r[x][y] || via;
                prop_assert_eq!(c.reaches(&g.nodes[x], &g.nodes[y]), expected, "{} -> {}", x, y);
            }
        }
    }
}
