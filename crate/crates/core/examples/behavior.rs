//! Build the chronology of events and show why each edge exists.
//!
//! cargo run --example behavior [-- <corpus name>]

use thingc::events::{build_behavior, check_all_regions};

fn main() {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "control_light".into());
    let entry = thingc::corpus::get(&name).unwrap_or_else(|| {
        eprintln!("no corpus model `{name}`");
        std::process::exit(2);
    });
    let m = entry.model();
    for d in check_all_regions(&m) {
        println!("{d}");
    }

    let g = build_behavior(&m, &m.events);
    for e in &g.edges {
        println!("{} -> {}   via {}", e.from, e.to, e.witness.join(", "));
    }
    println!("components: {:?}", g.weak_components());
    if g.has_cycle() {
        let scc = g.scc_ids();
        let looping: Vec<&String> = g
            .nodes
            .iter()
            .filter(|n| g.nodes.iter().filter(|x| scc[*x] == scc[*n]).count() > 1)
            .collect();
        println!("repeating events: {looping:?}");
    }
}
