//! Fold a group of events into one larger event.
//!
//! cargo run --example compose_events

use thingc::events::{build_behavior, compose_events};
use thingc::render::render_behavior_dot;

fn main() {
    let m = thingc::corpus::get("atm").unwrap().model();
    let g = build_behavior(&m, &m.events);

    let g = compose_events(&g, &["E1", "E2", "E3", "E4"], "Startup").unwrap();
    let g = compose_events(&g, &["E5", "E6", "E7"], "Shutdown").unwrap();
    println!("nodes: {:?}", g.nodes);
    for (mega, members) in &g.composed {
        println!("{mega} = {}", members.join(" + "));
    }
    print!("{}", render_behavior_dot(&g, &m.events));
}
