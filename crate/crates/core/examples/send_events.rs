//! Find the release/transfer/receive chains that move a thing between
//! machines, and show that they vanish once those stages are spliced out.
//!
//! cargo run --example send_events

use thingc::events::detect_send_events;
use thingc::transform::simplify_level1;

fn main() {
    let m = thingc::corpus::get("box_arrival").unwrap().model();
    let sends = detect_send_events(&m);
    for e in &sends {
        println!("{:<6} {:<40} {}", e.id, e.name, e.region.join(" "));
    }
    let l1 = simplify_level1(&m).unwrap();
    println!(
        "after level 1: {} send events",
        detect_send_events(&l1).len()
    );
}
