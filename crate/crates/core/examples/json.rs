//! Export structures as versioned JSON and read them back.
//!
//! cargo run --example json

use thingc::events::build_behavior;
use thingc::render::{export_json, import_json};
use thingc::{BehaviorGraph, Model};

fn main() {
    let m = thingc::corpus::get("book_borrow").unwrap().model();
    let g = build_behavior(&m, &m.events);

    let text = export_json("behavior", &g);
    print!("{text}");
    let back: BehaviorGraph = import_json("behavior", &text).unwrap();
    assert_eq!(back, g);

    let model_text = export_json("model", &m);
    let back: Model = import_json("model", &model_text).unwrap();
    assert_eq!(back, m);

    // the envelope names what it holds
    match import_json::<Model>("model", &text) {
        Ok(_) => unreachable!(),
        Err(e) => println!("{e}"),
    }
}
