//! Drop release/transfer stages, then erase what arrow ends already say.
//!
//! cargo run --example simplify [-- <model.tm>]

use thingc::transform::{simplify_level1, simplify_level2};
use thingc::validate::flow_relation;
use thingc::Model;

fn load() -> Model {
    match std::env::args().nth(1) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).expect("readable model file");
            thingc::dsl::parse_source(&text, &path).expect("model parses")
        }
        None => thingc::corpus::get("book_borrow").unwrap().model(),
    }
}

fn summary(label: &str, m: &Model) {
    println!(
        "{label:>9}: {} stages, {} arcs, flow relation {:?}",
        m.stages.len(),
        m.arcs.len(),
        flow_relation(m)
            .iter()
            .map(|t| format!("{} -{}-> {}", t.source, t.thing, t.target))
            .collect::<Vec<_>>()
    );
}

fn main() {
    let m = load();
    summary("original", &m);

    let l1 = simplify_level1(&m).unwrap_or_else(|e| {
        eprintln!("{}: {e}", e.code());
        std::process::exit(1);
    });
    summary("level 1", &l1);

    let l2 = simplify_level2(&m).expect("level 1 already succeeded");
    summary("level 2", &l2.model);
    for w in &l2.warnings {
        println!("  {w}");
    }
    println!();
    print!("{}", thingc::dsl::serialize(&l2.model));
}
