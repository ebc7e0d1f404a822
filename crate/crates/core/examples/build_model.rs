//! Assemble a model in code and print it in the text format.
//!
//! cargo run --example build_model

use thingc::validate::{flow_relation, validate_model};
use thingc::{ModelBuilder, StageKind};

fn main() {
    let mut b = ModelBuilder::new();
    b.name("letter")
        .machine("Post", None)
        .actor("Writer", Some("Post"))
        .machine("Reader", Some("Post"))
        .stage(StageKind::Create, "write", "Writer")
        .stage(StageKind::Release, "post", "Writer")
        .stage(StageKind::Transfer, "out", "Writer")
        .stage(StageKind::Transfer, "box", "Reader")
        .stage(StageKind::Receive, "open", "Reader")
        .stage(StageKind::Process, "read", "Reader")
        .flow("letter", "write", "post")
        .flow("letter", "post", "out")
        .flow("letter", "out", "box")
        .flow("letter", "box", "open")
        .flow("letter", "open", "read")
        .event(
            "E1",
            "The letter is written and posted",
            &["write", "post", "out", "f1", "f2"],
        )
        .event(
            "E2",
            "The letter arrives and is read",
            &["box", "open", "read", "f4", "f5"],
        );

    let model = match b.build() {
        Ok(m) => m,
        Err(diags) => {
            for d in diags {
                eprintln!("{d}");
            }
            std::process::exit(1);
        }
    };
    assert!(validate_model(&model).is_empty());
    print!("{}", thingc::dsl::serialize(&model));
    for t in flow_relation(&model) {
        println!("# {} sends {} to {}", t.source, t.thing, t.target);
    }
}
