//! Write the model, behavior and use-case views of a corpus model as DOT.
//!
//! cargo run --example render -- <out dir>
//! dot -Tsvg <out dir>/book_borrow.model.dot > model.svg

use std::path::PathBuf;

use thingc::events::build_behavior;
use thingc::render::{render_behavior_dot, render_model_dot, render_usecase_dot};
use thingc::transform::reduce_to_use_case;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "dot-out".into()));
    std::fs::create_dir_all(&dir)?;
    for entry in thingc::corpus::MODELS {
        let m = entry.model();
        let views = [
            ("model", render_model_dot(&m, Some(&m.events))),
            (
                "behavior",
                render_behavior_dot(&build_behavior(&m, &m.events), &m.events),
            ),
            (
                "usecase",
                render_usecase_dot(&reduce_to_use_case(&m).unwrap()),
            ),
        ];
        for (view, text) in views {
            let path = dir.join(format!("{}.{view}.dot", entry.name));
            std::fs::write(&path, text)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
