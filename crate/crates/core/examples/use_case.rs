//! Collapse a model into actors, use cases and associations.
//!
//! cargo run --example use_case

use thingc::render::render_usecase_dot;
use thingc::transform::reduce_to_use_case;

fn main() {
    for name in ["book_borrow", "atm"] {
        let m = thingc::corpus::get(name).unwrap().model();
        let d = reduce_to_use_case(&m).expect("corpus models mark an actor");
        println!("{name}");
        for (actor, uc) in &d.associations {
            println!("  {actor} -- {uc}");
        }
    }
    let atm = thingc::corpus::get("atm").unwrap().model();
    print!("{}", render_usecase_dot(&reduce_to_use_case(&atm).unwrap()));
}
