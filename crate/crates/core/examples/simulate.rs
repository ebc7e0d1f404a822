//! Run the light switch with the button held down and watch the
//! brightness sweep up and back.
//!
//! cargo run --example simulate

use thingc::events::build_behavior;
use thingc::sim::{check_consistency, load_scenario, simulate, trace_to_events};

const HOLD: &str = "
scenario hold
horizon 30
at 0..9 inject signal into r_tr
";

fn main() {
    let m = thingc::corpus::get("control_light").unwrap().model();
    let scenario = load_scenario(HOLD).expect("scenario parses");
    let trace = match simulate(&m, &scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", e.code());
            std::process::exit(1);
        }
    };

    let levels: Vec<String> = trace
        .assignments("brightness")
        .iter()
        .map(|v| v.to_string())
        .collect();
    println!("brightness: {}", levels.join(" "));
    println!("final: {:?}", trace.final_state.variables);

    let occurrences = trace_to_events(&trace, &m.events);
    for o in occurrences.iter().take(12) {
        println!("{:>3}..{:<3} {}", o.start, o.end, o.event);
    }
    let g = build_behavior(&m, &m.events);
    println!(
        "order violations: {}",
        check_consistency(&g, &occurrences).len()
    );
}
