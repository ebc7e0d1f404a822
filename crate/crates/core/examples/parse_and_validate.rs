//! Parse a small model from text and report what the validator finds.
//!
//! cargo run --example parse_and_validate

use thingc::validate::{validate_with, ValidateOptions};

const SOURCE: &str = r#"
model vending
machine Shop {
  machine Customer actor {
    stage create coin_c "coin"
    stage release coin_rl
    stage transfer coin_tr
  }
  machine Vendor usecase "Sell Snack" {
    stage transfer coin_in
    stage receive coin_rc
    stage process coin_p
    stage create snack_c "snack"
  }
}
flow coin coin_c -> coin_rl
flow coin coin_rl -> coin_tr
flow coin coin_tr -> coin_in
flow coin coin_in -> coin_rc
flow coin coin_rc -> coin_p
trigger coin_p -> snack_c
# a release stage cannot start a trigger
trigger coin_rl -> snack_c as t_bad
"#;

fn main() {
    let model = match thingc::dsl::parse_source(SOURCE, "vending.tm") {
        Ok(m) => m,
        Err(diags) => {
            for d in diags {
                eprintln!("{d}");
            }
            std::process::exit(1);
        }
    };
    println!(
        "{}: {} machines, {} stages, {} arcs",
        model.name,
        model.machines.len(),
        model.stages.len(),
        model.arcs.len()
    );

    println!("strict:");
    for d in validate_with(&model, ValidateOptions::default()) {
        println!("  {d}");
    }
    println!("lax:");
    let lax = ValidateOptions {
        lax: true,
        ..Default::default()
    };
    for d in validate_with(&model, lax) {
        println!("  {d}");
    }

    // typos are caught by the parser with a span
    let typo = "machine m {\n  stage transferr s1\n}\n";
    if let Err(diags) = thingc::dsl::parse_source(typo, "typo.tm") {
        for d in diags {
            println!("{d}");
        }
    }
}
