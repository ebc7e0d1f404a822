//! Graphviz DOT and JSON output.

mod dot;
mod json;

pub use dot::{dot_quote, render_behavior_dot, render_model_dot, render_usecase_dot, style_for};
pub use json::{export_json, import_json, Envelope, JsonError, SCHEMA_VERSION};
