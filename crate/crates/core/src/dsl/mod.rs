//! The `.tm` text format.
//!
//! Line-oriented; `#` starts a comment. One declaration per line:
//!
//! ```text
//! model <name>
//! var <id> : number = <int>
//! var <id> : enum(<v1>, <v2>, ...) = <v>
//! machine <id> ["display name"] [actor] [usecase "<name>"] {
//!   stage <create|process|release|transfer|receive> <id> ["label"]
//! }
//! flow <thing> <src> -> <dst> [as <id>]
//! trigger <src> -> <dst> [as <id>] [if <guard>] [do <var> := <expr>; ...]
//! event <id> "<name>" region { <stage or arc ids> } [time "<annotation>"]
//! ```
//!
//! Endpoints are stage ids, or `@<machine>` for arcs anchored on a machine
//! boundary (only produced by the second simplification level).

mod format;
mod lexer;
mod parser;

pub use format::serialize;
pub use lexer::quote;
pub use parser::{parse_expr, parse_source};

use crate::diag::Diagnostic;
use crate::model::Model;

/// Parses `.tm` text; spans name the file `<input>`.
pub fn parse(text: &str) -> Result<Model, Vec<Diagnostic>> {
    parse_source(text, "<input>")
}
