//! Toolkit for Thinging Machine (TM) models.
//!
//! A TM model is a tree of machines whose stages are drawn from five generic
//! processes (create, process, release, transfer, receive), connected by flow
//! arcs (things moving) and trigger arcs (activation). This crate provides:
//!
//! - [`model`]: domain types and the [`model::ModelBuilder`] that enforces
//!   structural invariants,
//! - [`validate`]: stage legality rules and the machine-level flow relation,
//! - [`dsl`]: the `.tm` text format (parser and canonical formatter),
//! - [`transform`]: simplification passes and reduction to a use-case diagram,
//! - [`events`]: event regions, behavior graphs, composition and send events,
//! - [`sim`]: deterministic token-flow simulation over integer ticks,
//! - [`render`]: DOT and JSON output,
//! - [`corpus`]: the bundled case-study models and their golden outputs.
//!
//! Runnable walkthroughs live in `examples/`; the `thingc` binary wraps the
//! same functionality as a command-line tool.

pub mod cli;
pub mod corpus;
pub mod diag;
pub mod dsl;
pub mod events;
pub mod expr;
pub mod model;
pub mod render;
pub mod sim;
pub mod transform;
pub mod validate;

pub use diag::{Diagnostic, Location, Severity, SourceSpan};
pub use events::{BehaviorEdge, BehaviorGraph};
pub use model::{
    Arc, ArcKind, Endpoint, EventDef, Machine, Model, ModelBuilder, Stage, StageKind, StateVar,
    VarType,
};
pub use transform::UseCaseDiagram;
