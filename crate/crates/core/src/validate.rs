//! Stage legality and the machine-level flow relation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::diag::{Diagnostic, Location};
use crate::expr::{check_action, type_of, Ty};
use crate::model::{Arc, ArcKind, Endpoint, Model, StageKind};

use StageKind::*;

/// Intra-machine flow hops of an unsimplified model.
pub const INTRA_FLOWS: [(StageKind, StageKind); 7] = [
    (Transfer, Receive),
    (Receive, Process),
    (Receive, Release),
    (Process, Release),
    (Create, Process),
    (Create, Release),
    (Release, Transfer),
];

/// Flows crossing a machine boundary go transfer to transfer.
pub const INTER_FLOWS: [(StageKind, StageKind); 1] = [(Transfer, Transfer)];

pub const TRIGGER_SOURCES: [StageKind; 2] = [Process, Create];

/// Which flow grammar applies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Legality {
    /// All five stage kinds present.
    #[default]
    Full,
    /// Release and transfer removed; things hop straight into receive stages.
    Level1,
    /// As `Level1`, and arcs may be anchored on machine boundaries.
    Level2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Downgrade trigger-source violations to warnings.
    pub lax: bool,
    pub legality: Legality,
}

/// Whether a flow hop between two stage kinds is allowed.
pub fn flow_allowed(
    src: StageKind,
    dst: StageKind,
    same_machine: bool,
    legality: Legality,
) -> bool {
    match legality {
        Legality::Full => {
            if same_machine {
                INTRA_FLOWS.contains(&(src, dst))
            } else {
                INTER_FLOWS.contains(&(src, dst))
            }
        }
        Legality::Level1 | Legality::Level2 => match (src, dst) {
            (Receive, Process) | (Create, Process) => same_machine,
            (Create | Process | Receive, Receive) => true,
            _ => false,
        },
    }
}

pub fn trigger_source_allowed(kind: StageKind) -> bool {
    TRIGGER_SOURCES.contains(&kind)
}

/// Strict validation of an unsimplified model.
pub fn validate_model(m: &Model) -> Vec<Diagnostic> {
    validate_with(m, ValidateOptions::default())
}

pub fn validate_with(m: &Model, opts: ValidateOptions) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for arc in &m.arcs {
        check_arc(m, arc, opts, &mut diags);
    }
    for v in &m.variables {
        if !v.var_type.admits(&v.initial) {
            diags.push(Diagnostic::error(
                "bad-initial",
                format!("initial value of `{}` is outside its domain", v.id),
                location(&v.id, v.span.as_ref()),
            ));
        }
    }
    diags
}

/// Legality checks followed by event region checks.
pub fn check_model(m: &Model, opts: ValidateOptions) -> Vec<Diagnostic> {
    let mut diags = validate_with(m, opts);
    diags.extend(crate::events::check_all_regions(m));
    diags
}

fn location(id: &str, span: Option<&crate::diag::SourceSpan>) -> Location {
    match span {
        Some(s) => Location::Span(s.clone()),
        None => Location::Element(id.to_string()),
    }
}

fn check_arc(m: &Model, arc: &Arc, opts: ValidateOptions, diags: &mut Vec<Diagnostic>) {
    let loc = || location(&arc.id, arc.span.as_ref());
    let machine_anchor =
        matches!(arc.source, Endpoint::Machine(_)) || matches!(arc.target, Endpoint::Machine(_));
    if machine_anchor && opts.legality != Legality::Level2 {
        diags.push(Diagnostic::error(
            "machine-endpoint",
            format!("arc `{}` is anchored on a machine boundary", arc.id),
            loc(),
        ));
        return;
    }
    let src = m.endpoint_kind(&arc.source);
    let dst = m.endpoint_kind(&arc.target);
    match arc.kind {
        ArcKind::Flow => {
            let (Some(src), Some(dst)) = (src, dst) else {
                return;
            };
            let same = m.endpoint_machine(&arc.source) == m.endpoint_machine(&arc.target);
            if !flow_allowed(src, dst, same, opts.legality) {
                let scope = if same {
                    "within a machine"
                } else {
                    "across machines"
                };
                diags.push(Diagnostic::error(
                    "illegal-flow-hop",
                    format!(
                        "flow `{}` goes {src} -> {dst} {scope}, which is not a legal hop",
                        arc.id
                    ),
                    loc(),
                ));
            }
        }
        ArcKind::Trigger => {
            if let Some(src) = src {
                if !trigger_source_allowed(src) {
                    let msg = format!(
                        "trigger `{}` starts at a {src} stage; triggers start at Process or Create",
                        arc.id
                    );
                    diags.push(if opts.lax {
                        Diagnostic::warning("illegal-trigger-source", msg, loc())
                    } else {
                        Diagnostic::error("illegal-trigger-source", msg, loc())
                    });
                }
            }
            if let Some(guard) = &arc.guard {
                match type_of(guard, &m.variables) {
                    Ok(Ty::Bool) => {}
                    Ok(_) => diags.push(Diagnostic::error(
                        "type-error",
                        format!("guard of `{}` is not a condition", arc.id),
                        loc(),
                    )),
                    Err(e) => diags.push(Diagnostic::error(
                        "type-error",
                        format!("guard of `{}`: {e}", arc.id),
                        loc(),
                    )),
                }
            }
            for act in &arc.actions {
                if let Err(e) = check_action(act, &m.variables) {
                    diags.push(Diagnostic::error(
                        "type-error",
                        format!("action on `{}`: {e}", arc.id),
                        loc(),
                    ));
                }
            }
        }
    }
}

/// A maximal flow path whose interior consists only of release/transfer
/// stages, all carrying the same thing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowChain {
    pub thing: String,
    pub head: Endpoint,
    /// Arc ids in path order; the first is the head arc.
    pub arcs: Vec<String>,
    /// Release/transfer stages traversed, in order.
    pub transit: Vec<String>,
    pub terminal: Endpoint,
    /// False when the path dead-ends on a release/transfer stage.
    pub complete: bool,
}

impl FlowChain {
    pub fn head_arc(&self) -> &str {
        &self.arcs[0]
    }
}

fn is_transit(m: &Model, ep: &Endpoint) -> bool {
    m.endpoint_kind(ep).is_some_and(StageKind::is_transit)
}

/// All flow chains, in head-arc declaration order.
pub fn flow_chains(m: &Model) -> Vec<FlowChain> {
    let mut chains = Vec::new();
    for head in m.flows().filter(|a| !is_transit(m, &a.source)) {
        let thing = head.thing.clone().unwrap_or_default();
        let mut path = vec![head.id.clone()];
        let mut transit = Vec::new();
        let mut visited = HashSet::new();
        walk(
            m,
            head,
            &thing,
            &mut path,
            &mut transit,
            &mut visited,
            &mut chains,
        );
    }
    chains
}

fn walk(
    m: &Model,
    arc: &Arc,
    thing: &str,
    path: &mut Vec<String>,
    transit: &mut Vec<String>,
    visited: &mut HashSet<String>,
    out: &mut Vec<FlowChain>,
) {
    let head_source = || m.arc(&path[0]).unwrap().source.clone();
    if !is_transit(m, &arc.target) {
        out.push(FlowChain {
            thing: thing.to_string(),
            head: head_source(),
            arcs: path.clone(),
            transit: transit.clone(),
            terminal: arc.target.clone(),
            complete: true,
        });
        return;
    }
    let stage = arc.target.id().to_string();
    if !visited.insert(stage.clone()) {
        return;
    }
    transit.push(stage.clone());
    let next: Vec<&Arc> = m
        .flows()
        .filter(|a| {
            a.source.as_stage() == Some(stage.as_str()) && a.thing.as_deref() == Some(thing)
        })
        .collect();
    if next.is_empty() {
        out.push(FlowChain {
            thing: thing.to_string(),
            head: head_source(),
            arcs: path.clone(),
            transit: transit.clone(),
            terminal: arc.target.clone(),
            complete: false,
        });
    }
    for a in next {
        path.push(a.id.clone());
        walk(m, a, thing, path, transit, visited, out);
        path.pop();
    }
    transit.pop();
    visited.remove(&stage);
}

/// One machine-level flow: `source` sends `thing` to `target`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowTuple {
    pub source: String,
    pub thing: String,
    pub target: String,
}

impl FlowTuple {
    pub fn new(source: &str, thing: &str, target: &str) -> Self {
        FlowTuple {
            source: source.to_string(),
            thing: thing.to_string(),
            target: target.to_string(),
        }
    }
}

/// Inter-machine flows with release/transfer hops collapsed, deduplicated,
/// in head-arc declaration order.
pub fn flow_relation(m: &Model) -> Vec<FlowTuple> {
    let mut out: Vec<FlowTuple> = Vec::new();
    for chain in flow_chains(m).into_iter().filter(|c| c.complete) {
        let (Some(src), Some(dst)) = (
            m.endpoint_machine(&chain.head),
            m.endpoint_machine(&chain.terminal),
        ) else {
            continue;
        };
        if src != dst {
            let t = FlowTuple::new(src, &chain.thing, dst);
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}
