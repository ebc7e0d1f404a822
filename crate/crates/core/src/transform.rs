//! Simplification passes and reduction to a use-case diagram.
//!
//! Level 1 drops release and transfer stages: every
//! `X -> Release -> Transfer.. -> Receive` chain is spliced into a single
//! `X -> Receive` flow. Level 2 additionally erases create, process and
//! receive stages whose role can be read off arrow ends, re-anchoring arcs
//! onto machine boundaries. Both passes preserve [`flow_relation`].
//!
//! [`flow_relation`]: crate::validate::flow_relation

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{Diagnostic, Location};
use crate::model::{Arc, ArcKind, Endpoint, Model, StageKind};
use crate::validate::{flow_chains, flow_relation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("cannot splice `{element}`: {reason}")]
    UnspliceableChain { element: String, reason: String },
    #[error("no machine is marked as an actor")]
    NoActors,
}

impl TransformError {
    pub fn code(&self) -> &'static str {
        match self {
            TransformError::UnspliceableChain { .. } => "unspliceable-chain",
            TransformError::NoActors => "no-actors",
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        let element = match self {
            TransformError::UnspliceableChain { element, .. } => element.clone(),
            TransformError::NoActors => String::new(),
        };
        Diagnostic::error(self.code(), self.to_string(), Location::Element(element))
    }
}

fn unspliceable(element: &str, reason: impl Into<String>) -> TransformError {
    TransformError::UnspliceableChain {
        element: element.to_string(),
        reason: reason.into(),
    }
}

fn is_transit_stage(m: &Model, id: &str) -> bool {
    m.stage(id).is_some_and(|s| s.kind.is_transit())
}

fn touches_transit(m: &Model, a: &Arc) -> bool {
    [&a.source, &a.target]
        .into_iter()
        .any(|ep| ep.as_stage().is_some_and(|s| is_transit_stage(m, s)))
}

/// Removes release and transfer stages by splicing their chains.
pub fn simplify_level1(m: &Model) -> Result<Model, TransformError> {
    let chains: Vec<_> = flow_chains(m)
        .into_iter()
        .filter(|c| !c.transit.is_empty())
        .collect();

    for c in &chains {
        if !c.complete {
            return Err(unspliceable(
                c.terminal.id(),
                format!(
                    "the `{}` chain from arc `{}` stops on a release/transfer stage",
                    c.thing,
                    c.head_arc()
                ),
            ));
        }
        if m.endpoint_kind(&c.terminal)
            .is_some_and(|k| k != StageKind::Receive)
        {
            return Err(unspliceable(
                c.terminal.id(),
                format!(
                    "the `{}` chain from arc `{}` does not end at a receive stage",
                    c.thing,
                    c.head_arc()
                ),
            ));
        }
    }
    let covered: HashSet<&str> = chains
        .iter()
        .flat_map(|c| c.transit.iter().map(String::as_str))
        .collect();
    for s in m.stages.iter().filter(|s| s.kind.is_transit()) {
        if !covered.contains(s.id.as_str()) {
            return Err(unspliceable(
                &s.id,
                "no flow chain from a create/process/receive stage passes through it",
            ));
        }
    }
    if let Some(t) = m.triggers().find(|a| touches_transit(m, a)) {
        return Err(unspliceable(
            &t.id,
            "trigger arcs cannot attach to release/transfer stages",
        ));
    }

    let mut used_ids: HashSet<String> = m.arcs.iter().map(|a| a.id.clone()).collect();
    let mut by_head: HashMap<&str, Vec<&crate::validate::FlowChain>> = HashMap::new();
    for c in &chains {
        by_head.entry(c.head_arc()).or_default().push(c);
    }

    let mut arcs: Vec<Arc> = Vec::new();
    for a in &m.arcs {
        if let Some(group) = by_head.get(a.id.as_str()) {
            let mut first = true;
            for c in group {
                let exists = arcs.iter().any(|x| {
                    x.is_flow()
                        && x.source == c.head
                        && x.target == c.terminal
                        && x.thing.as_deref() == Some(c.thing.as_str())
                });
                if exists {
                    continue;
                }
                let id = if first {
                    a.id.clone()
                } else {
                    fresh_id(&a.id, &mut used_ids)
                };
                first = false;
                arcs.push(Arc {
                    id,
                    kind: ArcKind::Flow,
                    source: c.head.clone(),
                    target: c.terminal.clone(),
                    thing: Some(c.thing.clone()),
                    guard: None,
                    actions: Vec::new(),
                    span: a.span.clone(),
                });
            }
        } else if !touches_transit(m, a) {
            arcs.push(a.clone());
        }
    }

    let mut out = m.clone();
    out.stages.retain(|s| !s.kind.is_transit());
    out.arcs = arcs;
    prune_events(&mut out);
    Ok(out)
}

fn fresh_id(base: &str, used: &mut HashSet<String>) -> String {
    let mut k = 2;
    loop {
        let candidate = format!("{base}_{k}");
        if used.insert(candidate.clone()) {
            return candidate;
        }
        k += 1;
    }
}

/// Drops region elements that no longer exist, and events left empty.
fn prune_events(m: &mut Model) {
    let stages: HashSet<String> = m.stages.iter().map(|s| s.id.clone()).collect();
    let arcs: HashSet<String> = m.arcs.iter().map(|a| a.id.clone()).collect();
    for e in &mut m.events {
        e.region.retain(|r| stages.contains(r) || arcs.contains(r));
    }
    m.events.retain(|e| !e.region.is_empty());
}

/// Result of [`simplify_level2`]: the model plus retention warnings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level2 {
    pub model: Model,
    pub warnings: Vec<Diagnostic>,
}

/// Erases create/process/receive stages recoverable from arrow ends.
///
/// - a create whose flows all leave its machine becomes the flow source,
/// - a receive whose incoming flows all cross into its machine, and whose
///   outgoing flows only feed erasable process stages, becomes the target,
/// - a process with no outgoing flows whose inputs come only from erasable
///   receive stages of the same machine becomes its machine's trigger source.
///
/// Everything else is kept and reported with a `stage-retained` warning.
pub fn simplify_level2(m: &Model) -> Result<Level2, TransformError> {
    let m = simplify_level1(m)?;
    let erased = erasable_stages(&m);

    let anchor = |ep: &Endpoint| -> Endpoint {
        match ep {
            Endpoint::Stage(s) if erased.contains(s.as_str()) => {
                Endpoint::Machine(m.stage(s).unwrap().machine.clone())
            }
            other => other.clone(),
        }
    };
    let both_erased = |a: &Arc| {
        [&a.source, &a.target]
            .into_iter()
            .all(|ep| ep.as_stage().is_some_and(|s| erased.contains(s)))
    };

    let mut arcs: Vec<Arc> = Vec::new();
    for a in &m.arcs {
        let same_machine = m.endpoint_machine(&a.source) == m.endpoint_machine(&a.target);
        if a.is_flow() && same_machine && both_erased(a) {
            // receive -> process inside one machine, absorbed by the boundary
            continue;
        }
        let mut b = a.clone();
        b.source = anchor(&a.source);
        b.target = anchor(&a.target);
        if !arcs.iter().any(|x| x.same_shape(&b)) {
            arcs.push(b);
        }
    }

    let mut out = m.clone();
    out.stages.retain(|s| !erased.contains(s.id.as_str()));
    out.arcs = arcs;
    prune_events(&mut out);

    let warnings = out
        .stages
        .iter()
        .map(|s| {
            Diagnostic::warning(
                "stage-retained",
                format!(
                    "{} stage `{}` in `{}` cannot be read off arrow ends and is kept",
                    s.kind, s.id, s.machine
                ),
                Location::Element(s.id.clone()),
            )
        })
        .collect();
    Ok(Level2 {
        model: out,
        warnings,
    })
}

fn erasable_stages(m: &Model) -> HashSet<&str> {
    let machine_of = |ep: &Endpoint| m.endpoint_machine(ep).unwrap_or_default();
    let incoming = |id: &str| -> Vec<&Arc> {
        m.flows()
            .filter(|a| a.target.as_stage() == Some(id))
            .collect()
    };
    let outgoing = |id: &str| -> Vec<&Arc> {
        m.flows()
            .filter(|a| a.source.as_stage() == Some(id))
            .collect()
    };

    let mut erased: HashSet<&str> = HashSet::new();
    for s in &m.stages {
        let ins = incoming(&s.id);
        let outs = outgoing(&s.id);
        let crossing = |a: &&Arc| machine_of(&a.source) != machine_of(&a.target);
        let candidate = match s.kind {
            StageKind::Create => ins.is_empty() && outs.iter().all(crossing),
            StageKind::Receive => {
                ins.iter().all(crossing)
                    && outs.iter().all(|a| {
                        m.endpoint_kind(&a.target) == Some(StageKind::Process)
                            && machine_of(&a.target) == s.machine
                    })
            }
            StageKind::Process => {
                outs.is_empty()
                    && ins.iter().all(|a| {
                        m.endpoint_kind(&a.source) == Some(StageKind::Receive)
                            && machine_of(&a.source) == s.machine
                    })
            }
            StageKind::Release | StageKind::Transfer => false,
        };
        if candidate {
            erased.insert(&s.id);
        }
    }
    // receive and process erasure depend on each other; shrink to a fixpoint
    loop {
        let mut changed = false;
        for s in &m.stages {
            if !erased.contains(s.id.as_str()) {
                continue;
            }
            let keep = match s.kind {
                StageKind::Receive => outgoing(&s.id)
                    .iter()
                    .all(|a| a.target.as_stage().is_some_and(|t| erased.contains(t))),
                StageKind::Process => incoming(&s.id)
                    .iter()
                    .all(|a| a.source.as_stage().is_some_and(|t| erased.contains(t))),
                _ => true,
            };
            if !keep {
                erased.remove(s.id.as_str());
                changed = true;
            }
        }
        if !changed {
            return erased;
        }
    }
}

/// Actors, use cases and the associations between them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseCaseDiagram {
    pub actors: Vec<String>,
    pub use_cases: Vec<String>,
    pub associations: Vec<(String, String)>,
}

/// Collapses a model to a use-case diagram.
///
/// Use cases are the `usecase` tags when any machine carries one, otherwise
/// the top-level non-actor machines. An actor is associated with a use case
/// when a machine-level flow or a trigger links their subtrees.
pub fn reduce_to_use_case(m: &Model) -> Result<UseCaseDiagram, TransformError> {
    let actors: Vec<&crate::model::Machine> = m.machines.iter().filter(|x| x.is_actor).collect();
    if actors.is_empty() {
        return Err(TransformError::NoActors);
    }

    // use-case name -> member machine ids
    let mut groups: Vec<(String, Vec<&str>)> = Vec::new();
    let tagged = m.machines.iter().any(|x| x.use_case.is_some());
    for machine in &m.machines {
        let name = if tagged {
            machine.use_case.clone()
        } else if !machine.is_actor && machine.parent.as_deref() == Some(m.root().id.as_str()) {
            Some(machine.name.clone())
        } else {
            None
        };
        if let Some(name) = name {
            match groups.iter_mut().find(|(n, _)| *n == name) {
                Some((_, members)) => members.push(&machine.id),
                None => groups.push((name, vec![&machine.id])),
            }
        }
    }

    // machine-level links: flow relation plus trigger arcs
    let mut links: Vec<(String, String)> = flow_relation(m)
        .into_iter()
        .map(|t| (t.source, t.target))
        .collect();
    for t in m.triggers() {
        if let (Some(a), Some(b)) = (m.endpoint_machine(&t.source), m.endpoint_machine(&t.target)) {
            links.push((a.to_string(), b.to_string()));
        }
    }

    let mut associations = Vec::new();
    for actor in &actors {
        for (uc, members) in &groups {
            let in_uc = |x: &str| members.iter().any(|mm| m.is_within(x, mm));
            let in_actor = |x: &str| m.is_within(x, &actor.id);
            let linked = links.iter().any(|(a, b)| {
                (in_actor(a) && in_uc(b) && !in_actor(b))
                    || (in_actor(b) && in_uc(a) && !in_actor(a))
            });
            if linked {
                associations.push((actor.name.clone(), uc.clone()));
            }
        }
    }

    Ok(UseCaseDiagram {
        actors: actors.iter().map(|a| a.name.clone()).collect(),
        use_cases: groups.into_iter().map(|(n, _)| n).collect(),
        associations,
    })
}
