use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Step, StepKind, Trace};
use crate::events::BehaviorGraph;
use crate::model::EventDef;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventOccurrence {
    pub event: String,
    pub start: u64,
    pub end: u64,
}

/// An event that occurred before any event with an edge into it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderViolation {
    pub event: String,
    pub start: u64,
    pub predecessors: Vec<String>,
}

/// Elements a step touches.
fn touched(step: &Step) -> &[String] {
    match step.kind {
        StepKind::Move | StepKind::Trigger | StepKind::Create | StepKind::Consume => &step.elements,
        StepKind::Assign => &step.elements[..step.elements.len().min(1)],
    }
}

/// Occurrences of each event in the trace.
///
/// A tick belongs to an event when some step of that tick touches its
/// region. Touched ticks that follow each other form one occurrence when a
/// thing instance touches the region in both; otherwise a new occurrence
/// starts. The result is ordered by start tick, then event declaration order.
pub fn trace_to_events(t: &Trace, events: &[EventDef]) -> Vec<EventOccurrence> {
    let mut out: Vec<(u64, usize, EventOccurrence)> = Vec::new();
    for (ei, e) in events.iter().enumerate() {
        let region: BTreeSet<&str> = e.region.iter().map(String::as_str).collect();
        // tick -> instances seen in the region that tick
        let mut ticks: BTreeMap<u64, BTreeSet<&str>> = BTreeMap::new();
        for s in &t.steps {
            if touched(s).iter().any(|x| region.contains(x.as_str())) {
                let seen = ticks.entry(s.tick).or_default();
                if let Some(i) = &s.instance {
                    seen.insert(i);
                }
            }
        }
        let mut current: Option<(u64, u64, &BTreeSet<&str>)> = None;
        for (tick, seen) in &ticks {
            current = match current {
                Some((start, end, prev))
                    if end + 1 == *tick && prev.intersection(seen).next().is_some() =>
                {
                    Some((start, *tick, seen))
                }
                Some((start, end, _)) => {
                    out.push((start, ei, occurrence(e, start, end)));
                    Some((*tick, *tick, seen))
                }
                None => Some((*tick, *tick, seen)),
            };
        }
        if let Some((start, end, _)) = current {
            out.push((start, ei, occurrence(e, start, end)));
        }
    }
    out.sort_by_key(|(start, ei, _)| (*start, *ei));
    out.into_iter().map(|(_, _, o)| o).collect()
}

fn occurrence(e: &EventDef, start: u64, end: u64) -> EventOccurrence {
    EventOccurrence {
        event: e.id.clone(),
        start,
        end,
    }
}

/// Checks the occurrence order against `g`: every event that occurs and
/// has incoming edges needs some predecessor whose first occurrence starts
/// no later than its own. Events without incoming edges are unconstrained.
pub fn check_consistency(
    g: &BehaviorGraph,
    occurrences: &[EventOccurrence],
) -> Vec<OrderViolation> {
    let first = |id: &str| -> Option<u64> {
        let own = |ev: &str| -> bool {
            ev == id
                || g.composed
                    .get(id)
                    .is_some_and(|members| members.iter().any(|x| x == ev))
        };
        occurrences
            .iter()
            .filter(|o| own(&o.event))
            .map(|o| o.start)
            .min()
    };
    let mut out = Vec::new();
    for node in &g.nodes {
        let preds: Vec<String> = g
            .edges
            .iter()
            .filter(|e| &e.to == node && &e.from != node)
            .map(|e| e.from.clone())
            .collect();
        let Some(start) = first(node) else { continue };
        if preds.is_empty() {
            continue;
        }
        if !preds.iter().any(|p| first(p).is_some_and(|s| s <= start)) {
            out.push(OrderViolation {
                event: node.clone(),
                start,
                predecessors: preds,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(tick: u64, kind: StepKind, el: &[&str], inst: Option<&str>) -> Step {
        Step {
            tick,
            kind,
            elements: el.iter().map(|s| s.to_string()).collect(),
            instance: inst.map(str::to_string),
            values: BTreeMap::new(),
        }
    }

    fn ev(id: &str, region: &[&str]) -> EventDef {
        EventDef {
            id: id.into(),
            name: id.into(),
            region: region.iter().map(|s| s.to_string()).collect(),
            time: None,
            span: None,
        }
    }

    #[test]
    fn shared_instances_merge_ticks() {
        let t = Trace {
            steps: vec![
                step(0, StepKind::Create, &["a"], Some("x#1")),
                step(1, StepKind::Move, &["f1", "b"], Some("x#1")),
                step(2, StepKind::Trigger, &["t1", "c"], None),
                step(3, StepKind::Trigger, &["t1", "c"], None),
            ],
            ..Default::default()
        };
        let occ = trace_to_events(&t, &[ev("AB", &["a", "b"]), ev("C", &["c"])]);
        let got: Vec<(&str, u64, u64)> = occ
            .iter()
            .map(|o| (o.event.as_str(), o.start, o.end))
            .collect();
        assert_eq!(got, [("AB", 0, 1), ("C", 2, 2), ("C", 3, 3)]);
    }

    #[test]
    fn empty_trace_has_no_occurrences() {
        assert!(trace_to_events(&Trace::default(), &[ev("A", &["a"])]).is_empty());
    }
}
