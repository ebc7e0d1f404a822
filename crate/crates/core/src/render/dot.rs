use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use crate::events::{region_stages, BehaviorGraph};
use crate::model::{Arc, ArcKind, Endpoint, EventDef, Machine, Model, StageKind};
use crate::transform::UseCaseDiagram;

/// Node shape per stage kind.
pub fn style_for(kind: StageKind) -> &'static str {
    match kind {
        StageKind::Create => "box",
        StageKind::Process => "ellipse",
        StageKind::Release => "hexagon",
        StageKind::Transfer => "cds",
        StageKind::Receive => "invhouse",
    }
}

/// A DOT double-quoted string.
pub fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn endpoint_node(ep: &Endpoint) -> String {
    match ep {
        Endpoint::Stage(s) => dot_quote(s),
        Endpoint::Machine(m) => dot_quote(&format!("@{m}")),
    }
}

struct ModelWriter<'a> {
    m: &'a Model,
    /// event index -> machine cluster it nests in
    event_home: Vec<Option<String>>,
    /// stage id -> event index whose cluster declares it
    placed: HashMap<&'a str, usize>,
    overlay: &'a [EventDef],
    anchors: BTreeSet<&'a str>,
    out: String,
}

impl<'a> ModelWriter<'a> {
    fn machine(&mut self, mach: &'a Machine, depth: usize) {
        let pad = "  ".repeat(depth);
        let mut label = mach.name.clone();
        if mach.is_actor {
            label.push_str(" (actor)");
        }
        if let Some(uc) = &mach.use_case {
            write!(label, "\nuse case: {uc}").unwrap();
        }
        writeln!(
            self.out,
            "{pad}subgraph {} {{",
            dot_quote(&format!("cluster_{}", mach.id))
        )
        .unwrap();
        writeln!(self.out, "{pad}  label={};", dot_quote(&label)).unwrap();
        if self.anchors.contains(mach.id.as_str()) {
            writeln!(
                self.out,
                "{pad}  {} [shape=point, label=\"\"];",
                dot_quote(&format!("@{}", mach.id))
            )
            .unwrap();
        }
        let m = self.m;
        for s in m.stages.iter().filter(|s| s.machine == mach.id) {
            if !self.placed.contains_key(s.id.as_str()) {
                self.stage(&s.id, depth + 1);
            }
        }
        for child in m.children(&mach.id) {
            self.machine(child, depth + 1);
        }
        for i in 0..self.overlay.len() {
            if self.event_home[i].as_deref() == Some(mach.id.as_str()) {
                self.event(i, depth + 1);
            }
        }
        writeln!(self.out, "{pad}}}").unwrap();
    }

    fn stage(&mut self, id: &str, depth: usize) {
        let s = self.m.stage(id).expect("stage exists");
        let mut label = s.kind.to_string();
        if let Some(l) = &s.label {
            write!(label, "\n{l}").unwrap();
        }
        writeln!(
            self.out,
            "{}{} [label={}, shape={}];",
            "  ".repeat(depth),
            dot_quote(&s.id),
            dot_quote(&label),
            style_for(s.kind)
        )
        .unwrap();
    }

    fn event(&mut self, i: usize, depth: usize) {
        let pad = "  ".repeat(depth);
        let e = &self.overlay[i];
        writeln!(
            self.out,
            "{pad}subgraph {} {{",
            dot_quote(&format!("cluster_event_{}", e.id))
        )
        .unwrap();
        writeln!(
            self.out,
            "{pad}  label={};",
            dot_quote(&format!("{}: {}", e.id, e.name))
        )
        .unwrap();
        writeln!(self.out, "{pad}  style=dashed;").unwrap();
        let mine: Vec<&str> = self
            .placed
            .iter()
            .filter(|(_, &ev)| ev == i)
            .map(|(s, _)| *s)
            .collect();
        for s in region_stages(self.m, e) {
            if mine.contains(&s) {
                self.stage(s, depth + 1);
            }
        }
        writeln!(self.out, "{pad}}}").unwrap();
    }

    fn arc(&mut self, a: &Arc) {
        let mut attrs = Vec::new();
        match a.kind {
            ArcKind::Flow => {
                if let Some(t) = &a.thing {
                    attrs.push(format!("label={}", dot_quote(t)));
                }
            }
            ArcKind::Trigger => {
                attrs.push("style=dashed".to_string());
                let mut parts = Vec::new();
                if let Some(g) = &a.guard {
                    parts.push(format!("if {g}"));
                }
                for act in &a.actions {
                    parts.push(act.to_string());
                }
                if !parts.is_empty() {
                    attrs.push(format!("label={}", dot_quote(&parts.join("\n"))));
                }
            }
        }
        attrs.push(format!("id={}", dot_quote(&a.id)));
        writeln!(
            self.out,
            "  {} -> {} [{}];",
            endpoint_node(&a.source),
            endpoint_node(&a.target),
            attrs.join(", ")
        )
        .unwrap();
    }
}

/// Lowest machine containing every machine in `machines`.
fn common_ancestor<'a>(m: &'a Model, machines: &[&'a str]) -> Option<&'a str> {
    let first = machines.first()?;
    m.ancestry(first)
        .into_iter()
        .rev()
        .find(|cand| machines.iter().all(|x| m.is_within(x, cand)))
}

/// The model as nested clusters, one per machine. With `overlay`, each
/// event's region is drawn as a dashed cluster inside the innermost machine
/// that holds all of it.
pub fn render_model_dot(m: &Model, overlay: Option<&[EventDef]>) -> String {
    let overlay = overlay.unwrap_or(&[]);
    let mut placed = HashMap::new();
    let mut event_home = Vec::new();
    for (i, e) in overlay.iter().enumerate() {
        let mut machines: Vec<&str> = Vec::new();
        for r in &e.region {
            if let Some(s) = m.stage(r) {
                machines.push(&s.machine);
            } else if let Some(a) = m.arc(r) {
                machines.extend(m.endpoint_machine(&a.source));
                machines.extend(m.endpoint_machine(&a.target));
            }
        }
        event_home.push(common_ancestor(m, &machines).map(str::to_string));
        for s in region_stages(m, e) {
            let s = m.stage(s).map(|x| x.id.as_str()).unwrap();
            placed.entry(s).or_insert(i);
        }
    }
    let anchors = m
        .arcs
        .iter()
        .flat_map(|a| [&a.source, &a.target])
        .filter_map(|ep| match ep {
            Endpoint::Machine(id) => Some(id.as_str()),
            Endpoint::Stage(_) => None,
        })
        .collect();

    let mut w = ModelWriter {
        m,
        event_home,
        placed,
        overlay,
        anchors,
        out: String::new(),
    };
    writeln!(w.out, "digraph {} {{", dot_quote(&m.name)).unwrap();
    w.out.push_str("  compound=true;\n");
    w.out
        .push_str("  node [fontname=\"Helvetica\", fontsize=10];\n");
    if let Some(root) = m.machines.iter().find(|x| x.parent.is_none()) {
        w.machine(root, 1);
    }
    for a in &m.arcs {
        w.arc(a);
    }
    w.out.push_str("}\n");
    w.out
}

fn leaves<'g>(g: &'g BehaviorGraph, node: &'g str, out: &mut Vec<&'g str>) {
    match g.composed.get(node) {
        Some(members) => members.iter().for_each(|x| leaves(g, x, out)),
        None => out.push(node),
    }
}

fn behavior_node(
    g: &BehaviorGraph,
    names: &HashMap<&str, &str>,
    node: &str,
    depth: usize,
    out: &mut String,
) {
    let pad = "  ".repeat(depth);
    match g.composed.get(node) {
        Some(members) => {
            writeln!(
                out,
                "{pad}subgraph {} {{",
                dot_quote(&format!("cluster_{node}"))
            )
            .unwrap();
            writeln!(out, "{pad}  label={};", dot_quote(node)).unwrap();
            for x in members {
                behavior_node(g, names, x, depth + 1, out);
            }
            for e in g.internal.get(node).into_iter().flatten() {
                behavior_edge(g, &e.from, &e.to, depth + 1, out);
            }
            writeln!(out, "{pad}}}").unwrap();
        }
        None => {
            let label = match names.get(node) {
                Some(n) if *n != node => format!("{node}\n{n}"),
                _ => node.to_string(),
            };
            writeln!(
                out,
                "{pad}{} [label={}];",
                dot_quote(node),
                dot_quote(&label)
            )
            .unwrap();
        }
    }
}

fn behavior_edge(g: &BehaviorGraph, from: &str, to: &str, depth: usize, out: &mut String) {
    let anchor = |n: &str| -> (String, Option<String>) {
        let mut l = Vec::new();
        leaves(g, n, &mut l);
        let head = l.first().copied().unwrap_or(n).to_string();
        let cluster = g.composed.contains_key(n).then(|| format!("cluster_{n}"));
        (head, cluster)
    };
    let ((a, ac), (b, bc)) = (anchor(from), anchor(to));
    let mut attrs = Vec::new();
    if let Some(c) = ac {
        attrs.push(format!("ltail={}", dot_quote(&c)));
    }
    if let Some(c) = bc {
        attrs.push(format!("lhead={}", dot_quote(&c)));
    }
    let attrs = if attrs.is_empty() {
        String::new()
    } else {
        format!(" [{}]", attrs.join(", "))
    };
    writeln!(
        out,
        "{}{} -> {}{attrs};",
        "  ".repeat(depth),
        dot_quote(&a),
        dot_quote(&b)
    )
    .unwrap();
}

/// The behavior graph; mega-events become clusters around their members.
/// `events` supplies display names and may be empty.
pub fn render_behavior_dot(g: &BehaviorGraph, events: &[EventDef]) -> String {
    if g.nodes.is_empty() {
        return "digraph behavior {\n}\n".to_string();
    }
    let names: HashMap<&str, &str> = events
        .iter()
        .map(|e| (e.id.as_str(), e.name.as_str()))
        .collect();
    let mut out = String::from("digraph behavior {\n  compound=true;\n");
    for n in &g.nodes {
        behavior_node(g, &names, n, 1, &mut out);
    }
    for e in &g.edges {
        behavior_edge(g, &e.from, &e.to, 1, &mut out);
    }
    out.push_str("}\n");
    out
}

/// Actors as boxes, use cases as ellipses, associations as plain lines.
pub fn render_usecase_dot(d: &UseCaseDiagram) -> String {
    let mut out = String::from("graph usecases {\n  rankdir=LR;\n");
    let actor_id = |a: &str| {
        d.actors
            .iter()
            .position(|x| x == a)
            .map(|i| format!("actor{i}"))
    };
    let uc_id = |u: &str| {
        d.use_cases
            .iter()
            .position(|x| x == u)
            .map(|i| format!("usecase{i}"))
    };
    for (i, a) in d.actors.iter().enumerate() {
        writeln!(out, "  actor{i} [label={}, shape=box];", dot_quote(a)).unwrap();
    }
    for (i, u) in d.use_cases.iter().enumerate() {
        writeln!(out, "  usecase{i} [label={}, shape=ellipse];", dot_quote(u)).unwrap();
    }
    for (a, u) in &d.associations {
        if let (Some(a), Some(u)) = (actor_id(a), uc_id(u)) {
            writeln!(out, "  {a} -- {u};").unwrap();
        }
    }
    out.push_str("}\n");
    out
}
