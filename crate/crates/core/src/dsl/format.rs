use std::fmt::Write;

use crate::model::{default_arc_id, Arc, ArcKind, Machine, Model, VarType};

use super::lexer::quote;

const INDENT: &str = "  ";

/// Canonical `.tm` text for a model.
///
/// Stages and child machines are interleaved inside each machine block so
/// that reading the text back reproduces the declaration order of both.
pub fn serialize(m: &Model) -> String {
    let mut out = String::new();
    writeln!(out, "model {}", m.name).unwrap();
    for v in &m.variables {
        let ty = match &v.var_type {
            VarType::Number => "number".to_string(),
            VarType::Enum(values) => format!("enum({})", values.join(", ")),
        };
        writeln!(out, "var {} : {} = {}", v.id, ty, v.initial).unwrap();
    }
    if !m.variables.is_empty() {
        out.push('\n');
    }
    if let Some(root) = m.machines.iter().find(|x| x.parent.is_none()) {
        write_machine(m, root, 0, &mut out);
    }
    if !m.arcs.is_empty() {
        out.push('\n');
    }
    let (mut flows, mut triggers) = (0, 0);
    for a in &m.arcs {
        let index = match a.kind {
            ArcKind::Flow => {
                flows += 1;
                flows
            }
            ArcKind::Trigger => {
                triggers += 1;
                triggers
            }
        };
        out.push_str(&arc_line(a, index));
        out.push('\n');
    }
    if !m.events.is_empty() {
        out.push('\n');
    }
    for e in &m.events {
        write!(
            out,
            "event {} {} region {{ {} }}",
            e.id,
            quote(&e.name),
            e.region.join(", ")
        )
        .unwrap();
        if let Some(t) = &e.time {
            write!(out, " time {}", quote(t)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn arc_line(a: &Arc, index: usize) -> String {
    let mut line = match a.kind {
        ArcKind::Flow => format!(
            "flow {} {} -> {}",
            a.thing.as_deref().unwrap_or(""),
            a.source,
            a.target
        ),
        ArcKind::Trigger => format!("trigger {} -> {}", a.source, a.target),
    };
    if a.id != default_arc_id(a.kind, index) {
        write!(line, " as {}", a.id).unwrap();
    }
    if let Some(g) = &a.guard {
        write!(line, " if {g}").unwrap();
    }
    if !a.actions.is_empty() {
        let acts: Vec<String> = a.actions.iter().map(ToString::to_string).collect();
        write!(line, " do {}", acts.join("; ")).unwrap();
    }
    line
}

enum Item<'a> {
    Stage(usize),
    Child(&'a Machine),
}

fn write_machine(m: &Model, machine: &Machine, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    write!(out, "{pad}machine {}", machine.id).unwrap();
    if machine.name != machine.id {
        write!(out, " {}", quote(&machine.name)).unwrap();
    }
    if machine.is_actor {
        out.push_str(" actor");
    }
    if let Some(uc) = &machine.use_case {
        write!(out, " usecase {}", quote(uc)).unwrap();
    }
    out.push_str(" {\n");

    let own: Vec<usize> = m
        .stages
        .iter()
        .enumerate()
        .filter(|(_, s)| s.machine == machine.id)
        .map(|(i, _)| i)
        .collect();
    let children: Vec<&Machine> = m.children(&machine.id).collect();
    let mut items = Vec::new();
    let (mut si, mut ci) = (0, 0);
    while si < own.len() || ci < children.len() {
        let take_child = match (own.get(si), children.get(ci)) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(&s), Some(child)) => first_stage_in(m, &child.id).is_none_or(|c| c < s),
        };
        if take_child {
            items.push(Item::Child(children[ci]));
            ci += 1;
        } else {
            items.push(Item::Stage(own[si]));
            si += 1;
        }
    }
    for item in items {
        match item {
            Item::Stage(i) => {
                let s = &m.stages[i];
                write!(out, "{pad}{INDENT}stage {} {}", s.kind.keyword(), s.id).unwrap();
                if let Some(l) = &s.label {
                    write!(out, " {}", quote(l)).unwrap();
                }
                out.push('\n');
            }
            Item::Child(c) => write_machine(m, c, depth + 1, out),
        }
    }
    writeln!(out, "{pad}}}").unwrap();
}

/// Index of the first stage declared anywhere under `machine`.
fn first_stage_in(m: &Model, machine: &str) -> Option<usize> {
    m.stages
        .iter()
        .position(|s| m.is_within(&s.machine, machine))
}
