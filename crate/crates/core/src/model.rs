//! TM domain types.
//!
//! A [`Model`] is immutable once built. All collections keep declaration
//! order, which is the tie-break order used by every downstream pass.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diag::{Diagnostic, Location, SourceSpan};
use crate::expr::{Action, Expr, Value};

/// The five generic processes. Arrive and accept are folded into `Receive`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Create,
    Process,
    Release,
    Transfer,
    Receive,
}

impl StageKind {
    pub const ALL: [StageKind; 5] = [
        StageKind::Create,
        StageKind::Process,
        StageKind::Release,
        StageKind::Transfer,
        StageKind::Receive,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            StageKind::Create => "create",
            StageKind::Process => "process",
            StageKind::Release => "release",
            StageKind::Transfer => "transfer",
            StageKind::Receive => "receive",
        }
    }

    /// Release and transfer only move things across a boundary.
    pub fn is_transit(self) -> bool {
        matches!(self, StageKind::Release | StageKind::Transfer)
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageKind::Create => "Create",
            StageKind::Process => "Process",
            StageKind::Release => "Release",
            StageKind::Transfer => "Transfer",
            StageKind::Receive => "Receive",
        })
    }
}

impl FromStr for StageKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageKind::ALL
            .into_iter()
            .find(|k| k.keyword().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown stage kind `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    Flow,
    Trigger,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Machine {
    pub id: String,
    pub name: String,
    pub parent: Option<String>,
    pub is_actor: bool,
    /// Optional use-case grouping tag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub use_case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub id: String,
    pub kind: StageKind,
    pub machine: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
}

/// An arc endpoint. Unsimplified models only use stages; the second
/// simplification level re-anchors some arcs onto machine boundaries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Stage(String),
    Machine(String),
}

impl Endpoint {
    pub fn stage(id: &str) -> Self {
        Endpoint::Stage(id.to_string())
    }

    pub fn as_stage(&self) -> Option<&str> {
        match self {
            Endpoint::Stage(s) => Some(s),
            Endpoint::Machine(_) => None,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Endpoint::Stage(s) | Endpoint::Machine(s) => s,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Stage(s) => f.write_str(s),
            Endpoint::Machine(m) => write!(f, "@{m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub id: String,
    pub kind: ArcKind,
    pub source: Endpoint,
    pub target: Endpoint,
    /// Required on flows, absent on triggers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<Expr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
}

impl Arc {
    pub fn is_flow(&self) -> bool {
        self.kind == ArcKind::Flow
    }

    pub fn is_trigger(&self) -> bool {
        self.kind == ArcKind::Trigger
    }

    /// Structural identity ignoring id and span.
    pub(crate) fn same_shape(&self, other: &Arc) -> bool {
        self.kind == other.kind
            && self.source == other.source
            && self.target == other.target
            && self.thing == other.thing
            && self.guard == other.guard
            && self.actions == other.actions
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Number,
    Enum(Vec<String>),
}

impl VarType {
    pub fn admits(&self, value: &Value) -> bool {
        match (self, value) {
            (VarType::Number, Value::Num(_)) => true,
            (VarType::Enum(values), Value::Sym(s)) => values.contains(s),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVar {
    pub id: String,
    pub var_type: VarType,
    pub initial: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
}

/// An event: a named region of the model plus an optional time annotation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDef {
    pub id: String,
    pub name: String,
    /// Stage ids and arc ids. A stage id wins when an arc has the same id.
    pub region: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub name: String,
    pub machines: Vec<Machine>,
    pub stages: Vec<Stage>,
    pub arcs: Vec<Arc>,
    pub variables: Vec<StateVar>,
    pub events: Vec<EventDef>,
}

impl Model {
    pub fn root(&self) -> &Machine {
        self.machines
            .iter()
            .find(|m| m.parent.is_none())
            .expect("a built model has a root machine")
    }

    pub fn machine(&self, id: &str) -> Option<&Machine> {
        self.machines.iter().find(|m| m.id == id)
    }

    pub fn stage(&self, id: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.id == id)
    }

    pub fn arc(&self, id: &str) -> Option<&Arc> {
        self.arcs.iter().find(|a| a.id == id)
    }

    pub fn variable(&self, id: &str) -> Option<&StateVar> {
        self.variables.iter().find(|v| v.id == id)
    }

    pub fn event(&self, id: &str) -> Option<&EventDef> {
        self.events.iter().find(|e| e.id == id)
    }

    /// Machine that owns an endpoint.
    pub fn endpoint_machine(&self, ep: &Endpoint) -> Option<&str> {
        match ep {
            Endpoint::Stage(s) => self.stage(s).map(|s| s.machine.as_str()),
            Endpoint::Machine(m) => self.machine(m).map(|m| m.id.as_str()),
        }
    }

    pub fn endpoint_kind(&self, ep: &Endpoint) -> Option<StageKind> {
        ep.as_stage().and_then(|s| self.stage(s)).map(|s| s.kind)
    }

    /// Direct children of a machine in declaration order.
    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Machine> + 'a {
        self.machines
            .iter()
            .filter(move |m| m.parent.as_deref() == Some(id))
    }

    /// Children of the root machine.
    pub fn top_level(&self) -> Vec<&Machine> {
        self.children(&self.root().id).collect()
    }

    /// Whether `id` equals `ancestor` or lies beneath it.
    pub fn is_within(&self, id: &str, ancestor: &str) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.machine(c).and_then(|m| m.parent.as_deref());
        }
        false
    }

    /// Path from the root down to `id`, inclusive.
    pub fn ancestry(&self, id: &str) -> Vec<&str> {
        let mut path = Vec::new();
        let mut cur = self.machine(id);
        while let Some(m) = cur {
            path.push(m.id.as_str());
            cur = m.parent.as_deref().and_then(|p| self.machine(p));
        }
        path.reverse();
        path
    }

    /// Copy of the model with every source span removed.
    pub fn without_spans(&self) -> Model {
        let mut m = self.clone();
        m.machines.iter_mut().for_each(|x| x.span = None);
        m.stages.iter_mut().for_each(|x| x.span = None);
        m.arcs.iter_mut().for_each(|x| x.span = None);
        m.variables.iter_mut().for_each(|x| x.span = None);
        m.events.iter_mut().for_each(|x| x.span = None);
        m
    }

    pub fn stage_count(&self, kind: StageKind) -> usize {
        self.stages.iter().filter(|s| s.kind == kind).count()
    }

    pub fn flows(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.iter().filter(|a| a.is_flow())
    }

    pub fn triggers(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.iter().filter(|a| a.is_trigger())
    }
}

/// Default arc id for the `index`-th (1-based) arc of `kind`.
pub fn default_arc_id(kind: ArcKind, index: usize) -> String {
    match kind {
        ArcKind::Flow => format!("f{index}"),
        ArcKind::Trigger => format!("t{index}"),
    }
}

/// Collects declarations and checks them into a [`Model`].
///
/// References may point forward; everything is resolved in [`build`].
///
/// [`build`]: ModelBuilder::build
#[derive(Clone, Debug, Default)]
pub struct ModelBuilder {
    name: Option<String>,
    machines: Vec<Machine>,
    stages: Vec<Stage>,
    arcs: Vec<Arc>,
    variables: Vec<StateVar>,
    events: Vec<EventDef>,
    flow_count: usize,
    trigger_count: usize,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn name(&mut self, name: &str) -> &mut Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn add_machine(&mut self, machine: Machine) -> &mut Self {
        self.machines.push(machine);
        self
    }

    pub fn machine(&mut self, id: &str, parent: Option<&str>) -> &mut Self {
        self.add_machine(Machine {
            id: id.to_string(),
            name: id.to_string(),
            parent: parent.map(str::to_string),
            is_actor: false,
            use_case: None,
            span: None,
        })
    }

    pub fn actor(&mut self, id: &str, parent: Option<&str>) -> &mut Self {
        self.machine(id, parent);
        self.machines.last_mut().unwrap().is_actor = true;
        self
    }

    pub fn add_stage(&mut self, stage: Stage) -> &mut Self {
        self.stages.push(stage);
        self
    }

    pub fn stage(&mut self, kind: StageKind, id: &str, machine: &str) -> &mut Self {
        self.add_stage(Stage {
            id: id.to_string(),
            kind,
            machine: machine.to_string(),
            label: None,
            span: None,
        })
    }

    /// Adds an arc; an empty id is replaced by the positional default.
    pub fn add_arc(&mut self, mut arc: Arc) -> &mut Self {
        let index = match arc.kind {
            ArcKind::Flow => {
                self.flow_count += 1;
                self.flow_count
            }
            ArcKind::Trigger => {
                self.trigger_count += 1;
                self.trigger_count
            }
        };
        if arc.id.is_empty() {
            arc.id = default_arc_id(arc.kind, index);
        }
        self.arcs.push(arc);
        self
    }

    pub fn flow(&mut self, thing: &str, source: &str, target: &str) -> &mut Self {
        self.add_arc(Arc {
            id: String::new(),
            kind: ArcKind::Flow,
            source: Endpoint::stage(source),
            target: Endpoint::stage(target),
            thing: Some(thing.to_string()),
            guard: None,
            actions: Vec::new(),
            span: None,
        })
    }

    pub fn trigger(&mut self, source: &str, target: &str) -> &mut Self {
        self.add_arc(Arc {
            id: String::new(),
            kind: ArcKind::Trigger,
            source: Endpoint::stage(source),
            target: Endpoint::stage(target),
            thing: None,
            guard: None,
            actions: Vec::new(),
            span: None,
        })
    }

    pub fn add_variable(&mut self, var: StateVar) -> &mut Self {
        self.variables.push(var);
        self
    }

    pub fn add_event(&mut self, event: EventDef) -> &mut Self {
        self.events.push(event);
        self
    }

    pub fn event(&mut self, id: &str, name: &str, region: &[&str]) -> &mut Self {
        self.add_event(EventDef {
            id: id.to_string(),
            name: name.to_string(),
            region: region.iter().map(|s| s.to_string()).collect(),
            time: None,
            span: None,
        })
    }

    /// Checks structural invariants and produces the model.
    pub fn build(&self) -> Result<Model, Vec<Diagnostic>> {
        let model = Model {
            name: self
                .name
                .clone()
                .or_else(|| {
                    self.machines
                        .iter()
                        .find(|m| m.parent.is_none())
                        .map(|m| m.id.clone())
                })
                .unwrap_or_default(),
            machines: self.machines.clone(),
            stages: self.stages.clone(),
            arcs: self.arcs.clone(),
            variables: self.variables.clone(),
            events: self.events.clone(),
        };
        let diags = check_structure(&model);
        if diags.is_empty() {
            Ok(model)
        } else {
            Err(diags)
        }
    }
}

/// Re-checks the structural invariants of an already assembled model,
/// e.g. one imported from JSON.
pub fn check_structure(model: &Model) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let loc = |id: &str, span: &Option<SourceSpan>| match span {
        Some(s) => Location::Span(s.clone()),
        None => Location::Element(id.to_string()),
    };

    // uniqueness per kind
    fn dups<'a>(
        ids: impl Iterator<Item = (&'a str, &'a Option<SourceSpan>)>,
        what: &str,
        diags: &mut Vec<Diagnostic>,
    ) {
        let mut seen = HashSet::new();
        for (id, span) in ids {
            if !seen.insert(id) {
                let location = match span {
                    Some(s) => Location::Span(s.clone()),
                    None => Location::Element(id.to_string()),
                };
                diags.push(Diagnostic::error(
                    "duplicate-id",
                    format!("{what} `{id}` is declared more than once"),
                    location,
                ));
            }
        }
    }
    dups(
        model.machines.iter().map(|m| (m.id.as_str(), &m.span)),
        "machine",
        &mut diags,
    );
    dups(
        model.stages.iter().map(|s| (s.id.as_str(), &s.span)),
        "stage",
        &mut diags,
    );
    dups(
        model.arcs.iter().map(|a| (a.id.as_str(), &a.span)),
        "arc",
        &mut diags,
    );
    dups(
        model.variables.iter().map(|v| (v.id.as_str(), &v.span)),
        "variable",
        &mut diags,
    );
    dups(
        model.events.iter().map(|e| (e.id.as_str(), &e.span)),
        "event",
        &mut diags,
    );

    let machines: HashMap<&str, &Machine> =
        model.machines.iter().map(|m| (m.id.as_str(), m)).collect();
    let stages: HashSet<&str> = model.stages.iter().map(|s| s.id.as_str()).collect();
    let arcs: HashSet<&str> = model.arcs.iter().map(|a| a.id.as_str()).collect();
    let vars: HashSet<&str> = model.variables.iter().map(|v| v.id.as_str()).collect();

    // machine tree
    let roots: Vec<&Machine> = model
        .machines
        .iter()
        .filter(|m| m.parent.is_none())
        .collect();
    match roots.len() {
        0 => diags.push(Diagnostic::error(
            "no-root-machine",
            "model has no root machine",
            Location::Element(model.name.clone()),
        )),
        1 => {}
        _ => {
            for extra in &roots[1..] {
                diags.push(Diagnostic::error(
                    "multiple-root-machines",
                    format!(
                        "machine `{}` is a second root (first root is `{}`)",
                        extra.id, roots[0].id
                    ),
                    loc(&extra.id, &extra.span),
                ));
            }
        }
    }
    for m in &model.machines {
        if let Some(p) = &m.parent {
            if !machines.contains_key(p.as_str()) {
                diags.push(Diagnostic::error(
                    "dangling-reference",
                    format!("machine `{}` names unknown parent `{p}`", m.id),
                    loc(&m.id, &m.span),
                ));
                continue;
            }
            // walk up; a cycle never reaches a root
            let mut seen = HashSet::from([m.id.as_str()]);
            let mut cur = p.as_str();
            loop {
                if !seen.insert(cur) {
                    diags.push(Diagnostic::error(
                        "machine-cycle",
                        format!("machine `{}` is its own ancestor", m.id),
                        loc(&m.id, &m.span),
                    ));
                    break;
                }
                match machines.get(cur).and_then(|x| x.parent.as_deref()) {
                    Some(next) => cur = next,
                    None => break,
                }
            }
        }
    }

    for s in &model.stages {
        if !machines.contains_key(s.machine.as_str()) {
            diags.push(Diagnostic::error(
                "dangling-reference",
                format!(
                    "stage `{}` belongs to unknown machine `{}`",
                    s.id, s.machine
                ),
                loc(&s.id, &s.span),
            ));
        }
    }

    for a in &model.arcs {
        for ep in [&a.source, &a.target] {
            let ok = match ep {
                Endpoint::Stage(s) => stages.contains(s.as_str()),
                Endpoint::Machine(m) => machines.contains_key(m.as_str()),
            };
            if !ok {
                diags.push(Diagnostic::error(
                    "dangling-reference",
                    format!("arc `{}` references unknown endpoint `{ep}`", a.id),
                    loc(&a.id, &a.span),
                ));
            }
        }
        match a.kind {
            ArcKind::Flow => {
                if a.thing.as_deref().is_none_or(str::is_empty) {
                    diags.push(Diagnostic::error(
                        "flow-missing-thing",
                        format!("flow arc `{}` does not name the thing it carries", a.id),
                        loc(&a.id, &a.span),
                    ));
                }
                if a.guard.is_some() || !a.actions.is_empty() {
                    diags.push(Diagnostic::error(
                        "flow-with-guard",
                        format!("flow arc `{}` carries a guard or actions", a.id),
                        loc(&a.id, &a.span),
                    ));
                }
            }
            ArcKind::Trigger => {
                if a.thing.is_some() {
                    diags.push(Diagnostic::error(
                        "trigger-with-thing",
                        format!("trigger arc `{}` must not carry a thing", a.id),
                        loc(&a.id, &a.span),
                    ));
                }
            }
        }
        for act in &a.actions {
            if !vars.contains(act.var.as_str()) {
                diags.push(Diagnostic::error(
                    "dangling-reference",
                    format!("arc `{}` assigns unknown variable `{}`", a.id, act.var),
                    loc(&a.id, &a.span),
                ));
            }
        }
    }

    for v in &model.variables {
        if let VarType::Enum(values) = &v.var_type {
            if values.is_empty() {
                diags.push(Diagnostic::error(
                    "empty-enum",
                    format!("variable `{}` has an empty enum domain", v.id),
                    loc(&v.id, &v.span),
                ));
            }
        }
        if !v.var_type.admits(&v.initial) {
            diags.push(Diagnostic::error(
                "bad-initial",
                format!(
                    "initial value `{}` is outside the domain of `{}`",
                    v.initial, v.id
                ),
                loc(&v.id, &v.span),
            ));
        }
    }

    for e in &model.events {
        if e.region.is_empty() {
            diags.push(Diagnostic::error(
                "region-empty",
                format!("event `{}` has an empty region", e.id),
                loc(&e.id, &e.span),
            ));
        }
        for r in &e.region {
            if !stages.contains(r.as_str()) && !arcs.contains(r.as_str()) {
                diags.push(Diagnostic::error(
                    "region-dangling",
                    format!("event `{}` references unknown element `{r}`", e.id),
                    loc(&e.id, &e.span),
                ));
            }
        }
    }
    diags
}

/// Counts used by summaries and tests.
pub fn kind_census(model: &Model) -> BTreeMap<StageKind, usize> {
    let mut census = BTreeMap::new();
    for s in &model.stages {
        *census.entry(s.kind).or_insert(0) += 1;
    }
    census
}
