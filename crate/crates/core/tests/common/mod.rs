#![allow(dead_code)]

pub mod dot;

use proptest::prelude::*;
use thingc::expr::{Action, BinOp, Expr, Value};
use thingc::model::{Arc, ArcKind, Endpoint, EventDef, Machine, Stage, StateVar};
use thingc::{Model, ModelBuilder, StageKind, VarType};

/// A stream of random choices drawn by proptest. Reads past the end yield 0,
/// so shrinking the vector shrinks the model.
pub struct Choices {
    vals: Vec<u32>,
    pos: usize,
}

impl Choices {
    pub fn new(vals: Vec<u32>) -> Self {
        Choices { vals, pos: 0 }
    }

    pub fn pick(&mut self, n: usize) -> usize {
        let v = self.vals.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        if n == 0 {
            0
        } else {
            v as usize % n
        }
    }

    pub fn chance(&mut self, percent: usize) -> bool {
        self.pick(100) < percent
    }

    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.pick((hi - lo + 1) as usize) as i64
    }
}

pub fn choices() -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(any::<u32>(), 0..240)
}

const THINGS: [&str; 4] = ["book", "form", "signal", "cart"];

struct Gen<'c> {
    c: &'c mut Choices,
    machines: Vec<Machine>,
    stages: Vec<Stage>,
    arcs: Vec<Arc>,
}

impl Gen<'_> {
    fn stage(&mut self, kind: StageKind, machine: &str) -> String {
        let id = format!("s{}", self.stages.len());
        let label = self
            .c
            .chance(20)
            .then(|| format!("label {}", self.stages.len()));
        self.stages.push(Stage {
            id: id.clone(),
            kind,
            machine: machine.to_string(),
            label,
            span: None,
        });
        id
    }

    /// Mostly positional default ids, sometimes an explicit one.
    fn arc_id(&mut self) -> String {
        if self.c.chance(15) {
            format!("arc{}", self.arcs.len())
        } else {
            String::new()
        }
    }

    fn flow(&mut self, thing: &str, src: &str, dst: &str) {
        let id = self.arc_id();
        self.arcs.push(Arc {
            id,
            kind: ArcKind::Flow,
            source: Endpoint::stage(src),
            target: Endpoint::stage(dst),
            thing: Some(thing.to_string()),
            guard: None,
            actions: Vec::new(),
            span: None,
        });
    }

    fn chain(&mut self) {
        let thing = THINGS[self.c.pick(THINGS.len())];
        let a = self.machines[self.c.pick(self.machines.len())].id.clone();
        let b = self.machines[self.c.pick(self.machines.len())].id.clone();
        let reuse: Vec<String> = self
            .stages
            .iter()
            .filter(|s| s.machine == a && s.kind == StageKind::Process)
            .map(|s| s.id.clone())
            .collect();
        let head = if !reuse.is_empty() && self.c.chance(30) {
            reuse[self.c.pick(reuse.len())].clone()
        } else {
            let kind = if self.c.chance(70) {
                StageKind::Create
            } else {
                StageKind::Process
            };
            self.stage(kind, &a)
        };
        match (a != b, self.c.pick(3)) {
            (true, _) | (false, 0) => {
                let rl = self.stage(StageKind::Release, &a);
                let ta = self.stage(StageKind::Transfer, &a);
                self.flow(thing, &head, &rl);
                self.flow(thing, &rl, &ta);
                let last = if a != b {
                    let tb = self.stage(StageKind::Transfer, &b);
                    self.flow(thing, &ta, &tb);
                    tb
                } else {
                    ta
                };
                let rc = self.stage(StageKind::Receive, &b);
                self.flow(thing, &last, &rc);
                if self.c.chance(50) {
                    let p = self.stage(StageKind::Process, &b);
                    self.flow(thing, &rc, &p);
                }
            }
            (false, 1) => {
                if self
                    .stages
                    .iter()
                    .any(|s| s.id == head && s.kind == StageKind::Create)
                {
                    let p = self.stage(StageKind::Process, &a);
                    self.flow(thing, &head, &p);
                }
            }
            _ => {
                let rc = self.stage(StageKind::Receive, &a);
                let p = self.stage(StageKind::Process, &a);
                self.flow(thing, &rc, &p);
            }
        }
    }

    fn guard(&mut self, vars: &[StateVar]) -> Expr {
        let v = &vars[self.c.pick(vars.len())];
        let atom = match &v.var_type {
            VarType::Number => {
                let ops = [
                    BinOp::Lt,
                    BinOp::Le,
                    BinOp::Ge,
                    BinOp::Gt,
                    BinOp::Eq,
                    BinOp::Ne,
                ];
                let op = ops[self.c.pick(ops.len())];
                let rhs = if self.c.chance(30) {
                    Expr::binary(BinOp::Sub, Expr::Now, Expr::Num(self.c.range(-3, 3)))
                } else {
                    Expr::Num(self.c.range(-20, 20))
                };
                Expr::binary(op, Expr::name(&v.id), rhs)
            }
            VarType::Enum(values) => {
                let sym = &values[self.c.pick(values.len())];
                Expr::binary(BinOp::Eq, Expr::name(&v.id), Expr::name(sym))
            }
        };
        match self.c.pick(4) {
            0 => Expr::Not(Box::new(atom)),
            1 => {
                let other = self.guard(vars);
                Expr::binary(BinOp::And, atom, other)
            }
            _ => atom,
        }
    }

    fn action(&mut self, vars: &[StateVar]) -> Action {
        let v = &vars[self.c.pick(vars.len())];
        let value = match &v.var_type {
            VarType::Number => Expr::binary(
                BinOp::Add,
                Expr::name(&v.id),
                Expr::Num(self.c.range(-2, 5)),
            ),
            VarType::Enum(values) => Expr::name(&values[self.c.pick(values.len())]),
        };
        Action {
            var: v.id.clone(),
            value,
        }
    }
}

/// A random model that validates cleanly and survives both simplification
/// levels: every Release/Transfer stage lies on a complete chain ending in
/// a Receive, and triggers avoid those stages.
pub fn random_model(c: &mut Choices) -> Model {
    let mut machines = vec![Machine {
        id: "m0".into(),
        name: "m0".into(),
        parent: None,
        is_actor: false,
        use_case: None,
        span: None,
    }];
    for i in 1..=1 + c.pick(4) {
        let parent = machines[c.pick(machines.len())].id.clone();
        let is_actor = c.chance(30);
        let use_case = (!is_actor && c.chance(25)).then(|| format!("use case {i}"));
        let name = if c.chance(30) {
            format!("Machine {i}")
        } else {
            format!("m{i}")
        };
        machines.push(Machine {
            id: format!("m{i}"),
            name,
            parent: Some(parent),
            is_actor,
            use_case,
            span: None,
        });
    }

    let machines = preorder(machines);

    let mut vars = Vec::new();
    if c.chance(60) {
        vars.push(StateVar {
            id: "count".into(),
            var_type: VarType::Number,
            initial: Value::Num(c.range(-5, 5)),
            span: None,
        });
    }
    if c.chance(50) {
        let values = vec!["off".to_string(), "on".to_string(), "idle".to_string()];
        let initial = Value::Sym(values[c.pick(3)].clone());
        vars.push(StateVar {
            id: "mode".into(),
            var_type: VarType::Enum(values),
            initial,
            span: None,
        });
    }

    let mut g = Gen {
        c,
        machines,
        stages: Vec::new(),
        arcs: Vec::new(),
    };
    for _ in 0..g.c.pick(6) {
        g.chain();
    }
    for _ in 0..g.c.pick(3) {
        let m = g.machines[g.c.pick(g.machines.len())].id.clone();
        let kind = [StageKind::Create, StageKind::Process][g.c.pick(2)];
        g.stage(kind, &m);
    }

    let plain: Vec<(String, StageKind)> = g
        .stages
        .iter()
        .filter(|s| !s.kind.is_transit())
        .map(|s| (s.id.clone(), s.kind))
        .collect();
    let sources: Vec<&String> = plain
        .iter()
        .filter(|(_, k)| matches!(k, StageKind::Create | StageKind::Process))
        .map(|(id, _)| id)
        .collect();
    if !sources.is_empty() {
        for _ in 0..g.c.pick(5) {
            let src = sources[g.c.pick(sources.len())].clone();
            let dst = plain[g.c.pick(plain.len())].0.clone();
            let guard = (!vars.is_empty() && g.c.chance(40)).then(|| g.guard(&vars));
            let actions = if !vars.is_empty() && g.c.chance(30) {
                (0..1 + g.c.pick(2)).map(|_| g.action(&vars)).collect()
            } else {
                Vec::new()
            };
            let id = g.arc_id();
            g.arcs.push(Arc {
                id,
                kind: ArcKind::Trigger,
                source: Endpoint::stage(&src),
                target: Endpoint::stage(&dst),
                thing: None,
                guard,
                actions,
                span: None,
            });
        }
    }

    // Stages serialize inside their machine's block.
    let order: Vec<String> = g.machines.iter().map(|m| m.id.clone()).collect();
    g.stages
        .sort_by_key(|s| order.iter().position(|m| *m == s.machine));

    let mut b = ModelBuilder::new();
    b.name("random");
    for m in &g.machines {
        b.add_machine(m.clone());
    }
    for s in &g.stages {
        b.add_stage(s.clone());
    }
    for a in &g.arcs {
        b.add_arc(a.clone());
    }
    for v in &vars {
        b.add_variable(v.clone());
    }
    let built_ids = b.build().expect("generated model is structurally valid");
    // Regions grow from one stage along adjacent arcs, so they stay connected.
    let stage_ids: Vec<String> = built_ids.stages.iter().map(|s| s.id.clone()).collect();
    if !stage_ids.is_empty() {
        for i in 0..g.c.pick(4) {
            let mut region = vec![stage_ids[g.c.pick(stage_ids.len())].clone()];
            for _ in 0..g.c.pick(4) {
                let frontier: Vec<&thingc::Arc> = built_ids
                    .arcs
                    .iter()
                    .filter(|a| !region.contains(&a.id))
                    .filter(|a| {
                        region
                            .iter()
                            .any(|r| a.source.id() == r || a.target.id() == r)
                    })
                    .collect();
                if frontier.is_empty() {
                    break;
                }
                let a = frontier[g.c.pick(frontier.len())];
                region.push(a.id.clone());
                for end in [a.source.id(), a.target.id()] {
                    if g.c.chance(60) && !region.iter().any(|r| r == end) {
                        region.push(end.to_string());
                    }
                }
            }
            let time = g.c.chance(20).then(|| "every second".to_string());
            b.add_event(EventDef {
                id: format!("E{}", i + 1),
                name: format!("event {}", i + 1),
                region,
                time,
                span: None,
            });
        }
    }
    b.build().expect("generated model is structurally valid")
}

/// Nested machines serialize as nested blocks, so text round trips yield
/// them in depth-first order.
fn preorder(machines: Vec<Machine>) -> Vec<Machine> {
    fn visit(all: &[Machine], parent: Option<&str>, out: &mut Vec<Machine>) {
        for m in all.iter().filter(|m| m.parent.as_deref() == parent) {
            out.push(m.clone());
            visit(all, Some(&m.id), out);
        }
    }
    let mut out = Vec::new();
    visit(&machines, None, &mut out);
    out
}

pub fn model_strategy() -> impl Strategy<Value = Model> {
    choices().prop_map(|v| random_model(&mut Choices::new(v)))
}

/// Expressions of any shape, for syntax round trips.
pub fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-1000i64..1000).prop_map(Expr::Num),
        prop::sample::select(vec!["count", "mode", "on", "off", "x_1"]).prop_map(Expr::name),
        Just(Expr::Now),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let ops = vec![
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::Ge,
            BinOp::Gt,
            BinOp::And,
            BinOp::Or,
        ];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
            (prop::sample::select(ops), inner.clone(), inner)
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

// Written out independently of the library's own table.
pub fn legal_flow(src: StageKind, dst: StageKind, same_machine: bool) -> bool {
    use StageKind::*;
    if !same_machine {
        return src == Transfer && dst == Transfer;
    }
    matches!(
        (src, dst),
        (Transfer, Receive)
            | (Receive, Process)
            | (Receive, Release)
            | (Process, Release)
            | (Create, Process)
            | (Create, Release)
            | (Release, Transfer)
    )
}

pub fn corpus_models() -> Vec<(&'static str, Model)> {
    thingc::corpus::MODELS
        .iter()
        .map(|m| (m.name, m.model()))
        .collect()
}
