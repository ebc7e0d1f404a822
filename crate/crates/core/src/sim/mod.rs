//! Tick-based token simulation.
//!
//! Each tick runs three phases. Injections put new things on their Transfer
//! stages. Every token that was already in place moves one hop along the
//! single outgoing flow for its thing, or is consumed when there is none.
//! Finally the trigger phase works through the stages that saw activity,
//! firing their triggers in declaration order; a fired trigger activates its
//! target, which can fire further triggers in the same tick. Each trigger
//! fires at most once per tick.

mod occurrences;
mod scenario;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::expr::{eval, Bindings, EvalError, Value};
use crate::model::{Model, StageKind};

pub use occurrences::{check_consistency, trace_to_events, EventOccurrence, OrderViolation};
pub use scenario::{check_scenario, load_scenario, load_scenario_from, Injection, Scenario};

pub const DEFAULT_STEP_BOUND: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Move,
    Trigger,
    Assign,
    Create,
    Consume,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StepKind::Move => "move",
            StepKind::Trigger => "trigger",
            StepKind::Assign => "assign",
            StepKind::Create => "create",
            StepKind::Consume => "consume",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub tick: u64,
    pub kind: StepKind,
    /// move: arc, target stage. trigger: arc, target stage. assign: arc.
    /// create, consume: stage.
    pub elements: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPosition {
    pub instance: String,
    pub stage: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalState {
    pub variables: BTreeMap<String, Value>,
    pub tokens: Vec<TokenPosition>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub final_state: FinalState,
}

#[derive(Serialize, Deserialize)]
struct FinalLine {
    #[serde(rename = "final")]
    final_state: FinalState,
}

impl Trace {
    /// One JSON object per step, then a `{"final": ...}` line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("step serializes"));
            out.push('\n');
        }
        let last = FinalLine {
            final_state: self.final_state.clone(),
        };
        out.push_str(&serde_json::to_string(&last).expect("state serializes"));
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, serde_json::Error> {
        let mut trace = Trace::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            if line.starts_with("{\"stamp\"") {
                continue;
            }
            if line.starts_with("{\"final\"") {
                trace.final_state = serde_json::from_str::<FinalLine>(line)?.final_state;
            } else {
                trace.steps.push(serde_json::from_str(line)?);
            }
        }
        Ok(trace)
    }

    /// Values assigned to `var`, in order.
    pub fn assignments(&self, var: &str) -> Vec<Value> {
        self.steps
            .iter()
            .filter(|s| s.kind == StepKind::Assign)
            .filter_map(|s| s.values.get(var).cloned())
            .collect()
    }

    pub fn count(&self, kind: StepKind, element: &str) -> usize {
        self.steps
            .iter()
            .filter(|s| s.kind == kind && s.elements.iter().any(|e| e == element))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("scenario does not fit the model")]
    Scenario(Vec<Diagnostic>),
    #[error("stage `{stage}` has several outgoing flows for `{thing}`")]
    NondeterministicRouting { stage: String, thing: String },
    #[error("tick {tick} exceeded {bound} steps")]
    Divergence { tick: u64, bound: usize },
    #[error("arc `{arc}`: {error}")]
    Eval { arc: String, error: EvalError },
    #[error("arc `{arc}` assigns {value} to `{var}`, outside its type")]
    BadAssignment {
        arc: String,
        var: String,
        value: Value,
    },
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::Scenario(_) => "bad-scenario",
            SimError::NondeterministicRouting { .. } => "nondeterministic-routing",
            SimError::Divergence { .. } => "divergence",
            SimError::Eval { .. } => "eval-error",
            SimError::BadAssignment { .. } => "bad-assignment",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimOptions {
    /// Maximum steps in a single tick before the run is declared divergent.
    pub step_bound: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            step_bound: DEFAULT_STEP_BOUND,
        }
    }
}

struct Token {
    instance: String,
    thing: String,
    stage: String,
    arrived: u64,
}

struct Run<'m> {
    model: &'m Model,
    opts: SimOptions,
    vars: Bindings,
    tokens: Vec<Token>,
    minted: HashMap<String, usize>,
    steps: Vec<Step>,
    tick_start: usize,
}

impl<'m> Run<'m> {
    fn push(&mut self, step: Step) -> Result<(), SimError> {
        self.steps.push(step);
        if self.steps.len() - self.tick_start > self.opts.step_bound {
            return Err(SimError::Divergence {
                tick: self.vars.now as u64,
                bound: self.opts.step_bound,
            });
        }
        Ok(())
    }

    fn mint(&mut self, thing: &str, stage: &str, tick: u64) -> Result<(), SimError> {
        let n = self.minted.entry(thing.to_string()).or_default();
        *n += 1;
        let instance = format!("{thing}#{n}");
        self.tokens.push(Token {
            instance: instance.clone(),
            thing: thing.to_string(),
            stage: stage.to_string(),
            arrived: tick,
        });
        self.push(Step {
            tick,
            kind: StepKind::Create,
            elements: vec![stage.to_string()],
            instance: Some(instance),
            values: BTreeMap::new(),
        })
    }

    fn moves(&mut self, tick: u64, active: &mut Vec<String>) -> Result<(), SimError> {
        let m = self.model;
        let mut kept = Vec::new();
        let tokens = std::mem::take(&mut self.tokens);
        let mut pending = Vec::new();
        for mut tok in tokens {
            if tok.arrived >= tick {
                kept.push(tok);
                continue;
            }
            let out: Vec<_> = m
                .flows()
                .filter(|a| a.source.as_stage() == Some(tok.stage.as_str()))
                .filter(|a| a.thing.as_deref() == Some(tok.thing.as_str()))
                .collect();
            match out.as_slice() {
                [] => pending.push(Step {
                    tick,
                    kind: StepKind::Consume,
                    elements: vec![tok.stage.clone()],
                    instance: Some(tok.instance),
                    values: BTreeMap::new(),
                }),
                [arc] => {
                    let target = arc.target.id().to_string();
                    pending.push(Step {
                        tick,
                        kind: StepKind::Move,
                        elements: vec![arc.id.clone(), target.clone()],
                        instance: Some(tok.instance.clone()),
                        values: BTreeMap::new(),
                    });
                    // machine-level endpoints have nowhere further to go
                    if arc.target.as_stage().is_some() {
                        active.push(target.clone());
                        tok.stage = target;
                        tok.arrived = tick;
                        kept.push(tok);
                    }
                }
                _ => {
                    return Err(SimError::NondeterministicRouting {
                        stage: tok.stage,
                        thing: tok.thing,
                    })
                }
            }
        }
        self.tokens = kept;
        for s in pending {
            self.push(s)?;
        }
        Ok(())
    }

    fn triggers(&mut self, tick: u64, active: Vec<String>) -> Result<(), SimError> {
        let m = self.model;
        let mut queue: VecDeque<String> = active.into();
        let mut fired: HashSet<&str> = HashSet::new();
        while let Some(stage) = queue.pop_front() {
            let candidates: Vec<_> = m
                .triggers()
                .filter(|a| a.source.as_stage() == Some(stage.as_str()))
                .filter(|a| !fired.contains(a.id.as_str()))
                .collect();
            if candidates.is_empty() {
                continue;
            }
            // all guards of one stage see the same variable values
            let snapshot = self.vars.clone();
            let mut firing = Vec::new();
            for arc in candidates {
                let pass = match &arc.guard {
                    None => true,
                    Some(g) => match eval(g, &snapshot) {
                        Ok(Value::Bool(b)) => b,
                        Ok(other) => {
                            return Err(SimError::Eval {
                                arc: arc.id.clone(),
                                error: EvalError::Operand {
                                    op: "if",
                                    expected: "a boolean",
                                    got: other,
                                },
                            })
                        }
                        Err(error) => {
                            return Err(SimError::Eval {
                                arc: arc.id.clone(),
                                error,
                            })
                        }
                    },
                };
                if pass {
                    firing.push(arc);
                }
            }
            for arc in firing {
                fired.insert(arc.id.as_str());
                let target = arc.target.id().to_string();
                self.push(Step {
                    tick,
                    kind: StepKind::Trigger,
                    elements: vec![arc.id.clone(), target.clone()],
                    instance: None,
                    values: BTreeMap::new(),
                })?;
                for act in &arc.actions {
                    let value = eval(&act.value, &self.vars).map_err(|error| SimError::Eval {
                        arc: arc.id.clone(),
                        error,
                    })?;
                    let admits = m
                        .variable(&act.var)
                        .is_none_or(|v| v.var_type.admits(&value));
                    if !admits {
                        return Err(SimError::BadAssignment {
                            arc: arc.id.clone(),
                            var: act.var.clone(),
                            value,
                        });
                    }
                    self.vars.values.insert(act.var.clone(), value.clone());
                    self.push(Step {
                        tick,
                        kind: StepKind::Assign,
                        elements: vec![arc.id.clone()],
                        instance: None,
                        values: BTreeMap::from([(act.var.clone(), value)]),
                    })?;
                }
                if arc.target.as_stage().is_none() {
                    continue;
                }
                if m.endpoint_kind(&arc.target) == Some(StageKind::Create) {
                    let mut things: Vec<&str> = Vec::new();
                    for f in m.flows() {
                        if f.source.as_stage() == Some(target.as_str()) {
                            let t = f.thing.as_deref().unwrap_or_default();
                            if !things.contains(&t) {
                                things.push(t);
                            }
                        }
                    }
                    for t in things {
                        self.mint(t, &target, tick)?;
                    }
                }
                queue.push_back(target);
            }
        }
        Ok(())
    }
}

/// Runs `sc` on `m` with default options.
pub fn simulate(m: &Model, sc: &Scenario) -> Result<Trace, SimError> {
    simulate_with(m, sc, SimOptions::default())
}

pub fn simulate_with(m: &Model, sc: &Scenario, opts: SimOptions) -> Result<Trace, SimError> {
    let problems = check_scenario(m, sc);
    if !problems.is_empty() {
        return Err(SimError::Scenario(problems));
    }
    let mut run = Run {
        model: m,
        opts,
        vars: Bindings {
            values: m
                .variables
                .iter()
                .map(|v| (v.id.clone(), v.initial.clone()))
                .collect(),
            now: 0,
        },
        tokens: Vec::new(),
        minted: HashMap::new(),
        steps: Vec::new(),
        tick_start: 0,
    };

    for tick in 0..sc.horizon {
        run.vars.now = tick as i64;
        run.tick_start = run.steps.len();
        let mut active = Vec::new();
        for inj in sc.at(tick) {
            run.mint(&inj.thing, &inj.stage, tick)?;
            active.push(inj.stage.clone());
        }
        run.moves(tick, &mut active)?;
        run.triggers(tick, active)?;
    }

    Ok(Trace {
        steps: run.steps,
        final_state: FinalState {
            variables: run.vars.values,
            tokens: run
                .tokens
                .into_iter()
                .map(|t| TokenPosition {
                    instance: t.instance,
                    stage: t.stage,
                })
                .collect(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    const RELAY: &str = r#"
model relay
var n : number = 0

machine root {
  machine a {
    stage create c
    stage release rl
    stage transfer ta
  }
  machine b {
    stage transfer tb
    stage receive rc
    stage process p
    stage create k
  }
}

flow x c -> rl
flow x rl -> ta
flow x ta -> tb
flow x tb -> rc
flow x rc -> p
trigger p -> k do n := n + 1
"#;

    #[test]
    fn token_walks_one_hop_per_tick() {
        let m = parse(RELAY).unwrap();
        let mut sc = Scenario::new("s", 8);
        sc.inject(0, "x", "ta");
        let t = simulate(&m, &sc).unwrap();
        let moves: Vec<(u64, &str)> = t
            .steps
            .iter()
            .filter(|s| s.kind == StepKind::Move)
            .map(|s| (s.tick, s.elements[1].as_str()))
            .collect();
        assert_eq!(moves, [(1, "tb"), (2, "rc"), (3, "p")]);
        assert_eq!(t.count(StepKind::Trigger, "t1"), 1);
        assert_eq!(t.assignments("n"), [Value::Num(1)]);
        assert_eq!(t.count(StepKind::Consume, "p"), 1);
        assert!(t.final_state.tokens.is_empty());
    }

    #[test]
    fn empty_scenario_changes_nothing() {
        let m = parse(RELAY).unwrap();
        let t = simulate(&m, &Scenario::new("s", 5)).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.final_state.variables["n"], Value::Num(0));
    }

    #[test]
    fn jsonl_round_trip() {
        let m = parse(RELAY).unwrap();
        let mut sc = Scenario::new("s", 6);
        sc.inject(0, "x", "ta");
        let t = simulate(&m, &sc).unwrap();
        assert_eq!(Trace::from_jsonl(&t.to_jsonl()).unwrap(), t);
    }

    #[test]
    fn forked_routing_is_rejected() {
        let text = RELAY.replace("flow x rc -> p", "flow x rc -> p\nflow x tb -> p");
        let m = parse(&text).unwrap();
        let mut sc = Scenario::new("s", 6);
        sc.inject(0, "x", "ta");
        let err = simulate(&m, &sc).unwrap_err();
        assert_eq!(err.code(), "nondeterministic-routing");
    }

    #[test]
    fn injecting_into_process_is_rejected() {
        let m = parse(RELAY).unwrap();
        let mut sc = Scenario::new("s", 6);
        sc.inject(0, "x", "p");
        match simulate(&m, &sc).unwrap_err() {
            SimError::Scenario(d) => assert_eq!(d[0].code, "inject-not-transfer"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn runaway_trigger_loops_diverge() {
        let text = RELAY.replace(
            "trigger p -> k do n := n + 1",
            "trigger p -> k do n := n + 1\ntrigger k -> p",
        );
        let m = parse(&text).unwrap();
        let mut sc = Scenario::new("s", 6);
        sc.inject(0, "x", "ta");
        // each trigger fires once per tick, so a two-arc loop settles
        assert!(simulate(&m, &sc).is_ok());
        let err = simulate_with(&m, &sc, SimOptions { step_bound: 2 }).unwrap_err();
        assert_eq!(err.code(), "divergence");
    }
}
