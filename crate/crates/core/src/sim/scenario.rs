use serde::{Deserialize, Serialize};

use crate::diag::{Diagnostic, Location, SourceSpan};
use crate::model::{Model, StageKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    pub tick: u64,
    pub thing: String,
    pub stage: String,
    /// Source line, when read from text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub horizon: u64,
    pub injections: Vec<Injection>,
}

impl Scenario {
    pub fn new(name: &str, horizon: u64) -> Self {
        Scenario {
            name: name.to_string(),
            horizon,
            injections: Vec::new(),
        }
    }

    pub fn inject(&mut self, tick: u64, thing: &str, stage: &str) -> &mut Self {
        self.injections.push(Injection {
            tick,
            thing: thing.to_string(),
            stage: stage.to_string(),
            line: None,
        });
        self
    }

    /// Injections scheduled for `tick`, in file order.
    pub fn at(&self, tick: u64) -> impl Iterator<Item = &Injection> {
        self.injections.iter().filter(move |i| i.tick == tick)
    }
}

/// Reads `.tms` text:
///
/// ```text
/// scenario hold          # optional
/// horizon 30
/// at 0 inject signal into r_tr
/// at 1..4 inject signal into r_tr
/// ```
pub fn load_scenario(text: &str) -> Result<Scenario, Vec<Diagnostic>> {
    load_scenario_from(text, "<scenario>")
}

pub fn load_scenario_from(text: &str, file: &str) -> Result<Scenario, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut sc = Scenario::default();
    let mut horizon: Option<u64> = None;
    let at = |line: u32, len: usize| {
        Location::Span(SourceSpan::new(file, line, 1, line, len.max(1) as u32))
    };

    for (idx, raw) in text.lines().enumerate() {
        let n = idx as u32 + 1;
        let body = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        let bad = |msg: String| Diagnostic::error("syntax-error", msg, at(n, raw.len()));
        match words.as_slice() {
            [] => {}
            ["scenario", name] => sc.name = name.to_string(),
            ["horizon", h] => match h.parse::<u64>() {
                Ok(v) if horizon.is_none() => horizon = Some(v),
                Ok(_) => diags.push(Diagnostic::error(
                    "duplicate-horizon",
                    "horizon given twice",
                    at(n, raw.len()),
                )),
                Err(_) => diags.push(bad(format!("bad horizon `{h}`"))),
            },
            ["at", ticks, "inject", thing, "into", stage] => match parse_ticks(ticks) {
                Some((lo, hi)) => {
                    for tick in lo..=hi {
                        sc.injections.push(Injection {
                            tick,
                            thing: thing.to_string(),
                            stage: stage.to_string(),
                            line: Some(n),
                        });
                    }
                }
                None => diags.push(bad(format!("bad tick `{ticks}`"))),
            },
            _ => diags.push(bad(format!(
                "expected `horizon <n>` or `at <tick> inject <thing> into <stage>`, got `{}`",
                body.trim()
            ))),
        }
    }

    match horizon {
        None => diags.push(Diagnostic::error(
            "missing-horizon",
            "scenario has no `horizon` line",
            at(1, 1),
        )),
        Some(h) => {
            sc.horizon = h;
            for inj in sc.injections.iter().filter(|i| i.tick >= h) {
                diags.push(Diagnostic::error(
                    "inject-after-horizon",
                    format!("injection at tick {} is not before horizon {h}", inj.tick),
                    at(inj.line.unwrap_or(1), 1),
                ));
            }
        }
    }
    diags.dedup();
    if diags.is_empty() {
        Ok(sc)
    } else {
        Err(diags)
    }
}

fn parse_ticks(s: &str) -> Option<(u64, u64)> {
    match s.split_once("..") {
        Some((a, b)) => {
            let (lo, hi) = (a.parse().ok()?, b.parse().ok()?);
            (lo <= hi).then_some((lo, hi))
        }
        None => s.parse().ok().map(|t| (t, t)),
    }
}

/// Checks a scenario against the model it will drive.
pub fn check_scenario(m: &Model, sc: &Scenario) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for inj in &sc.injections {
        let loc = Location::Element(inj.stage.clone());
        match m.stage(&inj.stage) {
            None => diags.push(Diagnostic::error(
                "unknown-stage",
                format!("no stage `{}` to inject into", inj.stage),
                loc,
            )),
            Some(s) if s.kind != StageKind::Transfer => diags.push(Diagnostic::error(
                "inject-not-transfer",
                format!(
                    "`{}` is a {} stage; things enter only through Transfer",
                    s.id, s.kind
                ),
                loc,
            )),
            _ => {}
        }
        if inj.tick >= sc.horizon {
            diags.push(Diagnostic::error(
                "inject-after-horizon",
                format!(
                    "injection at tick {} is not before horizon {}",
                    inj.tick, sc.horizon
                ),
                Location::Element(inj.stage.clone()),
            ));
        }
    }
    diags.dedup();
    diags
}
