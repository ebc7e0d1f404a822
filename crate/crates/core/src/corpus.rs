//! The bundled case-study models, their scenarios and golden outputs.
//!
//! Every artifact the toolkit can produce for a corpus model is checked
//! against a golden file under `corpus/golden/`. After an intentional output
//! change, regenerate them from a source checkout with
//! `thingc corpus verify --bless` (or `THINGC_BLESS=1`).

use std::path::{Path, PathBuf};

use crate::dsl;
use crate::events::{build_behavior, detect_send_events};
use crate::model::Model;
use crate::render::{export_json, render_behavior_dot, render_model_dot, render_usecase_dot};
use crate::sim::{load_scenario, simulate, trace_to_events};
use crate::transform::{reduce_to_use_case, simplify_level1, simplify_level2};
use crate::validate::{check_model, ValidateOptions};

pub struct CorpusScenario {
    pub name: &'static str,
    pub source: &'static str,
}

pub struct CorpusModel {
    pub name: &'static str,
    pub source: &'static str,
    pub scenarios: &'static [CorpusScenario],
}

impl CorpusModel {
    /// Parses the bundled source; corpus files always parse.
    pub fn model(&self) -> Model {
        dsl::parse_source(self.source, &format!("{}.tm", self.name))
            .unwrap_or_else(|d| panic!("corpus model {} does not parse: {d:?}", self.name))
    }

    pub fn scenario(&self, name: &str) -> Option<&CorpusScenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }
}

macro_rules! scenario {
    ($name:literal) => {
        CorpusScenario {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".tms")),
        }
    };
}

pub const MODELS: &[CorpusModel] = &[
    CorpusModel {
        name: "book_borrow",
        source: include_str!("../corpus/book_borrow.tm"),
        scenarios: &[scenario!("book_borrow")],
    },
    CorpusModel {
        name: "box_arrival",
        source: include_str!("../corpus/box_arrival.tm"),
        scenarios: &[scenario!("box_arrival")],
    },
    CorpusModel {
        name: "control_light",
        source: include_str!("../corpus/control_light.tm"),
        scenarios: &[
            scenario!("control_light_hold"),
            scenario!("control_light_press"),
        ],
    },
    CorpusModel {
        name: "atm",
        source: include_str!("../corpus/atm.tm"),
        scenarios: &[scenario!("atm")],
    },
];

pub fn get(name: &str) -> Option<&'static CorpusModel> {
    MODELS.iter().find(|m| m.name == name)
}

macro_rules! golden {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("../corpus/golden/", $file)))),*]
    };
}

static GOLDEN: &[(&str, &str)] = golden![
    "book_borrow.check.json",
    "book_borrow.fmt.tm",
    "book_borrow.level1.tm",
    "book_borrow.level2.tm",
    "book_borrow.usecase.json",
    "book_borrow.behavior.json",
    "book_borrow.sendscan.json",
    "book_borrow.model.dot",
    "book_borrow.behavior.dot",
    "book_borrow.usecase.dot",
    "book_borrow.trace.jsonl",
    "book_borrow.occurrences.json",
    "box_arrival.check.json",
    "box_arrival.fmt.tm",
    "box_arrival.level1.tm",
    "box_arrival.level2.tm",
    "box_arrival.usecase.json",
    "box_arrival.behavior.json",
    "box_arrival.sendscan.json",
    "box_arrival.model.dot",
    "box_arrival.behavior.dot",
    "box_arrival.usecase.dot",
    "box_arrival.trace.jsonl",
    "box_arrival.occurrences.json",
    "control_light.check.json",
    "control_light.fmt.tm",
    "control_light.level1.tm",
    "control_light.level2.tm",
    "control_light.usecase.json",
    "control_light.behavior.json",
    "control_light.sendscan.json",
    "control_light.model.dot",
    "control_light.behavior.dot",
    "control_light.usecase.dot",
    "control_light_hold.trace.jsonl",
    "control_light_hold.occurrences.json",
    "control_light_press.trace.jsonl",
    "control_light_press.occurrences.json",
    "atm.check.json",
    "atm.fmt.tm",
    "atm.level1.tm",
    "atm.level2.tm",
    "atm.usecase.json",
    "atm.behavior.json",
    "atm.sendscan.json",
    "atm.model.dot",
    "atm.behavior.dot",
    "atm.usecase.dot",
    "atm.trace.jsonl",
    "atm.occurrences.json",
];

/// Stored golden text for an artifact file name.
pub fn golden(file: &str) -> Option<&'static str> {
    GOLDEN.iter().find(|(f, _)| *f == file).map(|(_, t)| *t)
}

/// Every artifact of one corpus model as (file name, content).
pub fn artifacts(entry: &CorpusModel) -> Result<Vec<(String, String)>, String> {
    let m = entry.model();
    let n = entry.name;
    let mut out = Vec::new();
    let mut add = |suffix: &str, text: String| out.push((format!("{n}.{suffix}"), text));

    let diags = check_model(&m, ValidateOptions::default());
    add("check.json", export_json("diagnostics", &diags));
    add("fmt.tm", dsl::serialize(&m));
    let l1 = simplify_level1(&m).map_err(|e| format!("{n}: {e}"))?;
    add("level1.tm", dsl::serialize(&l1));
    let l2 = simplify_level2(&m).map_err(|e| format!("{n}: {e}"))?;
    add("level2.tm", dsl::serialize(&l2.model));
    let uc = reduce_to_use_case(&m).map_err(|e| format!("{n}: {e}"))?;
    add("usecase.json", export_json("usecase", &uc));
    let g = build_behavior(&m, &m.events);
    add("behavior.json", export_json("behavior", &g));
    add(
        "sendscan.json",
        export_json("events", &detect_send_events(&m)),
    );
    add("model.dot", render_model_dot(&m, Some(&m.events)));
    add("behavior.dot", render_behavior_dot(&g, &m.events));
    add("usecase.dot", render_usecase_dot(&uc));

    for sc in entry.scenarios {
        let s = load_scenario(sc.source).map_err(|d| format!("{}: {d:?}", sc.name))?;
        let t = simulate(&m, &s).map_err(|e| format!("{}: {e}", sc.name))?;
        out.push((format!("{}.trace.jsonl", sc.name), t.to_jsonl()));
        let occ = trace_to_events(&t, &m.events);
        out.push((
            format!("{}.occurrences.json", sc.name),
            export_json("occurrences", &occ),
        ));
    }
    Ok(out)
}

#[derive(Debug, Default)]
pub struct ModelReport {
    pub name: String,
    pub checked: usize,
    /// Artifacts whose output differs from (or lacks) a golden file.
    pub mismatched: Vec<String>,
    pub failure: Option<String>,
}

impl ModelReport {
    pub fn ok(&self) -> bool {
        self.mismatched.is_empty() && self.failure.is_none()
    }
}

/// Compares every artifact with its embedded golden file, one report per
/// corpus model.
pub fn verify() -> Vec<ModelReport> {
    MODELS
        .iter()
        .map(|entry| {
            let mut report = ModelReport {
                name: entry.name.to_string(),
                ..Default::default()
            };
            match artifacts(entry) {
                Ok(files) => {
                    for (file, text) in files {
                        report.checked += 1;
                        if golden(&file) != Some(text.as_str()) {
                            report.mismatched.push(file);
                        }
                    }
                }
                Err(e) => report.failure = Some(e),
            }
            report
        })
        .collect()
}

/// Golden directory of the source checkout this binary was built from.
pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join("golden")
}

/// Rewrites the golden files in `dir`; returns the files written.
pub fn bless(dir: &Path) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for entry in MODELS {
        let files = artifacts(entry).map_err(std::io::Error::other)?;
        for (file, text) in files {
            std::fs::write(dir.join(&file), text)?;
            written.push(file);
        }
    }
    Ok(written)
}
