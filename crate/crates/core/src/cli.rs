//! The `thingc` command line.
//!
//! Exit codes: 0 success, 1 diagnostics with errors (or a failed pipeline
//! step), 2 usage errors including unreadable input files.

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use crate::corpus;
use crate::diag::{has_errors, Diagnostic, Severity};
use crate::dsl;
use crate::events::{build_behavior, check_all_regions, compose_events, detect_send_events};
use crate::model::Model;
use crate::render::{export_json, render_behavior_dot, render_model_dot, render_usecase_dot};
use crate::sim::{check_consistency, load_scenario_from, simulate, trace_to_events};
use crate::transform::{reduce_to_use_case, simplify_level1, simplify_level2};
use crate::validate::{check_model, ValidateOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERRORS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "thingc", version, about = "Thinging Machine model toolkit")]
struct Cli {
    /// Add a generation stamp (tool version and time) to written outputs.
    #[arg(long, global = true)]
    stamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a model; exit 0 iff there are no errors.
    Check {
        file: PathBuf,
        /// Report illegal trigger sources as warnings.
        #[arg(long)]
        lax: bool,
        /// Print diagnostics as JSON on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Print the model in canonical form.
    Fmt {
        file: PathBuf,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Remove stages that carry no information at the chosen level.
    Simplify {
        file: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        level: u8,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Reduce the model to a use-case diagram (JSON).
    Usecase {
        file: PathBuf,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// List the model's events and check their regions.
    Events {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Build the behavior graph of the model's events (JSON).
    Behavior {
        file: PathBuf,
        /// Compose events into a mega-event: `NAME=E1,E2,...`. Repeatable.
        #[arg(long, value_name = "NAME=EVENTS")]
        compose: Vec<String>,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Detect release-transfer-receive chains as send events (JSON).
    Sendscan {
        file: PathBuf,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Simulate a scenario and write the trace as JSON lines.
    Sim {
        model: PathBuf,
        scenario: PathBuf,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
        /// Also write event occurrences (JSON) to this path.
        #[arg(long, value_name = "PATH")]
        occurrences: Option<PathBuf>,
    },
    /// Render the model, its behavior graph or its use cases as DOT.
    Render {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = View::Model)]
        view: View,
        /// Draw event regions over the model.
        #[arg(long)]
        overlay: bool,
        /// Simplify before rendering the model view.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        level: Option<u8>,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Work with the bundled case-study corpus.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand, Debug)]
enum CorpusAction {
    /// Run every bundled model through the pipeline and compare with the
    /// golden files.
    Verify {
        /// Rewrite the golden files in the source checkout instead.
        #[arg(long)]
        bless: bool,
    },
    /// List the bundled models and scenarios.
    List,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum View {
    Model,
    Behavior,
    Usecase,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Tm,
    Dot,
    Json,
    Jsonl,
}

/// Whether diagnostics on stderr get ANSI colors, from `THINGC_COLOR`.
fn color_enabled() -> bool {
    match std::env::var("THINGC_COLOR").as_deref() {
        Ok("always") => true,
        Ok("never") => false,
        _ => std::io::stderr().is_terminal(),
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
    stamp: bool,
}

/// Signals an early exit with the given code; the message is already printed.
struct Exit(i32);

type Outcome = Result<i32, Exit>;

impl Io<'_> {
    fn diag(&mut self, d: &Diagnostic) {
        let sev = match (d.severity, self.color) {
            (Severity::Error, true) => "\x1b[1;31merror\x1b[0m".to_string(),
            (Severity::Warning, true) => "\x1b[1;33mwarning\x1b[0m".to_string(),
            (s, false) => s.to_string(),
        };
        let _ = writeln!(self.err, "{}: {sev}[{}]: {}", d.location, d.code, d.message);
    }

    fn diags(&mut self, ds: &[Diagnostic]) {
        for d in ds {
            self.diag(d);
        }
    }

    fn fail(&mut self, msg: impl std::fmt::Display) -> Exit {
        let _ = writeln!(self.err, "thingc: {msg}");
        Exit(EXIT_ERRORS)
    }

    fn read(&mut self, path: &Path) -> Result<String, Exit> {
        std::fs::read_to_string(path).map_err(|e| {
            let _ = writeln!(self.err, "thingc: cannot read {}: {e}", path.display());
            Exit(EXIT_USAGE)
        })
    }

    fn model(&mut self, path: &Path) -> Result<Model, Exit> {
        let text = self.read(path)?;
        dsl::parse_source(&text, &path.display().to_string()).map_err(|ds| {
            self.diags(&ds);
            Exit(EXIT_ERRORS)
        })
    }

    fn emit(&mut self, text: String, format: Format, output: Option<&Path>) -> Result<(), Exit> {
        let text = if self.stamp {
            stamped(text, format)
        } else {
            text
        };
        match output {
            Some(path) => std::fs::write(path, text).map_err(|e| {
                let _ = writeln!(self.err, "thingc: cannot write {}: {e}", path.display());
                Exit(EXIT_ERRORS)
            }),
            None => self
                .out
                .write_all(text.as_bytes())
                .map_err(|_| Exit(EXIT_ERRORS)),
        }
    }
}

fn stamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("thingc {} at {secs}", env!("CARGO_PKG_VERSION"))
}

fn stamped(text: String, format: Format) -> String {
    let stamp = stamp_line();
    match format {
        Format::Tm => format!("# generated by {stamp}\n{text}"),
        Format::Dot => format!("// generated by {stamp}\n{text}"),
        Format::Jsonl => format!("{}\n{text}", serde_json::json!({ "stamp": stamp })),
        Format::Json => match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(serde_json::Value::Object(mut obj)) => {
                obj.insert("stamp".to_string(), stamp.into());
                let mut s = serde_json::to_string_pretty(&obj).expect("value serializes");
                s.push('\n');
                s
            }
            _ => text,
        },
    }
}

/// Runs `thingc` with process stdout and stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let (stdout, stderr) = (std::io::stdout(), std::io::stderr());
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs `thingc` writing to the given streams. `args` includes the program
/// name.
pub fn run_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let mut io = Io {
        out,
        err,
        color: color_enabled(),
        stamp: cli.stamp,
    };
    match dispatch(cli.command, &mut io) {
        Ok(code) | Err(Exit(code)) => code,
    }
}

fn dispatch(cmd: Command, io: &mut Io) -> Outcome {
    match cmd {
        Command::Check { file, lax, json } => {
            let text = io.read(&file)?;
            let diags = match dsl::parse_source(&text, &file.display().to_string()) {
                Ok(m) => check_model(
                    &m,
                    ValidateOptions {
                        lax,
                        ..Default::default()
                    },
                ),
                Err(ds) => ds,
            };
            if json {
                io.emit(export_json("diagnostics", &diags), Format::Json, None)?;
            } else {
                io.diags(&diags);
            }
            Ok(if has_errors(&diags) {
                EXIT_ERRORS
            } else {
                EXIT_OK
            })
        }
        Command::Fmt { file, output } => {
            let m = io.model(&file)?;
            io.emit(dsl::serialize(&m), Format::Tm, output.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Simplify {
            file,
            level,
            output,
        } => {
            let m = io.model(&file)?;
            let simplified = if level == 1 {
                simplify_level1(&m)
            } else {
                simplify_level2(&m).map(|l2| {
                    io.diags(&l2.warnings);
                    l2.model
                })
            };
            let s = simplified.map_err(|e| {
                io.diag(&e.to_diagnostic());
                Exit(EXIT_ERRORS)
            })?;
            io.emit(dsl::serialize(&s), Format::Tm, output.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Usecase { file, output } => {
            let m = io.model(&file)?;
            let d = reduce_to_use_case(&m).map_err(|e| {
                io.diag(&e.to_diagnostic());
                Exit(EXIT_ERRORS)
            })?;
            io.emit(export_json("usecase", &d), Format::Json, output.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Events { file, json } => {
            let m = io.model(&file)?;
            let diags = check_all_regions(&m);
            if json {
                io.emit(export_json("events", &m.events), Format::Json, None)?;
            } else {
                let mut listing = String::new();
                for e in &m.events {
                    listing.push_str(&format!(
                        "{}\t{}\t{} elements\n",
                        e.id,
                        e.name,
                        e.region.len()
                    ));
                }
                io.emit(listing, Format::Tm, None)?;
            }
            io.diags(&diags);
            Ok(if has_errors(&diags) {
                EXIT_ERRORS
            } else {
                EXIT_OK
            })
        }
        Command::Behavior {
            file,
            compose,
            output,
        } => {
            let m = io.model(&file)?;
            let mut g = build_behavior(&m, &m.events);
            for spec in &compose {
                let Some((name, members)) = spec.split_once('=') else {
                    let _ = writeln!(
                        io.err,
                        "thingc: --compose expects NAME=E1,E2,..., got `{spec}`"
                    );
                    return Err(Exit(EXIT_USAGE));
                };
                let members: Vec<&str> = members.split(',').map(str::trim).collect();
                g = compose_events(&g, &members, name.trim())
                    .map_err(|e| io.fail(format!("error[{}]: {e}", e.code())))?;
            }
            io.emit(export_json("behavior", &g), Format::Json, output.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Sendscan { file, output } => {
            let m = io.model(&file)?;
            io.emit(
                export_json("events", &detect_send_events(&m)),
                Format::Json,
                output.as_deref(),
            )?;
            Ok(EXIT_OK)
        }
        Command::Sim {
            model,
            scenario,
            output,
            occurrences,
        } => {
            let m = io.model(&model)?;
            let text = io.read(&scenario)?;
            let sc = load_scenario_from(&text, &scenario.display().to_string()).map_err(|ds| {
                io.diags(&ds);
                Exit(EXIT_ERRORS)
            })?;
            let trace = simulate(&m, &sc).map_err(|e| {
                if let crate::sim::SimError::Scenario(ds) = &e {
                    io.diags(ds);
                }
                io.fail(format!("error[{}]: {e}", e.code()))
            })?;
            let occ = trace_to_events(&trace, &m.events);
            let g = build_behavior(&m, &m.events);
            for v in check_consistency(&g, &occ) {
                let _ = writeln!(
                    io.err,
                    "warning: event `{}` starts at tick {} before any of {}",
                    v.event,
                    v.start,
                    v.predecessors.join(", ")
                );
            }
            io.emit(trace.to_jsonl(), Format::Jsonl, output.as_deref())?;
            if let Some(path) = occurrences {
                io.emit(export_json("occurrences", &occ), Format::Json, Some(&path))?;
            }
            Ok(EXIT_OK)
        }
        Command::Render {
            file,
            view,
            overlay,
            level,
            output,
        } => {
            let mut m = io.model(&file)?;
            let dot = match view {
                View::Model => {
                    if let Some(level) = level {
                        let s = if level == 1 {
                            simplify_level1(&m)
                        } else {
                            simplify_level2(&m).map(|l2| l2.model)
                        };
                        m = s.map_err(|e| {
                            io.diag(&e.to_diagnostic());
                            Exit(EXIT_ERRORS)
                        })?;
                    }
                    let events = overlay.then_some(m.events.as_slice());
                    render_model_dot(&m, events)
                }
                View::Behavior => render_behavior_dot(&build_behavior(&m, &m.events), &m.events),
                View::Usecase => {
                    let d = reduce_to_use_case(&m).map_err(|e| {
                        io.diag(&e.to_diagnostic());
                        Exit(EXIT_ERRORS)
                    })?;
                    render_usecase_dot(&d)
                }
            };
            io.emit(dot, Format::Dot, output.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Corpus { action } => corpus_cmd(action, io),
    }
}

fn corpus_cmd(action: CorpusAction, io: &mut Io) -> Outcome {
    match action {
        CorpusAction::List => {
            let mut s = String::new();
            for m in corpus::MODELS {
                let scenarios: Vec<&str> = m.scenarios.iter().map(|s| s.name).collect();
                s.push_str(&format!(
                    "{}\tscenarios: {}\n",
                    m.name,
                    scenarios.join(", ")
                ));
            }
            io.emit(s, Format::Tm, None)?;
            Ok(EXIT_OK)
        }
        CorpusAction::Verify { bless } => {
            if bless || std::env::var("THINGC_BLESS").is_ok_and(|v| v == "1") {
                let dir = corpus::golden_dir();
                let written = corpus::bless(&dir).map_err(|e| io.fail(e))?;
                let _ = writeln!(
                    io.out,
                    "wrote {} golden files to {}",
                    written.len(),
                    dir.display()
                );
                return Ok(EXIT_OK);
            }
            let reports = corpus::verify();
            for r in &reports {
                let line = match (&r.failure, r.mismatched.is_empty()) {
                    (Some(f), _) => format!("FAIL {}: {f}", r.name),
                    (None, true) => format!("ok   {}: {} artifacts match", r.name, r.checked),
                    (None, false) => format!(
                        "FAIL {}: {} of {} artifacts differ ({})",
                        r.name,
                        r.mismatched.len(),
                        r.checked,
                        r.mismatched.join(", ")
                    ),
                };
                let _ = writeln!(io.out, "{line}");
            }
            Ok(if reports.iter().all(|r| r.ok()) {
                EXIT_OK
            } else {
                EXIT_ERRORS
            })
        }
    }
}
