//! Scenario files: configuration, an initial network, a scheduling policy
//! and assertions over the final state.
//!
//! ```text
//! name: crud
//! config:
//!   loc //h/c gui -> //h/run
//!   cond //h/c/items/ true
//!   flag collection-op-dispatch
//!   gc
//! policy:
//!   rand:7
//!   max-steps 200
//! net:
//!   [ x = get^{}@//h/c/f : ns . nil ]@//h/c/p/
//!   || [ 1 ]@//h/c/f
//! assert:
//!   resource-at //h/c/f 1
//!   terminal
//! ```
//!
//! Lines starting with `#` are comments.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{self, Engine, EngineError, Options, Outcome, Policy, RunReport, TraceEvent};
use crate::rules::RuleId;
use crate::syntax::validate;
use crate::syntax::*;
use crate::urlalg::Config;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct LoadError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> LoadError {
    LoadError {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assertion {
    ResourceAt(Url, Value),
    Absent(Url),
    Terminal,
    StuckCount(usize),
    StepCountLe(usize),
    /// A step whose rule or sub-step is the given rule and whose text
    /// contains the optional fragment.
    TraceContains(RuleId, Option<String>),
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::ResourceAt(u, v) => write!(f, "resource-at {u} {v}"),
            Assertion::Absent(u) => write!(f, "absent {u}"),
            Assertion::Terminal => f.write_str("terminal"),
            Assertion::StuckCount(n) => write!(f, "stuck-count {n}"),
            Assertion::StepCountLe(n) => write!(f, "step-count-le {n}"),
            Assertion::TraceContains(r, None) => write!(f, "trace-contains {r}"),
            Assertion::TraceContains(r, Some(s)) => write!(f, "trace-contains {r} {s}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub config: Config,
    pub gc: bool,
    pub policy: Policy,
    pub max_steps: usize,
    /// Source text of the `net:` section.
    pub net_src: String,
    pub net: Network,
    pub assertions: Vec<Assertion>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, LoadError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(0, format!("cannot read {}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Scenario, LoadError> {
        let mut sc = Scenario {
            name: String::new(),
            config: Config::new(),
            gc: false,
            policy: Policy::Det,
            max_steps: engine::DEFAULT_MAX_STEPS,
            net_src: String::new(),
            net: Network::new(),
            assertions: Vec::new(),
        };
        let mut section = "";
        let mut net_start = 0;
        let mut net_lines: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.starts_with('#') || (line.is_empty() && section != "net") {
                continue;
            }
            if !raw.starts_with(char::is_whitespace) {
                if let Some(rest) = line.strip_prefix("name:") {
                    sc.name = rest.trim().to_string();
                    section = "";
                    continue;
                }
                if let Some(s) = ["config:", "policy:", "net:", "assert:"].iter().find(|s| line == **s) {
                    section = &s[..s.len() - 1];
                    if section == "net" {
                        if net_start != 0 {
                            return Err(err(line_no, "second `net:` section"));
                        }
                        net_start = line_no + 1;
                    }
                    continue;
                }
            }
            match section {
                "config" => config_line(&mut sc, line, line_no)?,
                "policy" => policy_line(&mut sc, line, line_no)?,
                "net" => net_lines.push(raw),
                "assert" => sc.assertions.push(assert_line(line, line_no)?),
                _ => return Err(err(line_no, format!("text outside a section: `{line}`"))),
            }
        }
        if net_start == 0 {
            return Err(err(0, "missing `net:` section"));
        }
        while net_lines.last().is_some_and(|l| l.trim().is_empty()) {
            net_lines.pop();
        }
        sc.net_src = net_lines.join("\n");
        let ast = parse_network_ast(&sc.net_src)
            .map_err(|e| err(net_start + e.line - 1, e.msg.clone()))?;
        let generated = validate::generated_names(&ast);
        if let Some(n) = generated.iter().next() {
            return Err(err(net_start, format!("`{n}` is in the engine's reserved name space")));
        }
        sc.net = Network::from_ast(ast);
        if let Some(v) = validate::check_network(&sc.net).first() {
            return Err(err(net_start, v.to_string()));
        }
        Ok(sc)
    }

    pub fn options(&self) -> Options {
        Options {
            config: self.config.clone(),
            max_steps: self.max_steps,
            gc: self.gc,
        }
    }

    pub fn engine(&self) -> Engine {
        Engine::new(self.net.clone(), self.options(), self.policy.clone())
    }

    /// Runs to completion and checks every assertion.
    pub fn run(&self) -> Result<Report, EngineError> {
        let mut e = self.engine();
        let rep = e.run()?;
        Ok(Report::new(self, &e, rep))
    }
}

fn config_line(sc: &mut Scenario, line: &str, n: usize) -> Result<(), LoadError> {
    let words: Vec<&str> = line.split_whitespace().collect();
    match words.as_slice() {
        ["loc", from, ty, "->", to] => {
            let from = parse_location(from).map_err(|e| err(n, e.msg))?;
            let to = parse_location(to).map_err(|e| err(n, e.msg))?;
            sc.config
                .add_loc(from, Name::new(*ty), to)
                .map_err(|e| err(n, e.to_string()))
        }
        ["cond", url, b @ ("true" | "false")] => {
            let url = parse_url(url).map_err(|e| err(n, e.msg))?;
            sc.config
                .set_cond(url, *b == "true")
                .map_err(|e| err(n, e.to_string()))
        }
        ["flag", "collection-op-dispatch"] => {
            sc.config.collection_op_dispatch = true;
            Ok(())
        }
        ["gc"] => {
            sc.gc = true;
            Ok(())
        }
        _ => Err(err(n, format!("unknown config line `{line}`"))),
    }
}

fn policy_line(sc: &mut Scenario, line: &str, n: usize) -> Result<(), LoadError> {
    if let Some(k) = line.strip_prefix("max-steps") {
        sc.max_steps = k.trim().parse().map_err(|_| err(n, "bad max-steps"))?;
        return Ok(());
    }
    sc.policy = Policy::parse(line).map_err(|m| err(n, m))?;
    Ok(())
}

fn assert_line(line: &str, n: usize) -> Result<Assertion, LoadError> {
    let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let rest = rest.trim();
    let num = |s: &str| s.parse::<usize>().map_err(|_| err(n, format!("bad number `{s}`")));
    Ok(match head {
        "resource-at" => {
            let (u, v) = rest
                .split_once(char::is_whitespace)
                .ok_or_else(|| err(n, "resource-at needs a url and a value"))?;
            Assertion::ResourceAt(
                parse_url(u).map_err(|e| err(n, e.msg))?,
                parse_value(v.trim()).map_err(|e| err(n, e.msg))?,
            )
        }
        "absent" => Assertion::Absent(parse_url(rest).map_err(|e| err(n, e.msg))?),
        "terminal" => Assertion::Terminal,
        "stuck-count" => Assertion::StuckCount(num(rest)?),
        "step-count-le" => Assertion::StepCountLe(num(rest)?),
        "trace-contains" => {
            let (r, frag) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let rule = r.parse().map_err(|m: String| err(n, m))?;
            let frag = frag.trim();
            Assertion::TraceContains(rule, (!frag.is_empty()).then(|| frag.to_string()))
        }
        _ => return Err(err(n, format!("unknown assertion `{head}`"))),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertOutcome {
    pub assertion: String,
    pub pass: bool,
    pub detail: String,
}

/// Final state of a run with assertion outcomes.
#[derive(Debug, Clone)]
pub struct Report {
    pub outcome: Outcome,
    pub steps: usize,
    pub trace: Vec<TraceEvent>,
    pub final_net: Network,
    pub stuck: Vec<Located>,
    pub results: Vec<AssertOutcome>,
}

fn event_mentions(ev: &TraceEvent, rule: RuleId, frag: Option<&str>) -> bool {
    let r = rule.as_str();
    (ev.rule == r || ev.subs.iter().any(|s| s == r))
        && frag.is_none_or(|f| ev.line().contains(f) || ev.pre.contains(f) || ev.post.contains(f))
}

impl Report {
    pub fn new(sc: &Scenario, e: &Engine, rep: RunReport) -> Report {
        let stuck: Vec<Located> = e.stuck().into_iter().cloned().collect();
        let net = e.net().clone();
        let results = sc
            .assertions
            .iter()
            .map(|a| {
                let (pass, detail) = match a {
                    Assertion::ResourceAt(u, v) => match net.value_at(u) {
                        Some(got) if got == v => (true, String::new()),
                        Some(got) => (false, format!("expected {v}, found {got}")),
                        None => (false, format!("expected {v}, found nothing")),
                    },
                    Assertion::Absent(u) => match net.find(u) {
                        None => (true, String::new()),
                        Some(l) => (false, format!("found {l}")),
                    },
                    Assertion::Terminal => (
                        rep.outcome == Outcome::Terminal,
                        format!("run ended with {}", rep.outcome),
                    ),
                    Assertion::StuckCount(k) => (stuck.len() == *k, format!("{} stuck", stuck.len())),
                    Assertion::StepCountLe(k) => (e.steps() <= *k, format!("{} steps", e.steps())),
                    Assertion::TraceContains(r, f) => {
                        let hit = rep.trace.iter().any(|ev| event_mentions(ev, *r, f.as_deref()));
                        (hit, if hit { String::new() } else { "no matching step".into() })
                    }
                };
                AssertOutcome {
                    assertion: a.to_string(),
                    pass,
                    detail,
                }
            })
            .collect();
        Report {
            outcome: rep.outcome,
            steps: e.steps(),
            trace: rep.trace,
            final_net: net,
            stuck,
            results,
        }
    }

    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    /// Human-readable summary: outcome, final network, stuck resources and
    /// assertion results.
    pub fn summary(&self) -> String {
        let mut s = format!("outcome: {}\nsteps: {}\nfinal:\n{}\n", self.outcome, self.steps, self.final_net);
        if !self.stuck.is_empty() {
            s.push_str("stuck:\n");
            for l in &self.stuck {
                s.push_str(&format!("  {l}\n"));
            }
        }
        for r in &self.results {
            let mark = if r.pass { "pass" } else { "FAIL" };
            if r.detail.is_empty() || r.pass {
                s.push_str(&format!("{mark}: {}\n", r.assertion));
            } else {
                s.push_str(&format!("{mark}: {} ({})\n", r.assertion, r.detail));
            }
        }
        s
    }

    /// Canonical trace with actor snapshots followed by the final network.
    pub fn golden(&self) -> String {
        let mut s = String::new();
        for ev in &self.trace {
            s.push_str(&ev.line());
            s.push('\n');
            s.push_str(&format!("    post: {}\n", ev.post));
        }
        s.push_str(&format!("outcome: {}\nfinal:\n{}\n", self.outcome, self.final_net));
        s
    }
}
