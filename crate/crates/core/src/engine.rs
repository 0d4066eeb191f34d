//! Reduction driver: redex enumeration, scheduling, fresh names and traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rules::{self, ApplyError, Redex};
use crate::syntax::*;
use crate::urlalg::Config;

pub const DEFAULT_MAX_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    /// First redex in canonical order.
    Det,
    /// Uniform choice from a seeded generator.
    Rand(u64),
    /// Indices into the enabled list, one per step.
    Script(Vec<usize>),
}

impl Policy {
    /// `det` or `rand:<seed>`; scripts come from a file and are built by
    /// the caller.
    pub fn parse(s: &str) -> Result<Policy, String> {
        match s {
            "det" => Ok(Policy::Det),
            _ => match s.strip_prefix("rand:") {
                Some(seed) => seed
                    .parse()
                    .map(Policy::Rand)
                    .map_err(|_| format!("bad seed `{seed}`")),
                None => Err(format!("unknown policy `{s}`")),
            },
        }
    }

    /// Whitespace or comma separated choice indices.
    pub fn parse_script(text: &str) -> Result<Policy, String> {
        text.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|_| format!("bad choice `{s}`")))
            .collect::<Result<Vec<_>, _>>()
            .map(Policy::Script)
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub config: Config,
    pub max_steps: usize,
    pub gc: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            config: Config::new(),
            max_steps: DEFAULT_MAX_STEPS,
            gc: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("script choice {choice} at step {step} is out of range ({enabled} redexes enabled)")]
    Script {
        step: usize,
        choice: usize,
        enabled: usize,
    },
    #[error(transparent)]
    Apply(#[from] ApplyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub step: usize,
    pub rule: String,
    /// Index of the fired redex in the enabled list.
    pub choice: usize,
    pub enabled: usize,
    pub focus: Vec<String>,
    pub target: Option<String>,
    pub fresh: Vec<String>,
    pub subs: Vec<String>,
    pub pre: String,
    pub post: String,
}

impl TraceEvent {
    /// `step=<k> rule=<id> focus=<urls> fresh=<names>`, plus sub-steps and
    /// the command target when present.
    pub fn line(&self) -> String {
        let list = |v: &[String]| if v.is_empty() { "-".to_string() } else { v.join(",") };
        let mut s = format!(
            "step={} rule={} focus={} fresh={}",
            self.step,
            self.rule,
            list(&self.focus),
            list(&self.fresh)
        );
        if !self.subs.is_empty() {
            s.push_str(&format!(" sub={}", self.subs.join(",")));
        }
        if let Some(t) = &self.target {
            s.push_str(&format!(" target={}", t.replace(' ', "")));
        }
        s
    }

    pub fn json(&self) -> String {
        serde_json::to_string(self).expect("trace events serialise")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// No redex is enabled.
    Terminal,
    MaxStepsExceeded,
    /// A script ran out of choices with redexes still enabled.
    ScriptEnd,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Terminal => "terminal",
            Outcome::MaxStepsExceeded => "max-steps-exceeded",
            Outcome::ScriptEnd => "script-end",
        })
    }
}

/// Sequential enumeration: actors in item order.
pub fn enumerate_seq(items: &[Located], cfg: &Config) -> Vec<Redex> {
    rules::all_redexes_seq(items, cfg)
}

/// Data-parallel enumeration; the result order equals [`enumerate_seq`].
#[cfg(feature = "parallel")]
pub fn enumerate_par(items: &[Located], cfg: &Config) -> Vec<Redex> {
    use rayon::prelude::*;
    let store = crate::urlalg::Store::new(items);
    (0..items.len())
        .into_par_iter()
        .map(|i| rules::redexes_in(&store, i, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Enabled redexes of a canonical network, in canonical order.
pub fn enumerate(net: &Network, cfg: &Config) -> Vec<Redex> {
    #[cfg(feature = "parallel")]
    {
        enumerate_par(&net.items, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        enumerate_seq(&net.items, cfg)
    }
}

/// Programs that are neither finished nor able to move.
pub fn stuck_items<'a>(net: &'a Network, redexes: &[Redex]) -> Vec<&'a Located> {
    net.items
        .iter()
        .enumerate()
        .filter(|(i, l)| {
            matches!(l.term(), Some(t) if !t.is_nil()) && !redexes.iter().any(|r| r.actor == *i)
        })
        .map(|(_, l)| l)
        .collect()
}

#[derive(Debug, Clone)]
pub struct Engine {
    net: Network,
    fresh: Fresh,
    step: usize,
    opts: Options,
    policy: Policy,
    rng: ChaCha8Rng,
    script_pos: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: Outcome,
    pub trace: Vec<TraceEvent>,
}

impl Engine {
    pub fn new(mut net: Network, opts: Options, policy: Policy) -> Self {
        let mut fresh = Fresh::avoiding(&net.support());
        net.normalize(&mut fresh);
        let seed = match policy {
            Policy::Rand(s) => s,
            _ => 0,
        };
        Engine {
            net,
            fresh,
            step: 0,
            opts,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            script_pos: 0,
        }
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn options(&self) -> &Options {
        &self.opts
    }

    /// A generated name not occurring anywhere in the network.
    pub fn fresh_name(&mut self) -> Name {
        self.fresh.next_name()
    }

    pub fn redexes(&self) -> Vec<Redex> {
        enumerate(&self.net, &self.opts.config)
    }

    pub fn stuck(&self) -> Vec<&Located> {
        stuck_items(&self.net, &self.redexes())
    }

    /// Fires the `choice`-th enabled redex.
    pub fn fire(&mut self, choice: usize) -> Result<TraceEvent, EngineError> {
        let enabled = self.redexes();
        let r = enabled.get(choice).ok_or(EngineError::Script {
            step: self.step + 1,
            choice,
            enabled: enabled.len(),
        })?;
        self.fire_redex(r, choice, enabled.len())
    }

    fn fire_redex(&mut self, r: &Redex, choice: usize, enabled: usize) -> Result<TraceEvent, EngineError> {
        let items = &self.net.items;
        let mut focus = vec![items[r.actor].url.to_string()];
        let mut cur = Some(r);
        while let Some(x) = cur {
            if let Some(p) = x.partner {
                focus.push(items[p].url.to_string());
            }
            cur = x.inner.as_deref();
        }
        let pre = items[r.actor].to_string();

        let applied = rules::apply(&self.net, r, &self.opts.config, &mut self.fresh)?;
        let mut net = applied.net;
        net.normalize(&mut self.fresh);
        if self.opts.gc {
            net.gc();
        }
        self.net = net;
        self.step += 1;

        let mut subs: Vec<String> = r.rules()[1..].iter().map(|x| x.to_string()).collect();
        for s in applied.sub_steps {
            if !r.rules().contains(&s) {
                subs.push(s.to_string());
            }
        }
        Ok(TraceEvent {
            step: self.step,
            rule: r.rule.to_string(),
            choice,
            enabled,
            focus,
            target: applied.target,
            fresh: applied.fresh.iter().map(|n| n.to_string()).collect(),
            subs,
            pre,
            post: applied.actor_post.to_string(),
        })
    }

    /// One step under the engine's policy; `None` when nothing can fire.
    pub fn step(&mut self) -> Result<Option<TraceEvent>, EngineError> {
        let enabled = self.redexes();
        if enabled.is_empty() {
            return Ok(None);
        }
        let choice = match &self.policy {
            Policy::Det => 0,
            Policy::Rand(_) => self.rng.gen_range(0..enabled.len()),
            Policy::Script(v) => match v.get(self.script_pos) {
                Some(&c) => {
                    self.script_pos += 1;
                    if c >= enabled.len() {
                        return Err(EngineError::Script {
                            step: self.step + 1,
                            choice: c,
                            enabled: enabled.len(),
                        });
                    }
                    c
                }
                None => return Ok(None),
            },
        };
        self.fire_redex(&enabled[choice], choice, enabled.len()).map(Some)
    }

    /// Steps until no redex is enabled, the script ends or the step limit
    /// is reached. Events are passed to `on_event` as they happen.
    pub fn run_with(&mut self, mut on_event: impl FnMut(&TraceEvent)) -> Result<RunReport, EngineError> {
        let mut trace = Vec::new();
        loop {
            if self.step >= self.opts.max_steps {
                let outcome = if self.redexes().is_empty() {
                    Outcome::Terminal
                } else {
                    Outcome::MaxStepsExceeded
                };
                return Ok(RunReport { outcome, trace });
            }
            match self.step()? {
                Some(ev) => {
                    on_event(&ev);
                    trace.push(ev);
                }
                None => {
                    let outcome = if self.redexes().is_empty() {
                        Outcome::Terminal
                    } else {
                        Outcome::ScriptEnd
                    };
                    return Ok(RunReport { outcome, trace });
                }
            }
        }
    }

    pub fn run(&mut self) -> Result<RunReport, EngineError> {
        self.run_with(|_| {})
    }
}
