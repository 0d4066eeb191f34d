//! Reduction rules: redex recognition and rewriting of a single step.

mod apply;
pub mod eval;
mod recognize;
pub mod subst;

use std::fmt;
use std::str::FromStr;

pub use apply::{apply, ApplyError, Applied};
pub use eval::{eval_bool, eval_expr, EvalError};
pub use recognize::{all_redexes_seq, command_redexes, redexes_at, redexes_in, CmdHead};

macro_rules! rule_ids {
    ($($v:ident => $s:literal),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum RuleId { $($v),* }

        impl RuleId {
            pub const ALL: &'static [RuleId] = &[$(RuleId::$v),*];

            pub fn as_str(self) -> &'static str {
                match self { $(RuleId::$v => $s),* }
            }
        }

        impl FromStr for RuleId {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($s => Ok(RuleId::$v),)*
                    _ => Err(format!("unknown rule `{s}`")),
                }
            }
        }
    };
}

rule_ids! {
    Sync => "SYNC",
    Spawn => "SPAWN",
    IfT => "IF-T",
    IfF => "IF-F",
    Assign => "ASSIGN",
    CmdErr => "CMD-ERR",
    PutOverwrite => "PUT-OVERWRITE",
    PutCreate => "PUT-CREATE",
    Get => "GET",
    Delete => "DELETE",
    RexecFresh => "REXEC-FRESH",
    CaptureCom => "CAPTURE-COM",
    CaptureUserop => "CAPTURE-USEROP",
    SesNewNoop => "SES-NEW-NOOP",
    SesNew => "SES-NEW",
    SesDropNoop => "SES-DROP-NOOP",
    SesDrop => "SES-DROP",
    Lexec => "LEXEC",
    LexecDeploy => "LEXEC-DEPLOY",
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One enabled reduction. Indices refer to the network's item list.
///
/// `partner` is the receiver for SYNC, the stored value for GET, DELETE and
/// PUT-OVERWRITE, and the component for captures. Rules that first expand
/// the actor's command carry the redex of the expanded command in `inner`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Redex {
    pub actor: usize,
    pub rule: RuleId,
    pub partner: Option<usize>,
    pub inner: Option<Box<Redex>>,
}

impl Redex {
    pub fn new(actor: usize, rule: RuleId, partner: Option<usize>) -> Self {
        Redex {
            actor,
            rule,
            partner,
            inner: None,
        }
    }

    pub fn with_inner(mut self, inner: Redex) -> Self {
        self.inner = Some(Box::new(inner));
        self
    }

    /// Rule ids from the outermost to the innermost.
    pub fn rules(&self) -> Vec<RuleId> {
        let mut out = vec![self.rule];
        let mut r = self;
        while let Some(i) = &r.inner {
            out.push(i.rule);
            r = i;
        }
        out
    }
}
