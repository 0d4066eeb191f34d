//! Redex recognition. Everything here is read-only over the item list, so
//! actors can be scanned independently.

use crate::syntax::*;
use crate::urlalg::{self, Config, Store};

use super::eval::{eval_bool, eval_expr};
use super::{Redex, RuleId};

/// The parts of a command that decide which rules apply.
#[derive(Clone, Copy, Debug)]
pub struct CmdHead<'a> {
    pub kind: CmdKind,
    pub deleg: &'a Deleg,
    pub target: &'a Url,
    pub session: &'a Session,
    pub arg: Option<&'a Expr>,
}

impl<'a> CmdHead<'a> {
    /// Head of a running command whose target is already a url.
    pub fn of(c: &'a Command) -> Option<Self> {
        Some(CmdHead {
            kind: c.kind,
            deleg: &c.deleg,
            target: c.target.as_url()?,
            session: c.session.as_ref()?,
            arg: c.arg.as_ref(),
        })
    }
}

/// Whether the RESTful default may handle the command: internal calls
/// always may; otherwise no most specific component at the target's
/// context defines the operation.
fn default_eligible(store: &Store, actor: usize, h: &CmdHead) -> bool {
    if h.deleg.is_internal() {
        return true;
    }
    let op = match OpName::of_cmd(h.kind) {
        Some(op) => op,
        None => return false,
    };
    let t = h.target;
    let Some(m) = store.maxpat(&t.loc, &t.segs, t.collection, &[actor]) else {
        return true;
    };
    !store
        .deployed_in(&t.loc, &[actor])
        .any(|d| d.pattern == m && d.comp.decls.contains_key(&op))
}

fn values_at<'a>(store: &'a Store, actor: usize, u: &Url) -> impl Iterator<Item = usize> + 'a {
    store.values_at(u).iter().copied().filter(move |&j| j != actor)
}

/// Redexes of a command's default and dispatch rules, CMD-ERR excluded.
pub fn command_redexes(store: &Store, actor: usize, h: &CmdHead, cfg: &Config) -> Vec<Redex> {
    let mut out = Vec::new();
    let t = h.target;
    let arg = h.arg.map(eval_expr);
    let arg_ok = !matches!(arg, Some(Err(_)));

    // user operations posted with rexec
    let mut userop_hit = false;
    if !h.deleg.is_internal() && h.kind == CmdKind::Rexec && (!t.collection || cfg.collection_op_dispatch) {
        if let Some(Ok(Value::Pair(Atom::Name(op), _))) = &arg {
            let op = OpName::User(op.clone());
            for d in store.deployed_in(&t.loc, &[actor]) {
                if d.comp.decls.contains_key(&op)
                    && !d.comp.decls.contains_key(&OpName::Rexec)
                    && store.matches(t, d.pattern, &[actor, d.index])
                {
                    out.push(Redex::new(actor, RuleId::CaptureUserop, Some(d.index)));
                    userop_hit = true;
                }
            }
        }
    }

    if !h.deleg.is_internal() && arg_ok {
        if let Some(op) = OpName::of_cmd(h.kind) {
            for d in store.deployed_in(&t.loc, &[actor]) {
                if d.comp.decls.contains_key(&op) && store.matches(t, d.pattern, &[actor, d.index])
                {
                    out.push(Redex::new(actor, RuleId::CaptureCom, Some(d.index)));
                }
            }
        }
    }

    if !default_eligible(store, actor, h) {
        return out;
    }
    match h.kind {
        CmdKind::Put => {
            if let Some(Ok(_)) = arg {
                for j in values_at(store, actor, t) {
                    out.push(Redex::new(actor, RuleId::PutOverwrite, Some(j)));
                }
                if let Some(dir) = t.parent_dir() {
                    if (store.has_url(&dir, &[actor]) || urlalg::is_int_d(&dir)) && !store.has_id(t, &[actor]) {
                        out.push(Redex::new(actor, RuleId::PutCreate, None));
                    }
                }
            }
        }
        CmdKind::Get => {
            for j in values_at(store, actor, t) {
                out.push(Redex::new(actor, RuleId::Get, Some(j)));
            }
        }
        CmdKind::Delete => {
            for j in values_at(store, actor, t) {
                if !store.has_extension(t, &[actor, j]) {
                    out.push(Redex::new(actor, RuleId::Delete, Some(j)));
                }
            }
        }
        CmdKind::Rexec => {
            if arg_ok && t.collection && !userop_hit {
                if store.has_url(t, &[actor]) || urlalg::is_int_g(t) {
                    out.push(Redex::new(actor, RuleId::RexecFresh, None));
                }
            }
        }
        CmdKind::Lexec => {}
    }
    out
}

fn with_fallback(store: &Store, actor: usize, h: &CmdHead, cfg: &Config) -> Vec<Redex> {
    let v = command_redexes(store, actor, h, cfg);
    if v.is_empty() {
        vec![Redex::new(actor, RuleId::CmdErr, None)]
    } else {
        v
    }
}

fn session_dir(l: &Location) -> Url {
    Url::root(l.clone()).child(Atom::name("session"), true)
}

/// `l/session/S/` for a session id.
pub(crate) fn session_url(l: &Location, s: &Atom) -> Url {
    session_dir(l).child(s.clone(), true)
}

/// All redexes whose actor is item `actor`, in canonical order.
pub fn redexes_at(items: &[Located], actor: usize, cfg: &Config) -> Vec<Redex> {
    redexes_in(&Store::new(items), actor, cfg)
}

/// [`redexes_at`] over a prebuilt index.
pub fn redexes_in(store: &Store, actor: usize, cfg: &Config) -> Vec<Redex> {
    let items = store.items;
    let Some(t) = items[actor].term() else {
        return Vec::new();
    };
    let mut out = match t {
        Term::Cmd(c) if c.kind == CmdKind::Lexec => {
            let inner = match CmdHead::of(c) {
                Some(h) if !h.target.collection && !h.target.segs.is_empty() => {
                    let get = CmdHead {
                        kind: CmdKind::Get,
                        deleg: &Deleg::empty(),
                        target: h.target,
                        session: h.session,
                        arg: None,
                    };
                    with_fallback(store, actor, &get, cfg)
                }
                _ => return vec![Redex::new(actor, RuleId::CmdErr, None)],
            };
            inner
                .into_iter()
                .map(|r| Redex::new(actor, RuleId::Lexec, None).with_inner(r))
                .collect()
        }
        Term::Cmd(c) => match CmdHead::of(c) {
            Some(h) => with_fallback(store, actor, &h, cfg),
            None => vec![Redex::new(actor, RuleId::CmdErr, None)],
        },
        Term::Install(_) => vec![Redex::new(actor, RuleId::LexecDeploy, None)],
        Term::Assign { expr, .. } => match eval_expr(expr) {
            Ok(_) => vec![Redex::new(actor, RuleId::Assign, None)],
            Err(_) => Vec::new(),
        },
        Term::If { cond, .. } => match eval_bool(cond) {
            Ok(true) => vec![Redex::new(actor, RuleId::IfT, None)],
            Ok(false) => vec![Redex::new(actor, RuleId::IfF, None)],
            Err(_) => Vec::new(),
        },
        Term::Spawn { .. } if items[actor].url.collection => {
            vec![Redex::new(actor, RuleId::Spawn, None)]
        }
        Term::Send { chan, expr, .. } if eval_expr(expr).is_ok() => items
            .iter()
            .enumerate()
            .filter(|(j, l)| {
                *j != actor && matches!(l.term(), Some(Term::Recv { chan: c, .. }) if c == chan)
            })
            .map(|(j, _)| Redex::new(actor, RuleId::Sync, Some(j)))
            .collect(),
        Term::NewSession { at: Some((l, s)), .. } => {
            if !s.is_ns() {
                vec![Redex::new(actor, RuleId::SesNewNoop, None)]
            } else {
                let dir = session_dir(l);
                let head = CmdHead {
                    kind: CmdKind::Rexec,
                    deleg: &Deleg::empty(),
                    target: &dir,
                    session: &Session::Ns,
                    arg: None,
                };
                with_fallback(store, actor, &head, cfg)
                    .into_iter()
                    .map(|r| Redex::new(actor, RuleId::SesNew, None).with_inner(r))
                    .collect()
            }
        }
        Term::DropSession { at: Some((l, s)), .. } => match s {
            Session::Ns => vec![Redex::new(actor, RuleId::SesDropNoop, None)],
            Session::Id(a) => {
                let target = session_url(l, a);
                let head = CmdHead {
                    kind: CmdKind::Delete,
                    deleg: &Deleg::empty(),
                    target: &target,
                    session: &Session::Ns,
                    arg: None,
                };
                with_fallback(store, actor, &head, cfg)
                    .into_iter()
                    .map(|r| Redex::new(actor, RuleId::SesDrop, None).with_inner(r))
                    .collect()
            }
        },
        _ => Vec::new(),
    };
    out.sort();
    out
}

/// Every redex of the network, scanning actors one after another.
pub fn all_redexes_seq(items: &[Located], cfg: &Config) -> Vec<Redex> {
    let store = Store::new(items);
    (0..items.len()).flat_map(|i| redexes_in(&store, i, cfg)).collect()
}
