//! Structural rewrites used by the rules: session rebinding after a
//! synchronisation or session change, and the resolution applied to an
//! operation body when a component instance is created.
//!
//! Neither rewrite descends into component values: their code is resolved
//! when it is dispatched.

use std::collections::BTreeMap;

use crate::syntax::*;
use crate::urlalg;

/// Context to session, one entry per context.
pub type SessionMap = BTreeMap<Location, Session>;

fn session_atom(s: &Session) -> Atom {
    match s {
        Session::Ns => Atom::name("ns"),
        Session::Id(a) => a.clone(),
    }
}

/// Rewrites annotations `l path : S` to `l path : S'` and session urls
/// `l/session/S` to `l/session/S'` for every `l : S'` in `map`.
pub fn rebind(t: &Term, map: &SessionMap) -> Term {
    if map.is_empty() {
        return t.clone();
    }
    Rebind { map }.term(t)
}

struct Rebind<'a> {
    map: &'a SessionMap,
}

impl Rebind<'_> {
    fn url(&self, u: &Url) -> Url {
        match self.map.get(&u.loc) {
            Some(s) if u.session_segment().is_some() => {
                let mut u = u.clone();
                u.segs[1] = session_atom(s);
                u
            }
            _ => u.clone(),
        }
    }

    fn sls(&self, sls: &Sls) -> Sls {
        sls.iter()
            .map(|(l, s)| (l.clone(), self.map.get(l).unwrap_or(s).clone()))
            .collect()
    }

    fn value(&self, v: &Value) -> Value {
        match v {
            Value::Ref(Ref::Url(u)) => Value::url(self.url(u)),
            Value::Pair(tag, inner) => Value::Pair(tag.clone(), Box::new(self.value(inner))),
            other => other.clone(),
        }
    }

    fn expr(&self, e: &Expr) -> Expr {
        match e {
            Expr::Val(v) => Expr::val(self.value(v)),
            Expr::Add(a, b) => Expr::Add(Box::new(self.expr(a)), Box::new(self.expr(b))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(self.expr(a)), Box::new(self.expr(b))),
            Expr::Pair(tag, e) => Expr::Pair(tag.clone(), Box::new(self.expr(e))),
        }
    }

    fn bexpr(&self, b: &BExpr) -> BExpr {
        match b {
            BExpr::True | BExpr::False => b.clone(),
            BExpr::Cmp(op, x, y) => BExpr::Cmp(*op, self.expr(x), self.expr(y)),
            BExpr::And(x, y) => BExpr::And(Box::new(self.bexpr(x)), Box::new(self.bexpr(y))),
            BExpr::Or(x, y) => BExpr::Or(Box::new(self.bexpr(x)), Box::new(self.bexpr(y))),
            BExpr::Not(x) => BExpr::Not(Box::new(self.bexpr(x))),
        }
    }

    fn at(&self, at: &SessionAt) -> SessionAt {
        at.as_ref().map(|(l, s)| {
            (l.clone(), self.map.get(l).cloned().unwrap_or_else(|| s.clone()))
        })
    }

    fn term(&self, t: &Term) -> Term {
        match t {
            Term::Cmd(c) => {
                let (target, session) = match &c.target {
                    Ref::Url(u) => {
                        let s = match self.map.get(&u.loc) {
                            Some(s) => Some(s.clone()),
                            None => c.session.clone(),
                        };
                        (Ref::Url(self.url(u)), s)
                    }
                    other => (other.clone(), c.session.clone()),
                };
                Term::Cmd(Command {
                    bind: c.bind.clone(),
                    kind: c.kind,
                    deleg: match &c.deleg {
                        Deleg::Sessions(sls) => Deleg::Sessions(self.sls(sls)),
                        other => other.clone(),
                    },
                    target,
                    session,
                    arg: c.arg.as_ref().map(|a| self.expr(a)),
                    cont: Box::new(self.term(&c.cont)),
                })
            }
            Term::Assign { bind, expr, cont } => Term::Assign {
                bind: bind.clone(),
                expr: self.expr(expr),
                cont: Box::new(self.term(cont)),
            },
            Term::Send {
                chan,
                sls,
                expr,
                cont,
            } => Term::Send {
                chan: chan.clone(),
                sls: self.sls(sls),
                expr: self.expr(expr),
                cont: Box::new(self.term(cont)),
            },
            Term::Recv { chan, bind, cont } => Term::Recv {
                chan: chan.clone(),
                bind: bind.clone(),
                cont: Box::new(self.term(cont)),
            },
            Term::Spawn { child, cont } => Term::Spawn {
                child: Box::new(self.term(child)),
                cont: Box::new(self.term(cont)),
            },
            Term::If { cond, then, els } => Term::If {
                cond: self.bexpr(cond),
                then: Box::new(self.term(then)),
                els: Box::new(self.term(els)),
            },
            Term::NewSession { at, cont } => Term::NewSession {
                at: self.at(at),
                cont: Box::new(self.term(cont)),
            },
            Term::DropSession { at, cont } => Term::DropSession {
                at: self.at(at),
                cont: Box::new(self.term(cont)),
            },
            Term::Install(i) => Term::Install(Install {
                bind: i.bind.clone(),
                sls: self.sls(&i.sls),
                code: self.url(&i.code),
                session: self.map.get(&i.code.loc).unwrap_or(&i.session).clone(),
                component: i.component.clone(),
                arg: self.expr(&i.arg),
                cont: Box::new(self.term(&i.cont)),
            }),
            Term::Return(e) => Term::Return(self.expr(e)),
            Term::New { name, body } => Term::New {
                name: name.clone(),
                body: Box::new(self.term(body)),
            },
            Term::Nil => Term::Nil,
        }
    }
}

/// What an operation body needs to know about the call that created it.
#[derive(Debug, Clone)]
pub struct InstanceCtx {
    /// Context of the called url.
    pub loc: Location,
    pub pattern: Pattern,
    pub codebase: Option<Url>,
    /// Suffix of the called path matched by the pattern's `*`.
    pub ipath: RelPath,
    /// Channel and delegation used to answer `return`.
    pub reply: Atom,
    pub reply_sls: Sls,
}

impl InstanceCtx {
    /// Physical base: the pattern directory in the called context.
    pub fn phbase(&self) -> Url {
        urlalg::loc_then(&self.loc, &urlalg::pat_dir(&self.pattern))
    }

    /// Base for ordinary commands: the codebase, or the physical base.
    pub fn base(&self) -> Url {
        self.codebase.clone().unwrap_or_else(|| self.phbase())
    }

    fn symbolic(&self, r: &Ref) -> Ref {
        match r {
            Ref::Sym(SymBase::Session, rel) => {
                let dir = Url::root(self.loc.clone())
                    .child(Atom::name("session"), true)
                    .child(Atom::name("ns"), true);
                names::url_then(&dir, rel).map(Ref::Url).unwrap_or_else(|| r.clone())
            }
            Ref::Sym(SymBase::Application, rel) => {
                let dir = Url::root(self.loc.clone()).child(Atom::name("application"), true);
                names::url_then(&dir, rel).map(Ref::Url).unwrap_or_else(|| r.clone())
            }
            Ref::Sym(SymBase::Phbase, rel) => names::url_then(&self.phbase(), rel)
                .map(Ref::Url)
                .unwrap_or_else(|| r.clone()),
            Ref::IPath(rel) => Ref::Rel(match rel {
                Some(rel) => self.ipath.join(rel),
                None => self.ipath.clone(),
            }),
            other => other.clone(),
        }
    }

    fn value(&self, v: &Value) -> Value {
        match v {
            Value::Ref(r) => Value::Ref(self.symbolic(r)),
            Value::Pair(tag, inner) => Value::Pair(tag.clone(), Box::new(self.value(inner))),
            other => other.clone(),
        }
    }

    fn expr(&self, e: &Expr) -> Expr {
        match e {
            Expr::Val(v) => Expr::val(self.value(v)),
            Expr::Add(a, b) => Expr::Add(Box::new(self.expr(a)), Box::new(self.expr(b))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(self.expr(a)), Box::new(self.expr(b))),
            Expr::Pair(tag, e) => Expr::Pair(tag.clone(), Box::new(self.expr(e))),
        }
    }

    fn bexpr(&self, b: &BExpr) -> BExpr {
        match b {
            BExpr::True | BExpr::False => b.clone(),
            BExpr::Cmp(op, x, y) => BExpr::Cmp(*op, self.expr(x), self.expr(y)),
            BExpr::And(x, y) => BExpr::And(Box::new(self.bexpr(x)), Box::new(self.bexpr(y))),
            BExpr::Or(x, y) => BExpr::Or(Box::new(self.bexpr(x)), Box::new(self.bexpr(y))),
            BExpr::Not(x) => BExpr::Not(Box::new(self.bexpr(x))),
        }
    }

    fn command(&self, c: &Command) -> Command {
        let target = self.symbolic(&c.target);
        let (target, deleg) = if c.deleg.is_internal() {
            let t = urlalg::resolve_url(&self.phbase(), &target)
                .map(Ref::Url)
                .unwrap_or(target);
            (t, Deleg::Internal)
        } else {
            let base = self.base();
            let t = urlalg::resolve_url(&base, &target)
                .map(Ref::Url)
                .unwrap_or(target);
            let sls: Sls = match &c.deleg {
                Deleg::Contexts(rs) => rs
                    .iter()
                    .map(|r| (urlalg::resolve_ctx(&base, r), Session::Ns))
                    .collect(),
                Deleg::Sessions(sls) => sls.keys().map(|l| (l.clone(), Session::Ns)).collect(),
                Deleg::Internal => unreachable!(),
            };
            (t, Deleg::Sessions(sls))
        };
        Command {
            bind: c.bind.clone(),
            kind: c.kind,
            deleg,
            target,
            session: Some(Session::Ns),
            arg: c.arg.as_ref().map(|a| self.expr(a)),
            cont: Box::new(self.term(&c.cont)),
        }
    }

    /// Resolves symbols and command targets in an operation body and turns
    /// `return e` into the reply send.
    pub fn term(&self, t: &Term) -> Term {
        match t {
            Term::Cmd(c) => Term::Cmd(self.command(c)),
            Term::Assign { bind, expr, cont } => Term::Assign {
                bind: bind.clone(),
                expr: self.expr(expr),
                cont: Box::new(self.term(cont)),
            },
            Term::Send {
                chan,
                sls,
                expr,
                cont,
            } => Term::Send {
                chan: chan.clone(),
                sls: sls.clone(),
                expr: self.expr(expr),
                cont: Box::new(self.term(cont)),
            },
            Term::Recv { chan, bind, cont } => Term::Recv {
                chan: chan.clone(),
                bind: bind.clone(),
                cont: Box::new(self.term(cont)),
            },
            Term::Spawn { child, cont } => Term::Spawn {
                child: Box::new(self.term(child)),
                cont: Box::new(self.term(cont)),
            },
            Term::If { cond, then, els } => Term::If {
                cond: self.bexpr(cond),
                then: Box::new(self.term(then)),
                els: Box::new(self.term(els)),
            },
            Term::NewSession { at, cont } => Term::NewSession {
                at: Some(
                    at.clone()
                        .unwrap_or_else(|| (self.loc.clone(), Session::Ns)),
                ),
                cont: Box::new(self.term(cont)),
            },
            Term::DropSession { at, cont } => Term::DropSession {
                at: Some(
                    at.clone()
                        .unwrap_or_else(|| (self.loc.clone(), Session::Ns)),
                ),
                cont: Box::new(self.term(cont)),
            },
            Term::Install(i) => Term::Install(i.clone()),
            Term::Return(e) => Term::Send {
                chan: self.reply.clone(),
                sls: self.reply_sls.clone(),
                expr: self.expr(e),
                cont: Box::new(Term::Nil),
            },
            Term::New { name, body } => Term::New {
                name: name.clone(),
                body: Box::new(self.term(body)),
            },
            Term::Nil => Term::Nil,
        }
    }
}
