//! Rewriting of one redex.

use thiserror::Error;

use crate::syntax::*;
use crate::urlalg::{self, Config};

use super::eval::{eval_bool, eval_expr};
use super::recognize::session_url;
use super::subst::{rebind, InstanceCtx, SessionMap};
use super::{Redex, RuleId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("redex {rule} at item {actor} does not fit the network: {msg}")]
pub struct ApplyError {
    pub rule: RuleId,
    pub actor: usize,
    pub msg: String,
}

/// Result of one step, before normalisation.
#[derive(Debug, Clone)]
pub struct Applied {
    pub net: Network,
    /// Names drawn from the fresh supply, in order.
    pub fresh: Vec<Name>,
    /// Rules performed as part of this step after the outer one.
    pub sub_steps: Vec<RuleId>,
    /// `url : S` of the command that fired, if any.
    pub target: Option<String>,
    /// The actor after the step.
    pub actor_post: Located,
}

struct Work<'a> {
    items: Vec<Located>,
    restricted: Vec<Name>,
    remove: Vec<usize>,
    add: Vec<Located>,
    fresh: &'a mut Fresh,
    minted: Vec<Name>,
    subs: Vec<RuleId>,
    target: Option<String>,
    cfg: &'a Config,
}

type Res<T> = Result<T, ApplyError>;

fn bad(r: &Redex, msg: impl Into<String>) -> ApplyError {
    ApplyError {
        rule: r.rule,
        actor: r.actor,
        msg: msg.into(),
    }
}

impl Work<'_> {
    fn mint(&mut self, restrict: bool) -> Name {
        let n = self.fresh.next_name();
        if restrict {
            self.restricted.push(n.clone());
        }
        self.minted.push(n.clone());
        n
    }

    fn set(&mut self, i: usize, t: Term) {
        self.items[i].res = Resource::Prog(t);
    }

    fn subst(&mut self, x: &Name, v: Value, t: &Term) -> Term {
        Subst::single(x.clone(), v).term(t, self.fresh)
    }

    fn value_of(&self, r: &Redex, i: Option<usize>) -> Res<Value> {
        i.and_then(|i| self.items.get(i))
            .and_then(Located::value)
            .cloned()
            .ok_or_else(|| bad(r, "partner is not a stored value"))
    }
}

pub fn apply(net: &Network, r: &Redex, cfg: &Config, fresh: &mut Fresh) -> Result<Applied, ApplyError> {
    let mut w = Work {
        items: net.items.clone(),
        restricted: net.restricted.clone(),
        remove: Vec::new(),
        add: Vec::new(),
        fresh,
        minted: Vec::new(),
        subs: Vec::new(),
        target: None,
        cfg,
    };
    let term = w
        .items
        .get(r.actor)
        .and_then(Located::term)
        .cloned()
        .ok_or_else(|| bad(r, "actor is not a program"))?;
    step(&mut w, r, term)?;

    let Work {
        mut items,
        restricted,
        mut remove,
        add,
        minted,
        subs,
        target,
        ..
    } = w;
    let actor_post = items[r.actor].clone();
    remove.sort_unstable();
    for i in remove.into_iter().rev() {
        items.remove(i);
    }
    items.extend(add);
    Ok(Applied {
        net: Network { restricted, items },
        fresh: minted,
        sub_steps: subs,
        target,
        actor_post,
    })
}

fn inner<'r>(r: &'r Redex) -> Res<&'r Redex> {
    r.inner.as_deref().ok_or_else(|| bad(r, "missing inner redex"))
}

fn step(w: &mut Work, r: &Redex, term: Term) -> Res<()> {
    let a = r.actor;
    match (r.rule, term) {
        (RuleId::Sync, Term::Send { sls, expr, cont, .. }) => {
            let p = r.partner.ok_or_else(|| bad(r, "no receiver"))?;
            let Some(Term::Recv { bind, cont: q, .. }) = w.items[p].term().cloned() else {
                return Err(bad(r, "partner is not a receiver"));
            };
            let v = eval_expr(&expr).map_err(|e| bad(r, e.to_string()))?;
            let q = w.subst(&bind, v, &q);
            w.set(a, *cont);
            w.set(p, rebind(&q, &sls));
        }
        (RuleId::Spawn, Term::Spawn { child, cont }) => {
            let t = w.mint(true);
            let url = w.items[a].url.child(Atom::Name(t), true);
            w.set(a, *cont);
            w.add.push(Located::prog(url, *child));
        }
        (RuleId::IfT | RuleId::IfF, Term::If { cond, then, els }) => {
            let b = eval_bool(&cond).map_err(|e| bad(r, e.to_string()))?;
            if b != (r.rule == RuleId::IfT) {
                return Err(bad(r, "condition has the other value"));
            }
            w.set(a, if b { *then } else { *els });
        }
        (RuleId::Assign, Term::Assign { bind, expr, cont }) => {
            let v = eval_expr(&expr).map_err(|e| bad(r, e.to_string()))?;
            let t = w.subst(&bind, v, &cont);
            w.set(a, t);
        }
        (RuleId::SesNewNoop, Term::NewSession { cont, .. })
        | (RuleId::SesDropNoop, Term::DropSession { cont, .. }) => w.set(a, *cont),
        (RuleId::SesNew, Term::NewSession { at: Some((l, Session::Ns)), cont }) => {
            let x = w.mint(false);
            let map = SessionMap::from([(l.clone(), Session::id(x.clone()))]);
            let cmd = Command {
                bind: x,
                kind: CmdKind::Rexec,
                deleg: Deleg::empty(),
                target: Ref::Url(Url::root(l).child(Atom::name("session"), true)),
                session: Some(Session::Ns),
                arg: Some(Expr::Val(Value::Ok)),
                cont: Box::new(rebind(&cont, &map)),
            };
            expand(w, r, cmd)?;
        }
        (RuleId::SesDrop, Term::DropSession { at: Some((l, Session::Id(s))), cont }) => {
            let x = w.mint(false);
            let map = SessionMap::from([(l.clone(), Session::Ns)]);
            let cmd = Command {
                bind: x,
                kind: CmdKind::Delete,
                deleg: Deleg::empty(),
                target: Ref::Url(session_url(&l, &s)),
                session: Some(Session::Ns),
                arg: None,
                cont: Box::new(rebind(&cont, &map)),
            };
            expand(w, r, cmd)?;
        }
        (RuleId::Lexec, Term::Cmd(c)) => {
            let code = c.target.as_url().cloned().ok_or_else(|| bad(r, "unresolved target"))?;
            let session = c.session.clone().unwrap_or(Session::Ns);
            let x = w.mint(false);
            let install = Install {
                bind: c.bind,
                sls: match c.deleg {
                    Deleg::Sessions(s) => s,
                    _ => Sls::new(),
                },
                code: code.clone(),
                session: session.clone(),
                component: Expr::Val(Value::Name(x.clone())),
                arg: c.arg.unwrap_or(Expr::Val(Value::Ok)),
                cont: c.cont,
            };
            let cmd = Command {
                bind: x,
                kind: CmdKind::Get,
                deleg: Deleg::empty(),
                target: Ref::Url(code),
                session: Some(session),
                arg: None,
                cont: Box::new(Term::Install(install)),
            };
            expand(w, r, cmd)?;
        }
        (RuleId::LexecDeploy, Term::Install(i)) => deploy(w, r, i)?,
        (_, Term::Cmd(c)) => command(w, r, c)?,
        (_, t) => return Err(bad(r, format!("rule does not apply to `{t}`"))),
    }
    Ok(())
}

/// Installs the expanded command at the actor and performs the inner redex.
fn expand(w: &mut Work, r: &Redex, cmd: Command) -> Res<()> {
    let ir = inner(r)?;
    w.subs.push(ir.rule);
    command(w, ir, cmd)
}

fn target_text(c: &Command) -> String {
    match &c.session {
        Some(s) => format!("{} : {}", c.target, s),
        None => c.target.to_string(),
    }
}

fn command(w: &mut Work, r: &Redex, c: Command) -> Res<()> {
    let a = r.actor;
    w.target = Some(target_text(&c));
    let arg = || match &c.arg {
        Some(e) => eval_expr(e).map_err(|e| bad(r, e.to_string())),
        None => Ok(Value::Ok),
    };
    let reply = match r.rule {
        RuleId::CmdErr => Value::Err,
        RuleId::Get => w.value_of(r, r.partner)?,
        RuleId::PutOverwrite => {
            let v = arg()?;
            let p = r.partner.ok_or_else(|| bad(r, "no stored value"))?;
            w.value_of(r, Some(p))?;
            w.items[p].res = Resource::Val(v);
            Value::Ok
        }
        RuleId::PutCreate => {
            let v = arg()?;
            let url = c.target.as_url().cloned().ok_or_else(|| bad(r, "unresolved target"))?;
            w.add.push(Located::val(url, v));
            Value::Ok
        }
        RuleId::Delete => {
            w.value_of(r, r.partner)?;
            w.remove.push(r.partner.unwrap());
            Value::Ok
        }
        RuleId::RexecFresh => {
            let v = arg()?;
            let dir = c.target.as_url().cloned().ok_or_else(|| bad(r, "unresolved target"))?;
            let n = w.mint(true);
            let url = dir.child(Atom::Name(n.clone()), urlalg::cond(&dir, w.cfg));
            w.add.push(Located::val(url, v));
            Value::Name(n)
        }
        RuleId::CaptureCom | RuleId::CaptureUserop => return capture(w, r, c),
        _ => return Err(bad(r, "not a command rule")),
    };
    let t = w.subst(&c.bind, reply, &c.cont);
    w.set(a, t);
    Ok(())
}

/// Creates the operation instance and forwards the call to it; the caller
/// waits on a private reply channel.
fn capture(w: &mut Work, r: &Redex, c: Command) -> Res<()> {
    let p = r.partner.ok_or_else(|| bad(r, "no component"))?;
    let target = c.target.as_url().cloned().ok_or_else(|| bad(r, "unresolved target"))?;
    let comp_url = w.items[p].url.clone();
    let (comp, pattern) = urlalg::deployed_at(&w.items[p]).ok_or_else(|| bad(r, "partner is not deployed"))?;
    let (comp, pattern) = (comp.clone(), pattern.clone());

    let arg = match &c.arg {
        Some(e) => eval_expr(e).map_err(|e| bad(r, e.to_string()))?,
        None => Value::Ok,
    };
    let (op, v) = if r.rule == RuleId::CaptureUserop {
        match arg {
            Value::Pair(Atom::Name(op), v) => (OpName::User(op), *v),
            _ => return Err(bad(r, "argument is not an operation call")),
        }
    } else {
        (OpName::of_cmd(c.kind).ok_or_else(|| bad(r, "no operation"))?, arg)
    };
    let decl = comp.decls.get(&op).ok_or_else(|| bad(r, "operation not defined"))?;

    let mut sls = match &c.deleg {
        Deleg::Sessions(s) => s.clone(),
        _ => Sls::new(),
    };
    sls.insert(target.loc.clone(), c.session.clone().unwrap_or(Session::Ns));

    let z = w.mint(true);
    let t = w.mint(true);
    let ctx = InstanceCtx {
        loc: target.loc.clone(),
        ipath: urlalg::path_minus(&target.segs, target.collection, &pattern)
            .unwrap_or_else(|_| RelPath::empty()),
        pattern,
        codebase: comp.deploy.as_ref().and_then(|d| d.codebase.clone()),
        reply: Atom::Name(z.clone()),
        reply_sls: sls.clone(),
    };
    let body = ctx.term(&decl.body);
    let body = w.subst(&decl.param, v, &body);
    let body = rebind(&body, &sls);

    w.target = Some(target_text(&c));
    w.subs.push(RuleId::Sync);
    w.add.push(Located::prog(comp_url.child(Atom::Name(t), true), body));
    w.set(
        r.actor,
        Term::Recv {
            chan: Atom::Name(z),
            bind: c.bind,
            cont: c.cont,
        },
    );
    Ok(())
}

/// Places a downloaded component on a capable context: a fresh application
/// directory, the component deployed on `/<dir>/<name>`, and the
/// initialisation argument stored there.
fn deploy(w: &mut Work, r: &Redex, i: Install) -> Res<()> {
    let a = r.actor;
    w.target = Some(format!("{} : {}", i.code, i.session));
    let fail = |w: &mut Work, i: Install| {
        let t = w.subst(&i.bind, Value::Err, &i.cont);
        w.set(a, t);
        Ok(())
    };
    let comp = match eval_expr(&i.component) {
        Ok(Value::Comp(c)) => *c,
        _ => return fail(w, i),
    };
    let Some(name) = i.code.segs.last().cloned().filter(|_| !i.code.collection) else {
        return fail(w, i);
    };
    let Ok(dest) = urlalg::loc(&i.code.loc, &comp.ty, w.cfg) else {
        return fail(w, i);
    };
    let codedir = i.code.parent_dir().expect("non-root url");

    let dir = w.mint(false);
    let d = w.mint(false);
    let p = w.mint(false);
    let root = Url::root(dest.clone());
    let app_dir = root.child(Atom::Name(dir.clone()), true);
    let deployed = Component {
        ty: comp.ty,
        deploy: Some(Deploy {
            codebase: Some(codedir),
            pattern: Pattern::exact(vec![Atom::Name(dir.clone()), name.clone()]),
        }),
        decls: comp.decls,
    };
    let mut sls = i.sls.clone();
    sls.insert(i.code.loc.clone(), i.session.clone());

    let cont = w.subst(&i.bind, Value::url(app_dir.clone()), &i.cont);
    let put = Term::Cmd(Command {
        bind: p,
        kind: CmdKind::Put,
        deleg: Deleg::Sessions(sls),
        target: Ref::Url(app_dir.child(name, false)),
        session: Some(Session::Ns),
        arg: Some(i.arg),
        cont: Box::new(cont),
    });
    let install = Term::Cmd(Command {
        bind: d,
        kind: CmdKind::Rexec,
        deleg: Deleg::empty(),
        target: Ref::Url(root.child(Atom::name("exec"), true)),
        session: Some(Session::Ns),
        arg: Some(Expr::Val(Value::Comp(Box::new(deployed)))),
        cont: Box::new(put),
    });
    let mkdir = Term::Cmd(Command {
        bind: dir,
        kind: CmdKind::Rexec,
        deleg: Deleg::empty(),
        target: Ref::Url(root),
        session: Some(Session::Ns),
        arg: Some(Expr::Val(Value::Ok)),
        cont: Box::new(install),
    });
    w.set(a, mkdir);
    Ok(())
}
