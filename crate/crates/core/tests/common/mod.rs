//! Brute-force reference enumerator. It works on printed urls and patterns
//! and re-derives every side condition from scratch, so it shares no url or
//! dispatch code with the library.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use weboscalc::rules::{Redex, RuleId};
use weboscalc::syntax::*;

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Every `.scn` file in the scenario library, sorted.
pub fn scenario_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    v.sort();
    v
}

// ---- strings ----

/// `//h/c/a/b` -> (`//h/c`, `/a/b`).
pub fn split(u: &str) -> (String, String) {
    let rest = u.strip_prefix("//").expect("absolute url");
    let mut it = rest.splitn(3, '/');
    let host = it.next().unwrap();
    let ctx = it.next().unwrap();
    let path = it.next().unwrap_or("");
    (format!("//{host}/{ctx}"), format!("/{path}"))
}

pub fn segments(path: &str) -> Vec<&str> {
    path.split('/').filter(|s| !s.is_empty()).collect()
}

fn id(u: &str) -> &str {
    u.strip_suffix('/').unwrap_or(u)
}

fn parent(u: &str) -> Option<String> {
    let (l, p) = split(u);
    if p == "/" {
        return None;
    }
    let p = p.strip_suffix('/').unwrap_or(&p);
    let cut = p.rfind('/').unwrap();
    Some(format!("{l}{}", &p[..=cut]))
}

pub fn is_int_g(u: &str) -> bool {
    let (_, p) = split(u);
    p == "/" || p == "/session/" || p == "/exec/"
}

pub fn is_int_d(u: &str) -> bool {
    let (_, p) = split(u);
    p == "/" || p == "/application/"
}

/// Root-relative pattern membership on path strings.
pub fn member(path: &str, pat: &str) -> bool {
    if matches!(segments(path).first(), Some(&("exec" | "session" | "application"))) {
        return false;
    }
    match pat.strip_suffix('*') {
        Some(prefix) => prefix != "/" && path.starts_with(prefix),
        None => pat != "/" && path == pat,
    }
}

/// Sort key for specificity: literal segments, exactness, text.
pub fn pat_key(pat: &str) -> (usize, bool, String) {
    let wild = pat.ends_with("/*");
    let body = pat.trim_end_matches('*');
    let segs = segments(body);
    (segs.len(), !wild, segs.join("/"))
}

// ---- store views ----

pub struct Dep {
    pub index: usize,
    pub loc: String,
    pub pat: String,
    pub ops: BTreeSet<OpName>,
}

pub fn deployed(items: &[Located]) -> Vec<Dep> {
    let mut out = Vec::new();
    for (i, it) in items.iter().enumerate() {
        let u = it.url.to_string();
        let (loc, path) = split(&u);
        let segs = segments(&path);
        if !(path.ends_with('/') && segs.len() == 2 && segs[0] == "exec") {
            continue;
        }
        if let Some(Value::Comp(c)) = it.value() {
            if let Some(d) = &c.deploy {
                out.push(Dep {
                    index: i,
                    loc,
                    pat: d.pattern.to_string(),
                    ops: c.decls.keys().cloned().collect(),
                });
            }
        }
    }
    out
}

/// Stored urls and all their collection prefixes.
pub fn url_set(items: &[Located], excluded: &[usize]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (i, it) in items.iter().enumerate() {
        if excluded.contains(&i) {
            continue;
        }
        let u = it.url.to_string();
        let (loc, path) = split(&u);
        for (k, ch) in path.char_indices() {
            if ch == '/' && k + 1 < path.len() {
                out.insert(format!("{loc}{}", &path[..=k]));
            }
        }
        out.insert(u);
    }
    out
}

fn maxpat(deps: &[Dep], loc: &str, path: &str, excluded: &[usize]) -> Option<String> {
    deps.iter()
        .filter(|d| !excluded.contains(&d.index) && d.loc == loc && member(path, &d.pat))
        .map(|d| d.pat.clone())
        .max_by_key(|p| pat_key(p))
}

pub fn brute_maxpat(pats: &[String], path: &str) -> Option<String> {
    let mut best: Option<&String> = None;
    for p in pats.iter().filter(|p| member(path, p)) {
        if best.is_none_or(|b| pat_key(p) > pat_key(b)) {
            best = Some(p);
        }
    }
    best.cloned()
}

fn live(items: &[Located], deps: &[Dep], t: &str, own: &Dep, actor: usize) -> bool {
    let (loc, path) = split(t);
    own.pat.ends_with("/*")
        || url_set(items, &[actor, own.index]).contains(t)
        || deps.iter().any(|d| {
            d.index != actor
                && d.index != own.index
                && d.loc == loc
                && d.pat.ends_with("/*")
                && member(&path, &d.pat)
        })
}

fn dispatches(items: &[Located], deps: &[Dep], t: &str, d: &Dep, actor: usize) -> bool {
    let (loc, path) = split(t);
    d.loc == loc
        && member(&path, &d.pat)
        && live(items, deps, t, d, actor)
        && maxpat(deps, &loc, &path, &[actor, d.index]).is_none_or(|m| pat_key(&d.pat) >= pat_key(&m))
}

// ---- evaluation ----

pub fn eval(e: &Expr) -> Option<Value> {
    match e {
        Expr::Val(v) => Some(v.clone()),
        Expr::Add(a, b) | Expr::Sub(a, b) => match (eval(a)?, eval(b)?) {
            (Value::Num(x), Value::Num(y)) => {
                if matches!(e, Expr::Add(..)) {
                    x.checked_add(y).map(Value::Num)
                } else {
                    x.checked_sub(y).map(Value::Num)
                }
            }
            _ => None,
        },
        Expr::Pair(t, e) => Some(Value::Pair(t.clone(), Box::new(eval(e)?))),
    }
}

pub fn eval_b(b: &BExpr) -> Option<bool> {
    Some(match b {
        BExpr::True => true,
        BExpr::False => false,
        BExpr::Not(x) => !eval_b(x)?,
        BExpr::And(x, y) => eval_b(x)? && eval_b(y)?,
        BExpr::Or(x, y) => eval_b(x)? || eval_b(y)?,
        BExpr::Cmp(op, x, y) => {
            let (a, b) = (eval(x)?, eval(y)?);
            match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                _ => {
                    let (Value::Num(m), Value::Num(n)) = (a, b) else {
                        return None;
                    };
                    match op {
                        CmpOp::Lt => m < n,
                        CmpOp::Gt => m > n,
                        CmpOp::Le => m <= n,
                        _ => m >= n,
                    }
                }
            }
        }
    })
}

// ---- enumeration ----

/// One redex as text: `actor:RULE:partner`, inner redexes after `>`.
pub fn redex_key(r: &Redex) -> String {
    let p = r.partner.map_or("-".to_string(), |p| p.to_string());
    let mut s = format!("{}:{}:{p}", r.actor, r.rule);
    if let Some(i) = &r.inner {
        s.push('>');
        s.push_str(&redex_key(i));
    }
    s
}

fn key(actor: usize, rule: RuleId, partner: Option<usize>) -> String {
    redex_key(&Redex::new(actor, rule, partner))
}

fn op_of(kind: CmdKind) -> Option<OpName> {
    match kind {
        CmdKind::Get => Some(OpName::Get),
        CmdKind::Put => Some(OpName::Put),
        CmdKind::Delete => Some(OpName::Delete),
        CmdKind::Rexec => Some(OpName::Rexec),
        CmdKind::Lexec => None,
    }
}

pub struct Head<'a> {
    pub kind: CmdKind,
    pub internal: bool,
    pub target: String,
    pub arg: Option<&'a Expr>,
}

/// Rule keys for one command, without the error fallback.
pub fn command(items: &[Located], actor: usize, h: &Head, collection_op: bool) -> Vec<String> {
    let deps = deployed(items);
    let (loc, path) = split(&h.target);
    let coll = h.target.ends_with('/');
    let arg = h.arg.map(eval);
    let arg_ok = !matches!(arg, Some(None));
    let mut out = Vec::new();

    let mut userop = false;
    if !h.internal && h.kind == CmdKind::Rexec && (!coll || collection_op) {
        if let Some(Some(Value::Pair(Atom::Name(op), _))) = &arg {
            let op = OpName::User(op.clone());
            for d in deps.iter().filter(|d| d.index != actor) {
                if d.ops.contains(&op)
                    && !d.ops.contains(&OpName::Rexec)
                    && dispatches(items, &deps, &h.target, d, actor)
                {
                    out.push(key(actor, RuleId::CaptureUserop, Some(d.index)));
                    userop = true;
                }
            }
        }
    }
    if !h.internal && arg_ok {
        if let Some(op) = op_of(h.kind) {
            for d in deps.iter().filter(|d| d.index != actor) {
                if d.ops.contains(&op) && dispatches(items, &deps, &h.target, d, actor) {
                    out.push(key(actor, RuleId::CaptureCom, Some(d.index)));
                }
            }
        }
    }

    let default_ok = h.internal
        || op_of(h.kind).is_some_and(|op| match maxpat(&deps, &loc, &path, &[actor]) {
            None => true,
            Some(m) => !deps
                .iter()
                .any(|d| d.index != actor && d.loc == loc && d.pat == m && d.ops.contains(&op)),
        });
    if !default_ok {
        return out;
    }
    let stored: Vec<usize> = items
        .iter()
        .enumerate()
        .filter(|(j, it)| *j != actor && it.value().is_some() && it.url.to_string() == h.target)
        .map(|(j, _)| j)
        .collect();
    let urls = url_set(items, &[actor]);
    match h.kind {
        CmdKind::Get => {
            out.extend(stored.iter().map(|&j| key(actor, RuleId::Get, Some(j))));
        }
        CmdKind::Put => {
            if let Some(Some(_)) = arg {
                out.extend(stored.iter().map(|&j| key(actor, RuleId::PutOverwrite, Some(j))));
                let taken = urls.iter().any(|u| id(u) == id(&h.target));
                if let Some(dir) = parent(&h.target) {
                    if (urls.contains(&dir) || is_int_d(&dir)) && !taken {
                        out.push(key(actor, RuleId::PutCreate, None));
                    }
                }
            }
        }
        CmdKind::Delete => {
            for &j in &stored {
                let below = format!("{}/", id(&h.target));
                if !url_set(items, &[actor, j]).iter().any(|u| u.starts_with(&below)) {
                    out.push(key(actor, RuleId::Delete, Some(j)));
                }
            }
        }
        CmdKind::Rexec => {
            if arg_ok && coll && !userop && (urls.contains(&h.target) || is_int_g(&h.target)) {
                out.push(key(actor, RuleId::RexecFresh, None));
            }
        }
        CmdKind::Lexec => {}
    }
    out
}

fn or_error(mut v: Vec<String>, actor: usize) -> Vec<String> {
    if v.is_empty() {
        v.push(key(actor, RuleId::CmdErr, None));
    }
    v
}

fn wrapped(actor: usize, outer: RuleId, inner: Vec<String>) -> Vec<String> {
    inner
        .into_iter()
        .map(|k| format!("{}>{k}", key(actor, outer, None)))
        .collect()
}

/// Reference redex set of an item list.
pub fn redexes(items: &[Located], collection_op: bool) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (a, it) in items.iter().enumerate() {
        let Some(t) = it.term() else { continue };
        let keys = match t {
            Term::Cmd(c) => {
                let target = match (&c.target, &c.session) {
                    (Ref::Url(u), Some(_)) => Some(u.to_string()),
                    _ => None,
                };
                match (c.kind, target) {
                    (_, None) => vec![key(a, RuleId::CmdErr, None)],
                    (CmdKind::Lexec, Some(u)) => {
                        if u.ends_with('/') {
                            vec![key(a, RuleId::CmdErr, None)]
                        } else {
                            let h = Head {
                                kind: CmdKind::Get,
                                internal: false,
                                target: u,
                                arg: None,
                            };
                            wrapped(a, RuleId::Lexec, or_error(command(items, a, &h, collection_op), a))
                        }
                    }
                    (kind, Some(u)) => {
                        let h = Head {
                            kind,
                            internal: matches!(c.deleg, Deleg::Internal),
                            target: u,
                            arg: c.arg.as_ref(),
                        };
                        or_error(command(items, a, &h, collection_op), a)
                    }
                }
            }
            Term::Install(_) => vec![key(a, RuleId::LexecDeploy, None)],
            Term::Assign { expr, .. } => match eval(expr) {
                Some(_) => vec![key(a, RuleId::Assign, None)],
                None => vec![],
            },
            Term::If { cond, .. } => match eval_b(cond) {
                Some(true) => vec![key(a, RuleId::IfT, None)],
                Some(false) => vec![key(a, RuleId::IfF, None)],
                None => vec![],
            },
            Term::Spawn { .. } if it.url.to_string().ends_with('/') => {
                vec![key(a, RuleId::Spawn, None)]
            }
            Term::Send { chan, expr, .. } if eval(expr).is_some() => items
                .iter()
                .enumerate()
                .filter(|(j, o)| *j != a && matches!(o.term(), Some(Term::Recv { chan: c, .. }) if c == chan))
                .map(|(j, _)| key(a, RuleId::Sync, Some(j)))
                .collect(),
            Term::NewSession { at: Some((l, s)), .. } => match s {
                Session::Id(_) => vec![key(a, RuleId::SesNewNoop, None)],
                Session::Ns => {
                    let h = Head {
                        kind: CmdKind::Rexec,
                        internal: false,
                        target: format!("{l}/session/"),
                        arg: None,
                    };
                    wrapped(a, RuleId::SesNew, or_error(command(items, a, &h, collection_op), a))
                }
            },
            Term::DropSession { at: Some((l, s)), .. } => match s {
                Session::Ns => vec![key(a, RuleId::SesDropNoop, None)],
                Session::Id(x) => {
                    let h = Head {
                        kind: CmdKind::Delete,
                        internal: false,
                        target: format!("{l}/session/{x}/"),
                        arg: None,
                    };
                    wrapped(a, RuleId::SesDrop, or_error(command(items, a, &h, collection_op), a))
                }
            },
            _ => vec![],
        };
        out.extend(keys);
    }
    out
}

// ---- store effects ----

/// Stored values as sorted `(url, value)` text pairs.
pub fn store(items: &[Located]) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = items
        .iter()
        .filter_map(|it| it.value().map(|v| (it.url.to_string(), v.to_string())))
        .collect();
    v.sort();
    v
}

fn cmd_arg(items: &[Located], actor: usize) -> Option<Value> {
    match items[actor].term()? {
        Term::Cmd(c) => c.arg.as_ref().map_or(Some(Value::Ok), eval),
        _ => Some(Value::Ok),
    }
}

fn cmd_target(items: &[Located], r: &Redex, outer: RuleId) -> Option<String> {
    match (outer, items[r.actor].term()?) {
        (RuleId::SesNew, Term::NewSession { at: Some((l, _)), .. }) => Some(format!("{l}/session/")),
        (_, Term::Cmd(c)) => c.target.as_url().map(|u| u.to_string()),
        _ => None,
    }
}

/// Checks the store after firing `r` against the rule's expected effect.
pub fn check_store(
    before: &[Located],
    r: &Redex,
    after: &[Located],
    fresh: &[String],
) -> Result<(), String> {
    let eff = r.inner.as_deref().unwrap_or(r);
    let mut want = store(before);
    let got = store(after);
    let remove = |want: &mut Vec<(String, String)>, j: usize| {
        let it = &before[j];
        let pair = (it.url.to_string(), it.value().unwrap().to_string());
        let pos = want.iter().position(|p| *p == pair).unwrap();
        want.remove(pos);
    };
    match eff.rule {
        RuleId::PutOverwrite => {
            let j = eff.partner.unwrap();
            remove(&mut want, j);
            let v = cmd_arg(before, r.actor).ok_or("arg")?;
            want.push((before[j].url.to_string(), v.to_string()));
        }
        RuleId::PutCreate => {
            let v = cmd_arg(before, r.actor).ok_or("arg")?;
            want.push((cmd_target(before, r, r.rule).ok_or("target")?, v.to_string()));
        }
        RuleId::Delete => remove(&mut want, eff.partner.unwrap()),
        RuleId::RexecFresh => {
            let dir = cmd_target(before, r, r.rule).ok_or("target")?;
            let v = if r.rule == RuleId::SesNew {
                Value::Ok
            } else {
                cmd_arg(before, r.actor).ok_or("arg")?
            };
            let suffix = if is_int_g(&dir) { "/" } else { "" };
            let known = url_set(before, &[]);
            let url = fresh
                .iter()
                .map(|n| format!("{dir}{n}{suffix}"))
                .find(|u| got.iter().any(|(g, _)| g == u))
                .ok_or_else(|| format!("no fresh child of {dir} in store"))?;
            if known.contains(&url) {
                return Err(format!("{url} was not fresh"));
            }
            want.push((url, v.to_string()));
        }
        _ => {}
    }
    want.sort();
    if want == got {
        Ok(())
    } else {
        Err(format!("store after {}:\nwant {want:?}\n got {got:?}", redex_key(r)))
    }
}
