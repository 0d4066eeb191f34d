//! Name sets, fresh-name supply and capture-avoiding substitution.
//!
//! Two name sets are tracked. [`support_term`] collects every name written
//! anywhere, including url and pattern segments and binders; it drives
//! freshness. [`free_names_term`] follows the calculus' notion of free
//! names: occurrences outside url paths that are not under a binder.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;

pub type NameSet = BTreeSet<Name>;

/// Supply of engine-generated names `_g0`, `_g1`, ...
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fresh {
    next: u64,
}

impl Fresh {
    pub fn new(next: u64) -> Self {
        Fresh { next }
    }

    /// A supply that avoids every generated name in `names`.
    pub fn avoiding<'a>(names: impl IntoIterator<Item = &'a Name>) -> Self {
        let next = names
            .into_iter()
            .filter_map(Name::generated_index)
            .map(|k| k + 1)
            .max()
            .unwrap_or(0);
        Fresh { next }
    }

    pub fn counter(&self) -> u64 {
        self.next
    }

    pub fn next_name(&mut self) -> Name {
        let n = Name::new(format!("_g{}", self.next));
        self.next += 1;
        n
    }
}

// ---- support ----

pub fn support_atom(a: &Atom, out: &mut NameSet) {
    match a {
        Atom::Name(n) => {
            out.insert(n.clone());
        }
        Atom::Val(v) => support_value(v, out),
    }
}

fn support_session(s: &Session, out: &mut NameSet) {
    if let Session::Id(a) = s {
        support_atom(a, out);
    }
}

fn support_sls(sls: &Sls, out: &mut NameSet) {
    for s in sls.values() {
        support_session(s, out);
    }
}

pub fn support_url(u: &Url, out: &mut NameSet) {
    for a in &u.segs {
        support_atom(a, out);
    }
}

fn support_rel(r: &RelPath, out: &mut NameSet) {
    for s in &r.segs {
        if let RelSeg::Atom(a) = s {
            support_atom(a, out);
        }
    }
}

fn support_ref(r: &Ref, out: &mut NameSet) {
    match r {
        Ref::Url(u) => support_url(u, out),
        Ref::Sym(base, rel) => {
            if let SymBase::Var(a) = base {
                support_atom(a, out);
            }
            support_rel(rel, out);
        }
        Ref::IPath(rel) => {
            if let Some(rel) = rel {
                support_rel(rel, out);
            }
        }
        Ref::Rel(rel) | Ref::Root(rel) | Ref::RootExec(rel) => support_rel(rel, out),
    }
}

pub fn support_value(v: &Value, out: &mut NameSet) {
    match v {
        Value::Ok | Value::Err | Value::Num(_) => {}
        Value::Name(n) => {
            out.insert(n.clone());
        }
        Value::Comp(c) => {
            if let Some(d) = &c.deploy {
                if let Some(u) = &d.codebase {
                    support_url(u, out);
                }
                for a in &d.pattern.prefix {
                    support_atom(a, out);
                }
            }
            for decl in c.decls.values() {
                out.insert(decl.param.clone());
                support_term_into(&decl.body, out);
            }
        }
        Value::Pair(tag, v) => {
            support_atom(tag, out);
            support_value(v, out);
        }
        Value::Ref(r) => support_ref(r, out),
    }
}

pub fn support_expr(e: &Expr, out: &mut NameSet) {
    match e {
        Expr::Val(v) => support_value(v, out),
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            support_expr(a, out);
            support_expr(b, out);
        }
        Expr::Pair(tag, e) => {
            support_atom(tag, out);
            support_expr(e, out);
        }
    }
}

fn support_bexpr(b: &BExpr, out: &mut NameSet) {
    match b {
        BExpr::True | BExpr::False => {}
        BExpr::Cmp(_, x, y) => {
            support_expr(x, out);
            support_expr(y, out);
        }
        BExpr::And(x, y) | BExpr::Or(x, y) => {
            support_bexpr(x, out);
            support_bexpr(y, out);
        }
        BExpr::Not(x) => support_bexpr(x, out),
    }
}

fn support_deleg(d: &Deleg, out: &mut NameSet) {
    if let Deleg::Sessions(sls) = d {
        support_sls(sls, out);
    }
}

pub fn support_term_into(t: &Term, out: &mut NameSet) {
    match t {
        Term::Cmd(c) => {
            out.insert(c.bind.clone());
            support_deleg(&c.deleg, out);
            support_ref(&c.target, out);
            if let Some(s) = &c.session {
                support_session(s, out);
            }
            if let Some(a) = &c.arg {
                support_expr(a, out);
            }
            support_term_into(&c.cont, out);
        }
        Term::Assign { bind, expr, cont } => {
            out.insert(bind.clone());
            support_expr(expr, out);
            support_term_into(cont, out);
        }
        Term::Send {
            chan,
            sls,
            expr,
            cont,
        } => {
            support_atom(chan, out);
            support_sls(sls, out);
            support_expr(expr, out);
            support_term_into(cont, out);
        }
        Term::Recv { chan, bind, cont } => {
            support_atom(chan, out);
            out.insert(bind.clone());
            support_term_into(cont, out);
        }
        Term::Spawn { child, cont } => {
            support_term_into(child, out);
            support_term_into(cont, out);
        }
        Term::If { cond, then, els } => {
            support_bexpr(cond, out);
            support_term_into(then, out);
            support_term_into(els, out);
        }
        Term::NewSession { at, cont } | Term::DropSession { at, cont } => {
            if let Some((_, s)) = at {
                support_session(s, out);
            }
            support_term_into(cont, out);
        }
        Term::Install(i) => {
            out.insert(i.bind.clone());
            support_sls(&i.sls, out);
            support_url(&i.code, out);
            support_session(&i.session, out);
            support_expr(&i.component, out);
            support_expr(&i.arg, out);
            support_term_into(&i.cont, out);
        }
        Term::Return(e) => support_expr(e, out),
        Term::New { name, body } => {
            out.insert(name.clone());
            support_term_into(body, out);
        }
        Term::Nil => {}
    }
}

pub fn support_term(t: &Term) -> NameSet {
    let mut out = NameSet::new();
    support_term_into(t, &mut out);
    out
}

pub fn support_located(l: &Located, out: &mut NameSet) {
    support_url(&l.url, out);
    match &l.res {
        Resource::Prog(t) => support_term_into(t, out),
        Resource::Val(v) => support_value(v, out),
    }
}

pub fn support_net_ast(n: &NetAst, out: &mut NameSet) {
    match n {
        NetAst::Item(l) => support_located(l, out),
        NetAst::Par(v) => v.iter().for_each(|n| support_net_ast(n, out)),
        NetAst::New(x, body) => {
            out.insert(x.clone());
            support_net_ast(body, out);
        }
    }
}

// ---- free names ----

/// Free-name collector; `bound` is the stack of enclosing binders.
struct Fn<'a> {
    bound: Vec<Name>,
    out: &'a mut NameSet,
}

impl Fn<'_> {
    fn name(&mut self, n: &Name) {
        if !self.bound.contains(n) {
            self.out.insert(n.clone());
        }
    }

    fn atom(&mut self, a: &Atom) {
        match a {
            Atom::Name(n) => self.name(n),
            Atom::Val(v) => self.value(v),
        }
    }

    fn session(&mut self, s: &Session) {
        if let Session::Id(a) = s {
            self.atom(a);
        }
    }

    fn sls(&mut self, sls: &Sls) {
        for s in sls.values() {
            self.session(s);
        }
    }

    fn path_values(&mut self, atoms: impl Iterator<Item = Atom>) {
        // Path segments are addresses, not name occurrences; values
        // substituted into them still count.
        for a in atoms {
            if let Atom::Val(v) = a {
                self.value(&v);
            }
        }
    }

    fn rel(&mut self, r: &RelPath) {
        self.path_values(r.segs.iter().filter_map(|s| match s {
            RelSeg::Atom(a) => Some(a.clone()),
            RelSeg::Parent => None,
        }));
    }

    fn url(&mut self, u: &Url) {
        self.path_values(u.segs.iter().cloned());
    }

    fn reference(&mut self, r: &Ref) {
        match r {
            Ref::Url(u) => self.url(u),
            Ref::Sym(base, rel) => {
                if let SymBase::Var(a) = base {
                    self.atom(a);
                }
                self.rel(rel);
            }
            Ref::IPath(rel) => {
                if let Some(rel) = rel {
                    self.rel(rel);
                }
            }
            Ref::Rel(rel) | Ref::Root(rel) | Ref::RootExec(rel) => self.rel(rel),
        }
    }

    fn value(&mut self, v: &Value) {
        match v {
            Value::Ok | Value::Err | Value::Num(_) => {}
            Value::Name(n) => self.name(n),
            Value::Comp(c) => {
                for decl in c.decls.values() {
                    self.under(&decl.param, |s| s.term(&decl.body));
                }
            }
            Value::Pair(tag, v) => {
                self.atom(tag);
                self.value(v);
            }
            Value::Ref(r) => self.reference(r),
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Val(v) => self.value(v),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                self.expr(a);
                self.expr(b);
            }
            Expr::Pair(tag, e) => {
                self.atom(tag);
                self.expr(e);
            }
        }
    }

    fn bexpr(&mut self, b: &BExpr) {
        match b {
            BExpr::True | BExpr::False => {}
            BExpr::Cmp(_, x, y) => {
                self.expr(x);
                self.expr(y);
            }
            BExpr::And(x, y) | BExpr::Or(x, y) => {
                self.bexpr(x);
                self.bexpr(y);
            }
            BExpr::Not(x) => self.bexpr(x),
        }
    }

    fn under(&mut self, b: &Name, f: impl FnOnce(&mut Self)) {
        self.bound.push(b.clone());
        f(self);
        self.bound.pop();
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Cmd(c) => {
                if let Deleg::Sessions(sls) = &c.deleg {
                    self.sls(sls);
                }
                self.reference(&c.target);
                if let Some(s) = &c.session {
                    self.session(s);
                }
                if let Some(a) = &c.arg {
                    self.expr(a);
                }
                self.under(&c.bind, |s| s.term(&c.cont));
            }
            Term::Assign { bind, expr, cont } => {
                self.expr(expr);
                self.under(bind, |s| s.term(cont));
            }
            Term::Send {
                chan,
                sls,
                expr,
                cont,
            } => {
                self.atom(chan);
                self.sls(sls);
                self.expr(expr);
                self.term(cont);
            }
            Term::Recv { chan, bind, cont } => {
                self.atom(chan);
                self.under(bind, |s| s.term(cont));
            }
            Term::Spawn { child, cont } => {
                self.term(child);
                self.term(cont);
            }
            Term::If { cond, then, els } => {
                self.bexpr(cond);
                self.term(then);
                self.term(els);
            }
            Term::NewSession { at, cont } | Term::DropSession { at, cont } => {
                if let Some((_, s)) = at {
                    self.session(s);
                }
                self.term(cont);
            }
            Term::Install(i) => {
                self.sls(&i.sls);
                self.url(&i.code);
                self.session(&i.session);
                self.expr(&i.component);
                self.expr(&i.arg);
                self.under(&i.bind, |s| s.term(&i.cont));
            }
            Term::Return(e) => self.expr(e),
            Term::New { name, body } => self.under(name, |s| s.term(body)),
            Term::Nil => {}
        }
    }
}

pub fn free_names_term(t: &Term) -> NameSet {
    let mut out = NameSet::new();
    Fn {
        bound: Vec::new(),
        out: &mut out,
    }
    .term(t);
    out
}

pub fn free_names_expr(e: &Expr) -> NameSet {
    let mut out = NameSet::new();
    Fn {
        bound: Vec::new(),
        out: &mut out,
    }
    .expr(e);
    out
}

pub fn free_names_value(v: &Value) -> NameSet {
    let mut out = NameSet::new();
    Fn {
        bound: Vec::new(),
        out: &mut out,
    }
    .value(v);
    out
}

pub fn free_names_located(l: &Located) -> NameSet {
    let mut out = NameSet::new();
    let mut f = Fn {
        bound: Vec::new(),
        out: &mut out,
    };
    f.url(&l.url);
    match &l.res {
        Resource::Prog(t) => f.term(t),
        Resource::Val(v) => f.value(v),
    }
    out
}

// ---- substitution ----

/// Simultaneous substitution of values for names.
///
/// A value landing in a name position becomes an [`Atom::Val`]; a url value
/// landing at the head of a relative or symbolic reference turns that
/// reference into an absolute url.
#[derive(Clone, Debug, Default)]
pub struct Subst {
    map: BTreeMap<Name, Value>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn single(x: Name, v: Value) -> Self {
        let mut s = Subst::new();
        s.insert(x, v);
        s
    }

    pub fn rename(x: Name, y: Name) -> Self {
        Subst::single(x, Value::Name(y))
    }

    pub fn insert(&mut self, x: Name, v: Value) {
        self.map.insert(x, v);
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn range_support(&self) -> NameSet {
        let mut out = NameSet::new();
        for v in self.map.values() {
            support_value(v, &mut out);
        }
        out
    }

    pub fn atom(&self, a: &Atom, fresh: &mut Fresh) -> Atom {
        match a {
            Atom::Name(n) => match self.map.get(n) {
                Some(v) => Atom::from_value(v),
                None => a.clone(),
            },
            Atom::Val(v) => Atom::from_value(&self.value(v, fresh)),
        }
    }

    fn session(&self, s: &Session, fresh: &mut Fresh) -> Session {
        match s {
            Session::Ns => Session::Ns,
            Session::Id(a) => Session::Id(self.atom(a, fresh)),
        }
    }

    fn sls(&self, sls: &Sls, fresh: &mut Fresh) -> Sls {
        sls.iter()
            .map(|(l, s)| (l.clone(), self.session(s, fresh)))
            .collect()
    }

    pub fn url(&self, u: &Url, fresh: &mut Fresh) -> Url {
        Url {
            loc: u.loc.clone(),
            segs: u.segs.iter().map(|a| self.atom(a, fresh)).collect(),
            collection: u.collection,
        }
    }

    fn rel(&self, r: &RelPath, fresh: &mut Fresh) -> RelPath {
        RelPath {
            segs: r
                .segs
                .iter()
                .map(|s| match s {
                    RelSeg::Atom(a) => RelSeg::Atom(self.atom(a, fresh)),
                    RelSeg::Parent => RelSeg::Parent,
                })
                .collect(),
            collection: r.collection,
        }
    }

    pub fn reference(&self, r: &Ref, fresh: &mut Fresh) -> Ref {
        match r {
            Ref::Url(u) => Ref::Url(self.url(u, fresh)),
            Ref::Sym(base, rel) => {
                let rel = self.rel(rel, fresh);
                match base {
                    SymBase::Var(a) => {
                        let a = self.atom(a, fresh);
                        if let Atom::Val(v) = &a {
                            if let Value::Ref(Ref::Url(u)) = v.as_ref() {
                                if let Some(u) = url_then(u, &rel) {
                                    return Ref::Url(u);
                                }
                            }
                        }
                        Ref::Sym(SymBase::Var(a), rel)
                    }
                    other => Ref::Sym(other.clone(), rel),
                }
            }
            Ref::IPath(rel) => Ref::IPath(rel.as_ref().map(|r| self.rel(r, fresh))),
            Ref::Rel(rel) => {
                if let Some(RelSeg::Atom(Atom::Name(head))) = rel.segs.first() {
                    if let Some(Value::Ref(Ref::Url(u))) = self.map.get(head) {
                        let rest = RelPath {
                            segs: rel.segs[1..].to_vec(),
                            collection: rel.collection,
                        };
                        let rest = self.rel(&rest, fresh);
                        if let Some(u) = url_then(u, &rest) {
                            return Ref::Url(u);
                        }
                    }
                }
                Ref::Rel(self.rel(rel, fresh))
            }
            Ref::Root(rel) => Ref::Root(self.rel(rel, fresh)),
            Ref::RootExec(rel) => Ref::RootExec(self.rel(rel, fresh)),
        }
    }

    pub fn value(&self, v: &Value, fresh: &mut Fresh) -> Value {
        match v {
            Value::Ok | Value::Err | Value::Num(_) => v.clone(),
            Value::Name(n) => self.map.get(n).cloned().unwrap_or_else(|| v.clone()),
            Value::Comp(c) => {
                let deploy = c.deploy.as_ref().map(|d| Deploy {
                    codebase: d.codebase.as_ref().map(|u| self.url(u, fresh)),
                    pattern: Pattern {
                        prefix: d.pattern.prefix.iter().map(|a| self.atom(a, fresh)).collect(),
                        wildcard: d.pattern.wildcard,
                    },
                });
                let decls = c
                    .decls
                    .iter()
                    .map(|(op, decl)| {
                        let (param, body) = self.binder(&decl.param, &decl.body, fresh);
                        (op.clone(), Decl { param, body })
                    })
                    .collect();
                Value::Comp(Box::new(Component {
                    ty: c.ty.clone(),
                    deploy,
                    decls,
                }))
            }
            Value::Pair(tag, inner) => {
                Value::Pair(self.atom(tag, fresh), Box::new(self.value(inner, fresh)))
            }
            Value::Ref(r) => Value::Ref(self.reference(r, fresh)),
        }
    }

    pub fn expr(&self, e: &Expr, fresh: &mut Fresh) -> Expr {
        match e {
            Expr::Val(v) => Expr::val(self.value(v, fresh)),
            Expr::Add(a, b) => Expr::Add(
                Box::new(self.expr(a, fresh)),
                Box::new(self.expr(b, fresh)),
            ),
            Expr::Sub(a, b) => Expr::Sub(
                Box::new(self.expr(a, fresh)),
                Box::new(self.expr(b, fresh)),
            ),
            Expr::Pair(tag, e) => Expr::Pair(self.atom(tag, fresh), Box::new(self.expr(e, fresh))),
        }
    }

    fn bexpr(&self, b: &BExpr, fresh: &mut Fresh) -> BExpr {
        match b {
            BExpr::True | BExpr::False => b.clone(),
            BExpr::Cmp(op, x, y) => BExpr::Cmp(*op, self.expr(x, fresh), self.expr(y, fresh)),
            BExpr::And(x, y) => BExpr::And(
                Box::new(self.bexpr(x, fresh)),
                Box::new(self.bexpr(y, fresh)),
            ),
            BExpr::Or(x, y) => BExpr::Or(
                Box::new(self.bexpr(x, fresh)),
                Box::new(self.bexpr(y, fresh)),
            ),
            BExpr::Not(x) => BExpr::Not(Box::new(self.bexpr(x, fresh))),
        }
    }

    /// Substitutes under binder `b`, renaming it when it would capture.
    fn binder(&self, b: &Name, body: &Term, fresh: &mut Fresh) -> (Name, Term) {
        let mut inner = self.clone();
        inner.map.remove(b);
        if inner.is_empty() {
            return (b.clone(), body.clone());
        }
        if inner.range_support().contains(b) {
            let b2 = fresh.next_name();
            let renamed = Subst::rename(b.clone(), b2.clone()).term(body, fresh);
            return (b2, inner.term(&renamed, fresh));
        }
        (b.clone(), inner.term(body, fresh))
    }

    pub fn term(&self, t: &Term, fresh: &mut Fresh) -> Term {
        if self.is_empty() {
            return t.clone();
        }
        match t {
            Term::Cmd(c) => {
                let (bind, cont) = self.binder(&c.bind, &c.cont, fresh);
                Term::Cmd(Command {
                    bind,
                    kind: c.kind,
                    deleg: match &c.deleg {
                        Deleg::Sessions(sls) => Deleg::Sessions(self.sls(sls, fresh)),
                        other => other.clone(),
                    },
                    target: self.reference(&c.target, fresh),
                    session: c.session.as_ref().map(|s| self.session(s, fresh)),
                    arg: c.arg.as_ref().map(|a| self.expr(a, fresh)),
                    cont: Box::new(cont),
                })
            }
            Term::Assign { bind, expr, cont } => {
                let expr = self.expr(expr, fresh);
                let (bind, cont) = self.binder(bind, cont, fresh);
                Term::Assign {
                    bind,
                    expr,
                    cont: Box::new(cont),
                }
            }
            Term::Send {
                chan,
                sls,
                expr,
                cont,
            } => Term::Send {
                chan: self.atom(chan, fresh),
                sls: self.sls(sls, fresh),
                expr: self.expr(expr, fresh),
                cont: Box::new(self.term(cont, fresh)),
            },
            Term::Recv { chan, bind, cont } => {
                let chan = self.atom(chan, fresh);
                let (bind, cont) = self.binder(bind, cont, fresh);
                Term::Recv {
                    chan,
                    bind,
                    cont: Box::new(cont),
                }
            }
            Term::Spawn { child, cont } => Term::Spawn {
                child: Box::new(self.term(child, fresh)),
                cont: Box::new(self.term(cont, fresh)),
            },
            Term::If { cond, then, els } => Term::If {
                cond: self.bexpr(cond, fresh),
                then: Box::new(self.term(then, fresh)),
                els: Box::new(self.term(els, fresh)),
            },
            Term::NewSession { at, cont } => Term::NewSession {
                at: at
                    .as_ref()
                    .map(|(l, s)| (l.clone(), self.session(s, fresh))),
                cont: Box::new(self.term(cont, fresh)),
            },
            Term::DropSession { at, cont } => Term::DropSession {
                at: at
                    .as_ref()
                    .map(|(l, s)| (l.clone(), self.session(s, fresh))),
                cont: Box::new(self.term(cont, fresh)),
            },
            Term::Install(i) => {
                let (bind, cont) = self.binder(&i.bind, &i.cont, fresh);
                Term::Install(Install {
                    bind,
                    sls: self.sls(&i.sls, fresh),
                    code: self.url(&i.code, fresh),
                    session: self.session(&i.session, fresh),
                    component: self.expr(&i.component, fresh),
                    arg: self.expr(&i.arg, fresh),
                    cont: Box::new(cont),
                })
            }
            Term::Return(e) => Term::Return(self.expr(e, fresh)),
            Term::New { name, body } => {
                let (name, body) = self.binder(name, body, fresh);
                Term::New {
                    name,
                    body: Box::new(body),
                }
            }
            Term::Nil => Term::Nil,
        }
    }

    pub fn located(&self, l: &Located, fresh: &mut Fresh) -> Located {
        Located {
            url: self.url(&l.url, fresh),
            res: match &l.res {
                Resource::Prog(t) => Resource::Prog(self.term(t, fresh)),
                Resource::Val(v) => Resource::Val(self.value(v, fresh)),
            },
        }
    }
}

/// `u` used as a directory, extended by `rel`; `None` when `..` climbs out.
pub fn url_then(u: &Url, rel: &RelPath) -> Option<Url> {
    if rel.segs.is_empty() {
        return Some(u.clone());
    }
    let mut segs = u.segs.clone();
    for s in &rel.segs {
        match s {
            RelSeg::Atom(a) => segs.push(a.clone()),
            RelSeg::Parent => {
                segs.pop()?;
            }
        }
    }
    let collection = rel.collection || matches!(rel.segs.last(), Some(RelSeg::Parent));
    Some(Url::new(u.loc.clone(), segs, collection))
}
