//! Layer checks: which forms may appear in component code and which in
//! running programs.

use super::ast::*;
use super::names::{self, NameSet};
use super::network::Network;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Url of the offending resource.
    pub at: String,
    pub msg: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.at, self.msg)
    }
}

/// Component code: static references, static delegation, no session
/// annotations, no engine-only forms.
pub fn check_static(t: &Term) -> Result<(), String> {
    match t {
        Term::Cmd(c) => {
            if c.session.is_some() {
                return Err(format!("session annotation in component code: `{c}`"));
            }
            if let Deleg::Sessions(sls) = &c.deleg {
                if !sls.is_empty() {
                    return Err("runtime delegation pairs in component code".into());
                }
            }
            if c.deleg.is_internal() && !c.target.is_relative() {
                return Err("internal delegation requires a relative target".into());
            }
            if let Some(a) = &c.arg {
                check_expr(a)?;
            }
            check_static(&c.cont)
        }
        Term::Assign { expr, cont, .. } => {
            check_expr(expr)?;
            check_static(cont)
        }
        Term::Send { sls, expr, cont, .. } => {
            if !sls.is_empty() {
                return Err("delegation pairs on a send in component code".into());
            }
            check_expr(expr)?;
            check_static(cont)
        }
        Term::Recv { cont, .. } => check_static(cont),
        Term::Spawn { child, cont } => {
            check_static(child)?;
            check_static(cont)
        }
        Term::If { then, els, .. } => {
            check_static(then)?;
            check_static(els)
        }
        Term::NewSession { at, cont } | Term::DropSession { at, cont } => {
            if at.is_some() {
                return Err("session constructs in component code take no url".into());
            }
            check_static(cont)
        }
        Term::Install(_) => Err("install is produced by the engine only".into()),
        Term::Return(e) => check_expr(e),
        Term::New { .. } => Err("restriction in component code".into()),
        Term::Nil => Ok(()),
    }
}

/// Running programs: every command has a session annotation and an
/// addressable target; component values inside are checked as static code.
pub fn check_runtime(t: &Term) -> Result<(), String> {
    match t {
        Term::Cmd(c) => {
            if c.session.is_none() {
                return Err(format!("running command lacks a session annotation: `{c}`"));
            }
            if matches!(c.deleg, Deleg::Contexts(_)) {
                return Err("running command carries static delegation contexts".into());
            }
            match &c.target {
                Ref::Url(_) | Ref::Sym(SymBase::Var(_), _) => {}
                Ref::Rel(r) if matches!(r.segs.first(), Some(RelSeg::Atom(_))) => {}
                other => {
                    return Err(format!("running command has unresolved target `{other}`"))
                }
            }
            if let Some(a) = &c.arg {
                check_expr(a)?;
            }
            check_runtime(&c.cont)
        }
        Term::Assign { expr, cont, .. } => {
            check_expr(expr)?;
            check_runtime(cont)
        }
        Term::Send { expr, cont, .. } => {
            check_expr(expr)?;
            check_runtime(cont)
        }
        Term::Recv { cont, .. } => check_runtime(cont),
        Term::Spawn { child, cont } => {
            check_runtime(child)?;
            check_runtime(cont)
        }
        Term::If { then, els, .. } => {
            check_runtime(then)?;
            check_runtime(els)
        }
        Term::NewSession { at, cont } | Term::DropSession { at, cont } => {
            if at.is_none() {
                return Err("running session construct needs `<location>/session/<S>`".into());
            }
            check_runtime(cont)
        }
        Term::Install(i) => {
            check_expr(&i.component)?;
            check_expr(&i.arg)?;
            check_runtime(&i.cont)
        }
        Term::Return(_) => Err("`return` outside component code".into()),
        Term::New { body, .. } => check_runtime(body),
        Term::Nil => Ok(()),
    }
}

fn check_expr(e: &Expr) -> Result<(), String> {
    match e {
        Expr::Val(v) => check_value(v),
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            check_expr(a)?;
            check_expr(b)
        }
        Expr::Pair(_, e) => check_expr(e),
    }
}

pub fn check_value(v: &Value) -> Result<(), String> {
    match v {
        Value::Comp(c) => {
            for (op, d) in &c.decls {
                check_static(&d.body).map_err(|m| format!("in {}.{op}: {m}", c.ty))?;
            }
            Ok(())
        }
        Value::Pair(_, v) => check_value(v),
        _ => Ok(()),
    }
}

/// Layer check of a whole network.
pub fn check_network(net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    for l in &net.items {
        let r = match &l.res {
            Resource::Prog(t) => check_runtime(t),
            Resource::Val(v) => check_value(v),
        };
        if let Err(msg) = r {
            out.push(Violation {
                at: l.url.to_string(),
                msg,
            });
        }
    }
    out
}

/// Names in the engine's reserved `_g<k>` namespace written in source.
pub fn generated_names(ast: &NetAst) -> NameSet {
    let mut all = NameSet::new();
    names::support_net_ast(ast, &mut all);
    all.into_iter().filter(Name::is_generated).collect()
}
