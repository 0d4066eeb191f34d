//! Canonical concrete syntax. Every printed form is accepted by the parser.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;
use super::network::Network;

impl Display for Location {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "//{}/{}", self.host, self.ctx)
    }
}

impl Display for Atom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Name(n) => write!(f, "{n}"),
            Atom::Val(v) => write!(f, "({v})"),
        }
    }
}

impl Display for Session {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Session::Ns => f.write_str("ns"),
            Session::Id(a) => write!(f, "{a}"),
        }
    }
}

fn write_atoms(f: &mut Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_char('/')?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

impl Display for Url {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}/", self.loc)?;
        write_atoms(f, &self.segs)?;
        if self.collection && !self.segs.is_empty() {
            f.write_char('/')?;
        }
        Ok(())
    }
}

/// Segments of a relative path without any leading marker.
struct RelBody<'a>(&'a RelPath);

impl Display for RelBody<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.segs.iter().enumerate() {
            if i > 0 {
                f.write_char('/')?;
            }
            match s {
                RelSeg::Atom(a) => write!(f, "{a}")?,
                RelSeg::Parent => f.write_str("..")?,
            }
        }
        if self.0.collection && !self.0.segs.is_empty() {
            f.write_char('/')?;
        }
        Ok(())
    }
}

impl Display for RelPath {
    /// Plain relative form; the empty path prints as `./`.
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.segs.first() {
            Some(RelSeg::Parent) => write!(f, "{}", RelBody(self)),
            _ => write!(f, "./{}", RelBody(self)),
        }
    }
}

impl Display for Pattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_char('/')?;
        write_atoms(f, &self.prefix)?;
        if self.wildcard {
            f.write_str("/*")?;
        }
        Ok(())
    }
}

impl Display for Ref {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Url(u) => write!(f, "{u}"),
            Ref::Sym(base, rel) => {
                match base {
                    SymBase::Session => f.write_str("<session>")?,
                    SymBase::Application => f.write_str("<application>")?,
                    SymBase::Phbase => f.write_str("<phbase>")?,
                    SymBase::Var(a) => write!(f, "<{a}>")?,
                }
                write!(f, "/{}", RelBody(rel))
            }
            Ref::IPath(None) => f.write_str("<ipath>"),
            Ref::IPath(Some(rel)) => write!(f, "<ipath>/{}", RelBody(rel)),
            Ref::Rel(rel) => write!(f, "{rel}"),
            Ref::Root(rel) => write!(f, "/{}", RelBody(rel)),
            Ref::RootExec(rel) => write!(f, "/exec/{}", RelBody(rel)),
        }
    }
}

impl Display for OpName {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            OpName::Put => f.write_str("put"),
            OpName::Get => f.write_str("get"),
            OpName::Delete => f.write_str("delete"),
            OpName::Rexec => f.write_str("rexec"),
            OpName::User(n) => write!(f, "{n}"),
        }
    }
}

impl Display for Component {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "comp:{}", self.ty)?;
        if let Some(d) = &self.deploy {
            f.write_str(" [")?;
            match &d.codebase {
                Some(u) => write!(f, "{u}")?,
                None => f.write_char('_')?,
            }
            write!(f, " -> {}]", d.pattern)?;
        }
        f.write_str(" <")?;
        for (op, decl) in &self.decls {
            write!(f, " {op}({}) = {};", decl.param, decl.body)?;
        }
        f.write_str(" >")
    }
}

impl Display for Value {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Value::Ok => f.write_str("ok"),
            Value::Err => f.write_str("err"),
            Value::Num(n) => write!(f, "{n}"),
            Value::Name(n) => write!(f, "{n}"),
            Value::Comp(c) => write!(f, "{c}"),
            Value::Pair(tag, v) => write!(f, "{tag}<{v}>"),
            Value::Ref(r) => write!(f, "{r}"),
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        fn operand(f: &mut Formatter<'_>, e: &Expr) -> fmt::Result {
            match e {
                Expr::Add(..) | Expr::Sub(..) => write!(f, "({e})"),
                _ => write!(f, "{e}"),
            }
        }
        match self {
            Expr::Val(v) => write!(f, "{v}"),
            Expr::Add(a, b) => {
                write!(f, "{a} + ")?;
                operand(f, b)
            }
            Expr::Sub(a, b) => {
                write!(f, "{a} - ")?;
                operand(f, b)
            }
            Expr::Pair(tag, e) => write!(f, "{tag}<{e}>"),
        }
    }
}

impl Display for CmpOp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        })
    }
}

impl Display for BExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        fn operand(f: &mut Formatter<'_>, b: &BExpr) -> fmt::Result {
            match b {
                BExpr::And(..) | BExpr::Or(..) => write!(f, "({b})"),
                _ => write!(f, "{b}"),
            }
        }
        match self {
            BExpr::True => f.write_str("true"),
            BExpr::False => f.write_str("false"),
            BExpr::Cmp(op, a, b) => write!(f, "{a} {op} {b}"),
            BExpr::And(a, b) => {
                operand(f, a)?;
                f.write_str(" && ")?;
                operand(f, b)
            }
            BExpr::Or(a, b) => {
                operand(f, a)?;
                f.write_str(" || ")?;
                operand(f, b)
            }
            BExpr::Not(b) => write!(f, "!({b})"),
        }
    }
}

pub(crate) struct SlsDisplay<'a>(pub &'a Sls);

impl Display for SlsDisplay<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("^{")?;
        for (i, (l, s)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l} : {s}")?;
        }
        f.write_char('}')
    }
}

impl Display for Deleg {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Deleg::Internal => f.write_str("^I"),
            Deleg::Sessions(sls) => write!(f, "{}", SlsDisplay(sls)),
            Deleg::Contexts(entries) => {
                f.write_str("^{")?;
                for (i, e) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match e {
                        CtxEntry::Here => f.write_str("eps")?,
                        CtxEntry::Loc(l) => write!(f, "{l}")?,
                    }
                }
                f.write_char('}')
            }
        }
    }
}

fn write_session_at(f: &mut Formatter<'_>, kw: &str, at: &SessionAt) -> fmt::Result {
    match at {
        None => f.write_str(kw),
        Some((l, s)) => write!(f, "{kw} {l}/session/{s}"),
    }
}

impl Display for Command {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {}{}@{}",
            self.bind,
            self.kind.keyword(),
            self.deleg,
            self.target
        )?;
        if let Some(s) = &self.session {
            write!(f, " : {s}")?;
        }
        if let Some(a) = &self.arg {
            write!(f, " ({a})")?;
        }
        write!(f, " . {}", self.cont)
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Cmd(c) => write!(f, "{c}"),
            Term::Assign { bind, expr, cont } => write!(f, "{bind} = {expr} . {cont}"),
            Term::Send {
                chan,
                sls,
                expr,
                cont,
            } => {
                write!(f, "{chan}!")?;
                if !sls.is_empty() {
                    write!(f, "{}", SlsDisplay(sls))?;
                }
                write!(f, " {expr} . {cont}")
            }
            Term::Recv { chan, bind, cont } => write!(f, "{chan}({bind}) . {cont}"),
            Term::Spawn { child, cont } => write!(f, "spawn({child}) . {cont}"),
            Term::If { cond, then, els } => write!(f, "if {cond} then {then} else {els}"),
            Term::NewSession { at, cont } => {
                write_session_at(f, "newsession", at)?;
                write!(f, " . {cont}")
            }
            Term::DropSession { at, cont } => {
                write_session_at(f, "dropsession", at)?;
                write!(f, " . {cont}")
            }
            Term::Install(i) => write!(
                f,
                "{} = install{}@{} : {} <- {} ({}) . {}",
                i.bind,
                SlsDisplay(&i.sls),
                i.code,
                i.session,
                i.component,
                i.arg,
                i.cont
            ),
            Term::Return(e) => write!(f, "return {e}"),
            Term::New { name, body } => write!(f, "new {name} . {body}"),
            Term::Nil => f.write_str("nil"),
        }
    }
}

impl Display for Resource {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Resource::Prog(t) => write!(f, "{t}"),
            Resource::Val(v) => write!(f, "{v}"),
        }
    }
}

impl Display for Located {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "[ {} ]@{}", self.res, self.url)
    }
}

impl Display for Network {
    /// One resource per line, in canonical order, under nested restrictions.
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let items = self.sorted_items();
        for n in &self.restricted {
            write!(f, "new {n}.(")?;
        }
        if !self.restricted.is_empty() && !items.is_empty() {
            f.write_char('\n')?;
        }
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                f.write_str("\n|| ")?;
            }
            write!(f, "{item}")?;
        }
        if !self.restricted.is_empty() {
            if !items.is_empty() {
                f.write_char('\n')?;
            }
            for _ in &self.restricted {
                f.write_char(')')?;
            }
        }
        Ok(())
    }
}

impl Display for NetAst {
    /// The network as written, with groupings kept.
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            NetAst::Item(l) => write!(f, "{l}"),
            NetAst::New(n, body) => write!(f, "new {n}.({body})"),
            NetAst::Par(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" || ")?;
                    }
                    match p {
                        NetAst::Par(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

/// Canonical text of a network, term or value.
pub fn print<T: Display + ?Sized>(t: &T) -> String {
    t.to_string()
}
