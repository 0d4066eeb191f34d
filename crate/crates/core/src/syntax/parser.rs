//! Recursive-descent parser for the concrete syntax.
//!
//! ```text
//! network   := item { "||" item }
//! item      := "[" resource "]" "@" url | "new" NAME "." "(" network ")"
//!            | "(" network ")"
//! resource  := value | term
//! value     := "ok" | "err" | INT | NAME | NAME "<" value ">"
//!            | "comp" ":" NAME ["[" (url | "_") "->" pat "]"] "<" decls ">"
//!            | ref
//! decls     := { opname "(" NAME ")" "=" term ";" }
//! term      := NAME "=" cmd "." term | NAME "=" expr "." term
//!            | NAME "!" [sls] expr "." term | NAME "(" NAME ")" "." term
//!            | "spawn" "(" term ")" "." term
//!            | "if" bexpr "then" term "else" term
//!            | "newsession" [l "/session/" ses] "." term
//!            | "dropsession" [l "/session/" ses] "." term
//!            | "return" expr | "nil" | "new" NAME "." term
//! cmd       := ("put"|"rexec"|"lexec") deleg "@" ref [":" ses] "(" expr ")"
//!            | ("get"|"delete") deleg "@" ref [":" ses]
//! deleg     := "^I" | "^{" [rent {"," rent}] "}"
//! rent      := loc [":" ses] | "eps"
//! ref       := url | relpath | "/" relpath | "/exec/" relpath
//!            | "<session>/" relpath | "<application>/" relpath
//!            | "<phbase>/" relpath | "<" NAME ">/" relpath
//!            | "<ipath>" ["/" relpath]
//! pat       := "/" {NAME "/"} NAME ["/*"]
//! ```
//!
//! Urls, paths and patterns are lexed without interior whitespace. A name
//! position holding a non-name value is written `(v)`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::*;
use super::names;
use super::network::Network;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
    /// Invariant violations are reported as-is instead of trying an
    /// alternative production.
    fatal: bool,
}

type PResult<T> = Result<T, ParseError>;

pub fn parse_network_ast(src: &str) -> PResult<NetAst> {
    let mut p = Parser::new(src);
    let n = p.network()?;
    p.finish()?;
    Ok(n)
}

/// Parses and brings the network into canonical form.
pub fn parse_network(src: &str) -> PResult<Network> {
    Ok(Network::from_ast(parse_network_ast(src)?))
}

pub fn parse_term(src: &str) -> PResult<Term> {
    let mut p = Parser::new(src);
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_value(src: &str) -> PResult<Value> {
    let mut p = Parser::new(src);
    let v = p.value()?;
    p.finish()?;
    Ok(v)
}

pub fn parse_expr(src: &str) -> PResult<Expr> {
    let mut p = Parser::new(src);
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_bexpr(src: &str) -> PResult<BExpr> {
    let mut p = Parser::new(src);
    let e = p.bexpr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_url(src: &str) -> PResult<Url> {
    let mut p = Parser::new(src);
    p.skip_ws();
    let u = p.url()?;
    p.finish()?;
    Ok(u)
}

pub fn parse_location(src: &str) -> PResult<Location> {
    let mut p = Parser::new(src);
    p.skip_ws();
    let l = p.location()?;
    p.finish()?;
    Ok(l)
}

pub fn parse_pattern(src: &str) -> PResult<Pattern> {
    let mut p = Parser::new(src);
    p.skip_ws();
    let pat = p.pattern()?;
    p.finish()?;
    Ok(pat)
}

pub fn parse_ref(src: &str) -> PResult<Ref> {
    let mut p = Parser::new(src);
    p.skip_ws();
    let r = p.target_ref()?;
    p.finish()?;
    Ok(r)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

fn is_host_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b'.'
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn error_at(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        let before = &self.src[..pos.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
        ParseError {
            line,
            col,
            msg: msg.into(),
            fatal: false,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(self.error_at(self.pos, msg))
    }

    fn fatal<T>(&self, pos: usize, msg: impl Into<String>) -> PResult<T> {
        let mut e = self.error_at(pos, msg);
        e.fatal = true;
        Err(e)
    }

    fn skip_ws(&mut self) {
        let b = self.bytes();
        while self.pos < b.len() {
            match b[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' => self.pos += 1,
                b'#' => {
                    while self.pos < b.len() && b[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn finish(&mut self) -> PResult<()> {
        self.skip_ws();
        if self.pos < self.src.len() {
            return self.err("unexpected trailing input");
        }
        Ok(())
    }

    /// Next byte without skipping whitespace.
    fn peek_raw(&self) -> Option<u8> {
        self.bytes().get(self.pos).copied()
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at(&mut self, s: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.at(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn eat_raw(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    /// A `.` that separates a prefix from its continuation.
    fn expect_dot(&mut self) -> PResult<()> {
        self.skip_ws();
        if self.rest().starts_with('.') && !self.rest().starts_with("..") {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected `.`")
        }
    }

    fn peek_ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        self.peek_ident_raw()
    }

    fn peek_ident_raw(&self) -> Option<&'a str> {
        let b = self.bytes();
        let start = self.pos;
        if start >= b.len() || !(b[start].is_ascii_alphabetic() || b[start] == b'_') {
            return None;
        }
        let mut end = start;
        while end < b.len() && is_ident_char(b[end]) {
            end += 1;
        }
        Some(&self.src[start..end])
    }

    fn at_kw(&mut self, kw: &str) -> bool {
        self.peek_ident() == Some(kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    fn ident_raw(&mut self) -> PResult<&'a str> {
        match self.peek_ident_raw() {
            Some(s) => {
                self.pos += s.len();
                Ok(s)
            }
            None => self.err("expected identifier"),
        }
    }

    fn name(&mut self) -> PResult<Name> {
        self.skip_ws();
        self.name_raw()
    }

    fn name_raw(&mut self) -> PResult<Name> {
        let start = self.pos;
        let s = self.ident_raw()?;
        if is_reserved(s) {
            self.pos = start;
            return self.err(format!("`{s}` is a reserved word"));
        }
        Ok(Name::new(s))
    }

    /// Runs `f`, restoring the position if it fails without a fatal error.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let save = self.pos;
        let r = f(self);
        if let Err(e) = &r {
            if !e.fatal {
                self.pos = save;
            }
        }
        r
    }

    // ---- networks ----

    fn network(&mut self) -> PResult<NetAst> {
        let mut items = Vec::new();
        self.skip_ws();
        if self.pos >= self.src.len() || self.at(")") {
            return Ok(NetAst::Par(items));
        }
        items.push(self.item()?);
        while self.eat("||") {
            items.push(self.item()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            NetAst::Par(items)
        })
    }

    fn item(&mut self) -> PResult<NetAst> {
        if self.eat_kw("new") {
            let n = self.name()?;
            self.expect_dot()?;
            self.expect("(")?;
            let body = self.network()?;
            self.expect(")")?;
            return Ok(NetAst::New(n, Box::new(body)));
        }
        if self.eat("(") {
            let body = self.network()?;
            self.expect(")")?;
            return Ok(body);
        }
        self.expect("[")?;
        let res = self.resource()?;
        self.expect("]")?;
        self.expect("@")?;
        self.skip_ws();
        let url = self.url()?;
        Ok(NetAst::Item(Located { url, res }))
    }

    fn resource(&mut self) -> PResult<Resource> {
        let as_term = self.attempt(|p| {
            let t = p.term()?;
            if p.at("]") {
                Ok(t)
            } else {
                p.err("expected `]`")
            }
        });
        let term_err = match as_term {
            Ok(t) => return Ok(Resource::Prog(t)),
            Err(e) if e.fatal => return Err(e),
            Err(e) => e,
        };
        let save = self.pos;
        match self.value() {
            Ok(v) if self.at("]") => Ok(Resource::Val(v)),
            Ok(_) => {
                let e = self.error_at(self.pos, "expected `]`");
                Err(furthest(term_err, e))
            }
            Err(e) if e.fatal => Err(e),
            Err(e) => {
                self.pos = save;
                Err(furthest(term_err, e))
            }
        }
    }

    // ---- urls and paths ----

    fn location(&mut self) -> PResult<Location> {
        if !self.eat_raw("//") {
            return self.err("expected `//`");
        }
        let b = self.bytes();
        let start = self.pos;
        while self.pos < b.len() && is_host_char(b[self.pos]) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected host");
        }
        let host = self.src[start..self.pos].to_string();
        if !self.eat_raw("/") {
            return self.err("expected `/` after host");
        }
        let ctx = self.name_raw()?;
        Ok(Location { host, ctx })
    }

    /// Atom inside a path: an identifier or a parenthesised value.
    fn path_atom(&mut self) -> PResult<Option<(Atom, usize)>> {
        let start = self.pos;
        if self.peek_raw() == Some(b'(') {
            self.pos += 1;
            let v = self.value()?;
            self.expect(")")?;
            return Ok(Some((Atom::from_value(&v), start)));
        }
        // Path segments may start with a digit (`items/3`).
        let b = self.bytes();
        let mut end = start;
        while end < b.len() && is_ident_char(b[end]) {
            end += 1;
        }
        if end == start {
            return Ok(None);
        }
        self.pos = end;
        Ok(Some((Atom::Name(Name::new(&self.src[start..end])), start)))
    }

    fn url(&mut self) -> PResult<Url> {
        let loc = self.location()?;
        if !self.eat_raw("/") {
            return self.err("expected `/` after context (a url names a resource or collection)");
        }
        let mut segs = Vec::new();
        let mut collection = true;
        while let Some((a, at)) = self.path_atom()? {
            if let Atom::Name(n) = &a {
                let ok = match n.as_str() {
                    "exec" | "session" | "application" => segs.is_empty(),
                    "ns" => segs.len() == 1 && segs[0] == Atom::name("session"),
                    s => !is_reserved(s),
                };
                if !ok {
                    return self.fatal(at, format!("`{n}` cannot appear at this url position"));
                }
            }
            segs.push(a);
            collection = false;
            if self.eat_raw("/") {
                collection = true;
            } else {
                break;
            }
        }
        Ok(Url::new(loc, segs, collection))
    }

    /// Relative path body. `allow_parent` admits `..` steps.
    fn rel_body(&mut self, allow_parent: bool) -> PResult<RelPath> {
        let mut segs = Vec::new();
        let mut collection = true;
        loop {
            if self.rest().starts_with("..") {
                if !allow_parent {
                    return self.fatal(self.pos, "`..` is only allowed in plain relative paths");
                }
                self.pos += 2;
                segs.push(RelSeg::Parent);
            } else if self.rest().starts_with("./") {
                self.pos += 1;
            } else {
                match self.path_atom()? {
                    Some((a, at)) => {
                        if let Atom::Name(n) = &a {
                            if is_reserved(n.as_str()) {
                                return self.fatal(at, format!("`{n}` is a reserved word"));
                            }
                        }
                        segs.push(RelSeg::Atom(a));
                    }
                    None => break,
                }
            }
            collection = false;
            if self.eat_raw("/") {
                collection = true;
            } else {
                break;
            }
        }
        Ok(RelPath { segs, collection })
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        if !self.eat_raw("/") {
            return self.err("expected `/` starting a pattern");
        }
        let mut prefix = Vec::new();
        let mut wildcard = false;
        loop {
            if !prefix.is_empty() && self.eat_raw("*") {
                wildcard = true;
                break;
            }
            match self.path_atom()? {
                Some((a, at)) => {
                    if let Atom::Name(n) = &a {
                        if is_reserved(n.as_str()) {
                            return self.fatal(at, format!("`{n}` is a reserved word"));
                        }
                    }
                    prefix.push(a);
                }
                None => return self.err("expected pattern segment"),
            }
            if !self.eat_raw("/") {
                break;
            }
        }
        Ok(Pattern { prefix, wildcard })
    }

    fn target_ref(&mut self) -> PResult<Ref> {
        self.skip_ws();
        let r = self.rest();
        if r.starts_with("//") {
            return Ok(Ref::Url(self.url()?));
        }
        if r.starts_with("/exec/") {
            self.pos += "/exec/".len();
            return Ok(Ref::RootExec(self.rel_body(false)?));
        }
        if r.starts_with('/') {
            self.pos += 1;
            return Ok(Ref::Root(self.rel_body(false)?));
        }
        if r.starts_with('<') {
            return self.sym_ref();
        }
        if r.starts_with("./") || r.starts_with("..") {
            if r.starts_with("./") {
                self.pos += 2;
            }
            return Ok(Ref::Rel(self.rel_body(true)?));
        }
        let body = self.rel_body(true)?;
        if body.is_empty() {
            return self.err("expected a reference");
        }
        Ok(Ref::Rel(body))
    }

    fn sym_ref(&mut self) -> PResult<Ref> {
        let start = self.pos;
        self.pos += 1;
        let base = if self.peek_raw() == Some(b'(') {
            let (a, _) = self.path_atom()?.expect("atom");
            SymBase::Var(a)
        } else {
            let id = self.ident_raw()?;
            match id {
                "session" => SymBase::Session,
                "application" => SymBase::Application,
                "phbase" => SymBase::Phbase,
                "ipath" => {
                    if !self.eat_raw(">") {
                        return self.err("expected `>`");
                    }
                    if self.eat_raw("/") {
                        return Ok(Ref::IPath(Some(self.rel_body(false)?)));
                    }
                    return Ok(Ref::IPath(None));
                }
                s if is_reserved(s) => {
                    return self.fatal(start, format!("`{s}` cannot be a symbolic base"))
                }
                s => SymBase::Var(Atom::name(s)),
            }
        };
        if !self.eat_raw(">") {
            return self.err("expected `>`");
        }
        if !self.eat_raw("/") {
            return self.err("expected `/` after symbolic base");
        }
        Ok(Ref::Sym(base, self.rel_body(false)?))
    }

    // ---- values and expressions ----

    fn int(&mut self) -> PResult<Option<i64>> {
        self.skip_ws();
        let b = self.bytes();
        let start = self.pos;
        let mut end = start;
        if end < b.len() && b[end] == b'-' {
            end += 1;
        }
        let digits = end;
        while end < b.len() && b[end].is_ascii_digit() {
            end += 1;
        }
        if end == digits || (end < b.len() && is_ident_char(b[end])) {
            return Ok(None);
        }
        match self.src[start..end].parse() {
            Ok(n) => {
                self.pos = end;
                Ok(Some(n))
            }
            Err(_) => self.fatal(start, "integer out of range"),
        }
    }

    fn is_ref_start(&mut self) -> bool {
        self.skip_ws();
        let r = self.rest();
        r.starts_with('/') || r.starts_with('<') || r.starts_with("./") || r.starts_with("..")
    }

    fn value(&mut self) -> PResult<Value> {
        if let Some(n) = self.int()? {
            return Ok(Value::Num(n));
        }
        if self.eat_kw("ok") {
            return Ok(Value::Ok);
        }
        if self.eat_kw("err") {
            return Ok(Value::Err);
        }
        if self.at_kw("comp") {
            return self.component();
        }
        if self.is_ref_start() {
            return Ok(Value::Ref(self.target_ref()?));
        }
        if self.eat("(") {
            let v = self.value()?;
            self.expect(")")?;
            if self.eat_raw("<") {
                let inner = self.value()?;
                self.expect(">")?;
                return Ok(Value::Pair(Atom::from_value(&v), Box::new(inner)));
            }
            return Ok(v);
        }
        let start = self.pos;
        let n = self.name()?;
        match self.peek_raw() {
            Some(b'<') => {
                let save = self.pos;
                let pair = self.attempt(|p| {
                    p.pos += 1;
                    let inner = p.value()?;
                    p.expect(">")?;
                    Ok(inner)
                });
                match pair {
                    Ok(inner) => Ok(Value::Pair(Atom::Name(n), Box::new(inner))),
                    Err(e) if e.fatal => Err(e),
                    Err(_) => {
                        self.pos = save;
                        Ok(Value::Name(n))
                    }
                }
            }
            Some(b'/') => {
                self.pos = start;
                Ok(Value::Ref(Ref::Rel(self.rel_body(true)?)))
            }
            _ => Ok(Value::Name(n)),
        }
    }

    fn component(&mut self) -> PResult<Value> {
        self.expect_kw("comp")?;
        self.expect(":")?;
        let ty = self.name()?;
        let deploy = if self.eat("[") {
            self.skip_ws();
            let codebase = if self.eat("_") {
                None
            } else {
                let at = self.pos;
                let u = self.url()?;
                if !u.collection {
                    return self.fatal(at, "codebase must be a collection url");
                }
                Some(u)
            };
            self.expect("->")?;
            self.skip_ws();
            let pattern = self.pattern()?;
            self.expect("]")?;
            Some(Deploy { codebase, pattern })
        } else {
            None
        };
        self.expect("<")?;
        let mut decls = BTreeMap::new();
        while !self.eat(">") {
            let at = {
                self.skip_ws();
                self.pos
            };
            let op = match self.ident_raw()? {
                "put" => OpName::Put,
                "get" => OpName::Get,
                "delete" => OpName::Delete,
                "rexec" => OpName::Rexec,
                s if is_reserved(s) => return self.fatal(at, format!("`{s}` is a reserved word")),
                s => OpName::User(Name::new(s)),
            };
            self.expect("(")?;
            let param = self.name()?;
            self.expect(")")?;
            self.expect("=")?;
            let body = self.term()?;
            self.expect(";")?;
            if matches!(op, OpName::Get | OpName::Delete)
                && names::support_term(&body).contains(&param)
            {
                return self.fatal(
                    at,
                    format!("definition of {op} must not use its parameter `{param}`"),
                );
            }
            if decls.contains_key(&op) {
                return self.fatal(at, format!("duplicate definition for {op}"));
            }
            decls.insert(op, Decl { param, body });
        }
        Ok(Value::Comp(Box::new(Component { ty, deploy, decls })))
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.expr_atom()?;
        loop {
            self.skip_ws();
            let r = self.rest();
            if r.starts_with('+') {
                self.pos += 1;
                let rhs = self.expr_atom()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            } else if r.starts_with('-') && !r.starts_with("->") {
                self.pos += 1;
                let rhs = self.expr_atom()?;
                lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn expr_atom(&mut self) -> PResult<Expr> {
        self.skip_ws();
        if self.rest().starts_with('(') {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(")")?;
            if self.eat_raw("<") {
                let tag = match e {
                    Expr::Val(v) => Atom::from_value(&v),
                    _ => return self.err("pair tag must be a value"),
                };
                let inner = self.expr()?;
                self.expect(">")?;
                return Ok(Expr::Pair(tag, Box::new(inner)));
            }
            return Ok(e);
        }
        if let Some(id) = self.peek_ident() {
            if !is_reserved(id) && self.bytes().get(self.pos + id.len()) == Some(&b'<') {
                let save = self.pos;
                let pair = self.attempt(|p| {
                    p.pos += id.len() + 1;
                    let inner = p.expr()?;
                    p.expect(">")?;
                    Ok(inner)
                });
                match pair {
                    Ok(inner) => return Ok(Expr::Pair(Atom::name(id), Box::new(inner))),
                    Err(e) if e.fatal => return Err(e),
                    Err(_) => {
                        self.pos = save + id.len();
                        return Ok(Expr::Val(Value::name(id)));
                    }
                }
            }
        }
        Ok(Expr::Val(self.value()?))
    }

    fn bexpr(&mut self) -> PResult<BExpr> {
        let mut lhs = self.band()?;
        while self.eat("||") {
            let rhs = self.band()?;
            lhs = BExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn band(&mut self) -> PResult<BExpr> {
        let mut lhs = self.bnot()?;
        while self.eat("&&") {
            let rhs = self.bnot()?;
            lhs = BExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn bnot(&mut self) -> PResult<BExpr> {
        if self.at("!") && !self.at("!=") {
            self.pos += 1;
            return Ok(BExpr::Not(Box::new(self.bnot()?)));
        }
        if self.eat_kw("true") {
            return Ok(BExpr::True);
        }
        if self.eat_kw("false") {
            return Ok(BExpr::False);
        }
        if self.at("(") {
            let grouped = self.attempt(|p| {
                p.pos += 1;
                let b = p.bexpr()?;
                p.expect(")")?;
                Ok(b)
            });
            match grouped {
                Ok(b) => return Ok(b),
                Err(e) if e.fatal => return Err(e),
                Err(_) => {}
            }
        }
        let a = self.expr()?;
        self.skip_ws();
        let ops = [
            ("==", CmpOp::Eq),
            ("!=", CmpOp::Ne),
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ];
        for (tok, op) in ops {
            if self.eat(tok) {
                let b = self.expr()?;
                return Ok(BExpr::Cmp(op, a, b));
            }
        }
        self.err("expected comparison operator")
    }

    // ---- terms ----

    fn session(&mut self) -> PResult<Session> {
        self.skip_ws();
        if self.eat_kw("ns") {
            return Ok(Session::Ns);
        }
        match self.path_atom()? {
            Some((Atom::Name(n), at)) if is_reserved(n.as_str()) => {
                self.fatal(at, format!("`{n}` is a reserved word"))
            }
            Some((a, _)) => Ok(Session::Id(a)),
            None => self.err("expected session (`ns` or a name)"),
        }
    }

    fn session_at(&mut self) -> PResult<SessionAt> {
        if !self.at("//") {
            return Ok(None);
        }
        let at = self.pos;
        let loc = self.location()?;
        if !self.eat_raw("/session/") {
            return self.fatal(at, "expected `<location>/session/<S>`");
        }
        let s = if self.eat_raw("ns") {
            Session::Ns
        } else {
            match self.path_atom()? {
                Some((a, _)) => Session::Id(a),
                None => return self.err("expected session id"),
            }
        };
        Ok(Some((loc, s)))
    }

    fn sls_body(&mut self) -> PResult<Sls> {
        // after "^{"
        let mut sls = Sls::new();
        if self.eat("}") {
            return Ok(sls);
        }
        loop {
            self.skip_ws();
            let at = self.pos;
            let l = self.location()?;
            self.expect(":")?;
            let s = self.session()?;
            if sls.insert(l, s).is_some() {
                return self.fatal(at, "duplicate context in delegation set");
            }
            if self.eat("}") {
                return Ok(sls);
            }
            self.expect(",")?;
        }
    }

    fn deleg(&mut self) -> PResult<Deleg> {
        if !self.eat_raw("^") {
            return self.err("expected delegation annotation `^I` or `^{...}`");
        }
        if self.eat_raw("I") {
            return Ok(Deleg::Internal);
        }
        if !self.eat_raw("{") {
            return self.err("expected `I` or `{`");
        }
        if self.eat("}") {
            return Ok(Deleg::empty());
        }
        let mut ctxs: Vec<CtxEntry> = Vec::new();
        let mut sls = Sls::new();
        loop {
            self.skip_ws();
            let at = self.pos;
            if self.eat_kw("eps") {
                if !sls.is_empty() {
                    return self.fatal(at, "cannot mix static and runtime delegation entries");
                }
                ctxs.push(CtxEntry::Here);
            } else {
                let l = self.location()?;
                if self.eat(":") {
                    if !ctxs.is_empty() {
                        return self.fatal(at, "cannot mix static and runtime delegation entries");
                    }
                    let s = self.session()?;
                    if sls.insert(l, s).is_some() {
                        return self.fatal(at, "duplicate context in delegation set");
                    }
                } else {
                    if !sls.is_empty() {
                        return self.fatal(at, "cannot mix static and runtime delegation entries");
                    }
                    ctxs.push(CtxEntry::Loc(l));
                }
            }
            if self.eat("}") {
                break;
            }
            self.expect(",")?;
        }
        Ok(if ctxs.is_empty() {
            Deleg::Sessions(sls)
        } else {
            Deleg::Contexts(ctxs)
        })
    }

    fn command(&mut self, bind: Name, kind: CmdKind) -> PResult<Term> {
        let deleg = self.deleg()?;
        self.expect("@")?;
        let target_at = {
            self.skip_ws();
            self.pos
        };
        let target = self.target_ref()?;
        let session = if self.eat(":") {
            Some(self.session()?)
        } else {
            None
        };
        if deleg.is_internal() && session.is_none() && !target.is_relative() {
            return self.fatal(
                target_at,
                "internal delegation requires a relative target",
            );
        }
        let arg = if kind.takes_arg() {
            self.expect("(")?;
            let e = self.expr()?;
            self.expect(")")?;
            Some(e)
        } else {
            None
        };
        self.expect_dot()?;
        let cont = self.term()?;
        Ok(Term::Cmd(Command {
            bind,
            kind,
            deleg,
            target,
            session,
            arg,
            cont: Box::new(cont),
        }))
    }

    fn install(&mut self, bind: Name) -> PResult<Term> {
        if !self.eat_raw("^{") {
            return self.err("expected `^{`");
        }
        let sls = self.sls_body()?;
        self.expect("@")?;
        self.skip_ws();
        let code = self.url()?;
        self.expect(":")?;
        let session = self.session()?;
        self.expect("<-")?;
        let component = self.expr_atom()?;
        self.expect("(")?;
        let arg = self.expr()?;
        self.expect(")")?;
        self.expect_dot()?;
        let cont = self.term()?;
        Ok(Term::Install(Install {
            bind,
            sls,
            code,
            session,
            component,
            arg,
            cont: Box::new(cont),
        }))
    }

    pub(crate) fn term(&mut self) -> PResult<Term> {
        self.skip_ws();
        if self.eat_kw("nil") {
            return Ok(Term::Nil);
        }
        if self.eat_kw("return") {
            return Ok(Term::Return(self.expr()?));
        }
        if self.eat_kw("spawn") {
            self.expect("(")?;
            let child = self.term()?;
            self.expect(")")?;
            self.expect_dot()?;
            let cont = self.term()?;
            return Ok(Term::Spawn {
                child: Box::new(child),
                cont: Box::new(cont),
            });
        }
        if self.eat_kw("if") {
            let cond = self.bexpr()?;
            self.expect_kw("then")?;
            let then = self.term()?;
            self.expect_kw("else")?;
            let els = self.term()?;
            return Ok(Term::If {
                cond,
                then: Box::new(then),
                els: Box::new(els),
            });
        }
        if self.eat_kw("newsession") {
            let at = self.session_at()?;
            self.expect_dot()?;
            let cont = Box::new(self.term()?);
            return Ok(Term::NewSession { at, cont });
        }
        if self.eat_kw("dropsession") {
            let at = self.session_at()?;
            self.expect_dot()?;
            let cont = Box::new(self.term()?);
            return Ok(Term::DropSession { at, cont });
        }
        if self.eat_kw("new") {
            let name = self.name()?;
            self.expect_dot()?;
            let body = Box::new(self.term()?);
            return Ok(Term::New { name, body });
        }

        // channel or binder
        let head = if self.rest().starts_with('(') {
            let (a, _) = self.path_atom()?.expect("atom");
            a
        } else {
            Atom::Name(self.name()?)
        };
        self.skip_ws();
        if self.rest().starts_with('!') && !self.rest().starts_with("!=") {
            self.pos += 1;
            let sls = if self.eat_raw("^{") {
                self.sls_body()?
            } else {
                Sls::new()
            };
            let expr = self.expr()?;
            self.expect_dot()?;
            let cont = Box::new(self.term()?);
            return Ok(Term::Send {
                chan: head,
                sls,
                expr,
                cont,
            });
        }
        if self.rest().starts_with('(') {
            self.pos += 1;
            let bind = self.name()?;
            self.expect(")")?;
            self.expect_dot()?;
            let cont = Box::new(self.term()?);
            return Ok(Term::Recv {
                chan: head,
                bind,
                cont,
            });
        }
        let bind = match head {
            Atom::Name(n) => n,
            Atom::Val(_) => return self.err("expected `!` or `(` after channel"),
        };
        if !(self.rest().starts_with('=') && !self.rest().starts_with("==")) {
            return self.err("expected `=`, `!` or `(`");
        }
        self.pos += 1;
        if let Some(kw) = self.peek_ident() {
            let next = self.bytes().get(self.pos + kw.len()).copied();
            if next == Some(b'^') {
                let kind = match kw {
                    "put" => Some(CmdKind::Put),
                    "get" => Some(CmdKind::Get),
                    "delete" => Some(CmdKind::Delete),
                    "rexec" => Some(CmdKind::Rexec),
                    "lexec" => Some(CmdKind::Lexec),
                    _ => None,
                };
                if let Some(kind) = kind {
                    self.pos += kw.len();
                    return self.command(bind, kind);
                }
                if kw == "install" {
                    self.pos += kw.len();
                    return self.install(bind);
                }
            }
        }
        let expr = self.expr()?;
        self.expect_dot()?;
        let cont = Box::new(self.term()?);
        Ok(Term::Assign { bind, expr, cont })
    }
}

fn furthest(a: ParseError, b: ParseError) -> ParseError {
    if (b.line, b.col) > (a.line, a.col) {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_resource() {
        let n = parse_network("[ 5 ]@//h/c/f").unwrap();
        assert_eq!(n.items.len(), 1);
        assert_eq!(n.items[0].value(), Some(&Value::Num(5)));
        assert_eq!(n.items[0].url.to_string(), "//h/c/f");
    }

    #[test]
    fn program_with_get() {
        let n = parse_network("[ x = get^{}@//h/c/f : ns . nil ]@//h/c/p/").unwrap();
        let t = n.items[0].term().unwrap();
        let c = t.as_cmd().unwrap();
        assert_eq!(c.kind, CmdKind::Get);
        assert_eq!(c.deleg, Deleg::empty());
        assert_eq!(c.session, Some(Session::Ns));
        assert!(n.items[0].url.collection);
    }

    #[test]
    fn internal_with_absolute_target_is_rejected() {
        let e = parse_network("[ x = put^I@//h/c/f (5) . nil ]@//h/c/p/").unwrap_err();
        assert!(e.msg.contains("relative target"), "{e}");
    }

    #[test]
    fn return_and_ipath() {
        assert_eq!(parse_term("return ok").unwrap(), Term::Return(Expr::val(Value::Ok)));
        let t = parse_term("x = get^I@<ipath> . return x").unwrap();
        let c = t.as_cmd().unwrap();
        assert_eq!(c.deleg, Deleg::Internal);
        assert_eq!(c.target, Ref::IPath(None));
    }

    #[test]
    fn duplicate_definition_is_rejected() {
        let e = parse_value("comp:svc < get(p) = nil; get(q) = nil; >").unwrap_err();
        assert!(e.msg.contains("duplicate definition for get"), "{e}");
    }

    #[test]
    fn get_param_use_is_rejected() {
        let e = parse_value("comp:svc < get(p) = return p; >").unwrap_err();
        assert!(e.msg.contains("must not use"), "{e}");
        assert!(parse_value("comp:svc < put(p) = return p; >").is_ok());
    }

    #[test]
    fn pair_and_comparison_disambiguate() {
        assert_eq!(
            parse_value("tag<7>").unwrap(),
            Value::Pair(Atom::name("tag"), Box::new(Value::Num(7)))
        );
        let b = parse_bexpr("x < 2").unwrap();
        assert!(matches!(b, BExpr::Cmp(CmpOp::Lt, _, _)));
        let b = parse_bexpr("(a + 1) == 2 && !(b != c)").unwrap();
        assert!(matches!(b, BExpr::And(..)));
    }

    #[test]
    fn refs() {
        assert!(matches!(parse_ref("a/b").unwrap(), Ref::Rel(_)));
        assert!(matches!(parse_ref("../x").unwrap(), Ref::Rel(_)));
        assert!(matches!(parse_ref("/q/r").unwrap(), Ref::Root(_)));
        assert!(matches!(parse_ref("/exec/m/").unwrap(), Ref::RootExec(_)));
        assert!(matches!(parse_ref("<session>/k").unwrap(), Ref::Sym(SymBase::Session, _)));
        assert!(matches!(parse_ref("<y>/calc").unwrap(), Ref::Sym(SymBase::Var(_), _)));
        assert!(parse_ref("/a/../b").is_err());
    }

    #[test]
    fn reserved_url_positions() {
        assert!(parse_url("//h/c/exec/m/").is_ok());
        assert!(parse_url("//h/c/session/ns/k").is_ok());
        assert!(parse_url("//h/c/a/exec").is_err());
        assert!(parse_url("//h/c/ok").is_err());
        assert!(parse_url("//h/c").is_err());
    }

    #[test]
    fn error_positions() {
        let e = parse_network("[ 5 ]@//h/c/f\n|| [ x = ]@//h/c/g").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn mixed_delegation_is_rejected() {
        assert!(parse_term("x = get^{eps, //h/c : ns}@a : ns . nil").is_err());
        let t = parse_term("x = get^{eps, //k/d}@a . nil").unwrap();
        assert!(matches!(t.as_cmd().unwrap().deleg, Deleg::Contexts(ref v) if v.len() == 2));
    }
}
