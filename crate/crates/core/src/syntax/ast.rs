//! Abstract syntax shared by static code (component bodies) and running
//! programs. The two layers use one set of types; [`super::validate`] decides
//! which forms are legal where.

use std::collections::BTreeMap;
use std::fmt;

/// Identifiers that may not be used as names.
pub const RESERVED: &[&str] = &[
    "exec",
    "session",
    "application",
    "ns",
    "ok",
    "err",
    "put",
    "get",
    "delete",
    "rexec",
    "lexec",
    "install",
    "comp",
    "new",
    "spawn",
    "if",
    "then",
    "else",
    "return",
    "nil",
    "newsession",
    "dropsession",
    "eps",
    "ipath",
    "phbase",
    "true",
    "false",
];

pub fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s)
}

/// Letters, digits and underscores, not starting with a digit.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A name from the global name set. Construction is unchecked; the parser
/// enforces the identifier and reserved-word rules.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(String);

impl Name {
    pub fn new(s: impl Into<String>) -> Self {
        Name(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Names of the form `_g<k>` are reserved for the engine.
    pub fn generated_index(&self) -> Option<u64> {
        let digits = self.0.strip_prefix("_g")?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok()
    }

    pub fn is_generated(&self) -> bool {
        self.generated_index().is_some()
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

/// An application context on a server.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub host: String,
    pub ctx: Name,
}

impl Location {
    pub fn new(host: impl Into<String>, ctx: impl Into<Name>) -> Self {
        Location {
            host: host.into(),
            ctx: ctx.into(),
        }
    }

    pub fn same_machine(&self, other: &Location) -> bool {
        self.host == other.host
    }
}

/// A name position that may receive an arbitrary value by substitution.
///
/// Url segments, channels, pair tags and session ids are names in the
/// calculus; when a non-name value is substituted into one of them the
/// value is kept verbatim and printed in parentheses.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Name(Name),
    Val(Box<Value>),
}

impl Atom {
    pub fn name(s: &str) -> Self {
        Atom::Name(Name::new(s))
    }

    pub fn as_name(&self) -> Option<&Name> {
        match self {
            Atom::Name(n) => Some(n),
            Atom::Val(_) => None,
        }
    }

    pub fn is(&self, s: &str) -> bool {
        matches!(self, Atom::Name(n) if n.as_str() == s)
    }

    /// The atom a value denotes when it lands in a name position.
    pub fn from_value(v: &Value) -> Self {
        match v {
            Value::Name(n) => Atom::Name(n.clone()),
            other => Atom::Val(Box::new(other.clone())),
        }
    }
}

/// Session held for a context: none, or an id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Session {
    Ns,
    Id(Atom),
}

impl Session {
    pub fn id(n: Name) -> Self {
        Session::Id(Atom::Name(n))
    }

    pub fn is_ns(&self) -> bool {
        matches!(self, Session::Ns)
    }
}

/// Absolute url: a location followed by path segments. A url with no
/// segments is the context root and is always a collection.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Url {
    pub loc: Location,
    pub segs: Vec<Atom>,
    pub collection: bool,
}

impl Url {
    pub fn root(loc: Location) -> Self {
        Url {
            loc,
            segs: Vec::new(),
            collection: true,
        }
    }

    pub fn new(loc: Location, segs: Vec<Atom>, collection: bool) -> Self {
        Url {
            loc,
            collection: collection || segs.is_empty(),
            segs,
        }
    }

    /// Appends a segment, producing a url of the requested shape.
    pub fn child(&self, seg: Atom, collection: bool) -> Url {
        let mut segs = self.segs.clone();
        segs.push(seg);
        Url {
            loc: self.loc.clone(),
            segs,
            collection,
        }
    }

    /// The collection with the same segments.
    pub fn as_dir(&self) -> Url {
        Url {
            loc: self.loc.clone(),
            segs: self.segs.clone(),
            collection: true,
        }
    }

    /// Containing directory; `None` for a context root.
    pub fn parent_dir(&self) -> Option<Url> {
        if self.segs.is_empty() {
            return None;
        }
        let mut segs = self.segs.clone();
        segs.pop();
        Some(Url {
            loc: self.loc.clone(),
            segs,
            collection: true,
        })
    }

    /// `l/session/S...` urls: the session id segment, when present.
    pub fn session_segment(&self) -> Option<&Atom> {
        if self.segs.len() >= 2 && self.segs[0].is("session") {
            Some(&self.segs[1])
        } else {
            None
        }
    }
}

/// One step of a relative path.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelSeg {
    Atom(Atom),
    Parent,
}

/// Relative path; the empty path is collection shaped.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelPath {
    pub segs: Vec<RelSeg>,
    pub collection: bool,
}

impl RelPath {
    pub fn empty() -> Self {
        RelPath {
            segs: Vec::new(),
            collection: true,
        }
    }

    pub fn from_atoms(atoms: Vec<Atom>, collection: bool) -> Self {
        RelPath {
            collection: collection || atoms.is_empty(),
            segs: atoms.into_iter().map(RelSeg::Atom).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    /// Segments, if none of them is `..`.
    pub fn atoms(&self) -> Option<Vec<Atom>> {
        self.segs
            .iter()
            .map(|s| match s {
                RelSeg::Atom(a) => Some(a.clone()),
                RelSeg::Parent => None,
            })
            .collect()
    }

    /// `self` followed by `rest`; `self` is used as a directory.
    pub fn join(&self, rest: &RelPath) -> RelPath {
        let mut segs = self.segs.clone();
        segs.extend(rest.segs.iter().cloned());
        RelPath {
            collection: if rest.segs.is_empty() {
                self.collection || rest.collection
            } else {
                rest.collection
            },
            segs,
        }
    }
}

/// Component pattern: a literal root-relative prefix, optionally followed by
/// a `*` wildcard.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    pub prefix: Vec<Atom>,
    pub wildcard: bool,
}

impl Pattern {
    pub fn exact(prefix: Vec<Atom>) -> Self {
        Pattern {
            prefix,
            wildcard: false,
        }
    }

    pub fn wild(prefix: Vec<Atom>) -> Self {
        Pattern {
            prefix,
            wildcard: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymBase {
    Session,
    Application,
    Phbase,
    Var(Atom),
}

/// Address used by a command.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ref {
    /// `//host/ctx/...`
    Url(Url),
    /// `<session>/rel`, `<application>/rel`, `<phbase>/rel`, `<x>/rel`
    Sym(SymBase, RelPath),
    /// `<ipath>` alone, or `<ipath>/rel`
    IPath(Option<RelPath>),
    /// `a/b`, `../x`, `./`
    Rel(RelPath),
    /// `/a/b`
    Root(RelPath),
    /// `/exec/a/b`
    RootExec(RelPath),
}

impl Ref {
    pub fn as_url(&self) -> Option<&Url> {
        match self {
            Ref::Url(u) => Some(u),
            _ => None,
        }
    }

    /// `rpath_s` shape: the only targets allowed for internal commands.
    pub fn is_relative(&self) -> bool {
        matches!(self, Ref::Rel(_) | Ref::IPath(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpName {
    Put,
    Get,
    Delete,
    Rexec,
    User(Name),
}

impl OpName {
    pub fn is_builtin(&self) -> bool {
        !matches!(self, OpName::User(_))
    }

    pub fn of_cmd(kind: CmdKind) -> Option<OpName> {
        match kind {
            CmdKind::Put => Some(OpName::Put),
            CmdKind::Get => Some(OpName::Get),
            CmdKind::Delete => Some(OpName::Delete),
            CmdKind::Rexec => Some(OpName::Rexec),
            CmdKind::Lexec => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decl {
    pub param: Name,
    pub body: Term,
}

/// Operation definitions; a partial function from operation names.
pub type Decls = BTreeMap<OpName, Decl>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Deploy {
    /// `None` marks a service component.
    pub codebase: Option<Url>,
    pub pattern: Pattern,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Component {
    pub ty: Name,
    pub deploy: Option<Deploy>,
    pub decls: Decls,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Ok,
    Err,
    Num(i64),
    Name(Name),
    Comp(Box<Component>),
    Pair(Atom, Box<Value>),
    Ref(Ref),
}

impl Value {
    pub fn name(s: &str) -> Self {
        Value::Name(Name::new(s))
    }

    pub fn url(u: Url) -> Self {
        Value::Ref(Ref::Url(u))
    }

    pub fn as_component(&self) -> Option<&Component> {
        match self {
            Value::Comp(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Val(Value),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Pair(Atom, Box<Expr>),
}

impl Expr {
    /// Expression form of a value, as the parser builds it: tagged pairs
    /// become `Expr::Pair`.
    pub fn val(v: Value) -> Self {
        match v {
            Value::Pair(tag, inner) => Expr::Pair(tag, Box::new(Expr::val(*inner))),
            v => Expr::Val(v),
        }
    }

    pub fn var(s: &str) -> Self {
        Expr::Val(Value::name(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BExpr {
    True,
    False,
    Cmp(CmpOp, Expr, Expr),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
    Not(Box<BExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmdKind {
    Put,
    Get,
    Delete,
    Rexec,
    Lexec,
}

impl CmdKind {
    pub fn takes_arg(self) -> bool {
        !matches!(self, CmdKind::Get | CmdKind::Delete)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            CmdKind::Put => "put",
            CmdKind::Get => "get",
            CmdKind::Delete => "delete",
            CmdKind::Rexec => "rexec",
            CmdKind::Lexec => "lexec",
        }
    }
}

/// Entry of a static delegation set: a context, or `eps` for the context of
/// the base url.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CtxEntry {
    Here,
    Loc(Location),
}

/// Runtime delegation pairs, one session per context.
pub type Sls = BTreeMap<Location, Session>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Deleg {
    /// Default behaviour invoked from inside an operation.
    Internal,
    /// Static `{l, eps, ...}`.
    Contexts(Vec<CtxEntry>),
    /// Runtime `{l : S, ...}`; also the empty set in either layer.
    Sessions(Sls),
}

impl Deleg {
    pub fn empty() -> Self {
        Deleg::Sessions(Sls::new())
    }

    pub fn is_internal(&self) -> bool {
        matches!(self, Deleg::Internal)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Command {
    pub bind: Name,
    pub kind: CmdKind,
    pub deleg: Deleg,
    pub target: Ref,
    /// Present on running commands.
    pub session: Option<Session>,
    pub arg: Option<Expr>,
    pub cont: Box<Term>,
}

/// Second half of a local execution: place the downloaded component on a
/// capable context and initialise it. Only produced by the engine.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Install {
    pub bind: Name,
    pub sls: Sls,
    /// The url the component code was fetched from.
    pub code: Url,
    pub session: Session,
    pub component: Expr,
    pub arg: Expr,
    pub cont: Box<Term>,
}

/// `l/session/S` as written in session constructs; `None` is the static
/// `<session>` form.
pub type SessionAt = Option<(Location, Session)>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Cmd(Command),
    Assign {
        bind: Name,
        expr: Expr,
        cont: Box<Term>,
    },
    Send {
        chan: Atom,
        sls: Sls,
        expr: Expr,
        cont: Box<Term>,
    },
    Recv {
        chan: Atom,
        bind: Name,
        cont: Box<Term>,
    },
    Spawn {
        child: Box<Term>,
        cont: Box<Term>,
    },
    If {
        cond: BExpr,
        then: Box<Term>,
        els: Box<Term>,
    },
    NewSession {
        at: SessionAt,
        cont: Box<Term>,
    },
    DropSession {
        at: SessionAt,
        cont: Box<Term>,
    },
    Install(Install),
    Return(Expr),
    New {
        name: Name,
        body: Box<Term>,
    },
    Nil,
}

impl Term {
    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Nil)
    }

    pub fn as_cmd(&self) -> Option<&Command> {
        match self {
            Term::Cmd(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resource {
    Prog(Term),
    Val(Value),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Located {
    pub url: Url,
    pub res: Resource,
}

impl Located {
    pub fn prog(url: Url, t: Term) -> Self {
        Located {
            url,
            res: Resource::Prog(t),
        }
    }

    pub fn val(url: Url, v: Value) -> Self {
        Located {
            url,
            res: Resource::Val(v),
        }
    }

    pub fn value(&self) -> Option<&Value> {
        match &self.res {
            Resource::Val(v) => Some(v),
            Resource::Prog(_) => None,
        }
    }

    pub fn term(&self) -> Option<&Term> {
        match &self.res {
            Resource::Prog(t) => Some(t),
            Resource::Val(_) => None,
        }
    }
}

/// Network as written: parallel composition and restriction in any shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetAst {
    Item(Located),
    Par(Vec<NetAst>),
    New(Name, Box<NetAst>),
}
