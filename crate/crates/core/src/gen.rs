//! Random well-formed networks over a small vocabulary, for property tests
//! and benchmarks. The vocabulary is narrow on purpose so that commands,
//! stored values and components frequently meet.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::syntax::*;
use crate::urlalg::url_in_pattern;

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_resources: usize,
    pub max_depth: usize,
    pub max_components: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_resources: 4,
            max_depth: 3,
            max_components: 2,
        }
    }
}

const LOCS: &[(&str, &str)] = &[("h", "c"), ("h", "d")];
/// Paths with their usual collection flag.
const PATHS: &[(&[&str], bool)] = &[
    (&[], true),
    (&["a"], true),
    (&["a", "b"], false),
    (&["a", "b", "c"], false),
    (&["f"], false),
    (&["items"], true),
    (&["items", "f"], false),
    (&["session", "s1"], true),
    (&["session", "s1", "t"], false),
    (&["exec"], true),
];
const PATTERNS: &[(&[&str], bool)] = &[
    (&["a"], true),
    (&["a", "b"], true),
    (&["a", "b"], false),
    (&["items"], true),
    (&["f"], false),
];
const BINDERS: &[&str] = &["x", "y"];

fn loc<R: Rng>(rng: &mut R) -> Location {
    let (h, c) = if rng.gen_bool(0.8) { LOCS[0] } else { LOCS[1] };
    Location::new(h, c)
}

fn atoms(segs: &[&str]) -> Vec<Atom> {
    segs.iter().map(|s| Atom::name(s)).collect()
}

pub fn url<R: Rng>(rng: &mut R) -> Url {
    let (segs, coll) = PATHS.choose(rng).unwrap();
    Url::new(loc(rng), atoms(segs), *coll != rng.gen_bool(0.1))
}

fn session<R: Rng>(rng: &mut R) -> Session {
    if rng.gen_bool(0.7) {
        Session::Ns
    } else {
        Session::id(Name::new("s1"))
    }
}

pub fn value<R: Rng>(rng: &mut R, depth: usize) -> Value {
    match rng.gen_range(0..if depth > 0 { 8 } else { 6 }) {
        0 => Value::Ok,
        1 => Value::Err,
        2 => Value::Num(rng.gen_range(0..4)),
        3 => Value::name("k"),
        4 => Value::url(url(rng)),
        5 => Value::Pair(Atom::name("op1"), Box::new(Value::Num(1))),
        6 => Value::Pair(Atom::name("op1"), Box::new(value(rng, depth - 1))),
        _ => Value::Comp(Box::new(component(rng, None))),
    }
}

fn expr<R: Rng>(rng: &mut R, vars: &[Name]) -> Expr {
    let leaf = |rng: &mut R| {
        if !vars.is_empty() && rng.gen_bool(0.3) {
            Expr::Val(Value::Name(vars.choose(rng).unwrap().clone()))
        } else {
            Expr::val(value(rng, 0))
        }
    };
    match rng.gen_range(0..6) {
        0 => Expr::Add(Box::new(leaf(rng)), Box::new(Expr::Val(Value::Num(1)))),
        1 => Expr::Pair(Atom::name("op1"), Box::new(leaf(rng))),
        _ => leaf(rng),
    }
}

fn bexpr<R: Rng>(rng: &mut R, vars: &[Name]) -> BExpr {
    match rng.gen_range(0..4) {
        0 => BExpr::True,
        1 => BExpr::Cmp(CmpOp::Eq, expr(rng, vars), expr(rng, vars)),
        2 => BExpr::Cmp(CmpOp::Lt, expr(rng, vars), Expr::Val(Value::Num(2))),
        _ => BExpr::Not(Box::new(BExpr::Cmp(CmpOp::Ne, expr(rng, vars), expr(rng, vars)))),
    }
}

fn kind<R: Rng>(rng: &mut R) -> CmdKind {
    *[
        CmdKind::Get,
        CmdKind::Get,
        CmdKind::Put,
        CmdKind::Put,
        CmdKind::Delete,
        CmdKind::Rexec,
        CmdKind::Rexec,
        CmdKind::Lexec,
    ]
    .choose(rng)
    .unwrap()
}

fn command<R: Rng>(rng: &mut R, depth: usize, vars: &mut Vec<Name>, hints: &[Url]) -> Command {
    let k = kind(rng);
    let deleg = match rng.gen_range(0..6) {
        0 => Deleg::Sessions(Sls::from([(Location::new("h", "d"), Session::Ns)])),
        1 => Deleg::Sessions(Sls::from([(Location::new("h", "c"), Session::id(Name::new("s1")))])),
        2 => Deleg::Internal,
        _ => Deleg::empty(),
    };
    let arg = k.takes_arg().then(|| {
        if k == CmdKind::Rexec && rng.gen_bool(0.4) {
            Expr::Pair(Atom::name("op1"), Box::new(Expr::Val(Value::Num(1))))
        } else {
            expr(rng, vars)
        }
    });
    let bind = Name::new(*BINDERS.choose(rng).unwrap());
    vars.push(bind.clone());
    let cont = term_with(rng, depth - 1, vars, hints);
    vars.pop();
    let target = match hints.choose(rng) {
        Some(u) if rng.gen_bool(0.5) => u.clone(),
        _ => url(rng),
    };
    Command {
        bind,
        kind: k,
        deleg,
        target: Ref::Url(target),
        session: Some(session(rng)),
        arg,
        cont: Box::new(cont),
    }
}

/// A running program of at most `depth` nested prefixes.
pub fn term<R: Rng>(rng: &mut R, depth: usize) -> Term {
    term_with(rng, depth, &mut Vec::new(), &[])
}

/// Like [`term`], with commands preferring the `hints` targets.
fn term_with<R: Rng>(rng: &mut R, depth: usize, vars: &mut Vec<Name>, hints: &[Url]) -> Term {
    if depth == 0 || rng.gen_bool(0.15) {
        return Term::Nil;
    }
    let chan = Atom::name("ch");
    match rng.gen_range(0..14) {
        0..=5 => Term::Cmd(command(rng, depth, vars, hints)),
        6 => {
            let bind = Name::new(*BINDERS.choose(rng).unwrap());
            let e = expr(rng, vars);
            vars.push(bind.clone());
            let cont = term_with(rng, depth - 1, vars, hints);
            vars.pop();
            Term::Assign {
                bind,
                expr: e,
                cont: Box::new(cont),
            }
        }
        7 => Term::Send {
            chan,
            sls: if rng.gen_bool(0.5) {
                Sls::new()
            } else {
                Sls::from([(Location::new("h", "c"), session(rng))])
            },
            expr: expr(rng, vars),
            cont: Box::new(term_with(rng, depth - 1, vars, hints)),
        },
        8 => {
            let bind = Name::new(*BINDERS.choose(rng).unwrap());
            vars.push(bind.clone());
            let cont = term_with(rng, depth - 1, vars, hints);
            vars.pop();
            Term::Recv {
                chan,
                bind,
                cont: Box::new(cont),
            }
        }
        9 => Term::Spawn {
            child: Box::new(term_with(rng, depth - 1, vars, hints)),
            cont: Box::new(term_with(rng, depth - 1, vars, hints)),
        },
        10 => Term::If {
            cond: bexpr(rng, vars),
            then: Box::new(term_with(rng, depth - 1, vars, hints)),
            els: Box::new(term_with(rng, depth - 1, vars, hints)),
        },
        11 => Term::NewSession {
            at: Some((loc(rng), session(rng))),
            cont: Box::new(term_with(rng, depth - 1, vars, hints)),
        },
        12 => Term::DropSession {
            at: Some((loc(rng), session(rng))),
            cont: Box::new(term_with(rng, depth - 1, vars, hints)),
        },
        _ => Term::Nil,
    }
}

fn static_body<R: Rng>(rng: &mut R, op: &OpName) -> Term {
    let uses_param = matches!(op, OpName::Put | OpName::Rexec | OpName::User(_));
    let arg = || Expr::Val(if uses_param { Value::name("p") } else { Value::Ok });
    let cmd = |kind: CmdKind, deleg: Deleg, target: Ref, arg: Option<Expr>| {
        Term::Cmd(Command {
            bind: Name::new("x"),
            kind,
            deleg,
            target,
            session: None,
            arg,
            cont: Box::new(Term::Return(Expr::var("x"))),
        })
    };
    match rng.gen_range(0..5) {
        0 => Term::Return(Expr::Val(Value::Ok)),
        1 => Term::Return(arg()),
        2 => cmd(CmdKind::Get, Deleg::Internal, Ref::IPath(None), None),
        3 => cmd(CmdKind::Put, Deleg::Internal, Ref::IPath(None), Some(arg())),
        _ => cmd(
            CmdKind::Get,
            Deleg::Contexts(vec![CtxEntry::Here]),
            Ref::Rel(RelPath::from_atoms(vec![Atom::name("f")], false)),
            None,
        ),
    }
}

/// A component with a random subset of operations.
pub fn component<R: Rng>(rng: &mut R, deploy: Option<Deploy>) -> Component {
    let mut decls = Decls::new();
    for op in [
        OpName::Get,
        OpName::Put,
        OpName::Delete,
        OpName::Rexec,
        OpName::User(Name::new("op1")),
    ] {
        if rng.gen_bool(0.5) {
            let body = static_body(rng, &op);
            decls.insert(op, Decl { param: Name::new("p"), body });
        }
    }
    Component {
        ty: Name::new("svc"),
        deploy,
        decls,
    }
}

fn pattern<R: Rng>(rng: &mut R) -> Pattern {
    let (segs, wild) = PATTERNS.choose(rng).unwrap();
    Pattern {
        prefix: atoms(segs),
        wildcard: *wild,
    }
}

/// A restriction-free network within `limits`.
pub fn network<R: Rng>(rng: &mut R, limits: Limits) -> Network {
    let n = rng.gen_range(1..=limits.max_resources);
    let comps = rng.gen_range(0..=limits.max_components.min(n));
    let mut items = Vec::new();
    let mut hints = Vec::new();
    for i in 0..comps {
        let pattern = pattern(rng);
        let c = component(rng, Some(Deploy { codebase: None, pattern }));
        let at = Url::new(
            loc(rng),
            vec![Atom::name("exec"), Atom::name(&format!("m{i}"))],
            true,
        );
        for (segs, coll) in PATHS {
            let u = Url::new(at.loc.clone(), atoms(segs), *coll);
            if url_in_pattern(&u, &c.deploy.as_ref().unwrap().pattern) {
                hints.push(u);
            }
        }
        items.push(Located::val(at, Value::Comp(Box::new(c))));
    }
    let programs = rng.gen_range(usize::from(n > comps)..=n - comps);
    let stored: Vec<Url> = (programs..n - comps).map(|_| url(rng)).collect();
    hints.extend(stored.iter().cloned());
    for _ in 0..programs {
        let t = term_with(rng, limits.max_depth, &mut Vec::new(), &hints);
        let at = Url::new(loc(rng), vec![Atom::name("p")], rng.gen_bool(0.8));
        items.push(Located::prog(at, t));
    }
    for u in stored {
        items.push(Located::val(u, value(rng, 1)));
    }
    Network::from_items(items)
}

/// A network written with nested restrictions and groupings, for
/// printer/parser round trips.
pub fn net_ast<R: Rng>(rng: &mut R, limits: Limits, depth: usize) -> NetAst {
    if depth == 0 || rng.gen_bool(0.4) {
        let net = network(rng, limits);
        return NetAst::Par(net.items.into_iter().map(NetAst::Item).collect());
    }
    if rng.gen_bool(0.5) {
        let name = Name::new(*["k", "x", "ch"].choose(rng).unwrap());
        NetAst::New(name, Box::new(net_ast(rng, limits, depth - 1)))
    } else {
        NetAst::Par(vec![net_ast(rng, limits, depth - 1), net_ast(rng, limits, depth - 1)])
    }
}
