//! Url and pattern algebra: reference resolution, pattern membership and
//! ordering, dispatch helpers and the configurable `cond`/`loc` hooks.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("`..` climbs above the context root of {0}")]
    AboveRoot(String),
    #[error("reference `{0}` still contains a symbolic base")]
    Symbolic(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("loc entry maps {from} to {to}, which is on another host")]
    OtherHost { from: Location, to: Location },
    #[error("cond of {0} is fixed to true")]
    ForcedCond(Url),
    #[error("cond is only defined on collections, got {0}")]
    NotCollection(Url),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no context next to {loc} runs components of type {ty}")]
pub struct LocError {
    pub loc: Location,
    pub ty: Name,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path} is not covered by pattern {pat}")]
pub struct NotMember {
    pub path: String,
    pub pat: Pattern,
}

/// Deployment environment: `loc` capabilities, `cond` overrides and
/// optional rule variants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    loc_capability: BTreeMap<(Location, Name), Location>,
    cond_overrides: BTreeMap<Url, bool>,
    /// Dispatch `op<v>` posted to a collection to the managing component.
    pub collection_op_dispatch: bool,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn add_loc(&mut self, from: Location, ty: Name, to: Location) -> Result<(), ConfigError> {
        if !from.same_machine(&to) {
            return Err(ConfigError::OtherHost { from, to });
        }
        self.loc_capability.insert((from, ty), to);
        Ok(())
    }

    pub fn set_cond(&mut self, url: Url, value: bool) -> Result<(), ConfigError> {
        if !url.collection {
            return Err(ConfigError::NotCollection(url));
        }
        if is_int_g(&url) {
            return Err(ConfigError::ForcedCond(url));
        }
        self.cond_overrides.insert(url, value);
        Ok(())
    }
}

// ---- built-in collections ----

pub fn is_int_g(u: &Url) -> bool {
    u.collection
        && match u.segs.as_slice() {
            [] => true,
            [a] => a.is("session") || a.is("exec"),
            _ => false,
        }
}

pub fn is_int_d(u: &Url) -> bool {
    u.collection
        && match u.segs.as_slice() {
            [] => true,
            [a] => a.is("application"),
            _ => false,
        }
}

// ---- resolution ----

/// Resolves `r` against the collection `base`.
pub fn resolve_url(base: &Url, r: &Ref) -> Result<Url, ResolveError> {
    let climb = || ResolveError::AboveRoot(base.to_string());
    match r {
        Ref::Url(u) => Ok(u.clone()),
        Ref::Root(rel) => {
            names::url_then(&Url::root(base.loc.clone()), rel).ok_or_else(climb)
        }
        Ref::RootExec(rel) => {
            let exec = Url::root(base.loc.clone()).child(Atom::name("exec"), true);
            names::url_then(&exec, rel).ok_or_else(climb)
        }
        Ref::Rel(rel) => names::url_then(&base.as_dir(), rel).ok_or_else(climb),
        Ref::Sym(..) | Ref::IPath(_) => Err(ResolveError::Symbolic(r.to_string())),
    }
}

/// Context named by a delegation entry, relative to `base`.
pub fn resolve_ctx(base: &Url, entry: &CtxEntry) -> Location {
    match entry {
        CtxEntry::Here => base.loc.clone(),
        CtxEntry::Loc(l) => l.clone(),
    }
}

// ---- patterns ----

fn is_root_relative(segs: &[Atom]) -> bool {
    match segs.first() {
        Some(a) => !(a.is("exec") || a.is("session") || a.is("application")),
        None => true,
    }
}

/// Path of `u` after its context: `segs` plus the collection flag.
pub fn pat_member(segs: &[Atom], collection: bool, pat: &Pattern) -> bool {
    if !is_root_relative(segs) || pat.prefix.is_empty() {
        return false;
    }
    if pat.wildcard {
        segs.len() >= pat.prefix.len()
            && segs[..pat.prefix.len()] == pat.prefix[..]
            && (segs.len() > pat.prefix.len() || collection)
    } else {
        !collection && segs == pat.prefix.as_slice()
    }
}

pub fn url_in_pattern(u: &Url, pat: &Pattern) -> bool {
    pat_member(&u.segs, u.collection, pat)
}

fn prefix_text(p: &Pattern) -> String {
    p.prefix
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join("/")
}

/// Specificity order: longer literal prefix first, then exact over
/// wildcard, then text.
pub fn pat_order(p1: &Pattern, p2: &Pattern) -> Ordering {
    p1.prefix
        .len()
        .cmp(&p2.prefix.len())
        .then_with(|| p2.wildcard.cmp(&p1.wildcard))
        .then_with(|| prefix_text(p1).cmp(&prefix_text(p2)))
}

/// Pattern directory: the prefix for wildcards, the parent for exact ones.
pub fn pat_dir(pat: &Pattern) -> RelPath {
    let mut atoms = pat.prefix.clone();
    if !pat.wildcard {
        atoms.pop();
    }
    RelPath::from_atoms(atoms, true)
}

/// The suffix matched by `*`; empty for exact patterns.
pub fn path_minus(segs: &[Atom], collection: bool, pat: &Pattern) -> Result<RelPath, NotMember> {
    if !pat_member(segs, collection, pat) {
        let mut path = String::from("/");
        path.push_str(
            &segs
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join("/"),
        );
        if collection && !segs.is_empty() {
            path.push('/');
        }
        return Err(NotMember {
            path,
            pat: pat.clone(),
        });
    }
    if !pat.wildcard {
        return Ok(RelPath::empty());
    }
    Ok(RelPath::from_atoms(
        segs[pat.prefix.len()..].to_vec(),
        collection,
    ))
}

/// `l` followed by a root-relative directory.
pub fn loc_then(l: &Location, dir: &RelPath) -> Url {
    names::url_then(&Url::root(l.clone()), dir).expect("directory without `..`")
}

// ---- store views ----

/// A deployed component found at `l/exec/m/`.
#[derive(Debug, Clone, Copy)]
pub struct Deployed<'a> {
    pub index: usize,
    pub url: &'a Url,
    pub comp: &'a Component,
    pub pattern: &'a Pattern,
}

/// `pat([R]@url)`: deployed component values at `l/exec/m/` urls.
pub fn deployed_at(l: &Located) -> Option<(&Component, &Pattern)> {
    if !(l.url.collection && l.url.segs.len() == 2 && l.url.segs[0].is("exec")) {
        return None;
    }
    let c = l.value()?.as_component()?;
    let d = c.deploy.as_ref()?;
    Some((c, &d.pattern))
}

/// `u` is `v` or one of the collection prefixes `v` contributes to `urls(R)`.
fn contributes(v: &Url, u: &Url) -> bool {
    v == u
        || (u.collection
            && v.loc == u.loc
            && u.segs.len() < v.segs.len()
            && v.segs[..u.segs.len()] == u.segs[..])
}

/// Read-only index over an item list: `urls(R)` with multiplicities,
/// stored values by url and deployed components by context. Queries take
/// the indices to leave out, so one index serves every actor.
#[derive(Debug, Clone)]
pub struct Store<'a> {
    pub items: &'a [Located],
    urls: BTreeMap<&'a Url, usize>,
    prefixes: BTreeMap<Url, usize>,
    values: BTreeMap<&'a Url, Vec<usize>>,
    deployed: BTreeMap<&'a Location, Vec<Deployed<'a>>>,
}

impl<'a> Store<'a> {
    pub fn new(items: &'a [Located]) -> Self {
        let mut urls = BTreeMap::new();
        let mut prefixes = BTreeMap::new();
        let mut values = BTreeMap::new();
        let mut deployed = BTreeMap::new();
        for (index, l) in items.iter().enumerate() {
            let u = &l.url;
            *urls.entry(u).or_insert(0) += 1;
            for k in 0..u.segs.len() {
                let p = Url::new(u.loc.clone(), u.segs[..k].to_vec(), true);
                *prefixes.entry(p).or_insert(0) += 1;
            }
            if l.value().is_some() {
                values.entry(u).or_insert_with(Vec::new).push(index);
            }
            if let Some((comp, pattern)) = deployed_at(l) {
                deployed.entry(&u.loc).or_insert_with(Vec::new).push(Deployed {
                    index,
                    url: u,
                    comp,
                    pattern,
                });
            }
        }
        Store {
            items,
            urls,
            prefixes,
            values,
            deployed,
        }
    }

    /// `u ∈ urls(R \ excluded)`.
    pub fn has_url(&self, u: &Url, excluded: &[usize]) -> bool {
        let total = self.urls.get(u).copied().unwrap_or(0) + self.prefixes.get(u).copied().unwrap_or(0);
        let gone = excluded
            .iter()
            .filter(|&&i| contributes(&self.items[i].url, u))
            .count();
        total > gone
    }

    /// Some member shares `u`'s identity (trailing separator ignored).
    pub fn has_id(&self, u: &Url, excluded: &[usize]) -> bool {
        self.has_url(&url_with(u, true), excluded) || self.has_url(&url_with(u, false), excluded)
    }

    /// Some member strictly extends `u`'s path.
    pub fn has_extension(&self, u: &Url, excluded: &[usize]) -> bool {
        let below = |v: &Url| {
            v.loc == u.loc && v.segs.len() > u.segs.len() && v.segs[..u.segs.len()] == u.segs[..]
        };
        let start = url_with(u, false);
        self.urls
            .range::<&Url, _>(&start..)
            .map(|(v, _)| *v)
            .take_while(|v| v.loc == u.loc && v.segs.starts_with(&u.segs))
            .filter(|v| below(v))
            .any(|v| self.has_url(v, excluded))
    }

    /// Indices of stored values located exactly at `u`.
    pub fn values_at(&self, u: &Url) -> &[usize] {
        self.values.get(u).map_or(&[], Vec::as_slice)
    }

    /// Components deployed in context `loc`, skipping `excluded` indices.
    pub fn deployed_in<'s>(
        &'s self,
        loc: &Location,
        excluded: &'s [usize],
    ) -> impl Iterator<Item = &'s Deployed<'a>> + 's {
        self.deployed
            .get(loc)
            .into_iter()
            .flatten()
            .filter(move |d| !excluded.contains(&d.index))
    }

    /// Most specific deployed pattern at `loc` covering the path.
    pub fn maxpat(
        &self,
        loc: &Location,
        segs: &[Atom],
        collection: bool,
        excluded: &[usize],
    ) -> Option<&'a Pattern> {
        self.deployed_in(loc, excluded)
            .map(|d| d.pattern)
            .filter(|p| pat_member(segs, collection, p))
            .max_by(|a, b| pat_order(a, b))
    }

    /// Liveness for dispatch: stored, or covered by a wildcard pattern
    /// deployed in the url's context.
    pub fn is_live(&self, u: &Url, excluded: &[usize]) -> bool {
        self.has_url(u, excluded)
            || self
                .deployed_in(&u.loc, excluded)
                .any(|d| d.pattern.wildcard && url_in_pattern(u, d.pattern))
    }

    /// `match(target, pat, R)`.
    pub fn matches(&self, target: &Url, pat: &Pattern, excluded: &[usize]) -> bool {
        if !url_in_pattern(target, pat) {
            return false;
        }
        // the matched component's own wildcard covers the target as well
        if !(pat.wildcard || self.is_live(target, excluded)) {
            return false;
        }
        match self.maxpat(&target.loc, &target.segs, target.collection, excluded) {
            Some(m) => pat_order(pat, m) != Ordering::Less,
            None => true,
        }
    }
}

/// Most specific deployed pattern at `loc` covering the path.
pub fn maxpat<'a>(
    items: &'a [Located],
    loc: &Location,
    segs: &[Atom],
    collection: bool,
    excluded: &[usize],
) -> Option<&'a Pattern> {
    Store::new(items).maxpat(loc, segs, collection, excluded)
}

/// `match(target, pat, R)` over a plain item list.
pub fn matches(target: &Url, pat: &Pattern, items: &[Located], excluded: &[usize]) -> bool {
    Store::new(items).matches(target, pat, excluded)
}

fn url_with(u: &Url, collection: bool) -> Url {
    Url::new(u.loc.clone(), u.segs.clone(), collection)
}

/// Canonical identity: trailing separator stripped.
pub fn url_id(u: &Url) -> String {
    let s = u.to_string();
    s.strip_suffix('/').map(str::to_string).unwrap_or(s)
}

// ---- configuration hooks ----

pub fn cond(u: &Url, cfg: &Config) -> bool {
    is_int_g(u) || cfg.cond_overrides.get(u).copied().unwrap_or(false)
}

pub fn loc(l: &Location, ty: &Name, cfg: &Config) -> Result<Location, LocError> {
    cfg.loc_capability
        .get(&(l.clone(), ty.clone()))
        .cloned()
        .ok_or_else(|| LocError {
            loc: l.clone(),
            ty: ty.clone(),
        })
}

/// Technology type of a value; `data` for everything but components.
pub fn value_type(v: &Value) -> Name {
    match v {
        Value::Comp(c) => c.ty.clone(),
        _ => Name::new("data"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(s: &str) -> Url {
        parse_url(s).unwrap()
    }

    fn r(s: &str) -> Ref {
        parse_ref(s).unwrap()
    }

    fn p(s: &str) -> Pattern {
        parse_pattern(s).unwrap()
    }

    fn member(path: &str, pat: &str) -> bool {
        url_in_pattern(&u(&format!("//h/c{path}")), &p(pat))
    }

    #[test]
    fn resolution() {
        assert_eq!(resolve_url(&u("//h/c/a/b/"), &r("x")).unwrap(), u("//h/c/a/b/x"));
        assert_eq!(resolve_url(&u("//h/c/a/b/"), &r("/q/r")).unwrap(), u("//h/c/q/r"));
        assert_eq!(resolve_url(&u("//h/c/a/"), &r("../x")).unwrap(), u("//h/c/x"));
        assert!(matches!(
            resolve_url(&u("//h/c/a/"), &r("../../x")),
            Err(ResolveError::AboveRoot(_))
        ));
        assert_eq!(resolve_url(&u("//h/c/a/"), &r("/exec/m/")).unwrap(), u("//h/c/exec/m/"));
        assert_eq!(resolve_url(&u("//h/c/a/"), &r("./")).unwrap(), u("//h/c/a/"));
    }

    #[test]
    fn contexts() {
        let l = parse_location("//h/c").unwrap();
        assert_eq!(resolve_ctx(&u("//h/c/a/"), &CtxEntry::Here), l);
        assert_eq!(resolve_ctx(&u("//h/c/"), &CtxEntry::Here), l);
        let k = parse_location("//k/d").unwrap();
        assert_eq!(resolve_ctx(&u("//h/c/a/"), &CtxEntry::Loc(k.clone())), k);
    }

    #[test]
    fn membership() {
        assert!(member("/a/b", "/a/b"));
        assert!(member("/a/b/c", "/a/*"));
        assert!(member("/a/", "/a/*"));
        assert!(!member("/ab/c", "/a/*"));
        assert!(!member("/a", "/a/*"));
        assert!(!member("/a/b/", "/a/b"));
        let exec = Pattern::wild(vec![Atom::name("exec")]);
        assert!(!url_in_pattern(&u("//h/c/exec/a/"), &exec));
    }

    #[test]
    fn ordering() {
        assert_eq!(pat_order(&p("/a/b/*"), &p("/a/*")), Ordering::Greater);
        assert_eq!(pat_order(&p("/a/b"), &p("/a/b/*")), Ordering::Greater);
        assert_eq!(pat_order(&p("/a/*"), &p("/a/*")), Ordering::Equal);
    }

    #[test]
    fn directories_and_suffixes() {
        assert_eq!(pat_dir(&p("/a/b/*")).to_string(), "./a/b/");
        assert_eq!(pat_dir(&p("/a/b")).to_string(), "./a/");
        let t = u("//h/c/a/b/c");
        assert_eq!(
            path_minus(&t.segs, false, &p("/a/*")).unwrap().to_string(),
            "./b/c"
        );
        assert!(path_minus(&u("//h/c/a/b").segs, false, &p("/a/b")).unwrap().is_empty());
        assert_eq!(
            path_minus(&u("//h/c/a/b/").segs, true, &p("/a/*")).unwrap().to_string(),
            "./b/"
        );
        assert!(path_minus(&u("//h/c/x").segs, false, &p("/a/*")).is_err());
    }

    fn net(src: &str) -> Network {
        parse_network(src).unwrap()
    }

    #[test]
    fn maximal_pattern() {
        let n = net(
            "[ comp:s [_ -> /a/*] < > ]@//h/c/exec/m1/ || [ comp:s [_ -> /a/b/*] < > ]@//h/c/exec/m2/",
        );
        let l = parse_location("//h/c").unwrap();
        let t = u("//h/c/a/b/c");
        assert_eq!(maxpat(&n.items, &l, &t.segs, false, &[]), Some(&p("/a/b/*")));
        assert_eq!(maxpat(&[], &l, &t.segs, false, &[]), None);
        let n = net("[ comp:s [_ -> /x/*] < > ]@//h/c/exec/m/");
        assert_eq!(maxpat(&n.items, &l, &u("//h/c/a/b").segs, false, &[]), None);
    }

    #[test]
    fn matching() {
        let mut n = net("[ comp:s [_ -> /items/*] < > ]@//h/c/exec/m/ || [ 1 ]@//h/c/items/3");
        assert!(matches(&u("//h/c/items/3"), &p("/items/*"), &n.items, &[]));
        n = net("[ comp:s [_ -> /items/*] < > ]@//h/c/exec/m/ || [ comp:s [_ -> /items/3] < > ]@//h/c/exec/k/ || [ 1 ]@//h/c/items/3");
        assert!(!matches(&u("//h/c/items/3"), &p("/items/*"), &n.items, &[]));
        n = net("[ comp:s [_ -> /items/3] < > ]@//h/c/exec/k/");
        assert!(!matches(&u("//h/c/items/3"), &p("/items/3"), &n.items, &[]));
    }

    #[test]
    fn cond_and_config() {
        let cfg = Config::new();
        assert!(cond(&u("//h/c/session/"), &cfg));
        assert!(!cond(&u("//h/c/items/"), &cfg));
        let mut cfg = Config::new();
        assert!(cfg.set_cond(u("//h/c/"), false).is_err());
        assert!(cfg.set_cond(u("//h/c/exec/"), true).is_err());
        assert!(cond(&u("//h/c/"), &cfg));
        cfg.set_cond(u("//h/c/items/"), true).unwrap();
        assert!(cond(&u("//h/c/items/"), &cfg));
    }

    #[test]
    fn loc_lookup() {
        let mut cfg = Config::new();
        let l = parse_location("//h/c").unwrap();
        let run = parse_location("//h/run").unwrap();
        cfg.add_loc(l.clone(), Name::new("gui"), run.clone()).unwrap();
        assert_eq!(loc(&l, &Name::new("gui"), &cfg).unwrap(), run);
        assert!(loc(&l, &Name::new("cli"), &cfg).is_err());
        assert!(cfg
            .add_loc(l, Name::new("gui"), parse_location("//k/run").unwrap())
            .is_err());
    }

    #[test]
    fn types_and_ids() {
        let gui = parse_value("comp:gui < >").unwrap();
        assert_eq!(value_type(&gui).as_str(), "gui");
        assert_eq!(value_type(&Value::Num(5)).as_str(), "data");
        let svc = parse_value("comp:svc [_ -> /a/*] < >").unwrap();
        assert_eq!(value_type(&svc).as_str(), "svc");
        assert_eq!(url_id(&u("//h/c/a")), url_id(&u("//h/c/a/")));
        assert_ne!(url_id(&u("//h/c/a")), url_id(&u("//h/c/b")));
        assert_eq!(url_id(&u("//h/c/")), "//h/c");
    }

    #[test]
    fn built_in_collections() {
        assert!(is_int_g(&u("//h/c/")));
        assert!(is_int_g(&u("//h/c/exec/")));
        assert!(is_int_g(&u("//h/c/session/")));
        assert!(!is_int_g(&u("//h/c/application/")));
        assert!(is_int_d(&u("//h/c/application/")));
        assert!(!is_int_d(&u("//h/c/exec/")));
    }
}
