//! Networks in canonical form: one flat list of located resources under a
//! flat list of restricted names.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::names::{self, Fresh, NameSet, Subst};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Network {
    /// Restricted names, all distinct, scoping over every item.
    pub restricted: Vec<Name>,
    pub items: Vec<Located>,
}

fn sort_key(l: &Located) -> (String, String) {
    (l.url.to_string(), l.res.to_string())
}

impl Network {
    pub fn new() -> Self {
        Network::default()
    }

    pub fn from_items(items: Vec<Located>) -> Self {
        let mut n = Network {
            restricted: Vec::new(),
            items,
        };
        n.sort();
        n
    }

    /// Flattens a parsed network, renaming restricted names apart.
    ///
    /// A restricted `_g<k>` name that is bound once and used only inside its
    /// scope is kept, so canonical text parses back to the same network.
    pub fn from_ast(ast: NetAst) -> Self {
        let mut all = NameSet::new();
        names::support_net_ast(&ast, &mut all);
        let mut fresh = Fresh::avoiding(&all);

        let mut binders: BTreeMap<Name, usize> = BTreeMap::new();
        count_binders(&ast, &mut binders);

        let mut flat = Flat::default();
        flatten(&ast, &mut flat);

        let mut net = Network::new();
        for scope in &flat.scopes {
            let mut outside = NameSet::new();
            for (i, item) in flat.items.iter().enumerate() {
                if !scope.items.contains(&i) {
                    names::support_located(item, &mut outside);
                }
            }
            let keep = scope.name.is_generated()
                && binders.get(&scope.name) == Some(&1)
                && !outside.contains(&scope.name);
            net.restricted.push(if keep {
                scope.name.clone()
            } else {
                fresh.next_name()
            });
        }
        // Innermost scopes first, so a shadowed binder resolves to the
        // closest restriction.
        let mut items = flat.items;
        for (k, scope) in flat.scopes.iter().enumerate().rev() {
            let target = &net.restricted[k];
            if *target == scope.name {
                continue;
            }
            let s = Subst::rename(scope.name.clone(), target.clone());
            for &i in &scope.items {
                items[i] = s.located(&items[i], &mut fresh);
            }
        }
        net.items = items;
        net.normalize(&mut fresh);
        net
    }

    /// Hoists term-level restrictions, sorts items and restricted names.
    pub fn normalize(&mut self, fresh: &mut Fresh) {
        for i in 0..self.items.len() {
            loop {
                let (name, body) = match &self.items[i].res {
                    Resource::Prog(Term::New { name, body }) => (name.clone(), (**body).clone()),
                    _ => break,
                };
                let n2 = fresh.next_name();
                let body = Subst::rename(name, n2.clone()).term(&body, fresh);
                self.items[i].res = Resource::Prog(body);
                self.restricted.push(n2);
            }
        }
        self.sort();
    }

    fn sort(&mut self) {
        let mut keyed: Vec<_> = std::mem::take(&mut self.items)
            .into_iter()
            .map(|l| (sort_key(&l), l))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        self.items = keyed.into_iter().map(|(_, l)| l).collect();
        self.restricted.sort_by(|a, b| {
            (a.generated_index(), a.as_str()).cmp(&(b.generated_index(), b.as_str()))
        });
        self.restricted.dedup();
    }

    /// Items in canonical order.
    pub fn sorted_items(&self) -> Vec<&Located> {
        let mut v: Vec<_> = self.items.iter().map(|l| (sort_key(l), l)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v.into_iter().map(|(_, l)| l).collect()
    }

    pub fn free_names(&self) -> NameSet {
        let mut out = NameSet::new();
        for l in &self.items {
            out.extend(names::free_names_located(l));
        }
        for r in &self.restricted {
            out.remove(r);
        }
        out
    }

    /// Every name written anywhere, restricted ones included.
    pub fn support(&self) -> NameSet {
        let mut out: NameSet = self.restricted.iter().cloned().collect();
        for l in &self.items {
            names::support_located(l, &mut out);
        }
        out
    }

    pub fn find(&self, url: &Url) -> Option<&Located> {
        self.items.iter().find(|l| &l.url == url)
    }

    pub fn value_at(&self, url: &Url) -> Option<&Value> {
        self.items
            .iter()
            .filter(|l| &l.url == url)
            .find_map(|l| l.value())
    }

    /// Drops finished programs living under a restricted segment, then
    /// restrictions nothing refers to.
    pub fn gc(&mut self) {
        let restricted: BTreeSet<&Name> = self.restricted.iter().collect();
        self.items.retain(|l| {
            let finished = matches!(l.res, Resource::Prog(Term::Nil));
            let private = l
                .url
                .segs
                .last()
                .and_then(Atom::as_name)
                .is_some_and(|n| restricted.contains(n));
            !(finished && private)
        });
        let mut used = NameSet::new();
        for l in &self.items {
            names::support_located(l, &mut used);
        }
        self.restricted.retain(|n| used.contains(n));
    }
}

struct Scope {
    name: Name,
    items: BTreeSet<usize>,
}

#[derive(Default)]
struct Flat {
    items: Vec<Located>,
    scopes: Vec<Scope>,
}

fn count_binders(ast: &NetAst, out: &mut BTreeMap<Name, usize>) {
    match ast {
        NetAst::Item(_) => {}
        NetAst::Par(v) => v.iter().for_each(|n| count_binders(n, out)),
        NetAst::New(x, body) => {
            *out.entry(x.clone()).or_default() += 1;
            count_binders(body, out);
        }
    }
}

fn flatten(ast: &NetAst, flat: &mut Flat) -> BTreeSet<usize> {
    match ast {
        NetAst::Item(l) => {
            flat.items.push(l.clone());
            BTreeSet::from([flat.items.len() - 1])
        }
        NetAst::Par(v) => v.iter().flat_map(|n| flatten(n, flat)).collect(),
        NetAst::New(x, body) => {
            let k = flat.scopes.len();
            flat.scopes.push(Scope {
                name: x.clone(),
                items: BTreeSet::new(),
            });
            let items = flatten(body, flat);
            flat.scopes[k].items = items.clone();
            items
        }
    }
}
