//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line in the test output.

mod common;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use weboscalc::engine::{self, Engine, Options, Policy, TraceEvent};
use weboscalc::gen::{self, Limits};
use weboscalc::rules::RuleId;
use weboscalc::scenario::Scenario;
use weboscalc::syntax::*;
use weboscalc::urlalg::{self, Config};

const ORACLE_NETS: u64 = 2000;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const STEPS_PER_NET: usize = 8;
const URL_CASES: u32 = 1000;
const TOTALITY_NETS: u64 = 1000;
const GOLDEN_BUDGET: Duration = Duration::from_secs(10);
const ROUNDTRIP_ASTS: u64 = 1000;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Command target of an event as printed in trace lines.
fn target(ev: &TraceEvent) -> Option<String> {
    ev.target.as_ref().map(|t| t.replace(' ', ""))
}

fn load(name: &str) -> Scenario {
    let path = common::scenario_dir().join(format!("{name}.scn"));
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn golden_file(name: &str) -> String {
    std::fs::read_to_string(common::scenario_dir().join(format!("{name}.golden"))).unwrap()
}

fn opts(collection_op: bool) -> Options {
    let mut config = Config::new();
    config.collection_op_dispatch = collection_op;
    Options {
        config,
        ..Options::default()
    }
}

/// Engines at successive states of a random run of a generated net.
fn random_walk(seed: u64) -> Vec<Engine> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = gen::network(&mut rng, Limits::default());
    let mut e = Engine::new(net, opts(seed % 4 == 0), Policy::Rand(seed));
    let mut states = vec![e.clone()];
    for _ in 0..STEPS_PER_NET {
        match e.step() {
            Ok(Some(_)) => states.push(e.clone()),
            Ok(None) => break,
            Err(err) => panic!("seed {seed}: {err}"),
        }
    }
    states
}

// ---- 1 ----

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let (mut states, mut redexes, mut fired) = (0, 0, 0);
    for seed in 0..ORACLE_NETS {
        for e in random_walk(seed) {
            states += 1;
            let items = &e.net().items;
            let flag = e.options().config.collection_op_dispatch;
            let got: Vec<String> = e.redexes().iter().map(common::redex_key).collect();
            let got_set: BTreeSet<String> = got.iter().cloned().collect();
            ensure(got.len() == got_set.len(), || format!("seed {seed}: duplicate redexes {got:?}"))?;
            let want = common::redexes(items, flag);
            ensure(got_set == want, || {
                format!("seed {seed}: engine {got_set:?} vs oracle {want:?}\n{}", e.net())
            })?;
            let seq: Vec<String> = engine::enumerate_seq(items, &e.options().config)
                .iter()
                .map(common::redex_key)
                .collect();
            ensure(seq == got, || format!("seed {seed}: sequential scan differs"))?;
            redexes += got.len();
            for (i, r) in e.redexes().iter().enumerate() {
                let mut next = e.clone();
                let ev = next.fire(i).map_err(|err| format!("seed {seed}: {err}"))?;
                common::check_store(items, r, &next.net().items, &ev.fresh)
                    .map_err(|m| format!("seed {seed}: {m}"))?;
                fired += 1;
            }
        }
    }
    let took = start.elapsed();
    ensure(took < ORACLE_BUDGET, || format!("took {took:?}"))?;
    Ok(format!(
        "{ORACLE_NETS} nets, {states} states, {redexes} redexes, {fired} store effects checked in {:.1}s",
        took.as_secs_f64()
    ))
}

// ---- 2 ----

const SEGS: &[&str] = &["a", "ab", "b", "c", "items", "exec", "session", "x1"];

fn seg() -> impl Strategy<Value = String> {
    prop::sample::select(SEGS).prop_map(str::to_string)
}

/// Paths the grammar accepts: reserved directory names only up front.
fn path(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(seg(), 0..=max).prop_filter("reserved segment", |v| {
        v.iter().skip(1).all(|s| s != "exec" && s != "session")
    })
}

fn plain_path(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(seg(), 0..=max)
        .prop_filter("reserved segment", |v| v.iter().all(|s| s != "exec" && s != "session"))
}

fn location() -> impl Strategy<Value = &'static str> {
    prop::sample::select(&["//h/c", "//h/d", "//k/c"][..])
}

fn url_text(loc: &str, segs: &[String], collection: bool) -> String {
    let mut s = format!("{loc}/{}", segs.join("/"));
    if collection && !segs.is_empty() {
        s.push('/');
    }
    s
}

fn rel_ref() -> impl Strategy<Value = String> {
    (0usize..3, plain_path(3), any::<bool>()).prop_map(|(ups, segs, trailing)| {
        let mut s = "../".repeat(ups);
        s.push_str(&segs.join("/"));
        if trailing && !segs.is_empty() {
            s.push('/');
        }
        if s.is_empty() {
            s.push_str("./");
        }
        s
    })
}

fn root_ref() -> impl Strategy<Value = String> {
    (plain_path(3), any::<bool>()).prop_map(|(segs, trailing)| {
        let mut s = format!("/{}", segs.join("/"));
        if trailing && !segs.is_empty() {
            s.push('/');
        }
        s
    })
}

fn pattern_text() -> impl Strategy<Value = String> {
    (plain_path(3).prop_filter("empty", |v| !v.is_empty()), any::<bool>()).prop_map(|(segs, wild)| {
        let mut s = format!("/{}", segs.join("/"));
        if wild {
            s.push_str("/*");
        }
        s
    })
}

fn run_cases<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(PtConfig {
        cases: URL_CASES,
        failure_persistence: None,
        ..PtConfig::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn base_url() -> impl Strategy<Value = Url> {
    (location(), path(3)).prop_map(|(l, segs)| parse_url(&url_text(l, &segs, true)).unwrap())
}

fn url_algebra() -> Outcome {
    run_cases((base_url(), prop_oneof![rel_ref(), root_ref()], base_url()), |(b, r, other)| {
        let r = parse_ref(&r).unwrap();
        if let Ok(u) = urlalg::resolve_url(&b, &r) {
            let again = urlalg::resolve_url(&b, &Ref::Url(u.clone())).unwrap();
            prop_assert_eq!(&again, &u);
            prop_assert_eq!(urlalg::resolve_url(&other, &Ref::Url(u.clone())).unwrap(), u.clone());
            let reparsed = parse_ref(&u.to_string()).unwrap();
            prop_assert_eq!(urlalg::resolve_url(&b, &reparsed).unwrap(), u);
        }
        Ok(())
    })
    .map_err(|e| format!("resolve idempotence: {e}"))?;

    run_cases((location(), path(3), path(3), root_ref()), |(l, p1, p2, r)| {
        let b1 = parse_url(&url_text(l, &p1, true)).unwrap();
        let b2 = parse_url(&url_text(l, &p2, true)).unwrap();
        let r = parse_ref(&r).unwrap();
        prop_assert_eq!(urlalg::resolve_url(&b1, &r), urlalg::resolve_url(&b2, &r));
        Ok(())
    })
    .map_err(|e| format!("root-relative base independence: {e}"))?;

    run_cases((path(4), any::<bool>(), pattern_text()), |(segs, coll, pat)| {
        let u = parse_url(&url_text("//h/c", &segs, coll)).unwrap();
        let p = parse_pattern(&pat).unwrap();
        let got = urlalg::url_in_pattern(&u, &p);
        let (_, path) = common::split(&u.to_string());
        prop_assert_eq!(got, common::member(&path, &pat), "{} in {}", u, pat);
        if got {
            let prefix = common::segments(pat.trim_end_matches('*')).len();
            prop_assert!(segs.len() >= prefix);
            let pat_segs: Vec<String> = p.prefix.iter().map(|a| a.to_string()).collect();
            prop_assert_eq!(&segs[..prefix], &pat_segs[..]);
        }
        Ok(())
    })
    .map_err(|e| format!("segment-boundary safety: {e}"))?;

    let deployments = prop::collection::vec((pattern_text(), prop::sample::select(&["//h/c", "//h/d"][..])), 0..5);
    run_cases((deployments, path(4), any::<bool>()), |(deps, segs, coll)| {
        let items: Vec<Located> = deps
            .iter()
            .enumerate()
            .map(|(i, (pat, l))| {
                let v = parse_value(&format!("comp:s [_ -> {pat}] < >")).unwrap();
                Located::val(parse_url(&format!("{l}/exec/m{i}/")).unwrap(), v)
            })
            .collect();
        let target = parse_url(&url_text("//h/c", &segs, coll)).unwrap();
        let got = urlalg::maxpat(&items, &target.loc, &target.segs, target.collection, &[]).map(|p| p.to_string());
        let here: Vec<String> = deps.iter().filter(|(_, l)| *l == "//h/c").map(|(p, _)| p.clone()).collect();
        let (_, path) = common::split(&target.to_string());
        prop_assert_eq!(got, common::brute_maxpat(&here, &path));
        Ok(())
    })
    .map_err(|e| format!("maxpat vs brute force: {e}"))?;

    Ok(format!("4 properties x {URL_CASES} cases"))
}

// ---- 3 ----

fn negative_premise_totality() -> Outcome {
    let mut occurrences = 0;
    for seed in 0..TOTALITY_NETS {
        for e in random_walk(seed) {
            let all = e.redexes();
            for (a, it) in e.net().items.iter().enumerate() {
                let is_command = matches!(
                    it.term(),
                    Some(Term::Cmd(_))
                        | Some(Term::NewSession { at: Some((_, Session::Ns)), .. })
                        | Some(Term::DropSession { at: Some((_, Session::Id(_))), .. })
                );
                if !is_command {
                    continue;
                }
                occurrences += 1;
                let leaves: Vec<RuleId> = all
                    .iter()
                    .filter(|r| r.actor == a)
                    .map(|r| r.inner.as_deref().map_or(r.rule, |i| i.rule))
                    .collect();
                let errs = leaves.iter().filter(|r| **r == RuleId::CmdErr).count();
                let others = leaves.len() - errs;
                ensure((errs == 1 && others == 0) || (errs == 0 && others > 0), || {
                    format!("seed {seed}: {it} has {leaves:?}")
                })?;
            }
        }
    }
    Ok(format!("{occurrences} command occurrences, 0 violations"))
}

// ---- 4 ----

fn golden_matches(name: &str) -> Result<Vec<TraceEvent>, String> {
    let rep = load(name).run().map_err(|e| e.to_string())?;
    ensure(rep.golden() == golden_file(name), || format!("{name}: golden mismatch"))?;
    ensure(rep.passed(), || format!("{name}: assertions failed"))?;
    Ok(rep.trace)
}

fn dispatch_correctness() -> Outcome {
    let trace = golden_matches("03-longest-pattern")?;
    let hit: Vec<&TraceEvent> = trace
        .iter()
        .filter(|ev| target(ev).is_some_and(|t| t.starts_with("//h/c/a/b/c:")))
        .collect();
    ensure(hit.len() == 1, || format!("{} events at /a/b/c", hit.len()))?;
    let ev = hit[0];
    ensure(ev.rule == "CAPTURE-COM", || format!("/a/b/c handled by {}", ev.rule))?;
    ensure(ev.focus.iter().any(|f| f == "//h/c/exec/m2/"), || format!("focus {:?}", ev.focus))?;
    ensure(!ev.focus.iter().any(|f| f.starts_with("//h/c/exec/m1/")), || "m1 involved".into())?;
    Ok("/a/b/c dispatched to the /a/b/* component; golden exact".into())
}

// ---- 5 ----

fn fresh_post() -> Outcome {
    let sc = load("02-post-fresh");
    let initial = sc.net.free_names();
    let rep = sc.run().map_err(|e| e.to_string())?;
    let names: Vec<String> = rep
        .trace
        .iter()
        .filter(|ev| ev.rule == "REXEC-FRESH")
        .flat_map(|ev| ev.fresh.clone())
        .collect();
    ensure(names.len() == 2, || format!("fresh names {names:?}"))?;
    ensure(names[0] != names[1], || "POSTs reused a name".into())?;
    for n in &names {
        ensure(!initial.contains(&Name::new(n.as_str())), || format!("{n} is free initially"))?;
    }
    let store = common::store(&rep.final_net.items);
    for (n, v) in names.iter().zip(["10", "20"]) {
        let want = (format!("//h/c/items/{n}"), v.to_string());
        ensure(store.contains(&want), || format!("missing {want:?}"))?;
    }
    Ok(format!("created {} and {}", names[0], names[1]))
}

// ---- 6 ----

/// Session annotations of commands in `post` whose target is in `ctx`.
fn annotations(post: &str, ctx: &str) -> Vec<String> {
    post.split(&format!("@{ctx}/"))
        .skip(1)
        .filter_map(|rest| {
            let (_, after) = rest.split_once(" : ")?;
            after.split_whitespace().next().map(str::to_string)
        })
        .collect()
}

fn session_lifecycle() -> Outcome {
    let trace = golden_matches("05-session-lifecycle")?;
    let new = trace.iter().position(|e| e.rule == "SES-NEW").ok_or("no SES-NEW")?;
    let drop = trace.iter().position(|e| e.rule == "SES-DROP").ok_or("no SES-DROP")?;
    ensure(new < drop, || "SES-DROP before SES-NEW".into())?;
    let id = trace[new]
        .fresh
        .iter()
        .find(|n| trace[new].post.contains(&format!(": {n}")))
        .ok_or("session id not visible after SES-NEW")?
        .clone();
    let (mut open, mut closed) = (0, 0);
    for (k, ev) in trace.iter().enumerate().skip(new) {
        let expect = if k < drop { id.as_str() } else { "ns" };
        for a in annotations(&ev.post, "//h/shop") {
            ensure(a == expect, || format!("step {}: annotation {a}, expected {expect}", ev.step))?;
            if k < drop {
                open += 1;
            } else {
                closed += 1;
            }
        }
    }
    ensure(open > 0 && closed > 0, || format!("{open} open / {closed} closed annotations"))?;
    Ok(format!("{open} annotations carry {id}, {closed} carry ns after the drop; golden exact"))
}

// ---- 7 ----

fn delegation() -> Outcome {
    let rep = load("06-session-delegation").run().map_err(|e| e.to_string())?;
    ensure(rep.passed(), || rep.summary())?;
    let id = rep
        .trace
        .iter()
        .find(|e| e.rule == "SES-NEW")
        .and_then(|e| e.fresh.last().cloned())
        .ok_or("no SES-NEW")?;
    let cap = rep
        .trace
        .iter()
        .position(|e| e.rule == "CAPTURE-COM" && e.focus.iter().any(|f| f == "//h/shop/exec/m/"))
        .ok_or("call not captured")?;
    let want = format!("//h/bank/session/{id}/token:{id}");
    let body = rep.trace[cap..].iter().find(|e| {
        e.rule == "GET"
            && e.focus.first().is_some_and(|f| f.starts_with("//h/shop/exec/m/"))
            && target(e).as_deref() == Some(want.as_str())
    });
    ensure(body.is_some(), || format!("no instance GET at {want}"))?;
    Ok(format!("instance command runs under {id}"))
}

// ---- 8 ----

fn lexec() -> Outcome {
    let rep = load("07-lexec-install").run().map_err(|e| e.to_string())?;
    ensure(rep.passed(), || rep.summary())?;
    let codebase = parse_url("//h/apps/code/").unwrap();
    let deployed: Vec<&Deploy> = rep
        .final_net
        .items
        .iter()
        .filter(|it| it.url.to_string().starts_with("//h/run/exec/"))
        .filter_map(|it| it.value()?.as_component()?.deploy.as_ref())
        .collect();
    ensure(deployed.len() == 1, || format!("{} deployed components", deployed.len()))?;
    let d = deployed[0];
    ensure(d.codebase.as_ref() == Some(&codebase), || format!("codebase {:?}", d.codebase))?;
    let dir = d.pattern.prefix.first().ok_or("empty pattern")?.to_string();
    ensure(d.pattern.to_string() == format!("/{dir}/editor"), || format!("pattern {}", d.pattern))?;
    let store = common::store(&rep.final_net.items);
    let y = format!("//h/run/{dir}/");
    ensure(store.iter().any(|(u, _)| *u == y), || format!("{y} not created"))?;
    let call = rep
        .trace
        .iter()
        .filter(|e| e.focus.first().is_some_and(|f| f == "//h/client/main/"))
        .rfind(|e| target(e) == Some(format!("{y}editor:ns")))
        .ok_or("no rexec on y/editor")?;
    ensure(call.rule == "CAPTURE-USEROP", || format!("rexec took {}", call.rule))?;
    ensure(
        store.contains(&("//h/client/out".into(), "hello".into())),
        || "rexec result missing".into(),
    )?;
    Ok(format!("codebase {codebase}, pattern {}, rexec on {y}editor captured", d.pattern))
}

// ---- 9 ----

fn determinism() -> Outcome {
    let files = common::scenario_files();
    for f in &files {
        let mut sc = Scenario::load(f).map_err(|e| e.to_string())?;
        for policy in [sc.policy.clone(), Policy::Rand(42), Policy::Rand(7)] {
            sc.policy = policy;
            let a = sc.run().map_err(|e| e.to_string())?.golden();
            let b = sc.run().map_err(|e| e.to_string())?.golden();
            ensure(a == b, || format!("{}: runs differ", f.display()))?;
        }
    }
    let start = Instant::now();
    for f in &files {
        let name = f.file_stem().unwrap().to_str().unwrap();
        golden_matches(name)?;
    }
    let took = start.elapsed();
    ensure(took < GOLDEN_BUDGET, || format!("golden suite took {took:?}"))?;
    ensure(files.len() == 10, || format!("{} scenarios", files.len()))?;
    Ok(format!("{} scenarios stable; golden suite in {:.2}s", files.len(), took.as_secs_f64()))
}

// ---- 10 ----

fn round_trip() -> Outcome {
    let files = common::scenario_files();
    for f in &files {
        let sc = Scenario::load(f).map_err(|e| e.to_string())?;
        let ast = parse_network_ast(&sc.net_src).map_err(|e| e.to_string())?;
        let back = parse_network_ast(&ast.to_string()).map_err(|e| e.to_string())?;
        ensure(Network::from_ast(back) == sc.net, || format!("{}: written form", f.display()))?;
        let text = sc.net.to_string();
        ensure(parse_network(&text).ok().as_ref() == Some(&sc.net), || {
            format!("{}: canonical form", f.display())
        })?;
    }
    for seed in 0..ROUNDTRIP_ASTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ast = gen::net_ast(&mut rng, Limits::default(), 3);
        let text = ast.to_string();
        let net = Network::from_ast(ast);
        let parsed = parse_network(&text).map_err(|e| format!("seed {seed}: {e}\n{text}"))?;
        ensure(parsed == net, || format!("seed {seed}: written form\n{text}"))?;
        let canon = net.to_string();
        ensure(parse_network(&canon).ok().as_ref() == Some(&net), || {
            format!("seed {seed}: canonical form\n{canon}")
        })?;
    }
    Ok(format!("{} scenarios, {ROUNDTRIP_ASTS} generated networks", files.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("url algebra", url_algebra),
        ("negative-premise totality", negative_premise_totality),
        ("dispatch correctness", dispatch_correctness),
        ("fresh-name post", fresh_post),
        ("session lifecycle", session_lifecycle),
        ("delegation", delegation),
        ("lexec", lexec),
        ("determinism", determinism),
        ("parser round trip", round_trip),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match res {
            Ok(detail) => println!("acceptance {:>2} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {:>2} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
