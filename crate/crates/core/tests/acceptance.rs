//! Acceptance criteria. Each criterion prints one pass/fail line; the test
//! fails if any criterion fails.

use std::collections::BTreeSet;
use std::path::PathBuf;

use pik_core::binding::alpha_equiv;
use pik_core::check_pi::check_pi;
use pik_core::check_session::{check_session, orient, session_subject_reduction_probe};
use pik_core::congruence::{normal_form, normalize, to_process};
use pik_core::correspond::correspondence_check;
use pik_core::deadlock::{check_deadlock_session, infer_priorities, DeadlockError};
use pik_core::duality::{check_subtyping_theorem, dual, dual_constraint_holds, session_subtype};
use pik_core::encode::{decode_type, encode_env, encode_process, encode_type, shared_names, Renaming};
use pik_core::env::TypeEnv;
use pik_core::gen::{self, TypeShape};
use pik_core::infer::infer_session_types;
use pik_core::mpst::{encode_mpst, parse_mpst};
use pik_core::parse::{parse_pi_file, parse_pi_type, parse_process, parse_session_file, parse_session_type};
use pik_core::reduce::{explore, successors};
use pik_core::types::pi_equiv;
use pik_core::{Calculus, Name, Process, TypeExpr};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus_files(ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

const SERVER: &str = "x?(z1).x?(z2).x!<z1 == z2>.0";
const CLIENT: &str = "y!<3>.y!<5>.y?(eq).0";

fn criterion_1() -> Outcome {
    let s = parse_session_type("?Int.?Int.!Bool.end").unwrap();
    let want_s = parse_pi_type("lin_i[Int, lin_i[Int, lin_o[Bool, empty[]]]]").unwrap();
    let want_sd = parse_pi_type("lin_o[Int, lin_i[Int, lin_o[Bool, empty[]]]]").unwrap();
    if encode_type(&s) != want_s {
        return Err(format!("[[S]] = {}", encode_type(&s)));
    }
    if encode_type(&dual(&s)) != want_sd {
        return Err(format!("[[dual S]] = {}", encode_type(&dual(&s))));
    }
    let f: Renaming = [(Name::from("x"), Name::from("s"))].into();
    let g: Renaming = [(Name::from("y"), Name::from("s"))].into();
    let none = BTreeSet::new();
    let server = parse_process(SERVER, Calculus::Session).unwrap();
    let client = parse_process(CLIENT, Calculus::Session).unwrap();
    let es = encode_process(&server, &f, &none, &none).unwrap().process;
    let ec = encode_process(&client, &g, &none, &none).unwrap().process;
    let want_server = parse_process("s?(z1, c).c?(z2, c').new c'' in c'!<z1 == z2, c''>.0", Calculus::Pi).unwrap();
    let want_client = parse_process("new c in s!<3, c>.new c' in c!<5, c'>.c'?(eq, c'').0", Calculus::Pi).unwrap();
    if !alpha_equiv(&es, &want_server) {
        return Err(format!("server encodes to {es}"));
    }
    if !alpha_equiv(&ec, &want_client) {
        return Err(format!("client encodes to {ec}"));
    }
    let system = parse_process(&format!("new x y in ({SERVER} | {CLIENT})"), Calculus::Session).unwrap();
    let whole = encode_process(&system, &Renaming::new(), &none, &none).unwrap().process;
    let want_whole = Process::restrict("s", None, Process::par(want_server, want_client));
    if !alpha_equiv(&whole, &want_whole) {
        return Err(format!("system encodes to {whole}"));
    }
    Ok("types exact, processes alpha-equivalent".into())
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..1000 {
        let s = gen::session_type(&mut rng, TypeShape::default());
        let lhs = encode_type(&dual(&s));
        let rhs = encode_type(&s).swap_capabilities();
        if !pi_equiv(&lhs, &rhs) {
            return Err(format!("sample {i}: {s}: {lhs} vs {rhs}"));
        }
    }
    Ok("1000 types, 0 failures".into())
}

/// `check_session(env, p')` and `check_pi([[env]], [[p']])` as booleans, where
/// `p'` is `p` with restriction types inferred. Session restriction
/// annotations count up to orientation, which the encoding cannot observe.
fn both_checks(env: &TypeEnv<TypeExpr>, p: &Process) -> (bool, bool, String) {
    let (s, annotated) = match orient(env, p) {
        Ok(q) => (Ok(()), q),
        Err(d) => (Err(d), pik_core::infer::annotate(env, p).unwrap_or_else(|_| p.clone())),
    };
    let pi = (|| {
        let enc = encode_process(&annotated, &Renaming::new(), &shared_names(env), &env.names())?;
        let penv = encode_env(env, &Renaming::new())?;
        Ok::<_, pik_core::encode::EncodeError>((penv, enc.process))
    })();
    let t = match pi {
        Ok((penv, q)) => check_pi(&penv, &q),
        Err(e) => Err(e.into()),
    };
    let detail = format!("{p}: session {s:?}, pi {t:?}");
    (s.is_ok(), t.is_ok(), detail)
}

fn criterion_3() -> Outcome {
    let files = corpus_files("spi");
    if files.len() < 20 {
        return Err(format!("corpus has {} session processes", files.len()));
    }
    let mut typed = 0;
    for f in &files {
        let file = parse_session_file(&std::fs::read_to_string(f).unwrap()).map_err(|e| format!("{f:?}: {e}"))?;
        let env = TypeEnv::from_entries(file.assumptions).map_err(|e| e.to_string())?;
        let (a, b, d) = both_checks(&env, &file.process);
        if a != b {
            return Err(format!("{f:?}: {d}"));
        }
        typed += a as usize;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut random_typed = 0;
    for _ in 0..300 {
        let s = if rng.gen_bool(0.5) { gen::well_typed(&mut rng) } else { gen::mutated(&mut rng) };
        let (a, b, d) = both_checks(&s.env, &s.process);
        if a != b {
            return Err(d);
        }
        random_typed += a as usize;
    }
    Ok(format!(
        "{} corpus files ({typed} typed), 300 random ({random_typed} typed), 0 disagreements",
        files.len()
    ))
}

use rand::Rng;

fn criterion_4() -> Outcome {
    let example = parse_process(&format!("new x y in ({SERVER} | {CLIENT})"), Calculus::Session).unwrap();
    let r = correspondence_check(&TypeEnv::new(), &example, &Renaming::new(), 5).map_err(|e| e.to_string())?;
    if !r.passed() {
        return Err(format!("example: {:?}", r.counterexamples));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pairs = 0;
    for _ in 0..500 {
        let s = gen::well_typed(&mut rng);
        let r = correspondence_check(&s.env, &s.process, &s.renaming, 5).map_err(|e| format!("{}: {e}", s.process))?;
        if !r.passed() {
            return Err(format!("{}: {:?}", s.process, r.counterexamples[0]));
        }
        pairs += r.checked.len();
    }
    let mut merged = 0;
    for _ in 0..20 {
        let s = gen::open_pair(&mut rng);
        let r = correspondence_check(&s.env, &s.process, &s.renaming, 5).map_err(|e| format!("{}: {e}", s.process))?;
        if !r.passed() {
            return Err(format!("{}: {:?}", s.process, r.counterexamples[0]));
        }
        merged += (r.merge_branch_hits > 0) as usize;
    }
    if merged < 5 {
        return Err(format!("only {merged} cases used the restriction branch"));
    }
    Ok(format!("{pairs} step pairs, {merged} merged-endpoint cases, 0 counterexamples"))
}

/// Processes structurally congruent to `p`.
fn congruent_variants(p: &Process) -> Vec<Process> {
    let mut n = normal_form(p);
    let mut out = vec![normalize(p), Process::par(p.clone(), Process::Nil), to_process(&n)];
    n.comps.reverse();
    out.push(to_process(&n));
    out
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut states = 0;
    for _ in 0..500 {
        let s = gen::well_typed(&mut rng);
        session_subject_reduction_probe(&s.env, &s.process, 5)
            .map_err(|c| format!("{} at depth {}: {}", c.process, c.depth, c.diagnostic))?;
        let p = pik_core::infer::annotate(&s.env, &s.process).map_err(|e| e.to_string())?;
        let ex = explore(&p, Calculus::Session, &shared_names(&s.env), 5);
        for q in &ex.states {
            states += 1;
            for v in congruent_variants(q) {
                if let Err(e) = check_session(&s.env, &v) {
                    return Err(format!("{q} typed but {v} is not: {e}"));
                }
            }
        }
    }
    Ok(format!("{states} states, 0 failures"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut related = 0;
    let mut both_recursive = 0;
    for i in 0..1000 {
        let (a, b) = gen::subtype_pair(&mut rng, TypeShape::default());
        if !check_subtyping_theorem(&a, &b) {
            return Err(format!("pair {i}: {a} <: {b}"));
        }
        related += session_subtype(&a, &b).holds as usize;
        both_recursive += (a.has_recursion() && b.has_recursion()) as usize;
    }
    if related == 0 || both_recursive == 0 {
        return Err(format!("degenerate sample: {related} related, {both_recursive} recursive pairs"));
    }
    Ok(format!("1000 pairs ({related} related, {both_recursive} with recursion on both sides), 0 disagreements"))
}

fn is_two_cycle(edges: &[(String, String)]) -> bool {
    edges.len() == 2 && edges[0].0 == edges[1].1 && edges[0].1 == edges[1].0 && edges[0].0 != edges[0].1
}

fn criterion_7() -> Outcome {
    let eq1 = parse_session_file("new x1 x2 in new y1 y2 in (x1?(z).y1!<z>.0 | y2?(w).x2!<w>.0)").unwrap();
    match check_deadlock_session(&TypeEnv::new(), &eq1.process) {
        Err(DeadlockError::Deadlock(d)) if is_two_cycle(&d.edges) => {}
        other => return Err(format!("first crossed process: {other:?}")),
    }
    let eq2 = parse_pi_file("new x in new y in (x?().y!<>.0 | y?().x!<>.0)").unwrap();
    match infer_priorities(&TypeEnv::new(), &eq2.process) {
        Err(DeadlockError::Deadlock(d)) if is_two_cycle(&d.edges) => {}
        other => return Err(format!("second crossed process: {other:?}")),
    }
    let fact = parse_pi_file(
        "assume fact : #[Int, lin_o[Int]];
         *fact?(x, y).if x == 0 then y!<1>.0 else (new z in (fact!<x - 1, z>.0 | z?(k).y!<x * k>.0))",
    )
    .unwrap();
    let env = TypeEnv::from_entries(fact.assumptions).unwrap();
    match infer_priorities(&env, &fact.process) {
        Ok(p) if p.polymorphic.contains(&Name::from("fact")) => {}
        other => return Err(format!("factorial: {other:?}")),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut accepted, mut rejected) = (0, 0);
    for _ in 0..200 {
        let p = gen::pi_threads(&mut rng);
        if infer_priorities(&TypeEnv::new(), &p).is_err() {
            rejected += 1;
            continue;
        }
        accepted += 1;
        let ex = explore(&p, Calculus::Pi, &BTreeSet::new(), 6);
        for q in &ex.states {
            if successors(q, Calculus::Pi, &BTreeSet::new()).is_empty() && normalize(q) != Process::Nil {
                return Err(format!("{p} accepted but reaches stuck {q}"));
            }
        }
    }
    if accepted == 0 || rejected == 0 {
        return Err(format!("degenerate sample: {accepted} accepted, {rejected} rejected"));
    }
    Ok(format!("crossed processes rejected, factorial accepted, {accepted} accepted / {rejected} rejected random processes never stuck"))
}

fn criterion_8() -> Outcome {
    let p = parse_process(&format!("new x y in ({SERVER} | {CLIENT})"), Calculus::Session).unwrap();
    let q = infer_session_types(&TypeEnv::new(), &p, Default::default()).map_err(|e| e.to_string())?;
    let s = parse_session_type("?Int.?Int.!Bool.end").unwrap();
    match &q {
        Process::SessionRestrict { ty: Some(t), .. } if *t == s && dual(t) == dual(&s) => {}
        other => return Err(format!("inferred {other}")),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shape = TypeShape {
        recursion: false,
        ..TypeShape::default()
    };
    for _ in 0..1000 {
        let t = gen::session_type(&mut rng, shape);
        match decode_type(&encode_type(&t)) {
            Ok(d) if d == t => {}
            other => return Err(format!("{t} decodes to {other:?}")),
        }
    }
    let mut dual_pairs = 0;
    for _ in 0..500 {
        let a = gen::session_type(&mut rng, shape);
        let b = if rng.gen_bool(0.5) { dual(&a) } else { gen::subtype_pair(&mut rng, shape).0 };
        let expect = b == dual(&a);
        if dual_constraint_holds(&encode_type(&a), &encode_type(&b)) != expect {
            return Err(format!("{a} / {b}: expected {expect}"));
        }
        dual_pairs += expect as usize;
    }
    Ok(format!("example inferred exactly, 1000 round trips, 500 pairs ({dual_pairs} dual)"))
}

fn criterion_9() -> Outcome {
    let files = corpus_files("mpst");
    if files.len() < 6 {
        return Err(format!("only {} multiparty types", files.len()));
    }
    let mut not_projectable = 0;
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        let expect: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(f.with_extension("mpst.expect")).unwrap()).unwrap();
        let g = parse_mpst(&text).map_err(|e| format!("{f:?}: {e}"))?.global;
        match encode_mpst(&g) {
            Err(e) => {
                if expect["projectable"] != false {
                    return Err(format!("{f:?}: {e}"));
                }
                not_projectable += 1;
            }
            Ok(rec) => {
                if expect["projectable"] == false {
                    return Err(format!("{f:?} projected"));
                }
                for (r, t) in &rec {
                    decode_type(t).map_err(|e| format!("{f:?} role {r}: {e}"))?;
                }
                if rec.len() == 2 {
                    let ts: Vec<_> = rec.values().collect();
                    if !dual_constraint_holds(ts[0], ts[1]) {
                        return Err(format!("{f:?}: entries not dual"));
                    }
                }
            }
        }
    }
    if not_projectable == 0 {
        return Err("no non-projectable case".into());
    }
    Ok(format!("{} multiparty types ({not_projectable} not projectable), 0 failures", files.len()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("golden encoding of the equality test", criterion_1),
        ("duality as capability swap", criterion_2),
        ("typing agrees with the encoding", criterion_3),
        ("operational correspondence", criterion_4),
        ("subject reduction and congruence", criterion_5),
        ("subtyping agrees with the encoding", criterion_6),
        ("deadlock analysis", criterion_7),
        ("inference", criterion_8),
        ("multiparty encoding", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        match std::panic::catch_unwind(f) {
            Ok(Ok(msg)) => println!("criterion {n} PASS  {name}: {msg}"),
            Ok(Err(msg)) => {
                println!("criterion {n} FAIL  {name}: {msg}");
                failed.push(n);
            }
            Err(_) => {
                println!("criterion {n} FAIL  {name}: panicked");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
