//! Small-step reduction for both calculi.
//!
//! Redexes are found on the normal form of a process (see
//! [`crate::congruence`]), which closes the rules under structural
//! congruence. A replicated component offers one fresh instance of each of
//! its prefixes.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::binding::{all_names, map_names, substitute_many};
use crate::congruence::{normal_form, normalize, to_process, Binder, Comp, Normal};
use crate::name::{FreshSupply, Label, Name};
use crate::process::{BinOp, Calculus, Expr, Process};
use crate::types::SessionType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RedexKind {
    SessionCom,
    SessionCase,
    PiCom,
    PiCase,
    Cond,
}

/// A top-level component taking part in a redex; `replicated` indexes a
/// prefix inside the body of a replicated component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Part {
    pub comp: usize,
    pub replicated: Option<usize>,
}

/// A rule instance. `parts` index the components of the normal form of the
/// process, sender (or selector, or the case/if component) first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Redex {
    pub kind: RedexKind,
    pub rule: &'static str,
    pub parts: Vec<Part>,
    pub subject: Option<Name>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReduceError {
    #[error("arity mismatch on {0}: {1} values sent, {2} expected")]
    ArityMismatch(Name, usize, usize),
    #[error("label {0} is not offered")]
    LabelNotOffered(Label),
    #[error("condition {0} does not evaluate to a boolean")]
    BadCondition(String),
    #[error("not a redex of this process")]
    NotARedex,
}

/// A process prepared for reduction: bound names are unique and components
/// are in canonical order.
pub fn prepare(p: &Process) -> Normal {
    normal_form(&normalize(p))
}

fn comp_at<'a>(n: &'a Normal, part: &Part) -> &'a Comp {
    let c = &n.comps[part.comp];
    match (part.replicated, c) {
        (Some(k), Comp::Replicated(body)) => &body.comps[k],
        _ => c,
    }
}

/// Items that can take part in a communication, with the binders in scope.
fn items(n: &Normal) -> Vec<Part> {
    let mut out = Vec::new();
    for (i, c) in n.comps.iter().enumerate() {
        match c {
            Comp::Replicated(body) => {
                for k in 0..body.comps.len() {
                    out.push(Part {
                        comp: i,
                        replicated: Some(k),
                    });
                }
            }
            _ => out.push(Part {
                comp: i,
                replicated: None,
            }),
        }
    }
    out
}

fn binders_for<'a>(n: &'a Normal, parts: &[Part]) -> Vec<&'a Binder> {
    let mut bs: Vec<&Binder> = n.binders.iter().collect();
    for p in parts {
        if let (Some(_), Comp::Replicated(body)) = (p.replicated, &n.comps[p.comp]) {
            bs.extend(body.binders.iter());
        }
    }
    bs
}

fn compatible(a: &Part, b: &Part) -> bool {
    a.comp != b.comp || (a.replicated.is_some() && b.replicated.is_some() && a.replicated != b.replicated)
}

fn session_pair(bs: &[&Binder], x: &Name, y: &Name) -> bool {
    bs.iter().any(|b| match b {
        Binder::Session(u, v, _) => (u == x && v == y) || (u == y && v == x),
        Binder::Chan(..) => false,
    })
}

fn chan_bound(bs: &[&Binder], x: &Name) -> bool {
    bs.iter().any(|b| matches!(b, Binder::Chan(u, _) if u == x))
}

/// All redexes of a session process. `shared` lists the free names of
/// connection type, on which free communication is allowed.
pub fn redexes_session(p: &Process, shared: &BTreeSet<Name>) -> Vec<Redex> {
    redexes_in(&prepare(p), Calculus::Session, shared)
}

/// All redexes of a pi process.
pub fn redexes_pi(p: &Process) -> Vec<Redex> {
    redexes_in(&prepare(p), Calculus::Pi, &BTreeSet::new())
}

pub fn redexes(p: &Process, calculus: Calculus, shared: &BTreeSet<Name>) -> Vec<Redex> {
    redexes_in(&prepare(p), calculus, shared)
}

fn redexes_in(n: &Normal, calculus: Calculus, shared: &BTreeSet<Name>) -> Vec<Redex> {
    let mut out = Vec::new();
    let its = items(n);
    for a in &its {
        for b in &its {
            if !compatible(a, b) {
                continue;
            }
            let parts = vec![*a, *b];
            let bs = binders_for(n, &parts);
            match (comp_at(n, a), comp_at(n, b), calculus) {
                (Comp::Output(x, ..), Comp::Input(y, ..), Calculus::Session) => {
                    if x != y && session_pair(&bs, x, y) {
                        out.push(Redex {
                            kind: RedexKind::SessionCom,
                            rule: "R-Com",
                            parts,
                            subject: Some(x.clone()),
                        });
                    } else if x == y && (shared.contains(x) || chan_bound(&bs, x)) {
                        out.push(Redex {
                            kind: RedexKind::SessionCom,
                            rule: "R-StndCom",
                            parts,
                            subject: Some(x.clone()),
                        });
                    }
                }
                (Comp::Select(x, ..), Comp::Branch(y, _), Calculus::Session) if x != y && session_pair(&bs, x, y) => {
                    out.push(Redex {
                        kind: RedexKind::SessionCase,
                        rule: "R-Case",
                        parts,
                        subject: Some(x.clone()),
                    })
                }
                (Comp::Output(x, ..), Comp::Input(y, ..), Calculus::Pi) if x == y => out.push(Redex {
                    kind: RedexKind::PiCom,
                    rule: "Rpi-Com",
                    parts,
                    subject: Some(x.clone()),
                }),
                _ => {}
            }
        }
    }
    for (i, c) in n.comps.iter().enumerate() {
        let part = vec![Part {
            comp: i,
            replicated: None,
        }];
        match c {
            Comp::Case(Expr::Variant(..), _) if calculus == Calculus::Pi => out.push(Redex {
                kind: RedexKind::PiCase,
                rule: "Rpi-Case",
                parts: part,
                subject: None,
            }),
            Comp::If(cond, ..) if matches!(eval(cond), Some(Expr::Bool(_))) => out.push(Redex {
                kind: RedexKind::Cond,
                rule: if calculus == Calculus::Session { "R-Cond" } else { "Rpi-Cond" },
                parts: part,
                subject: None,
            }),
            _ => {}
        }
    }
    out
}

/// Evaluates a closed expression; names are values.
pub fn eval(e: &Expr) -> Option<Expr> {
    match e {
        Expr::BinOp(op, l, r) => {
            let (a, b) = (eval(l)?, eval(r)?);
            Some(match (op, a, b) {
                (BinOp::Add, Expr::Int(x), Expr::Int(y)) => Expr::Int(x.checked_add(y)?),
                (BinOp::Sub, Expr::Int(x), Expr::Int(y)) => Expr::Int(x.checked_sub(y)?),
                (BinOp::Mul, Expr::Int(x), Expr::Int(y)) => Expr::Int(x.checked_mul(y)?),
                (BinOp::Lt, Expr::Int(x), Expr::Int(y)) => Expr::Bool(x < y),
                (BinOp::Le, Expr::Int(x), Expr::Int(y)) => Expr::Bool(x <= y),
                (BinOp::And, Expr::Bool(x), Expr::Bool(y)) => Expr::Bool(x && y),
                (BinOp::Or, Expr::Bool(x), Expr::Bool(y)) => Expr::Bool(x || y),
                (BinOp::Eq, a, b) if is_ground(&a) && is_ground(&b) => Expr::Bool(a == b),
                (BinOp::Ne, a, b) if is_ground(&a) && is_ground(&b) => Expr::Bool(a != b),
                _ => return None,
            })
        }
        Expr::Variant(l, v) => Some(Expr::Variant(l.clone(), Box::new(eval(v)?))),
        other => Some(other.clone()),
    }
}

fn is_ground(e: &Expr) -> bool {
    matches!(e, Expr::Int(_) | Expr::Bool(_) | Expr::Unit)
}

fn value_of(e: &Expr) -> Expr {
    eval(e).unwrap_or_else(|| e.clone())
}

/// The type of the first endpoint of a session restriction after one
/// interaction, optionally with the chosen label.
fn advance(t: &SessionType, label: Option<&Label>) -> Option<SessionType> {
    match (t.head(), label) {
        (SessionType::Send(_, k) | SessionType::Recv(_, k), None) => Some(*k),
        (SessionType::Select(m) | SessionType::Branch(m), Some(l)) => m.get(l).cloned(),
        _ => None,
    }
}

/// Copies a replicated body with fresh bound names.
fn instance(body: &Normal, avoid: &BTreeSet<Name>, supply: &mut FreshSupply) -> Normal {
    let p = to_process(body);
    supply.avoid(avoid.iter().cloned());
    supply.avoid(all_names(&p));
    let mut map = BTreeMap::new();
    for b in &body.binders {
        for x in match b {
            Binder::Chan(x, _) => vec![x],
            Binder::Session(x, y, _) => vec![x, y],
        } {
            map.insert(x.clone(), supply.next_name());
        }
    }
    for c in &body.comps {
        for x in crate::binding::bound_names(&comp_to_process(c)) {
            map.entry(x).or_insert_with(|| supply.next_name());
        }
    }
    let f = |x: &Name| map.get(x).cloned().unwrap_or_else(|| x.clone());
    Normal {
        binders: body
            .binders
            .iter()
            .map(|b| match b {
                Binder::Chan(x, t) => Binder::Chan(f(x), t.clone()),
                Binder::Session(x, y, t) => Binder::Session(f(x), f(y), t.clone()),
            })
            .collect(),
        comps: body
            .comps
            .iter()
            .map(|c| single_comp(&map_names(&comp_to_process(c), &f)))
            .collect(),
    }
}

fn comp_to_process(c: &Comp) -> Process {
    to_process(&Normal {
        binders: vec![],
        comps: vec![c.clone()],
    })
}

fn single_comp(p: &Process) -> Comp {
    normal_form(p).comps.pop().expect("a guarded process")
}

fn continuation(n: &Normal) -> Process {
    to_process(n)
}

/// Applies `redex` to `p`.
pub fn step(p: &Process, redex: &Redex) -> Result<Process, ReduceError> {
    let n = prepare(p);
    step_normal(&n, redex)
}

fn step_normal(n: &Normal, redex: &Redex) -> Result<Process, ReduceError> {
    for part in &redex.parts {
        if part.comp >= n.comps.len() {
            return Err(ReduceError::NotARedex);
        }
    }
    let mut binders = n.binders.clone();
    let mut extra: Vec<Process> = Vec::new();
    let mut supply = FreshSupply::new("_r");
    let all: BTreeSet<Name> = all_names(&to_process(n));
    // instantiate each replicated component used, once
    let mut instances: BTreeMap<usize, Normal> = BTreeMap::new();
    for part in &redex.parts {
        if let (Some(_), Comp::Replicated(body)) = (part.replicated, &n.comps[part.comp]) {
            instances.entry(part.comp).or_insert_with(|| {
                let inst = instance(body, &all, &mut supply);
                binders.extend(inst.binders.clone());
                inst
            });
        }
    }
    let get = |part: &Part| -> Comp {
        match (part.replicated, instances.get(&part.comp)) {
            (Some(k), Some(inst)) => inst.comps[k].clone(),
            _ => n.comps[part.comp].clone(),
        }
    };
    let consumed_direct: BTreeSet<usize> = redex
        .parts
        .iter()
        .filter(|p| p.replicated.is_none())
        .map(|p| p.comp)
        .collect();
    let used_inst: BTreeMap<usize, BTreeSet<usize>> = redex.parts.iter().fold(BTreeMap::new(), |mut m, p| {
        if let Some(k) = p.replicated {
            m.entry(p.comp).or_insert_with(BTreeSet::new).insert(k);
        }
        m
    });
    for (i, inst) in &instances {
        for (k, c) in inst.comps.iter().enumerate() {
            if !used_inst[i].contains(&k) {
                extra.push(comp_to_process(c));
            }
        }
    }
    match redex.kind {
        RedexKind::SessionCom | RedexKind::PiCom => {
            let (Comp::Output(x, vs, k), Comp::Input(y, zs, l)) = (get(&redex.parts[0]), get(&redex.parts[1])) else {
                return Err(ReduceError::NotARedex);
            };
            if vs.len() != zs.len() {
                return Err(ReduceError::ArityMismatch(x, vs.len(), zs.len()));
            }
            let map: BTreeMap<Name, Expr> = zs.iter().cloned().zip(vs.iter().map(value_of)).collect();
            extra.push(continuation(&k));
            extra.push(substitute_many(&continuation(&l), &map).map_err(|_| ReduceError::NotARedex)?);
            if redex.rule == "R-Com" {
                advance_binder(&mut binders, &x, &y, None);
            }
        }
        RedexKind::SessionCase => {
            let (Comp::Select(x, label, k), Comp::Branch(y, m)) = (get(&redex.parts[0]), get(&redex.parts[1])) else {
                return Err(ReduceError::NotARedex);
            };
            let chosen = m.get(&label).ok_or_else(|| ReduceError::LabelNotOffered(label.clone()))?;
            extra.push(continuation(&k));
            extra.push(continuation(chosen));
            advance_binder(&mut binders, &x, &y, Some(&label));
        }
        RedexKind::PiCase => {
            let Comp::Case(Expr::Variant(label, v), m) = get(&redex.parts[0]) else {
                return Err(ReduceError::NotARedex);
            };
            let (x, body) = m.get(&label).ok_or_else(|| ReduceError::LabelNotOffered(label.clone()))?;
            let map = BTreeMap::from([(x.clone(), value_of(&v))]);
            extra.push(substitute_many(&continuation(body), &map).map_err(|_| ReduceError::NotARedex)?);
        }
        RedexKind::Cond => {
            let Comp::If(cond, a, b) = get(&redex.parts[0]) else {
                return Err(ReduceError::NotARedex);
            };
            match eval(&cond) {
                Some(Expr::Bool(true)) => extra.push(continuation(&a)),
                Some(Expr::Bool(false)) => extra.push(continuation(&b)),
                _ => return Err(ReduceError::BadCondition(cond.to_string())),
            }
        }
    }
    let mut comps: Vec<Process> = n
        .comps
        .iter()
        .enumerate()
        .filter(|(i, _)| !consumed_direct.contains(i))
        .map(|(_, c)| comp_to_process(c))
        .collect();
    comps.extend(extra.into_iter().filter(|q| *q != Process::Nil));
    let mut out = if comps.is_empty() {
        Process::Nil
    } else {
        Process::par_all(comps)
    };
    for b in binders.iter().rev() {
        out = match b {
            Binder::Chan(x, t) => Process::restrict(x.clone(), t.clone(), out),
            Binder::Session(x, y, t) => Process::session_restrict(x.clone(), y.clone(), t.clone(), out),
        };
    }
    Ok(out)
}

fn advance_binder(binders: &mut [Binder], x: &Name, y: &Name, label: Option<&Label>) {
    for b in binders.iter_mut() {
        if let Binder::Session(u, v, Some(t)) = b {
            if (u == x && v == y) || (u == y && v == x) {
                if let Some(next) = advance(t, label) {
                    *t = next;
                }
            }
        }
    }
}

/// All one-step successors.
pub fn successors(p: &Process, calculus: Calculus, shared: &BTreeSet<Name>) -> Vec<(Redex, Process)> {
    let n = prepare(p);
    redexes_in(&n, calculus, shared)
        .into_iter()
        .filter_map(|r| step_normal(&n, &r).ok().map(|q| (r, q)))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub rule: &'static str,
    pub before_hash: String,
    pub before: String,
    pub after: String,
    #[serde(skip)]
    pub redex: Redex,
    #[serde(skip)]
    pub result: Process,
}

/// Short stable fingerprint of the congruence class of `p`.
pub fn process_hash(p: &Process) -> String {
    let mut h = DefaultHasher::new();
    normalize(p).to_string().hash(&mut h);
    format!("{:016x}", h.finish())
}

/// A maximal trace of at most `max_steps` steps; the redex at each step is
/// chosen by a generator seeded with `seed`.
pub fn run(p: &Process, calculus: Calculus, shared: &BTreeSet<Name>, seed: u64, max_steps: usize) -> Vec<TraceStep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = p.clone();
    let mut trace = Vec::new();
    for i in 0..max_steps {
        let succ = successors(&cur, calculus, shared);
        let Some((r, q)) = succ.choose(&mut rng).cloned() else {
            break;
        };
        trace.push(TraceStep {
            step: i + 1,
            rule: r.rule,
            before_hash: process_hash(&cur),
            before: cur.to_string(),
            after: q.to_string(),
            redex: r,
            result: q.clone(),
        });
        cur = q;
    }
    trace
}

/// States and transitions reachable in at most `depth` steps.
#[derive(Clone, Debug, Default)]
pub struct Exploration {
    pub states: Vec<Process>,
    pub depth_of: Vec<usize>,
    pub edges: Vec<(usize, Redex, usize)>,
}

/// Breadth-first exploration over congruence classes.
pub fn explore(p: &Process, calculus: Calculus, shared: &BTreeSet<Name>, depth: usize) -> Exploration {
    let mut ex = Exploration::default();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    index.insert(normalize(p).to_string(), 0);
    ex.states.push(p.clone());
    ex.depth_of.push(0);
    queue.push_back(0);
    while let Some(i) = queue.pop_front() {
        if ex.depth_of[i] >= depth {
            continue;
        }
        for (r, q) in successors(&ex.states[i], calculus, shared) {
            let key = normalize(&q).to_string();
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    let j = ex.states.len();
                    index.insert(key, j);
                    ex.states.push(q);
                    ex.depth_of.push(ex.depth_of[i] + 1);
                    queue.push_back(j);
                    j
                }
            };
            ex.edges.push((i, r, j));
        }
    }
    ex
}

/// Contracts every case on a variant value, at any depth.
pub fn case_normalize(p: &Process) -> Process {
    match p {
        Process::Case {
            scrutinee: Expr::Variant(l, v),
            branches,
        } => match branches.get(l) {
            Some((x, body)) => {
                let map = BTreeMap::from([(x.clone(), value_of(v))]);
                match substitute_many(body, &map) {
                    Ok(q) => case_normalize(&q),
                    Err(_) => p.clone(),
                }
            }
            None => p.clone(),
        },
        Process::Nil => Process::Nil,
        Process::Output { chan, payload, cont } => Process::output(chan.clone(), payload.clone(), case_normalize(cont)),
        Process::Input { chan, binders, cont } => Process::input(chan.clone(), binders.clone(), case_normalize(cont)),
        Process::Select { chan, label, cont } => Process::select(chan.clone(), label.clone(), case_normalize(cont)),
        Process::Branch { chan, branches } => Process::Branch {
            chan: chan.clone(),
            branches: branches.iter().map(|(l, q)| (l.clone(), case_normalize(q))).collect(),
        },
        Process::Case { scrutinee, branches } => Process::Case {
            scrutinee: scrutinee.clone(),
            branches: branches
                .iter()
                .map(|(l, (x, q))| (l.clone(), (x.clone(), case_normalize(q))))
                .collect(),
        },
        Process::Par(l, r) => Process::par(case_normalize(l), case_normalize(r)),
        Process::Restrict { name, ty, body } => Process::restrict(name.clone(), ty.clone(), case_normalize(body)),
        Process::SessionRestrict { ends, ty, body } => {
            Process::session_restrict(ends.0.clone(), ends.1.clone(), ty.clone(), case_normalize(body))
        }
        Process::Replicated(q) => Process::Replicated(Box::new(case_normalize(q))),
        Process::If { cond, then, otherwise } => Process::If {
            cond: cond.clone(),
            then: Box::new(case_normalize(then)),
            otherwise: Box::new(case_normalize(otherwise)),
        },
    }
}

/// `q ~> q'`: structural congruence extended with case contractions.
pub fn hook_equiv(q: &Process, q2: &Process) -> bool {
    let nq = case_normalize(q);
    crate::congruence::struct_congruent(&nq, q2) || crate::congruence::struct_congruent(&nq, &case_normalize(q2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_process;

    fn s(src: &str) -> Process {
        parse_process(src, Calculus::Session).unwrap()
    }

    fn pi(src: &str) -> Process {
        parse_process(src, Calculus::Pi).unwrap()
    }

    const EXAMPLE: &str = "new x y : ?Int.?Int.!Bool.end in \
        x?(z1).x?(z2).x!<z1==z2>.0 | y!<3>.y!<5>.y?(eq).0";

    #[test]
    fn example_system_has_one_redex() {
        let rs = redexes_session(&s(EXAMPLE), &BTreeSet::new());
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].rule, "R-Com");
    }

    #[test]
    fn example_system_runs_to_inaction() {
        let trace = run(&s(EXAMPLE), Calculus::Session, &BTreeSet::new(), 0, 10);
        assert_eq!(trace.len(), 3);
        assert!(crate::congruence::struct_congruent(&trace[2].result, &Process::Nil));
        let first = s("new x y : ?Int.!Bool.end in x?(z2).x!<3==z2>.0 | y!<5>.y?(eq).0");
        assert!(crate::congruence::struct_congruent(&trace[0].result, &first));
        match normalize(&trace[0].result) {
            Process::SessionRestrict { ty, .. } => {
                assert_eq!(ty, Some(crate::parse::parse_session_type("?Int.!Bool.end").unwrap()))
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn deadlocked_processes_are_stuck() {
        let p = s("new x1 x2 in new y1 y2 in x1?(z).y1!<z>.0 | y2?(w).x2!<w>.0");
        assert!(redexes_session(&p, &BTreeSet::new()).is_empty());
        let q = pi("new x in new y in x?().y!<>.0 | y?().x!<>.0");
        assert!(redexes_pi(&q).is_empty());
        assert!(redexes_session(&Process::Nil, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn free_session_endpoints_do_not_communicate() {
        assert!(redexes_session(&s("x!<1>.0 | x?(z).0"), &BTreeSet::new()).is_empty());
        let shared = BTreeSet::from([Name::from("x")]);
        assert_eq!(redexes_session(&s("x!<1>.0 | x?(z).0"), &shared)[0].rule, "R-StndCom");
        assert_eq!(redexes_pi(&pi("x!<1>.0 | x?(z).0")).len(), 1);
    }

    #[test]
    fn case_and_conditional() {
        let p = pi("case l_2(*) of { l_1(x) > 0, l_2(x) > a!<x>.0 }");
        let rs = redexes_pi(&p);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].kind, RedexKind::PiCase);
        assert!(crate::congruence::struct_congruent(&step(&p, &rs[0]).unwrap(), &pi("a!<*>.0")));
        let c = pi("if 0 == 0 then (a!<1>.0) else (a!<2>.0)");
        let rs = redexes_pi(&c);
        assert!(crate::congruence::struct_congruent(&step(&c, &rs[0]).unwrap(), &pi("a!<1>.0")));
    }

    #[test]
    fn label_not_offered_and_arity() {
        let p = pi("case l_3(*) of { l_1(x) > 0 }");
        let r = &redexes_pi(&p)[0];
        assert_eq!(step(&p, r), Err(ReduceError::LabelNotOffered("l_3".into())));
        let q = pi("a!<1, 2>.0 | a?(x).0");
        let r = &redexes_pi(&q)[0];
        assert!(matches!(step(&q, r), Err(ReduceError::ArityMismatch(..))));
    }

    #[test]
    fn replicated_servers_unfold() {
        let p = pi("*f?(n).r!<n>.0 | f!<1>.0 | f!<2>.0");
        let ex = explore(&p, Calculus::Pi, &BTreeSet::new(), 2);
        assert!(ex.states.iter().any(|q| crate::congruence::struct_congruent(
            q,
            &pi("*f?(n).r!<n>.0 | r!<1>.0 | r!<2>.0")
        )));
    }

    #[test]
    fn hook_contracts_cases() {
        let q = pi("case l_1(*) of { l_1(x) > a!<x>.0 }");
        assert!(hook_equiv(&q, &pi("a!<*>.0")));
        assert!(hook_equiv(&pi("a!<1>.0 | 0"), &pi("a!<1>.0")));
        assert!(!hook_equiv(&pi("a!<1>.0"), &pi("b!<1>.0")));
    }
}
