//! Type checking for the session pi-calculus, `Gamma |- P`.

use std::collections::BTreeSet;

use crate::binding::free_names;
use crate::diag::Diagnostic;
use crate::duality::complement;
use crate::env::{split_env, Linearity, TypeEnv};
use crate::name::Name;
use crate::process::{Annot, BinOp, Calculus, Expr, Process};
use crate::types::{type_expr_equiv, SessionType, TypeExpr};

pub type SessionEnv = TypeEnv<TypeExpr>;

/// Checks `env |- p`. Restrictions without a type annotation are annotated
/// by inference first.
pub fn check_session(env: &SessionEnv, p: &Process) -> Result<(), Diagnostic> {
    if fully_annotated(p) {
        return check_annotated(env, p);
    }
    let annotated = crate::infer::annotate(env, p)?;
    check_annotated(env, &annotated)
}

fn fully_annotated(p: &Process) -> bool {
    match p {
        Process::SessionRestrict { ty: None, .. } | Process::Restrict { ty: None, .. } => false,
        Process::Nil => true,
        Process::Output { cont, .. } | Process::Input { cont, .. } | Process::Select { cont, .. } => {
            fully_annotated(cont)
        }
        Process::Branch { branches, .. } => branches.values().all(fully_annotated),
        Process::Case { branches, .. } => branches.values().all(|(_, q)| fully_annotated(q)),
        Process::Par(l, r) | Process::If { then: l, otherwise: r, .. } => {
            fully_annotated(l) && fully_annotated(r)
        }
        Process::SessionRestrict { body, .. } | Process::Restrict { body, .. } => fully_annotated(body),
        Process::Replicated(q) => fully_annotated(q),
    }
}

/// Checks a process in which every restriction carries an annotation.
pub fn check_annotated(env: &SessionEnv, p: &Process) -> Result<(), Diagnostic> {
    p.validate(Calculus::Session)
        .map_err(|m| Diagnostic::error("wrong-calculus", m))?;
    for (x, t) in env.iter() {
        t.check_guarded()
            .map_err(|e| Diagnostic::error("unguarded", format!("{x}: {e}")))?;
    }
    let shared = env
        .iter()
        .filter(|(_, t)| matches!(t, TypeExpr::Shared(_)))
        .map(|(x, _)| x.clone())
        .collect();
    check(env.clone(), p, &shared)
}

fn mismatch(msg: String) -> Diagnostic {
    Diagnostic::error("type-mismatch", msg)
}

fn lookup<'a>(env: &'a SessionEnv, x: &Name) -> Result<&'a TypeExpr, Diagnostic> {
    env.get(x)
        .ok_or_else(|| Diagnostic::error("unknown-name", format!("{x} is not in scope")))
}

/// Synthesises the type of a ground expression. Names inside operators must
/// have base type.
pub fn expr_type(env: &SessionEnv, e: &Expr) -> Result<TypeExpr, Diagnostic> {
    match e {
        Expr::Name(x) => Ok(lookup(env, x)?.clone()),
        Expr::Unit => Ok(TypeExpr::Unit),
        Expr::Int(_) => Ok(TypeExpr::int()),
        Expr::Bool(_) => Ok(TypeExpr::bool()),
        Expr::Variant(..) => Err(Diagnostic::error("wrong-calculus", "variant value in a session process")),
        Expr::BinOp(op, l, r) => {
            let (lt, rt) = (expr_type(env, l)?, expr_type(env, r)?);
            binop_type(*op, &lt, &rt).ok_or_else(|| {
                mismatch(format!("operator {} applied to {lt} and {rt}", op.symbol()))
            })
        }
    }
}

fn binop_type(op: BinOp, l: &TypeExpr, r: &TypeExpr) -> Option<TypeExpr> {
    let int = TypeExpr::int();
    let boolean = TypeExpr::bool();
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul if *l == int && *r == int => Some(int),
        BinOp::Lt | BinOp::Le if *l == int && *r == int => Some(boolean),
        BinOp::Eq | BinOp::Ne if l == r && matches!(l, TypeExpr::Base(_) | TypeExpr::Unit) => Some(boolean),
        BinOp::And | BinOp::Or if *l == boolean && *r == boolean => Some(boolean),
        _ => None,
    }
}

/// Checks that `v` has type `expected` and removes a linear name sent as
/// `v` from the context.
fn send_value(env: &mut SessionEnv, v: &Expr, expected: &TypeExpr) -> Result<(), Diagnostic> {
    let actual = expr_type(env, v)?;
    if !type_expr_equiv(&actual, expected) {
        return Err(mismatch(format!("{v} has type {actual}, expected {expected}")));
    }
    if let Expr::Name(x) = v {
        if actual.is_linear() {
            env.remove(x);
        }
    }
    Ok(())
}

/// Adds `x : t`; shadowing a linear entry would lose it.
fn bind(env: &mut SessionEnv, x: &Name, t: TypeExpr) -> Result<(), Diagnostic> {
    if let Some(old) = env.get(x) {
        if old.is_linear() {
            return Err(Diagnostic::error(
                "linearity",
                format!("binding {x} hides the linear name {x} : {old}"),
            ));
        }
    }
    env.insert(x.clone(), t);
    Ok(())
}

fn session_of(env: &SessionEnv, x: &Name) -> Result<SessionType, Diagnostic> {
    match lookup(env, x)? {
        TypeExpr::Session(s) => Ok(s.head()),
        other => Err(mismatch(format!("{x} : {other} is not a session endpoint"))),
    }
}

fn check(mut env: SessionEnv, p: &Process, shared: &BTreeSet<Name>) -> Result<(), Diagnostic> {
    match p {
        Process::Nil => {
            if let Some(x) = env.linear_names().into_iter().next() {
                return Err(Diagnostic::error(
                    "linearity",
                    format!("{x} : {} is not used to completion", env.get(&x).unwrap()),
                ));
            }
            Ok(())
        }
        Process::Output { chan, payload, cont } => {
            let v = &payload[0];
            if let Some(TypeExpr::Shared(t)) = env.get(chan).cloned() {
                if !shared.contains(chan) {
                    return Err(mismatch(format!("received connection {chan} cannot be used as a subject")));
                }
                send_value(&mut env, v, &t)?;
                return check(env, cont, shared);
            }
            match session_of(&env, chan)? {
                SessionType::Send(t, s) => {
                    if v.as_name() == Some(chan) {
                        return Err(Diagnostic::error("linearity", format!("{chan} sent over itself")));
                    }
                    send_value(&mut env, v, &t)?;
                    env.insert(chan.clone(), TypeExpr::Session(*s));
                    check(env, cont, shared)
                }
                other => Err(mismatch(format!("output on {chan} : {other}"))),
            }
        }
        Process::Input { chan, binders, cont } => {
            let y = &binders[0];
            if let Some(TypeExpr::Shared(t)) = env.get(chan).cloned() {
                if !shared.contains(chan) {
                    return Err(mismatch(format!("received connection {chan} cannot be used as a subject")));
                }
                bind(&mut env, y, *t)?;
                let inner: BTreeSet<Name> = shared.iter().filter(|s| *s != y).cloned().collect();
                return check(env, cont, &inner);
            }
            match session_of(&env, chan)? {
                SessionType::Recv(t, s) => {
                    env.insert(chan.clone(), TypeExpr::Session(*s));
                    if y == chan {
                        return Err(Diagnostic::error("linearity", format!("input on {chan} rebinds {chan}")));
                    }
                    bind(&mut env, y, *t)?;
                    let inner: BTreeSet<Name> = shared.iter().filter(|s| *s != y).cloned().collect();
                    check(env, cont, &inner)
                }
                other => Err(mismatch(format!("input on {chan} : {other}"))),
            }
        }
        Process::Select { chan, label, cont } => match session_of(&env, chan)? {
            SessionType::Select(m) => match m.get(label) {
                Some(s) => {
                    env.insert(chan.clone(), TypeExpr::Session(s.clone()));
                    check(env, cont, shared)
                }
                None => Err(mismatch(format!("{chan} does not offer label {label}"))),
            },
            other => Err(mismatch(format!("selection on {chan} : {other}"))),
        },
        Process::Branch { chan, branches } => match session_of(&env, chan)? {
            SessionType::Branch(m) => {
                if m.keys().ne(branches.keys()) {
                    return Err(mismatch(format!(
                        "branching on {chan} handles {{{}}} but the type offers {{{}}}",
                        branches.keys().map(|l| l.to_string()).collect::<Vec<_>>().join(", "),
                        m.keys().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
                    )));
                }
                for (l, q) in branches {
                    let mut e = env.clone();
                    e.insert(chan.clone(), TypeExpr::Session(m[l].clone()));
                    check(e, q, shared)?;
                }
                Ok(())
            }
            other => Err(mismatch(format!("branching on {chan} : {other}"))),
        },
        Process::Case { .. } => Err(Diagnostic::error("wrong-calculus", "case in a session process")),
        Process::Par(l, r) => {
            let fl = free_names(l);
            let fr = free_names(r);
            let split = split_env(&env, &fl, &fr)?;
            check(split.left, l, shared)?;
            check(split.right, r, shared)
        }
        Process::SessionRestrict { ends, ty, body } => {
            let t = ty.as_ref().ok_or_else(|| {
                Diagnostic::error("annotation-required", format!("session restriction of {} {}", ends.0, ends.1))
            })?;
            if !t.is_closed() {
                return Err(mismatch(format!("restriction type {t} is not closed")));
            }
            bind(&mut env, &ends.0, TypeExpr::Session(t.clone()))?;
            bind(&mut env, &ends.1, TypeExpr::Session(complement(t)))?;
            let inner: BTreeSet<Name> = shared
                .iter()
                .filter(|s| **s != ends.0 && **s != ends.1)
                .cloned()
                .collect();
            check(env, body, &inner)
        }
        Process::Restrict { name, ty, body } => {
            let t = match ty {
                Some(Annot::Session(t @ TypeExpr::Shared(_))) => t.clone(),
                Some(other) => return Err(mismatch(format!("channel restriction of {name} at {other}"))),
                None => {
                    return Err(Diagnostic::error(
                        "annotation-required",
                        format!("channel restriction of {name}"),
                    ))
                }
            };
            bind(&mut env, name, t)?;
            let mut inner = shared.clone();
            inner.insert(name.clone());
            check(env, body, &inner)
        }
        Process::Replicated(q) => {
            if let Some(x) = env.linear_names().into_iter().next() {
                return Err(Diagnostic::error(
                    "linearity",
                    format!("replicated process in the scope of linear {x}"),
                ));
            }
            check(env, q, shared)
        }
        Process::If { cond, then, otherwise } => {
            let t = expr_type(&env, cond)?;
            if t != TypeExpr::bool() {
                return Err(mismatch(format!("condition {cond} has type {t}")));
            }
            check(env.clone(), then, shared)?;
            check(env, otherwise, shared)
        }
    }
}

/// A reduct that fails to type-check.
#[derive(Clone, Debug)]
pub struct CounterExample {
    pub process: Process,
    pub depth: usize,
    pub diagnostic: Diagnostic,
}

const MAX_FLIPPED: usize = 10;

/// Typability with every session restriction annotation read as the
/// unordered pair `{T, dual T}`: succeeds if some choice of orientations
/// checks. This is the judgement the encoding can see, since it maps both
/// endpoints to one channel.
pub fn check_session_unoriented(env: &SessionEnv, p: &Process) -> Result<(), Diagnostic> {
    orient(env, p).map(|_| ())
}

/// A fully annotated variant of `p`, with restriction endpoints possibly
/// swapped, that checks; otherwise the error for `p` as written.
pub fn orient(env: &SessionEnv, p: &Process) -> Result<Process, Diagnostic> {
    let attempt = |q: &Process| {
        let q = if fully_annotated(q) {
            q.clone()
        } else {
            crate::infer::annotate(env, q)?
        };
        check_annotated(env, &q)?;
        Ok::<_, Diagnostic>(q)
    };
    let first = attempt(p);
    let k = count_annotated(p);
    if first.is_ok() || k == 0 || k > MAX_FLIPPED {
        return first;
    }
    for mask in 1u32..(1 << k) {
        let mut i = 0;
        if let Ok(q) = attempt(&flip(p, mask, &mut i)) {
            return Ok(q);
        }
    }
    first
}

fn count_annotated(p: &Process) -> usize {
    match p {
        Process::Nil => 0,
        Process::SessionRestrict { ty, body, .. } => ty.is_some() as usize + count_annotated(body),
        Process::Output { cont, .. } | Process::Input { cont, .. } | Process::Select { cont, .. } => {
            count_annotated(cont)
        }
        Process::Branch { branches, .. } => branches.values().map(count_annotated).sum(),
        Process::Case { branches, .. } => branches.values().map(|(_, q)| count_annotated(q)).sum(),
        Process::Par(l, r) | Process::If { then: l, otherwise: r, .. } => count_annotated(l) + count_annotated(r),
        Process::Restrict { body, .. } => count_annotated(body),
        Process::Replicated(q) => count_annotated(q),
    }
}

fn flip(p: &Process, mask: u32, i: &mut usize) -> Process {
    match p {
        Process::SessionRestrict { ends, ty, body } => {
            let ends = if ty.is_some() {
                let bit = mask & (1 << *i) != 0;
                *i += 1;
                if bit {
                    (ends.1.clone(), ends.0.clone())
                } else {
                    ends.clone()
                }
            } else {
                ends.clone()
            };
            Process::SessionRestrict {
                ends,
                ty: ty.clone(),
                body: Box::new(flip(body, mask, i)),
            }
        }
        Process::Nil => Process::Nil,
        Process::Output { chan, payload, cont } => Process::Output {
            chan: chan.clone(),
            payload: payload.clone(),
            cont: Box::new(flip(cont, mask, i)),
        },
        Process::Input { chan, binders, cont } => Process::Input {
            chan: chan.clone(),
            binders: binders.clone(),
            cont: Box::new(flip(cont, mask, i)),
        },
        Process::Select { chan, label, cont } => Process::Select {
            chan: chan.clone(),
            label: label.clone(),
            cont: Box::new(flip(cont, mask, i)),
        },
        Process::Branch { chan, branches } => Process::Branch {
            chan: chan.clone(),
            branches: branches.iter().map(|(l, q)| (l.clone(), flip(q, mask, i))).collect(),
        },
        Process::Case { scrutinee, branches } => Process::Case {
            scrutinee: scrutinee.clone(),
            branches: branches.iter().map(|(l, (x, q))| (l.clone(), (x.clone(), flip(q, mask, i)))).collect(),
        },
        Process::Par(l, r) => {
            let l = Box::new(flip(l, mask, i));
            Process::Par(l, Box::new(flip(r, mask, i)))
        }
        Process::If { cond, then, otherwise } => {
            let then = Box::new(flip(then, mask, i));
            Process::If {
                cond: cond.clone(),
                then,
                otherwise: Box::new(flip(otherwise, mask, i)),
            }
        }
        Process::Restrict { name, ty, body } => Process::Restrict {
            name: name.clone(),
            ty: ty.clone(),
            body: Box::new(flip(body, mask, i)),
        },
        Process::Replicated(q) => Process::Replicated(Box::new(flip(q, mask, i))),
    }
}

/// Re-checks every process reachable from `p` in at most `steps` steps.
pub fn session_subject_reduction_probe(env: &SessionEnv, p: &Process, steps: usize) -> Result<(), CounterExample> {
    let p = crate::infer::annotate(env, p).map_err(|d| CounterExample {
        process: p.clone(),
        depth: 0,
        diagnostic: d,
    })?;
    let shared = crate::encode::shared_names(env);
    let ex = crate::reduce::explore(&p, Calculus::Session, &shared, steps);
    for (q, depth) in ex.states.iter().zip(&ex.depth_of) {
        if let Err(d) = check_session(env, q) {
            return Err(CounterExample {
                process: q.clone(),
                depth: *depth,
                diagnostic: d,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_process, parse_session_file};

    fn ok(src: &str) -> Result<(), Diagnostic> {
        let f = parse_session_file(src).unwrap();
        check_session(&TypeEnv::from_entries(f.assumptions).unwrap(), &f.process)
    }

    #[test]
    fn annotation_orientation_is_ignored_when_unoriented() {
        let f = parse_session_file("new x y : !Int.end in x?(n).0 | y!<1>.0").unwrap();
        let env = TypeEnv::new();
        assert!(check_session(&env, &f.process).is_err());
        assert!(check_session_unoriented(&env, &f.process).is_ok());
        let g = parse_session_file("new x y : !Int.end in x!<true>.0 | y?(n).0").unwrap();
        assert!(check_session_unoriented(&env, &g.process).is_err());
    }

    #[test]
    fn example_system() {
        ok("new x y : ?Int.?Int.!Bool.end in \
            x?(z1).x?(z2).x!<z1==z2>.0 | y!<3>.y!<5>.y?(eq).0")
        .unwrap();
    }

    #[test]
    fn deadlocked_but_typable() {
        ok("new x1 x2 in new y1 y2 in x1?(z).y1!<z>.0 | y2?(w).x2!<w>.0").unwrap();
    }

    #[test]
    fn subject_reduction_on_example() {
        let f = parse_session_file(
            "new x y : ?Int.?Int.!Bool.end in x?(z1).x?(z2).x!<z1==z2>.0 | y!<3>.y!<5>.y?(eq).0",
        )
        .unwrap();
        session_subject_reduction_probe(&TypeEnv::new(), &f.process, 4).unwrap();
        session_subject_reduction_probe(&TypeEnv::new(), &Process::Nil, 3).unwrap();
    }

    #[test]
    fn inaction_under_empty_env() {
        ok("0").unwrap();
    }

    #[test]
    fn crossed_sessions_are_typable() {
        ok("new x1 x2 : ?Int.end in new y1 y2 : !Int.end in \
            x1?(z).y1!<z>.0 | y2?(w).x2!<w>.0")
        .unwrap();
    }

    #[test]
    fn unused_endpoint_is_rejected() {
        let d = ok("assume x : !Int.end; 0").unwrap_err();
        assert_eq!(d.code, "linearity");
    }

    #[test]
    fn weakening_only_for_unrestricted() {
        ok("assume n : Int; 0").unwrap();
        assert!(ok("assume x : ?Int.end; 0").is_err());
    }

    #[test]
    fn endpoint_on_both_sides_overlaps() {
        let d = ok("assume x : !Int.end; x!<1>.0 | x!<1>.0").unwrap_err();
        assert_eq!(d.code, "linear-overlap");
    }

    #[test]
    fn wrong_payload() {
        let d = ok("assume x : !Int.end; x!<true>.0").unwrap_err();
        assert_eq!(d.code, "type-mismatch");
    }

    #[test]
    fn delegation() {
        ok("new a b : !(!Int.end).end in new c d : !Int.end in \
            a!<c>.0 | b?(e).e!<1>.0 | d?(v).0")
        .unwrap();
        ok("new a b : !(!Int.end).end in new c d : !Int.end in \
            a!<c>.0 | b?(e).e!<1>.0")
        .unwrap_err();
        ok("new a b : ?(!Int.end).end in new c d : !Int.end in \
            (b!<c>.0 | a?(e).e!<1>.0) | d?(v).0")
        .unwrap();
    }

    #[test]
    fn factorial_style_replication() {
        ok("new fact : #Int in *fact?(n).0 | fact!<3>.0").unwrap();
        let p = parse_process("*x?(z).0", Calculus::Session).unwrap();
        let env = TypeEnv::from_entries([("x".into(), TypeExpr::Session(SessionType::recv(TypeExpr::int(), SessionType::End)))]).unwrap();
        assert!(check_annotated(&env, &p).is_err());
    }
}
