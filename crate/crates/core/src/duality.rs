//! Duality, complement, and subtyping for both type languages.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use thiserror::Error;

use crate::types::{pi_equiv, Capability, PiType, SessionType, TyVar, TypeExpr};

/// Duality of closed session types. On recursion-free types this is the
/// structural dual; under `rec` it is [`complement`].
pub fn dual(s: &SessionType) -> SessionType {
    complement(s)
}

/// Recursion-safe duality: swaps the communication structure while keeping
/// every payload equal to the type it denoted in the original, unfolded
/// protocol. Requires `s` closed.
pub fn complement(s: &SessionType) -> SessionType {
    comp(s, &BTreeMap::new())
}

/// `env` maps each enclosing recursion variable to the closed original type
/// it stands for.
fn comp(s: &SessionType, env: &BTreeMap<TyVar, SessionType>) -> SessionType {
    match s {
        SessionType::End => SessionType::End,
        SessionType::Var(x) => SessionType::Var(x.clone()),
        SessionType::Rec(x, b) => {
            let closed = close_session(s, env);
            let mut env2 = env.clone();
            env2.insert(x.clone(), closed);
            SessionType::Rec(x.clone(), Box::new(comp(b, &env2)))
        }
        SessionType::Send(t, k) => SessionType::recv(close_expr(t, env), comp(k, env)),
        SessionType::Recv(t, k) => SessionType::send(close_expr(t, env), comp(k, env)),
        SessionType::Select(m) => {
            SessionType::Branch(m.iter().map(|(l, k)| (l.clone(), comp(k, env))).collect())
        }
        SessionType::Branch(m) => {
            SessionType::Select(m.iter().map(|(l, k)| (l.clone(), comp(k, env))).collect())
        }
    }
}

fn close_session(s: &SessionType, env: &BTreeMap<TyVar, SessionType>) -> SessionType {
    let mut out = s.clone();
    for x in s.free_vars() {
        if let Some(c) = env.get(&x) {
            out = out.subst(&x, c);
        }
    }
    out
}

fn close_expr(t: &TypeExpr, env: &BTreeMap<TyVar, SessionType>) -> TypeExpr {
    match t {
        TypeExpr::Session(s) => TypeExpr::Session(close_session(s, env)),
        TypeExpr::Shared(u) => TypeExpr::Shared(Box::new(close_expr(u, env))),
        other => other.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubtypeJudgement<T> {
    pub left: T,
    pub right: T,
    pub holds: bool,
    /// Applied rules, outermost first; on failure the last entry names the
    /// failing pair.
    pub derivation: Vec<String>,
}

const TRACE_LIMIT: usize = 256;

struct Ctx<T> {
    seen: HashSet<(T, T)>,
    trace: Vec<String>,
    fuel: usize,
}

impl<T: std::hash::Hash + Eq + Clone> Ctx<T> {
    fn new(fuel: usize) -> Self {
        Ctx {
            seen: HashSet::new(),
            trace: Vec::new(),
            fuel,
        }
    }

    fn note(&mut self, s: String) {
        if self.trace.len() < TRACE_LIMIT {
            self.trace.push(s);
        }
    }

    fn fail(&mut self, s: String) -> bool {
        if self.trace.len() >= TRACE_LIMIT {
            self.trace.pop();
        }
        self.trace.push(s);
        false
    }
}

/// Coinductive session subtyping: branch is covariant in breadth (the
/// subtype offers no more labels), select contravariant in breadth, both
/// covariant in depth; send is contravariant in its payload.
pub fn session_subtype(a: &SessionType, b: &SessionType) -> SubtypeJudgement<SessionType> {
    let mut ctx = Ctx::new(10 * (a.size() + b.size()) + 16);
    let holds = s_sub(a, b, &mut ctx, 0);
    SubtypeJudgement {
        left: a.clone(),
        right: b.clone(),
        holds,
        derivation: ctx.trace,
    }
}

fn s_sub(a: &SessionType, b: &SessionType, ctx: &mut Ctx<SessionType>, depth: usize) -> bool {
    if depth > ctx.fuel {
        ctx.note("fuse: assumed by coinduction".into());
        return true;
    }
    if matches!(a, SessionType::Rec(..)) || matches!(b, SessionType::Rec(..)) {
        if !ctx.seen.insert((a.clone(), b.clone())) {
            ctx.note(format!("assumption: {a} <: {b}"));
            return true;
        }
        return s_sub(&a.head(), &b.head(), ctx, depth + 1);
    }
    match (a, b) {
        (SessionType::End, SessionType::End) => {
            ctx.note("end".into());
            true
        }
        (SessionType::Send(t1, k1), SessionType::Send(t2, k2)) => {
            ctx.note(format!("send: {a} <: {b}"));
            e_sub(t2, t1, ctx, depth + 1) && s_sub(k1, k2, ctx, depth + 1)
        }
        (SessionType::Recv(t1, k1), SessionType::Recv(t2, k2)) => {
            ctx.note(format!("recv: {a} <: {b}"));
            e_sub(t1, t2, ctx, depth + 1) && s_sub(k1, k2, ctx, depth + 1)
        }
        (SessionType::Branch(m1), SessionType::Branch(m2)) => {
            ctx.note(format!("branch: {a} <: {b}"));
            for (l, k1) in m1 {
                match m2.get(l) {
                    None => return ctx.fail(format!("branch label {l} missing on the right: {a} <: {b}")),
                    Some(k2) => {
                        if !s_sub(k1, k2, ctx, depth + 1) {
                            return false;
                        }
                    }
                }
            }
            true
        }
        (SessionType::Select(m1), SessionType::Select(m2)) => {
            ctx.note(format!("select: {a} <: {b}"));
            for (l, k2) in m2 {
                match m1.get(l) {
                    None => return ctx.fail(format!("select label {l} missing on the left: {a} <: {b}")),
                    Some(k1) => {
                        if !s_sub(k1, k2, ctx, depth + 1) {
                            return false;
                        }
                    }
                }
            }
            true
        }
        _ => ctx.fail(format!("no rule: {a} <: {b}")),
    }
}

fn e_sub(a: &TypeExpr, b: &TypeExpr, ctx: &mut Ctx<SessionType>, depth: usize) -> bool {
    match (a, b) {
        (TypeExpr::Session(s1), TypeExpr::Session(s2)) => s_sub(s1, s2, ctx, depth),
        (TypeExpr::Shared(t1), TypeExpr::Shared(t2)) => {
            e_sub(t1, t2, ctx, depth + 1) && e_sub(t2, t1, ctx, depth + 1)
        }
        (TypeExpr::Unit, TypeExpr::Unit) => true,
        (TypeExpr::Base(x), TypeExpr::Base(y)) if x == y => true,
        _ => ctx.fail(format!("no rule: {a} <: {b}")),
    }
}

pub fn type_expr_subtype(a: &TypeExpr, b: &TypeExpr) -> bool {
    let mut ctx = Ctx::new(10 * (a.size() + b.size()) + 16);
    e_sub(a, b, &mut ctx, 0)
}

/// Coinductive subtyping on pi types: input covariant, output
/// contravariant, input/output invariant, `empty[]` related only to itself,
/// variants covariant in breadth and depth, connections invariant.
/// Priorities are ignored.
pub fn pi_subtype(a: &PiType, b: &PiType) -> SubtypeJudgement<PiType> {
    let mut ctx = Ctx::new(10 * (a.size() + b.size()) + 16);
    let holds = p_sub(a, b, &mut ctx, 0);
    SubtypeJudgement {
        left: a.clone(),
        right: b.clone(),
        holds,
        derivation: ctx.trace,
    }
}

fn p_sub(a: &PiType, b: &PiType, ctx: &mut Ctx<PiType>, depth: usize) -> bool {
    if depth > ctx.fuel {
        ctx.note("fuse: assumed by coinduction".into());
        return true;
    }
    if matches!(a, PiType::Rec(..)) || matches!(b, PiType::Rec(..)) {
        if !ctx.seen.insert((a.clone(), b.clone())) {
            ctx.note(format!("assumption: {a} <= {b}"));
            return true;
        }
        return p_sub(&a.head(), &b.head(), ctx, depth + 1);
    }
    let seq = |xs: &[PiType], ys: &[PiType], ctx: &mut Ctx<PiType>, f: &dyn Fn(&PiType, &PiType, &mut Ctx<PiType>) -> bool| {
        xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| f(x, y, ctx))
    };
    match (a, b) {
        (
            PiType::Chan {
                input: i1,
                output: o1,
                payload: p1,
                ..
            },
            PiType::Chan {
                input: i2,
                output: o2,
                payload: p2,
                ..
            },
        ) => {
            if i1 != i2 || o1 != o2 {
                return ctx.fail(format!("capabilities differ: {a} <= {b}"));
            }
            let ok = match (i1, o1) {
                (Capability::Absent, Capability::Absent) => {
                    ctx.note("empty".into());
                    true
                }
                (Capability::Present, Capability::Absent) => {
                    ctx.note(format!("lin_i: {a} <= {b}"));
                    seq(p1, p2, ctx, &|x, y, c| p_sub(x, y, c, depth + 1))
                }
                (Capability::Absent, Capability::Present) => {
                    ctx.note(format!("lin_o: {a} <= {b}"));
                    seq(p2, p1, ctx, &|x, y, c| p_sub(x, y, c, depth + 1))
                }
                (Capability::Present, Capability::Present) => {
                    ctx.note(format!("lin_io: {a} <= {b}"));
                    seq(p1, p2, ctx, &|x, y, c| p_sub(x, y, c, depth + 1) && p_sub(y, x, c, depth + 1))
                }
            };
            ok || ctx.fail(format!("payload: {a} <= {b}"))
        }
        (PiType::Shared(p1), PiType::Shared(p2)) => {
            ctx.note(format!("shared: {a} <= {b}"));
            seq(p1, p2, ctx, &|x, y, c| p_sub(x, y, c, depth + 1) && p_sub(y, x, c, depth + 1))
                || ctx.fail(format!("payload: {a} <= {b}"))
        }
        (PiType::Tuple(p1), PiType::Tuple(p2)) => {
            ctx.note(format!("tuple: {a} <= {b}"));
            seq(p1, p2, ctx, &|x, y, c| p_sub(x, y, c, depth + 1))
        }
        (PiType::Variant(m1), PiType::Variant(m2)) => {
            ctx.note(format!("variant: {a} <= {b}"));
            for (l, t1) in m1 {
                match m2.get(l) {
                    None => return ctx.fail(format!("variant label {l} missing on the right: {a} <= {b}")),
                    Some(t2) => {
                        if !p_sub(t1, t2, ctx, depth + 1) {
                            return false;
                        }
                    }
                }
            }
            true
        }
        (PiType::Unit, PiType::Unit) => true,
        (PiType::Base(x), PiType::Base(y)) if x == y => true,
        (PiType::Var(x), PiType::Var(y)) if x == y => true,
        _ => ctx.fail(format!("no rule: {a} <= {b}")),
    }
}

/// Executable form of "T <: T' iff [[T]] <= [[T']]": true when both sides
/// agree.
pub fn check_subtyping_theorem(a: &SessionType, b: &SessionType) -> bool {
    let ea = crate::encode::encode_type(a);
    let eb = crate::encode::encode_type(b);
    session_subtype(a, b).holds == pi_subtype(&ea, &eb).holds
}

/// One equation of an expanded duality constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DualEq {
    Cap(Capability, Capability),
    Type(PiType, PiType),
}

impl DualEq {
    pub fn holds(&self) -> bool {
        match self {
            DualEq::Cap(a, b) => a == b,
            DualEq::Type(a, b) => pi_equiv(a, b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DualityError {
    #[error("{0} is not a linear channel type")]
    NotAChannel(PiType),
    #[error("payload arity {0} against {1}")]
    ArityMismatch(usize, usize),
}

/// `a` is the dual of `b`: the input capability of each side equals the
/// output capability of the other, and payloads are pointwise equal.
pub fn dual_constraint(a: &PiType, b: &PiType) -> Result<Vec<DualEq>, DualityError> {
    let (PiType::Chan { input: ai, output: ao, payload: ap, .. }, PiType::Chan { input: bi, output: bo, payload: bp, .. }) =
        (a.head(), b.head())
    else {
        let bad = if matches!(a.head(), PiType::Chan { .. }) { b } else { a };
        return Err(DualityError::NotAChannel(bad.clone()));
    };
    if ap.len() != bp.len() {
        return Err(DualityError::ArityMismatch(ap.len(), bp.len()));
    }
    let mut out = vec![DualEq::Cap(ai, bo), DualEq::Cap(ao, bi)];
    out.extend(ap.into_iter().zip(bp).map(|(x, y)| DualEq::Type(x, y)));
    Ok(out)
}

/// True when [`dual_constraint`] expands without error and every equation holds.
pub fn dual_constraint_holds(a: &PiType, b: &PiType) -> bool {
    dual_constraint(a, b).is_ok_and(|eqs| eqs.iter().all(DualEq::holds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_pi_type, parse_session_type};

    fn s(t: &str) -> SessionType {
        parse_session_type(t).unwrap()
    }

    fn p(t: &str) -> PiType {
        parse_pi_type(t).unwrap()
    }

    #[test]
    fn dual_constraint_expansion() {
        let a = crate::encode::encode_type(&s("?Int.?Int.!Bool.end"));
        let b = crate::encode::encode_type(&s("!Int.!Int.?Bool.end"));
        assert!(dual_constraint_holds(&a, &b));
        let t = p("lin_i[Int]");
        let eqs = dual_constraint(&t, &t).unwrap();
        assert!(!eqs[0].holds() && !eqs[1].holds());
        assert!(dual_constraint_holds(&p("empty[]"), &p("empty[]")));
        assert_eq!(
            dual_constraint(&p("lin_i[Int]"), &p("lin_o[Int, Int]")),
            Err(DualityError::ArityMismatch(1, 2))
        );
    }

    #[test]
    fn dual_of_example() {
        assert_eq!(dual(&s("?Int.?Int.!Bool.end")), s("!Int.!Int.?Bool.end"));
        assert_eq!(dual(&SessionType::End), SessionType::End);
    }

    #[test]
    fn complement_of_send_loop() {
        assert_eq!(complement(&s("rec X.!Int.X")), s("rec X.?Int.X"));
    }

    #[test]
    fn complement_keeps_payload_occurrences() {
        // the payload X denotes the original type, not its dual
        let t = s("rec X.!X.end");
        let c = complement(&t);
        assert_eq!(c, SessionType::rec("X", SessionType::recv(TypeExpr::Session(t.clone()), SessionType::End)));
    }

    #[test]
    fn branch_breadth() {
        assert!(session_subtype(&s("&{l1: end}"), &s("&{l1: end, l2: end}")).holds);
        assert!(!session_subtype(&s("&{l1: end, l2: end}"), &s("&{l1: end}")).holds);
        assert!(session_subtype(&s("+{l1: end, l2: end}"), &s("+{l1: end}")).holds);
    }

    #[test]
    fn variant_width_and_output_contravariance() {
        assert!(pi_subtype(&p("<l1: Unit>"), &p("<l1: Unit, l2: Unit>")).holds);
        assert!(pi_subtype(&p("lin_o[<l1: Unit, l2: Unit>]"), &p("lin_o[<l1: Unit>]")).holds);
        assert!(!pi_subtype(&p("lin_o[<l1: Unit>]"), &p("lin_o[<l1: Unit, l2: Unit>]")).holds);
    }

    #[test]
    fn empty_only_relates_to_itself() {
        assert!(pi_subtype(&PiType::empty(), &PiType::empty()).holds);
        assert!(!pi_subtype(&p("lin_i[]"), &PiType::empty()).holds);
    }

    #[test]
    fn recursive_subtyping_terminates() {
        let a = s("rec X.&{l: ?Int.X}");
        let b = s("rec Y.&{l: ?Int.Y, m: end}");
        assert!(session_subtype(&a, &b).holds);
        assert!(!session_subtype(&b, &a).holds);
    }

    #[test]
    fn failure_names_the_pair() {
        let j = session_subtype(&s("!Int.end"), &s("?Int.end"));
        assert!(!j.holds);
        assert!(j.derivation.last().unwrap().contains("no rule"));
    }
}
