//! Type checking for the linear pi-calculus with capability pairs.
//!
//! The checker threads a context through the process and returns what is
//! left over: an output consumes the output capability of its subject and
//! the capabilities of the channels it sends, an input consumes the input
//! capability. Parallel composition checks the left side and hands the
//! leftovers to the right side, so the two capabilities of one name can be
//! used on different sides.
//!
//! A restriction without annotation is pending until its first use as a
//! payload, where it receives both capabilities at the payload type.

use std::collections::{BTreeMap, BTreeSet};

use crate::binding::free_names;
use crate::diag::Diagnostic;
use crate::env::TypeEnv;
use crate::name::Name;
use crate::process::{Annot, BinOp, Calculus, Expr, Process};
use crate::types::{pi_equiv, Capability, PiType};

pub type PiEnv = TypeEnv<PiType>;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Slot {
    Known(PiType),
    Pending,
}

type Ctx = BTreeMap<Name, Slot>;

fn err(code: &'static str, msg: String) -> Diagnostic {
    Diagnostic::error(code, msg)
}

fn linear(t: &PiType) -> bool {
    t.head().is_linear()
}

fn caps(t: &PiType) -> Option<(Capability, Capability, Vec<PiType>)> {
    match t.head() {
        PiType::Chan {
            input,
            output,
            payload,
            ..
        } => Some((input, output, payload)),
        _ => None,
    }
}

/// `env |- p` in the linear pi-calculus.
pub fn check_pi(env: &PiEnv, p: &Process) -> Result<(), Diagnostic> {
    p.validate(Calculus::Pi).map_err(|m| err("wrong-calculus", m))?;
    let mut ctx = Ctx::new();
    for (x, t) in env.iter() {
        t.check_guarded()
            .map_err(|e| err("unguarded", format!("{x}: {e}")))?;
        ctx.insert(x.clone(), Slot::Known(t.clone()));
    }
    let left = check(ctx, p)?;
    for (x, s) in &left {
        if let Slot::Known(t) = s {
            if linear(t) {
                return Err(err("linearity", format!("{x} : {t} is not used to completion")));
            }
        }
    }
    Ok(())
}

fn known<'a>(ctx: &'a Ctx, x: &Name) -> Result<&'a PiType, Diagnostic> {
    match ctx.get(x) {
        Some(Slot::Known(t)) => Ok(t),
        Some(Slot::Pending) => Err(err(
            "annotation-required",
            format!("the type of {x} cannot be determined from its first use"),
        )),
        None => Err(err("unknown-name", format!("{x} is not in scope"))),
    }
}

/// Consumes one capability of `x` and returns the payload types.
fn use_subject(ctx: &mut Ctx, x: &Name, want_input: bool) -> Result<Vec<PiType>, Diagnostic> {
    let t = known(ctx, x)?.clone();
    let what = if want_input { "input" } else { "output" };
    match t.head() {
        PiType::Shared(ts) => Ok(ts),
        PiType::Chan {
            input,
            output,
            payload,
            ..
        } => {
            let cap = if want_input { input } else { output };
            if !cap.is_present() {
                let code = if input.is_present() || output.is_present() {
                    "capability-missing"
                } else {
                    "linearity"
                };
                return Err(err(code, format!("{x} : {t} has no {what} capability left")));
            }
            let rest = if want_input {
                PiType::chan(Capability::Absent, output, payload.clone())
            } else {
                PiType::chan(input, Capability::Absent, payload.clone())
            };
            ctx.insert(x.clone(), Slot::Known(rest));
            Ok(payload)
        }
        other => Err(err("type-mismatch", format!("{what} on {x} : {other}"))),
    }
}

/// Type of an expression built from literals, operators and names of
/// non-linear type.
fn synth(ctx: &Ctx, e: &Expr) -> Result<PiType, Diagnostic> {
    match e {
        Expr::Name(x) => Ok(known(ctx, x)?.clone()),
        Expr::Unit => Ok(PiType::Unit),
        Expr::Int(_) => Ok(PiType::int()),
        Expr::Bool(_) => Ok(PiType::bool()),
        Expr::Variant(..) => Err(err("type-mismatch", format!("cannot determine the type of {e}"))),
        Expr::BinOp(op, l, r) => {
            let (a, b) = (synth(ctx, l)?, synth(ctx, r)?);
            let (int, boolean) = (PiType::int(), PiType::bool());
            let ok = match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Lt | BinOp::Le => a == int && b == int,
                BinOp::And | BinOp::Or => a == boolean && b == boolean,
                BinOp::Eq | BinOp::Ne => a == b && matches!(a, PiType::Base(_) | PiType::Unit),
            };
            if !ok {
                return Err(err(
                    "type-mismatch",
                    format!("operator {} applied to {a} and {b}", op.symbol()),
                ));
            }
            Ok(if op.is_arithmetic() { int } else { boolean })
        }
    }
}

/// Checks that `v` can be sent at type `expected`, consuming the
/// capabilities it carries.
fn send_value(ctx: &mut Ctx, v: &Expr, expected: &PiType) -> Result<(), Diagnostic> {
    let exp = expected.head();
    match (&exp, v) {
        (PiType::Chan { .. }, Expr::Name(y)) => {
            let (ei, eo, ep) = caps(&exp).expect("channel");
            if ctx.get(y) == Some(&Slot::Pending) {
                let full = if ei.is_present() || eo.is_present() {
                    PiType::lin_io(ep.clone())
                } else {
                    PiType::empty()
                };
                ctx.insert(y.clone(), Slot::Known(full));
            }
            let t = known(ctx, y)?.clone();
            let Some((yi, yo, yp)) = caps(&t) else {
                return Err(err("type-mismatch", format!("{y} : {t} sent where {expected} is expected")));
            };
            if !ei.is_present() && !eo.is_present() {
                if yi.is_present() || yo.is_present() {
                    return Err(err("type-mismatch", format!("{y} : {t} sent where {expected} is expected")));
                }
                return Ok(());
            }
            let payload_ok = yp.len() == ep.len() && yp.iter().zip(&ep).all(|(a, b)| pi_equiv(a, b));
            if !payload_ok {
                return Err(err("type-mismatch", format!("{y} : {t} sent where {expected} is expected")));
            }
            if (ei.is_present() && !yi.is_present()) || (eo.is_present() && !yo.is_present()) {
                let code = if yi.is_present() || yo.is_present() {
                    "capability-missing"
                } else {
                    "linearity"
                };
                return Err(err(code, format!("{y} : {t} cannot provide {expected}")));
            }
            let rest = PiType::chan(
                Capability::from_bool(yi.is_present() && !ei.is_present()),
                Capability::from_bool(yo.is_present() && !eo.is_present()),
                yp,
            );
            ctx.insert(y.clone(), Slot::Known(rest));
            Ok(())
        }
        (PiType::Variant(m), Expr::Variant(l, w)) => match m.get(l) {
            Some(t) => send_value(ctx, w, t),
            None => Err(err(
                "variant-label-mismatch",
                format!("label {l} is not in {expected}"),
            )),
        },
        (PiType::Variant(_), Expr::Name(y)) => {
            let t = known(ctx, y)?.clone();
            if !pi_equiv(&t, expected) {
                return Err(err("type-mismatch", format!("{y} : {t} sent where {expected} is expected")));
            }
            ctx.insert(y.clone(), Slot::Known(PiType::Unit));
            Ok(())
        }
        _ => {
            if let Expr::Name(y) = v {
                if ctx.get(y) == Some(&Slot::Pending) {
                    // a restricted name is a channel
                    if !matches!(exp, PiType::Shared(_)) {
                        return Err(err("type-mismatch", format!("channel {y} sent where {expected} is expected")));
                    }
                    ctx.insert(y.clone(), Slot::Known(expected.clone()));
                }
            }
            let t = synth(ctx, v)?;
            if !pi_equiv(&t, expected) {
                return Err(err("type-mismatch", format!("{v} : {t} sent where {expected} is expected")));
            }
            Ok(())
        }
    }
}

/// Checks `q` with the given binders in scope, then removes them again,
/// restoring shadowed entries.
fn scoped(mut ctx: Ctx, binders: Vec<(Name, Slot)>, q: &Process) -> Result<Ctx, Diagnostic> {
    let mut saved = Vec::new();
    let mut seen = BTreeSet::new();
    for (x, s) in binders {
        if !seen.insert(x.clone()) {
            return Err(err("linearity", format!("{x} is bound twice")));
        }
        if let Some(Slot::Known(t)) = ctx.get(&x) {
            if linear(t) {
                return Err(err("linearity", format!("binding {x} hides the linear name {x} : {t}")));
            }
        }
        saved.push((x.clone(), ctx.insert(x, s)));
    }
    let mut out = check(ctx, q)?;
    for (x, old) in saved {
        if let Some(Slot::Known(t)) = out.get(&x) {
            if linear(t) {
                return Err(err("linearity", format!("{x} : {t} is not used to completion")));
            }
        }
        match old {
            Some(s) => out.insert(x, s),
            None => out.remove(&x),
        };
    }
    Ok(out)
}

fn same_leftovers(a: &Ctx, b: &Ctx) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|((x, s), (y, t))| {
            x == y
                && match (s, t) {
                    (Slot::Known(s), Slot::Known(t)) => pi_equiv(s, t),
                    (Slot::Pending, Slot::Pending) => true,
                    _ => false,
                }
        })
}

fn check(mut ctx: Ctx, p: &Process) -> Result<Ctx, Diagnostic> {
    match p {
        Process::Nil => Ok(ctx),
        Process::Output { chan, payload, cont } => {
            let ts = use_subject(&mut ctx, chan, false)?;
            if ts.len() != payload.len() {
                return Err(err(
                    "type-mismatch",
                    format!("{chan} carries {} values, {} sent", ts.len(), payload.len()),
                ));
            }
            for (v, t) in payload.iter().zip(&ts) {
                send_value(&mut ctx, v, t)?;
            }
            check(ctx, cont)
        }
        Process::Input { chan, binders, cont } => {
            let ts = use_subject(&mut ctx, chan, true)?;
            if ts.len() != binders.len() {
                return Err(err(
                    "type-mismatch",
                    format!("{chan} carries {} values, {} bound", ts.len(), binders.len()),
                ));
            }
            let bs = binders.iter().cloned().zip(ts.into_iter().map(Slot::Known)).collect();
            scoped(ctx, bs, cont)
        }
        Process::Case { scrutinee, branches } => match scrutinee {
            Expr::Variant(l, w) => {
                let Some((x, q)) = branches.get(l) else {
                    return Err(err("variant-label-mismatch", format!("no branch for label {l}")));
                };
                let t = match &**w {
                    Expr::Name(y) => {
                        let t = known(&ctx, y)?.clone();
                        if let Some((_, _, payload)) = caps(&t) {
                            ctx.insert(y.clone(), Slot::Known(PiType::chan(Capability::Absent, Capability::Absent, payload)));
                        }
                        t
                    }
                    other => synth(&ctx, other)?,
                };
                scoped(ctx, vec![(x.clone(), Slot::Known(t))], q)
            }
            _ => {
                let t = synth(&ctx, scrutinee)?;
                let PiType::Variant(m) = t.head() else {
                    return Err(err("type-mismatch", format!("case on {scrutinee} : {t}")));
                };
                if m.keys().ne(branches.keys()) {
                    return Err(err(
                        "variant-label-mismatch",
                        format!("case on {scrutinee} : {t} does not match its branches"),
                    ));
                }
                if let Expr::Name(y) = scrutinee {
                    ctx.insert(y.clone(), Slot::Known(PiType::Unit));
                }
                let mut result: Option<Ctx> = None;
                for (l, (x, q)) in branches {
                    let out = scoped(ctx.clone(), vec![(x.clone(), Slot::Known(m[l].clone()))], q)?;
                    match &result {
                        Some(r) if !same_leftovers(r, &out) => {
                            return Err(err("linearity", format!("branches of case on {scrutinee} use linear names differently")))
                        }
                        _ => result = Some(out),
                    }
                }
                Ok(result.unwrap_or(ctx))
            }
        },
        Process::Par(l, r) => {
            let mid = check(ctx, l)?;
            check(mid, r)
        }
        Process::Restrict { name, ty, body } => {
            let slot = match ty {
                Some(Annot::Pi(t)) => {
                    t.check_guarded()
                        .map_err(|e| err("unguarded", format!("{name}: {e}")))?;
                    Slot::Known(t.clone())
                }
                Some(Annot::Session(_)) => {
                    return Err(err("wrong-calculus", "session annotation in a pi process".into()))
                }
                None => Slot::Pending,
            };
            scoped(ctx, vec![(name.clone(), slot)], body)
        }
        Process::Replicated(q) => {
            let inner: Ctx = ctx
                .iter()
                .filter(|(_, s)| matches!(s, Slot::Known(t) if !linear(t)))
                .map(|(x, s)| (x.clone(), s.clone()))
                .collect();
            if let Some(x) = free_names(q).into_iter().find(|x| ctx.contains_key(x) && !inner.contains_key(x)) {
                return Err(err("linearity", format!("replicated process uses linear {x}")));
            }
            check(inner, q)?;
            Ok(ctx)
        }
        Process::If { cond, then, otherwise } => {
            let t = synth(&ctx, cond)?;
            if t != PiType::bool() {
                return Err(err("type-mismatch", format!("condition {cond} has type {t}")));
            }
            let a = check(ctx.clone(), then)?;
            let b = check(ctx, otherwise)?;
            if !same_leftovers(&a, &b) {
                return Err(err("linearity", "branches of if use linear names differently".into()));
            }
            Ok(a)
        }
        Process::Select { .. } | Process::Branch { .. } | Process::SessionRestrict { .. } => {
            Err(err("wrong-calculus", "session construct in a pi process".into()))
        }
    }
}

/// `l#[t] = li[t] (+) lo[t]`.
pub fn capability_split(t: &PiType) -> Result<(PiType, PiType), Diagnostic> {
    match t.head() {
        PiType::Chan {
            input: Capability::Present,
            output: Capability::Present,
            payload,
            ..
        } => Ok((PiType::lin_in(payload.clone()), PiType::lin_out(payload))),
        other => Err(err("linearity", format!("{other} is not splittable"))),
    }
}

/// Combination of two channel types with the same payload and disjoint
/// capabilities; `None` if undefined.
pub fn capability_join(a: &PiType, b: &PiType) -> Option<PiType> {
    let (ai, ao, ap) = caps(a)?;
    let (bi, bo, bp) = caps(b)?;
    let overlap = (ai.is_present() && bi.is_present()) || (ao.is_present() && bo.is_present());
    let a_empty = !ai.is_present() && !ao.is_present();
    let b_empty = !bi.is_present() && !bo.is_present();
    let same = a_empty || b_empty || (ap.len() == bp.len() && ap.iter().zip(&bp).all(|(x, y)| pi_equiv(x, y)));
    if overlap || !same {
        return None;
    }
    let payload = if a_empty { bp } else { ap };
    let input = Capability::from_bool(ai.is_present() || bi.is_present());
    let output = Capability::from_bool(ao.is_present() || bo.is_present());
    if !input.is_present() && !output.is_present() {
        return Some(PiType::empty());
    }
    Some(PiType::chan(input, output, payload))
}

/// Per-name counts of subject uses against the capabilities in the context.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UsageLedger {
    pub entries: BTreeMap<Name, Usage>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Usage {
    pub inputs_used: usize,
    pub outputs_used: usize,
    /// `None` for unrestricted connections.
    pub inputs_granted: Option<usize>,
    pub outputs_granted: Option<usize>,
}

impl Usage {
    pub fn balanced(&self) -> bool {
        self.inputs_granted.is_none_or(|g| g == self.inputs_used)
            && self.outputs_granted.is_none_or(|g| g == self.outputs_used)
    }
}

impl UsageLedger {
    pub fn balanced(&self) -> bool {
        self.entries.values().all(Usage::balanced)
    }
}

/// Counts syntactic subject uses of the free names of `p` typed in `env`.
pub fn usage_ledger(env: &PiEnv, p: &Process) -> UsageLedger {
    let mut ledger = UsageLedger::default();
    for (x, t) in env.iter() {
        let (gi, go) = match t.head() {
            PiType::Chan { input, output, .. } => (
                Some(input.is_present() as usize),
                Some(output.is_present() as usize),
            ),
            _ => (None, None),
        };
        let (ui, uo) = count_uses(p, x);
        ledger.entries.insert(
            x.clone(),
            Usage {
                inputs_used: ui,
                outputs_used: uo,
                inputs_granted: gi,
                outputs_granted: go,
            },
        );
    }
    ledger
}

fn count_uses(p: &Process, x: &Name) -> (usize, usize) {
    let add = |a: (usize, usize), b: (usize, usize)| (a.0 + b.0, a.1 + b.1);
    match p {
        Process::Nil => (0, 0),
        Process::Output { chan, cont, .. } => add((0, (chan == x) as usize), count_uses(cont, x)),
        Process::Input { chan, binders, cont } => {
            let here = (((chan == x) as usize), 0);
            if binders.contains(x) {
                here
            } else {
                add(here, count_uses(cont, x))
            }
        }
        Process::Select { chan, cont, .. } => add((0, (chan == x) as usize), count_uses(cont, x)),
        Process::Branch { chan, branches } => branches
            .values()
            .map(|q| count_uses(q, x))
            .max()
            .map_or((0, 0), |c| add(((chan == x) as usize, 0), c)),
        Process::Case { branches, .. } => branches
            .values()
            .filter(|(b, _)| b != x)
            .map(|(_, q)| count_uses(q, x))
            .max()
            .unwrap_or((0, 0)),
        Process::Par(l, r) => add(count_uses(l, x), count_uses(r, x)),
        Process::Restrict { name, body, .. } if name != x => count_uses(body, x),
        Process::SessionRestrict { ends, body, .. } if ends.0 != *x && ends.1 != *x => count_uses(body, x),
        Process::Restrict { .. } | Process::SessionRestrict { .. } => (0, 0),
        Process::Replicated(q) => count_uses(q, x),
        Process::If { then, otherwise, .. } => count_uses(then, x).max(count_uses(otherwise, x)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_pi_file, parse_pi_type};

    fn run(src: &str) -> Result<(), Diagnostic> {
        let f = parse_pi_file(src).unwrap();
        check_pi(&TypeEnv::from_entries(f.assumptions).unwrap(), &f.process)
    }

    #[test]
    fn restricted_names_are_not_base_values() {
        let e = run("new c : lin_io[Int] in (c?(v).0 | new d in c!<d>.0)").unwrap_err();
        assert_eq!(e.code, "type-mismatch");
    }

    #[test]
    fn nil_under_empty() {
        run("0").unwrap();
    }

    #[test]
    fn double_output_is_a_violation() {
        let src = "assume s : lin_o[Unit]; s!<*>.0 | s!<*>.0";
        let d = run(src).unwrap_err();
        assert_eq!(d.code, "linearity");
        let f = parse_pi_file(src).unwrap();
        let ledger = usage_ledger(&TypeEnv::from_entries(f.assumptions).unwrap(), &f.process);
        assert_eq!(ledger.entries[&Name::from("s")].outputs_used, 2);
        assert!(!ledger.balanced());
    }

    #[test]
    fn capabilities_split_across_par() {
        run("new c : lin_io[Int] in c!<1>.0 | c?(x).0").unwrap();
        assert!(run("new c : lin_io[Int] in c!<1>.0").is_err());
    }

    #[test]
    fn pending_restriction_takes_payload_type() {
        run("assume s : lin_o[Int, lin_i[Bool]]; new c in s!<1, c>.c!<true>.0").unwrap();
        let d = run("assume s : lin_o[Int, lin_i[Bool]]; new c in s!<1, c>.0").unwrap_err();
        assert_eq!(d.code, "linearity");
    }

    #[test]
    fn case_needs_exact_labels() {
        run("assume s : lin_i[<a: Int, b: Bool>]; s?(y).case y of { a(n) > 0, b(m) > 0 }").unwrap();
        let d = run("assume s : lin_i[<a: Int, b: Bool>]; s?(y).case y of { a(n) > 0 }").unwrap_err();
        assert_eq!(d.code, "variant-label-mismatch");
    }

    #[test]
    fn replicated_bodies_are_unrestricted() {
        run("assume a : #[Int]; *a?(n).0").unwrap();
        let d = run("assume a : #[Int]; assume s : lin_o[Int]; *a?(n).s!<n>.0").unwrap_err();
        assert_eq!(d.code, "linearity");
    }

    #[test]
    fn split_and_join() {
        let t = parse_pi_type("lin_io[Int]").unwrap();
        let (i, o) = capability_split(&t).unwrap();
        assert_eq!(i, PiType::lin_in(vec![PiType::int()]));
        assert_eq!(o, PiType::lin_out(vec![PiType::int()]));
        assert_eq!(capability_join(&i, &o), Some(t));
        assert!(capability_split(&PiType::empty()).is_err());
    }

    fn encoded(src: &str) -> Result<(), Diagnostic> {
        use crate::encode::{encode_env, encode_process, shared_names};
        let f = crate::parse::parse_session_file(src).unwrap();
        let env = TypeEnv::from_entries(f.assumptions).unwrap();
        let p = crate::infer::annotate(&env, &f.process)?;
        let none = BTreeMap::new();
        let e = encode_process(&p, &none, &shared_names(&env), &env.names()).unwrap();
        check_pi(&encode_env(&env, &none).unwrap(), &e.process)
    }

    #[test]
    fn encoded_example_system() {
        encoded(
            "new x y : ?Int.?Int.!Bool.end in \
             x?(z1).x?(z2).x!<z1==z2>.0 | y!<3>.y!<5>.y?(eq).0",
        )
        .unwrap();
        encoded("new x y in x <| a.x!<1>.0 | y |> {a: y?(n).0, b: 0}").unwrap();
        encoded("new a b : ?(!Int.end).end in new c d : !Int.end in \
                 (b!<c>.0 | a?(e).e!<1>.0) | d?(v).0")
        .unwrap();
        encoded("new fact : #Int in *fact?(n).0 | fact!<3>.0").unwrap();
        assert!(encoded("assume x : !Int.end; x!<true>.0").is_err());
    }
}
