//! Free and bound names, capture-avoiding substitution, alpha-equivalence.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::name::{FreshSupply, Name};
use crate::process::{Expr, Process};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("cannot substitute non-name value for {0} in subject position")]
    NonNameSubject(Name),
}

pub fn free_names(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_free(p, &mut Vec::new(), &mut out);
    out
}

pub fn expr_names(e: &Expr) -> BTreeSet<Name> {
    let mut v = Vec::new();
    e.names(&mut v);
    v.into_iter().collect()
}

fn note(n: &Name, bound: &[Name], out: &mut BTreeSet<Name>) {
    if !bound.contains(n) {
        out.insert(n.clone());
    }
}

fn note_expr(e: &Expr, bound: &[Name], out: &mut BTreeSet<Name>) {
    let mut v = Vec::new();
    e.names(&mut v);
    for n in &v {
        note(n, bound, out);
    }
}

fn collect_free(p: &Process, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match p {
        Process::Nil => {}
        Process::Output { chan, payload, cont } => {
            note(chan, bound, out);
            payload.iter().for_each(|e| note_expr(e, bound, out));
            collect_free(cont, bound, out);
        }
        Process::Input { chan, binders, cont } => {
            note(chan, bound, out);
            let k = bound.len();
            bound.extend(binders.iter().cloned());
            collect_free(cont, bound, out);
            bound.truncate(k);
        }
        Process::Select { chan, cont, .. } => {
            note(chan, bound, out);
            collect_free(cont, bound, out);
        }
        Process::Branch { chan, branches } => {
            note(chan, bound, out);
            branches.values().for_each(|q| collect_free(q, bound, out));
        }
        Process::Case { scrutinee, branches } => {
            note_expr(scrutinee, bound, out);
            for (x, q) in branches.values() {
                bound.push(x.clone());
                collect_free(q, bound, out);
                bound.pop();
            }
        }
        Process::Par(l, r) => {
            collect_free(l, bound, out);
            collect_free(r, bound, out);
        }
        Process::Restrict { name, body, .. } => {
            bound.push(name.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        Process::SessionRestrict { ends, body, .. } => {
            bound.push(ends.0.clone());
            bound.push(ends.1.clone());
            collect_free(body, bound, out);
            bound.truncate(bound.len() - 2);
        }
        Process::Replicated(q) => collect_free(q, bound, out),
        Process::If { cond, then, otherwise } => {
            note_expr(cond, bound, out);
            collect_free(then, bound, out);
            collect_free(otherwise, bound, out);
        }
    }
}

/// Every name occurring in `p`, free or bound.
pub fn all_names(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_all(p, &mut out);
    out
}

fn collect_all(p: &Process, out: &mut BTreeSet<Name>) {
    let add_expr = |e: &Expr, out: &mut BTreeSet<Name>| {
        let mut v = Vec::new();
        e.names(&mut v);
        out.extend(v);
    };
    match p {
        Process::Nil => {}
        Process::Output { chan, payload, cont } => {
            out.insert(chan.clone());
            payload.iter().for_each(|e| add_expr(e, out));
            collect_all(cont, out);
        }
        Process::Input { chan, binders, cont } => {
            out.insert(chan.clone());
            out.extend(binders.iter().cloned());
            collect_all(cont, out);
        }
        Process::Select { chan, cont, .. } => {
            out.insert(chan.clone());
            collect_all(cont, out);
        }
        Process::Branch { chan, branches } => {
            out.insert(chan.clone());
            branches.values().for_each(|q| collect_all(q, out));
        }
        Process::Case { scrutinee, branches } => {
            add_expr(scrutinee, out);
            for (x, q) in branches.values() {
                out.insert(x.clone());
                collect_all(q, out);
            }
        }
        Process::Par(l, r) => {
            collect_all(l, out);
            collect_all(r, out);
        }
        Process::Restrict { name, body, .. } => {
            out.insert(name.clone());
            collect_all(body, out);
        }
        Process::SessionRestrict { ends, body, .. } => {
            out.insert(ends.0.clone());
            out.insert(ends.1.clone());
            collect_all(body, out);
        }
        Process::Replicated(q) => collect_all(q, out),
        Process::If { cond, then, otherwise } => {
            add_expr(cond, out);
            collect_all(then, out);
            collect_all(otherwise, out);
        }
    }
}

pub fn bound_names(p: &Process) -> BTreeSet<Name> {
    let mut bound = BTreeSet::new();
    collect_binders(p, &mut bound);
    bound
}

fn collect_binders(p: &Process, out: &mut BTreeSet<Name>) {
    match p {
        Process::Nil => {}
        Process::Output { cont, .. } | Process::Select { cont, .. } => collect_binders(cont, out),
        Process::Input { binders, cont, .. } => {
            out.extend(binders.iter().cloned());
            collect_binders(cont, out);
        }
        Process::Branch { branches, .. } => branches.values().for_each(|q| collect_binders(q, out)),
        Process::Case { branches, .. } => {
            for (x, q) in branches.values() {
                out.insert(x.clone());
                collect_binders(q, out);
            }
        }
        Process::Par(l, r) => {
            collect_binders(l, out);
            collect_binders(r, out);
        }
        Process::Restrict { name, body, .. } => {
            out.insert(name.clone());
            collect_binders(body, out);
        }
        Process::SessionRestrict { ends, body, .. } => {
            out.insert(ends.0.clone());
            out.insert(ends.1.clone());
            collect_binders(body, out);
        }
        Process::Replicated(q) => collect_binders(q, out),
        Process::If { then, otherwise, .. } => {
            collect_binders(then, out);
            collect_binders(otherwise, out);
        }
    }
}

pub fn subst_expr(e: &Expr, map: &BTreeMap<Name, Expr>) -> Expr {
    match e {
        Expr::Name(n) => map.get(n).cloned().unwrap_or_else(|| e.clone()),
        Expr::Variant(l, v) => Expr::Variant(l.clone(), Box::new(subst_expr(v, map))),
        Expr::BinOp(op, l, r) => Expr::binop(*op, subst_expr(l, map), subst_expr(r, map)),
        _ => e.clone(),
    }
}

/// `p[v/x]`
pub fn substitute(p: &Process, v: &Expr, x: &Name) -> Result<Process, SubstError> {
    substitute_many(p, &BTreeMap::from([(x.clone(), v.clone())]))
}

/// Simultaneous capture-avoiding substitution.
pub fn substitute_many(p: &Process, map: &BTreeMap<Name, Expr>) -> Result<Process, SubstError> {
    let mut avoid = all_names(p);
    for (k, v) in map {
        avoid.insert(k.clone());
        avoid.extend(expr_names(v));
    }
    let mut supply = FreshSupply::new("_a");
    supply.avoid(avoid);
    Subst { supply }.go(p, map)
}

/// Renames free occurrences of names (a substitution of names for names).
pub fn rename(p: &Process, map: &BTreeMap<Name, Name>) -> Process {
    let m: BTreeMap<Name, Expr> = map.iter().map(|(k, v)| (k.clone(), Expr::Name(v.clone()))).collect();
    substitute_many(p, &m).expect("names are always valid subjects")
}

/// Applies `f` to every name occurrence, binders included. Not capture
/// avoiding.
pub fn map_names(p: &Process, f: &dyn Fn(&Name) -> Name) -> Process {
    fn ex(e: &Expr, f: &dyn Fn(&Name) -> Name) -> Expr {
        match e {
            Expr::Name(x) => Expr::Name(f(x)),
            Expr::Variant(l, v) => Expr::Variant(l.clone(), Box::new(ex(v, f))),
            Expr::BinOp(o, l, r) => Expr::binop(*o, ex(l, f), ex(r, f)),
            other => other.clone(),
        }
    }
    let k = |q: &Process| Box::new(map_names(q, f));
    match p {
        Process::Nil => Process::Nil,
        Process::Output { chan, payload, cont } => Process::Output {
            chan: f(chan),
            payload: payload.iter().map(|e| ex(e, f)).collect(),
            cont: k(cont),
        },
        Process::Input { chan, binders, cont } => Process::Input {
            chan: f(chan),
            binders: binders.iter().map(f).collect(),
            cont: k(cont),
        },
        Process::Select { chan, label, cont } => Process::Select {
            chan: f(chan),
            label: label.clone(),
            cont: k(cont),
        },
        Process::Branch { chan, branches } => Process::Branch {
            chan: f(chan),
            branches: branches.iter().map(|(l, q)| (l.clone(), map_names(q, f))).collect(),
        },
        Process::Case { scrutinee, branches } => Process::Case {
            scrutinee: ex(scrutinee, f),
            branches: branches
                .iter()
                .map(|(l, (x, q))| (l.clone(), (f(x), map_names(q, f))))
                .collect(),
        },
        Process::Par(l, r) => Process::Par(k(l), k(r)),
        Process::Restrict { name, ty, body } => Process::Restrict {
            name: f(name),
            ty: ty.clone(),
            body: k(body),
        },
        Process::SessionRestrict { ends, ty, body } => Process::SessionRestrict {
            ends: (f(&ends.0), f(&ends.1)),
            ty: ty.clone(),
            body: k(body),
        },
        Process::Replicated(q) => Process::Replicated(k(q)),
        Process::If { cond, then, otherwise } => Process::If {
            cond: ex(cond, f),
            then: k(then),
            otherwise: k(otherwise),
        },
    }
}

struct Subst {
    supply: FreshSupply,
}

impl Subst {
    fn subject(&self, n: &Name, map: &BTreeMap<Name, Expr>) -> Result<Name, SubstError> {
        match map.get(n) {
            None => Ok(n.clone()),
            Some(Expr::Name(m)) => Ok(m.clone()),
            Some(_) => Err(SubstError::NonNameSubject(n.clone())),
        }
    }

    /// Removes shadowed keys and renames `binders` that would capture a name
    /// of the substituted values. Returns the new binders and the map to use
    /// under them.
    fn enter(
        &mut self,
        binders: &[Name],
        body_free: &BTreeSet<Name>,
        map: &BTreeMap<Name, Expr>,
    ) -> (Vec<Name>, BTreeMap<Name, Expr>) {
        let mut inner: BTreeMap<Name, Expr> = map
            .iter()
            .filter(|(k, _)| !binders.contains(k) && body_free.contains(*k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut captured = BTreeSet::new();
        for v in inner.values() {
            captured.extend(expr_names(v));
        }
        let mut out = Vec::with_capacity(binders.len());
        for b in binders {
            if captured.contains(b) {
                let fresh = self.supply.prime(b);
                inner.insert(b.clone(), Expr::Name(fresh.clone()));
                out.push(fresh);
            } else {
                out.push(b.clone());
            }
        }
        (out, inner)
    }

    fn go(&mut self, p: &Process, map: &BTreeMap<Name, Expr>) -> Result<Process, SubstError> {
        if map.is_empty() {
            return Ok(p.clone());
        }
        Ok(match p {
            Process::Nil => Process::Nil,
            Process::Output { chan, payload, cont } => Process::Output {
                chan: self.subject(chan, map)?,
                payload: payload.iter().map(|e| subst_expr(e, map)).collect(),
                cont: Box::new(self.go(cont, map)?),
            },
            Process::Input { chan, binders, cont } => {
                let (bs, inner) = self.enter(binders, &free_names(cont), map);
                Process::Input {
                    chan: self.subject(chan, map)?,
                    binders: bs,
                    cont: Box::new(self.go(cont, &inner)?),
                }
            }
            Process::Select { chan, label, cont } => Process::Select {
                chan: self.subject(chan, map)?,
                label: label.clone(),
                cont: Box::new(self.go(cont, map)?),
            },
            Process::Branch { chan, branches } => Process::Branch {
                chan: self.subject(chan, map)?,
                branches: branches
                    .iter()
                    .map(|(l, q)| Ok((l.clone(), self.go(q, map)?)))
                    .collect::<Result<_, _>>()?,
            },
            Process::Case { scrutinee, branches } => Process::Case {
                scrutinee: subst_expr(scrutinee, map),
                branches: branches
                    .iter()
                    .map(|(l, (x, q))| {
                        let (bs, inner) = self.enter(std::slice::from_ref(x), &free_names(q), map);
                        Ok((l.clone(), (bs[0].clone(), self.go(q, &inner)?)))
                    })
                    .collect::<Result<_, _>>()?,
            },
            Process::Par(l, r) => Process::par(self.go(l, map)?, self.go(r, map)?),
            Process::Restrict { name, ty, body } => {
                let (bs, inner) = self.enter(std::slice::from_ref(name), &free_names(body), map);
                Process::Restrict {
                    name: bs[0].clone(),
                    ty: ty.clone(),
                    body: Box::new(self.go(body, &inner)?),
                }
            }
            Process::SessionRestrict { ends, ty, body } => {
                let (bs, inner) = self.enter(&[ends.0.clone(), ends.1.clone()], &free_names(body), map);
                Process::SessionRestrict {
                    ends: (bs[0].clone(), bs[1].clone()),
                    ty: ty.clone(),
                    body: Box::new(self.go(body, &inner)?),
                }
            }
            Process::Replicated(q) => Process::Replicated(Box::new(self.go(q, map)?)),
            Process::If { cond, then, otherwise } => Process::If {
                cond: subst_expr(cond, map),
                then: Box::new(self.go(then, map)?),
                otherwise: Box::new(self.go(otherwise, map)?),
            },
        })
    }
}

/// Equality up to consistent renaming of bound names. Type annotations on
/// restrictions are ignored.
pub fn alpha_equiv(p: &Process, q: &Process) -> bool {
    Alpha::default().proc(p, q)
}

#[derive(Default)]
struct Alpha {
    left: Vec<Name>,
    right: Vec<Name>,
}

impl Alpha {
    fn lookup(stack: &[Name], n: &Name) -> Option<usize> {
        stack.iter().rev().position(|m| m == n)
    }

    fn name(&self, a: &Name, b: &Name) -> bool {
        match (Self::lookup(&self.left, a), Self::lookup(&self.right, b)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => a == b,
            _ => false,
        }
    }

    fn expr(&self, a: &Expr, b: &Expr) -> bool {
        match (a, b) {
            (Expr::Name(x), Expr::Name(y)) => self.name(x, y),
            (Expr::Variant(l1, v1), Expr::Variant(l2, v2)) => l1 == l2 && self.expr(v1, v2),
            (Expr::BinOp(o1, l1, r1), Expr::BinOp(o2, l2, r2)) => {
                o1 == o2 && self.expr(l1, l2) && self.expr(r1, r2)
            }
            _ => a == b,
        }
    }

    fn under(&mut self, bl: &[Name], br: &[Name], p: &Process, q: &Process) -> bool {
        if bl.len() != br.len() {
            return false;
        }
        self.left.extend(bl.iter().cloned());
        self.right.extend(br.iter().cloned());
        let r = self.proc(p, q);
        self.left.truncate(self.left.len() - bl.len());
        self.right.truncate(self.right.len() - br.len());
        r
    }

    fn proc(&mut self, p: &Process, q: &Process) -> bool {
        match (p, q) {
            (Process::Nil, Process::Nil) => true,
            (
                Process::Output { chan: c1, payload: p1, cont: k1 },
                Process::Output { chan: c2, payload: p2, cont: k2 },
            ) => {
                self.name(c1, c2)
                    && p1.len() == p2.len()
                    && p1.iter().zip(p2).all(|(a, b)| self.expr(a, b))
                    && self.proc(k1, k2)
            }
            (
                Process::Input { chan: c1, binders: b1, cont: k1 },
                Process::Input { chan: c2, binders: b2, cont: k2 },
            ) => self.name(c1, c2) && self.under(b1, b2, k1, k2),
            (
                Process::Select { chan: c1, label: l1, cont: k1 },
                Process::Select { chan: c2, label: l2, cont: k2 },
            ) => self.name(c1, c2) && l1 == l2 && self.proc(k1, k2),
            (
                Process::Branch { chan: c1, branches: b1 },
                Process::Branch { chan: c2, branches: b2 },
            ) => {
                self.name(c1, c2)
                    && b1.len() == b2.len()
                    && b1.iter().zip(b2).all(|((l1, p1), (l2, p2))| l1 == l2 && self.proc(p1, p2))
            }
            (
                Process::Case { scrutinee: s1, branches: b1 },
                Process::Case { scrutinee: s2, branches: b2 },
            ) => {
                self.expr(s1, s2)
                    && b1.len() == b2.len()
                    && b1.iter().zip(b2).all(|((l1, (x1, p1)), (l2, (x2, p2)))| {
                        l1 == l2 && self.under(std::slice::from_ref(x1), std::slice::from_ref(x2), p1, p2)
                    })
            }
            (Process::Par(l1, r1), Process::Par(l2, r2)) => self.proc(l1, l2) && self.proc(r1, r2),
            (Process::Restrict { name: n1, body: b1, .. }, Process::Restrict { name: n2, body: b2, .. }) => {
                self.under(std::slice::from_ref(n1), std::slice::from_ref(n2), b1, b2)
            }
            (
                Process::SessionRestrict { ends: e1, body: b1, .. },
                Process::SessionRestrict { ends: e2, body: b2, .. },
            ) => self.under(
                &[e1.0.clone(), e1.1.clone()],
                &[e2.0.clone(), e2.1.clone()],
                b1,
                b2,
            ),
            (Process::Replicated(a), Process::Replicated(b)) => self.proc(a, b),
            (
                Process::If { cond: c1, then: t1, otherwise: e1 },
                Process::If { cond: c2, then: t2, otherwise: e2 },
            ) => self.expr(c1, c2) && self.proc(t1, t2) && self.proc(e1, e2),
            _ => false,
        }
    }
}

/// Renames every binder of `p` to a name drawn from `supply`, so that all
/// binders are pairwise distinct and distinct from the free names.
pub fn uniquify(p: &Process, supply: &mut FreshSupply) -> Process {
    supply.avoid(all_names(p));
    uniquify_with(p, &mut |_| supply.next_name())
}

/// Like [`uniquify`], but keeps the first binder of each name and primes
/// later ones.
pub fn uniquify_primed(p: &Process) -> Process {
    let mut used = free_names(p);
    uniquify_with(p, &mut |b| {
        let mut c = b.clone();
        while !used.insert(c.clone()) {
            c = Name::new(format!("{}'", c.as_str()));
        }
        c
    })
}

fn uniquify_with(p: &Process, fresh: &mut dyn FnMut(&Name) -> Name) -> Process {
    fn go(p: &Process, env: &BTreeMap<Name, Name>, s: &mut dyn FnMut(&Name) -> Name) -> Process {
        let n = |x: &Name| env.get(x).cloned().unwrap_or_else(|| x.clone());
        let e = |x: &Expr| {
            let m: BTreeMap<Name, Expr> = env.iter().map(|(k, v)| (k.clone(), Expr::Name(v.clone()))).collect();
            subst_expr(x, &m)
        };
        let bind = |bs: &[Name], s: &mut dyn FnMut(&Name) -> Name| {
            let mut env2 = env.clone();
            let fresh: Vec<Name> = bs
                .iter()
                .map(|b| {
                    let f = s(b);
                    env2.insert(b.clone(), f.clone());
                    f
                })
                .collect();
            (fresh, env2)
        };
        match p {
            Process::Nil => Process::Nil,
            Process::Output { chan, payload, cont } => Process::Output {
                chan: n(chan),
                payload: payload.iter().map(e).collect(),
                cont: Box::new(go(cont, env, s)),
            },
            Process::Input { chan, binders, cont } => {
                let (bs, env2) = bind(binders, s);
                Process::Input {
                    chan: n(chan),
                    binders: bs,
                    cont: Box::new(go(cont, &env2, s)),
                }
            }
            Process::Select { chan, label, cont } => Process::Select {
                chan: n(chan),
                label: label.clone(),
                cont: Box::new(go(cont, env, s)),
            },
            Process::Branch { chan, branches } => Process::Branch {
                chan: n(chan),
                branches: branches.iter().map(|(l, q)| (l.clone(), go(q, env, s))).collect(),
            },
            Process::Case { scrutinee, branches } => Process::Case {
                scrutinee: e(scrutinee),
                branches: branches
                    .iter()
                    .map(|(l, (x, q))| {
                        let (bs, env2) = bind(std::slice::from_ref(x), s);
                        (l.clone(), (bs[0].clone(), go(q, &env2, s)))
                    })
                    .collect(),
            },
            Process::Par(l, r) => Process::par(go(l, env, s), go(r, env, s)),
            Process::Restrict { name, ty, body } => {
                let (bs, env2) = bind(std::slice::from_ref(name), s);
                Process::Restrict {
                    name: bs[0].clone(),
                    ty: ty.clone(),
                    body: Box::new(go(body, &env2, s)),
                }
            }
            Process::SessionRestrict { ends, ty, body } => {
                let (bs, env2) = bind(&[ends.0.clone(), ends.1.clone()], s);
                Process::SessionRestrict {
                    ends: (bs[0].clone(), bs[1].clone()),
                    ty: ty.clone(),
                    body: Box::new(go(body, &env2, s)),
                }
            }
            Process::Replicated(q) => Process::Replicated(Box::new(go(q, env, s))),
            Process::If { cond, then, otherwise } => Process::If {
                cond: e(cond),
                then: Box::new(go(then, env, s)),
                otherwise: Box::new(go(otherwise, env, s)),
            },
        }
    }
    go(p, &BTreeMap::new(), fresh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn out(c: &str, e: Expr, k: Process) -> Process {
        Process::output(c, vec![e], k)
    }

    fn inp(c: &str, b: &str, k: Process) -> Process {
        Process::input(c, vec![b.into()], k)
    }

    #[test]
    fn free_names_of_prefix_chain() {
        let p = out("x", Expr::Int(3), inp("y", "z", Process::Nil));
        assert_eq!(free_names(&p), ["x".into(), "y".into()].into());
    }

    #[test]
    fn bound_endpoints_are_not_free() {
        let p = Process::session_restrict(
            "x",
            "y",
            None,
            Process::par(inp("x", "z", Process::Nil), out("y", Expr::Unit, Process::Nil)),
        );
        assert!(free_names(&p).is_empty());
        assert_eq!(all_names(&p), ["x".into(), "y".into(), "z".into()].into());
    }

    #[test]
    fn substitution_skips_bound_occurrences() {
        let p = inp("x", "z", out("y", Expr::name("z"), Process::Nil));
        assert_eq!(substitute(&p, &Expr::Int(7), &"z".into()).unwrap(), p);
        let q = out("y", Expr::name("z"), Process::Nil);
        assert_eq!(
            substitute(&q, &Expr::Int(5), &"z".into()).unwrap(),
            out("y", Expr::Int(5), Process::Nil)
        );
    }

    #[test]
    fn substitution_avoids_capture() {
        // (new w) y!<z>.w!<*>  with z := w
        let p = Process::restrict(
            "w",
            None,
            out("y", Expr::name("z"), out("w", Expr::Unit, Process::Nil)),
        );
        let r = substitute(&p, &Expr::name("w"), &"z".into()).unwrap();
        let expected = Process::restrict(
            "v",
            None,
            out("y", Expr::name("w"), out("v", Expr::Unit, Process::Nil)),
        );
        assert!(alpha_equiv(&r, &expected));
        assert!(free_names(&r).contains(&"w".into()));
    }

    #[test]
    fn alpha_basic() {
        let a = Process::restrict("c", None, out("c", Expr::Unit, Process::Nil));
        let b = Process::restrict("d", None, out("d", Expr::Unit, Process::Nil));
        assert!(alpha_equiv(&a, &b));
        assert!(!alpha_equiv(
            &out("x", Expr::Unit, Process::Nil),
            &out("y", Expr::Unit, Process::Nil)
        ));
    }

    #[test]
    fn uniquify_preserves_alpha_class() {
        let p = Process::par(
            inp("a", "x", out("x", Expr::Unit, Process::Nil)),
            inp("a", "x", Process::Nil),
        );
        let mut s = FreshSupply::new("u");
        let q = uniquify(&p, &mut s);
        assert!(alpha_equiv(&p, &q));
        assert_ne!(p, q);
    }
}
