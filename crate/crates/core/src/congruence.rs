//! Structural congruence.
//!
//! Processes are brought into a prenex normal form: restrictions hoisted to
//! the top of each thread, parallel compositions flattened into a multiset,
//! inactive components and unused restrictions dropped. Two normal forms are
//! congruent when a bijection between bound names makes the multisets equal.
//! Type annotations are ignored.

use std::collections::{BTreeMap, BTreeSet};

use crate::binding::{all_names, bound_names, free_names, uniquify};
use crate::name::{FreshSupply, Label, Name};
use crate::process::{Annot, Expr, Process};
use crate::types::SessionType;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binder {
    Chan(Name, Option<Annot>),
    Session(Name, Name, Option<SessionType>),
}

impl Binder {
    fn names(&self) -> Vec<&Name> {
        match self {
            Binder::Chan(x, _) => vec![x],
            Binder::Session(x, y, _) => vec![x, y],
        }
    }
}

/// Normal form of a process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normal {
    pub binders: Vec<Binder>,
    pub comps: Vec<Comp>,
}

/// A guarded component; continuations are again in normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comp {
    Output(Name, Vec<Expr>, Normal),
    Input(Name, Vec<Name>, Normal),
    Select(Name, Label, Normal),
    Branch(Name, BTreeMap<Label, Normal>),
    Case(Expr, BTreeMap<Label, (Name, Normal)>),
    Replicated(Normal),
    If(Expr, Normal, Normal),
}

/// Normal form of a process whose bound names are pairwise distinct and
/// distinct from its free names.
pub fn normal_form(p: &Process) -> Normal {
    let mut n = Normal {
        binders: Vec::new(),
        comps: Vec::new(),
    };
    collect(p, &mut n);
    let used: BTreeSet<Name> = n.comps.iter().flat_map(comp_free).collect();
    n.binders.retain(|b| b.names().iter().any(|x| used.contains(*x)));
    n
}

fn collect(p: &Process, n: &mut Normal) {
    match p {
        Process::Nil => {}
        Process::Par(l, r) => {
            collect(l, n);
            collect(r, n);
        }
        Process::Restrict { name, ty, body } => {
            n.binders.push(Binder::Chan(name.clone(), ty.clone()));
            collect(body, n);
        }
        Process::SessionRestrict { ends, ty, body } => {
            n.binders.push(Binder::Session(ends.0.clone(), ends.1.clone(), ty.clone()));
            collect(body, n);
        }
        Process::Output { chan, payload, cont } => {
            n.comps.push(Comp::Output(chan.clone(), payload.clone(), normal_form(cont)))
        }
        Process::Input { chan, binders, cont } => {
            n.comps.push(Comp::Input(chan.clone(), binders.clone(), normal_form(cont)))
        }
        Process::Select { chan, label, cont } => {
            n.comps.push(Comp::Select(chan.clone(), label.clone(), normal_form(cont)))
        }
        Process::Branch { chan, branches } => n.comps.push(Comp::Branch(
            chan.clone(),
            branches.iter().map(|(l, q)| (l.clone(), normal_form(q))).collect(),
        )),
        Process::Case { scrutinee, branches } => n.comps.push(Comp::Case(
            scrutinee.clone(),
            branches
                .iter()
                .map(|(l, (x, q))| (l.clone(), (x.clone(), normal_form(q))))
                .collect(),
        )),
        Process::Replicated(q) => n.comps.push(Comp::Replicated(normal_form(q))),
        Process::If { cond, then, otherwise } => n.comps.push(Comp::If(
            cond.clone(),
            normal_form(then),
            normal_form(otherwise),
        )),
    }
}

fn comp_free(c: &Comp) -> BTreeSet<Name> {
    free_names(&comp_process(c))
}

fn comp_process(c: &Comp) -> Process {
    match c {
        Comp::Output(x, vs, k) => Process::output(x.clone(), vs.clone(), to_process(k)),
        Comp::Input(x, ys, k) => Process::input(x.clone(), ys.clone(), to_process(k)),
        Comp::Select(x, l, k) => Process::select(x.clone(), l.clone(), to_process(k)),
        Comp::Branch(x, m) => Process::Branch {
            chan: x.clone(),
            branches: m.iter().map(|(l, k)| (l.clone(), to_process(k))).collect(),
        },
        Comp::Case(e, m) => Process::Case {
            scrutinee: e.clone(),
            branches: m
                .iter()
                .map(|(l, (x, k))| (l.clone(), (x.clone(), to_process(k))))
                .collect(),
        },
        Comp::Replicated(k) => Process::Replicated(Box::new(to_process(k))),
        Comp::If(e, a, b) => Process::If {
            cond: e.clone(),
            then: Box::new(to_process(a)),
            otherwise: Box::new(to_process(b)),
        },
    }
}

/// Reads a normal form back as a process. Components are ordered by their
/// printed form.
pub fn to_process(n: &Normal) -> Process {
    let bound: BTreeSet<Name> = n
        .binders
        .iter()
        .flat_map(|b| b.names().into_iter().cloned())
        .collect();
    let mut comps: Vec<Process> = n.comps.iter().map(comp_process).collect();
    comps.sort_by_cached_key(|p| (anonymous_key(p), shape_key(p, &bound)));
    let mut p = if comps.is_empty() {
        Process::Nil
    } else {
        Process::par_all(comps)
    };
    for b in n.binders.iter().rev() {
        p = match b {
            Binder::Chan(x, t) => Process::restrict(x.clone(), t.clone(), p),
            Binder::Session(x, y, t) => Process::session_restrict(x.clone(), y.clone(), t.clone(), p),
        };
    }
    p
}

/// Printed form with every name erased.
fn anonymous_key(p: &Process) -> String {
    crate::binding::map_names(p, &|_: &Name| Name::from("_")).to_string()
}

/// Printed form with bound names erased, so the order does not depend on
/// how bound names are chosen.
fn shape_key(p: &Process, outer: &BTreeSet<Name>) -> String {
    let inner = bound_names(p);
    let hide = |x: &Name| {
        if inner.contains(x) || outer.contains(x) {
            Name::from("_")
        } else {
            x.clone()
        }
    };
    crate::binding::map_names(p, &hide).to_string()
}

/// Representative of the congruence class of `p`: bound names are renamed
/// apart, restrictions hoisted and components sorted.
pub fn normalize(p: &Process) -> Process {
    // Sibling order can depend on the names chosen by the previous pass, so
    // repeat until the result is stable.
    let mut cur = normalize_once(p);
    for _ in 0..4 {
        let next = normalize_once(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn normalize_once(p: &Process) -> Process {
    let mut supply = FreshSupply::new("_n");
    supply.avoid(all_names(p));
    let sorted = to_process(&normal_form(&uniquify(p, &mut supply)));
    let mut canonical = FreshSupply::new("_n");
    canonical.avoid(free_names(p));
    uniquify(&sorted, &mut canonical)
}

/// Partial bijection between the bound names of two processes.
#[derive(Clone, Debug, Default)]
struct Bij {
    fwd: BTreeMap<Name, Name>,
    bwd: BTreeMap<Name, Name>,
}

struct Matcher {
    bound_p: BTreeSet<Name>,
    bound_q: BTreeSet<Name>,
}

impl Matcher {
    fn name(&self, x: &Name, y: &Name, bij: &mut Bij) -> bool {
        let (bx, by) = (self.bound_p.contains(x), self.bound_q.contains(y));
        if bx != by {
            return false;
        }
        if !bx {
            return x == y;
        }
        match (bij.fwd.get(x), bij.bwd.get(y)) {
            (Some(y2), _) => y2 == y,
            (None, Some(_)) => false,
            (None, None) => {
                bij.fwd.insert(x.clone(), y.clone());
                bij.bwd.insert(y.clone(), x.clone());
                true
            }
        }
    }

    fn expr(&self, a: &Expr, b: &Expr, bij: &mut Bij) -> bool {
        match (a, b) {
            (Expr::Name(x), Expr::Name(y)) => self.name(x, y, bij),
            (Expr::Variant(l, v), Expr::Variant(m, w)) => l == m && self.expr(v, w, bij),
            (Expr::BinOp(o, l1, r1), Expr::BinOp(p, l2, r2)) => {
                o == p && self.expr(l1, l2, bij) && self.expr(r1, r2, bij)
            }
            _ => a == b,
        }
    }

    fn names(&self, xs: &[Name], ys: &[Name], bij: &mut Bij) -> bool {
        xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.name(x, y, bij))
    }

    fn comp(&self, a: &Comp, b: &Comp, bij: &Bij) -> Option<Bij> {
        let mut bij = bij.clone();
        let ok = match (a, b) {
            (Comp::Output(x, vs, k), Comp::Output(y, ws, l)) => {
                if !(self.name(x, y, &mut bij)
                    && vs.len() == ws.len()
                    && vs.iter().zip(ws).all(|(v, w)| self.expr(v, w, &mut bij)))
                {
                    return None;
                }
                return self.normal(k, l, &bij);
            }
            (Comp::Input(x, xs, k), Comp::Input(y, ys, l)) => {
                if !(self.name(x, y, &mut bij) && self.names(xs, ys, &mut bij)) {
                    return None;
                }
                return self.normal(k, l, &bij);
            }
            (Comp::Select(x, a, k), Comp::Select(y, b, l)) => {
                if !(a == b && self.name(x, y, &mut bij)) {
                    return None;
                }
                return self.normal(k, l, &bij);
            }
            (Comp::Branch(x, m), Comp::Branch(y, n)) => {
                self.name(x, y, &mut bij) && m.keys().eq(n.keys()) && {
                    for (l, k) in m {
                        {
                            let b = self.normal(k, &n[l], &bij)?;
                            bij = b
                        }
                    }
                    true
                }
            }
            (Comp::Case(e, m), Comp::Case(f, n)) => {
                self.expr(e, f, &mut bij) && m.keys().eq(n.keys()) && {
                    for (l, (x, k)) in m {
                        let (y, kk) = &n[l];
                        if !self.name(x, y, &mut bij) {
                            return None;
                        }
                        {
                            let b = self.normal(k, kk, &bij)?;
                            bij = b
                        }
                    }
                    true
                }
            }
            (Comp::Replicated(k), Comp::Replicated(l)) => return self.normal(k, l, &bij),
            (Comp::If(e, a1, b1), Comp::If(f, a2, b2)) => {
                if !self.expr(e, f, &mut bij) {
                    return None;
                }
                let bij = self.normal(a1, a2, &bij)?;
                return self.normal(b1, b2, &bij);
            }
            _ => false,
        };
        ok.then_some(bij)
    }

    fn normal(&self, a: &Normal, b: &Normal, bij: &Bij) -> Option<Bij> {
        if a.comps.len() != b.comps.len() || a.binders.len() != b.binders.len() {
            return None;
        }
        let mut used = vec![false; b.comps.len()];
        let bij = self.perm(&a.comps, &b.comps, &mut used, bij.clone())?;
        let inner_q: BTreeSet<&Name> = b.binders.iter().flat_map(Binder::names).collect();
        let pairs_ok = a.binders.iter().all(|ba| {
            let mapped: Vec<Option<&Name>> = ba.names().into_iter().map(|x| bij.fwd.get(x)).collect();
            mapped.iter().all(|y| y.is_none_or(|y| inner_q.contains(y)))
                && match ba {
                    Binder::Chan(..) => true,
                    Binder::Session(..) => b.binders.iter().any(|bb| match bb {
                        Binder::Session(u, v, _) => mapped.iter().all(|y| y.is_none_or(|y| y == u || y == v)),
                        Binder::Chan(..) => false,
                    }),
                }
        });
        pairs_ok.then_some(bij)
    }

    fn perm(&self, a: &[Comp], b: &[Comp], used: &mut [bool], bij: Bij) -> Option<Bij> {
        let Some((first, rest)) = a.split_first() else {
            return Some(bij);
        };
        for j in 0..b.len() {
            if used[j] {
                continue;
            }
            if let Some(next) = self.comp(first, &b[j], &bij) {
                used[j] = true;
                if let Some(done) = self.perm(rest, b, used, next) {
                    return Some(done);
                }
                used[j] = false;
            }
        }
        None
    }
}

/// `p == q` up to structural congruence and alpha-renaming.
pub fn struct_congruent(p: &Process, q: &Process) -> bool {
    if free_names(p) != free_names(q) {
        return false;
    }
    let mut supply = FreshSupply::new("_n");
    supply.avoid(all_names(p));
    supply.avoid(all_names(q));
    let p = uniquify(p, &mut supply);
    let q = uniquify(q, &mut supply);
    let m = Matcher {
        bound_p: bound_names(&p),
        bound_q: bound_names(&q),
    };
    m.normal(&normal_form(&p), &normal_form(&q), &Bij::default()).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_process;
    use crate::process::Calculus;

    fn pi(s: &str) -> Process {
        parse_process(s, Calculus::Pi).unwrap()
    }

    #[test]
    fn monoid_laws() {
        assert!(struct_congruent(&pi("a!<1>.0 | 0"), &pi("a!<1>.0")));
        assert!(struct_congruent(&pi("a!<1>.0 | b?(x).0"), &pi("b?(y).0 | a!<1>.0")));
        assert!(struct_congruent(&pi("(a!<1>.0 | b!<2>.0) | c!<3>.0"), &pi("a!<1>.0 | (b!<2>.0 | c!<3>.0)")));
        assert!(!struct_congruent(&pi("a!<1>.0"), &pi("a!<2>.0")));
    }

    #[test]
    fn scope_extrusion_and_garbage() {
        assert!(struct_congruent(&pi("(new c in c!<1>.0) | a?(x).0"), &pi("new d in (d!<1>.0 | a?(x).0)")));
        assert!(struct_congruent(&pi("new c in 0"), &pi("0")));
        assert!(struct_congruent(&pi("new c in new d in c!<d>.0"), &pi("new d in new c in c!<d>.0")));
        assert!(!struct_congruent(&pi("new c in c!<1>.0"), &pi("c!<1>.0")));
    }

    #[test]
    fn congruence_under_prefix() {
        assert!(struct_congruent(&pi("a?(x).(x!<1>.0 | b!<2>.0)"), &pi("a?(y).(b!<2>.0 | y!<1>.0)")));
    }

    #[test]
    fn symmetric_components_need_backtracking() {
        let p = pi("new c in new d in (c!<1>.0 | d!<1>.0 | c?(x).d?(y).0)");
        let q = pi("new e in new f in (e!<1>.0 | f!<1>.0 | f?(x).e?(y).0)");
        assert!(struct_congruent(&p, &q));
    }

    #[test]
    fn session_restrictions_keep_their_pairs() {
        let s = |t: &str| parse_process(t, Calculus::Session).unwrap();
        assert!(struct_congruent(&s("new x y in x!<1>.0 | y?(z).0"), &s("new u v in v?(w).0 | u!<1>.0")));
        assert!(struct_congruent(&s("new x y in x!<1>.0 | y?(z).0"), &s("new u v in u?(w).0 | v!<1>.0")));
        let p = s("new x y in new a b in (x!<1>.0 | y?(z).0 | a!<1>.0 | b?(z).0)");
        let q = s("new x y in new a b in (x!<1>.0 | b?(z).0 | a!<1>.0 | y?(z).0)");
        assert!(!struct_congruent(&p, &q));
    }

    #[test]
    fn normalize_is_idempotent() {
        let p = pi("(new c in c!<1>.0) | (0 | a?(x).0)");
        let n = normalize(&p);
        assert!(struct_congruent(&p, &n));
        assert_eq!(normalize(&n).to_string(), n.to_string());
        let q = pi("b!<2>.0 | (new e in e?(y).0) | new c in c!<1>.0");
        assert_eq!(normalize(&q).to_string(), normalize(&normalize(&q)).to_string());
    }
}
