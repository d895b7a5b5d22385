//! Seeded random generators for types and processes, used by the property
//! tests and the command-line corpus tools.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::duality::dual;
use crate::encode::Renaming;
use crate::env::TypeEnv;
use crate::name::{FreshSupply, Label, Name};
use crate::process::{Annot, BinOp, Expr, Process};
use crate::types::{SessionType, TypeExpr};

const LABELS: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Clone, Copy, Debug)]
pub struct TypeShape {
    pub depth: usize,
    pub width: usize,
    pub recursion: bool,
    /// Allow session types as payloads.
    pub delegation: bool,
}

impl Default for TypeShape {
    fn default() -> Self {
        TypeShape {
            depth: 6,
            width: 4,
            recursion: true,
            delegation: true,
        }
    }
}

fn base_type<R: Rng>(rng: &mut R) -> TypeExpr {
    match rng.gen_range(0..3) {
        0 => TypeExpr::int(),
        1 => TypeExpr::bool(),
        _ => TypeExpr::Unit,
    }
}

fn labels<R: Rng>(rng: &mut R, width: usize) -> Vec<Label> {
    let n = rng.gen_range(1..=width.clamp(1, LABELS.len()));
    let mut ls: Vec<&str> = LABELS.to_vec();
    ls.shuffle(rng);
    ls.truncate(n);
    ls.into_iter().map(Label::from).collect()
}

/// A closed, guarded session type.
pub fn session_type<R: Rng>(rng: &mut R, shape: TypeShape) -> SessionType {
    let mut counter = 0;
    st(rng, shape, shape.depth, &mut Vec::new(), false, &mut counter)
}

fn st<R: Rng>(
    rng: &mut R,
    shape: TypeShape,
    depth: usize,
    vars: &mut Vec<String>,
    guarded: bool,
    counter: &mut usize,
) -> SessionType {
    if depth == 0 {
        return match vars.choose(rng) {
            Some(x) if guarded && rng.gen_bool(0.5) => SessionType::Var(x.clone()),
            _ => SessionType::End,
        };
    }
    let roll = rng.gen_range(0..100);
    match roll {
        0..=9 => SessionType::End,
        10..=19 if guarded && !vars.is_empty() => SessionType::Var(vars.choose(rng).expect("nonempty").clone()),
        20..=29 if shape.recursion && depth >= 2 => {
            let x = format!("X{counter}");
            *counter += 1;
            vars.push(x.clone());
            let body = st(rng, shape, depth - 1, vars, false, counter);
            vars.pop();
            SessionType::rec(x, body)
        }
        _ => match rng.gen_range(0..4) {
            k @ (0 | 1) => {
                let payload = if shape.delegation && depth >= 2 && rng.gen_bool(0.2) {
                    let inner = TypeShape {
                        depth: depth.min(3) - 1,
                        ..shape
                    };
                    TypeExpr::Session(st(rng, inner, inner.depth, &mut Vec::new(), false, counter))
                } else {
                    base_type(rng)
                };
                let k2 = st(rng, shape, depth - 1, vars, true, counter);
                if k == 0 {
                    SessionType::send(payload, k2)
                } else {
                    SessionType::recv(payload, k2)
                }
            }
            k => {
                let m: BTreeMap<Label, SessionType> = labels(rng, shape.width)
                    .into_iter()
                    .map(|l| (l, st(rng, shape, depth - 1, vars, true, counter)))
                    .collect();
                if k == 2 {
                    SessionType::Select(m)
                } else {
                    SessionType::Branch(m)
                }
            }
        },
    }
}

/// A pair of closed types likely to be related by subtyping: the second is
/// derived from the first by widening or narrowing choices and unfolding.
pub fn subtype_pair<R: Rng>(rng: &mut R, shape: TypeShape) -> (SessionType, SessionType) {
    let a = session_type(rng, shape);
    let b = match rng.gen_range(0..4) {
        0 => session_type(rng, shape),
        1 => a.head(),
        _ => perturb(rng, &a),
    };
    if rng.gen_bool(0.5) {
        (a, b)
    } else {
        (b, a)
    }
}

fn perturb<R: Rng>(rng: &mut R, s: &SessionType) -> SessionType {
    match s {
        SessionType::Select(m) | SessionType::Branch(m) => {
            let mut m: BTreeMap<Label, SessionType> = m.iter().map(|(l, k)| (l.clone(), perturb(rng, k))).collect();
            if m.len() > 1 && rng.gen_bool(0.3) {
                let l = m.keys().next().expect("nonempty").clone();
                m.remove(&l);
            } else if rng.gen_bool(0.3) {
                let l = Label::from(*LABELS.choose(rng).expect("labels"));
                m.entry(l).or_insert(SessionType::End);
            }
            if matches!(s, SessionType::Select(_)) {
                SessionType::Select(m)
            } else {
                SessionType::Branch(m)
            }
        }
        SessionType::Send(t, k) => SessionType::Send(t.clone(), Box::new(perturb(rng, k))),
        SessionType::Recv(t, k) => SessionType::Recv(t.clone(), Box::new(perturb(rng, k))),
        SessionType::Rec(x, b) => SessionType::Rec(x.clone(), Box::new(perturb(rng, b))),
        other => other.clone(),
    }
}

// ------------------------------------------------------------ processes

/// A session process with the typing context of its free names.
#[derive(Clone, Debug)]
pub struct Sample {
    pub env: TypeEnv<TypeExpr>,
    pub process: Process,
    /// Renaming for the correspondence check; merges free co-endpoints.
    pub renaming: Renaming,
}

struct Realizer<'a, R: Rng> {
    rng: &'a mut R,
    supply: FreshSupply,
    ints: Vec<Name>,
    bools: Vec<Name>,
    annotate: bool,
}

impl<R: Rng> Realizer<'_, R> {
    fn int(&mut self) -> Expr {
        let lit = Expr::Int(self.rng.gen_range(0..10));
        match self.ints.choose(self.rng).cloned() {
            Some(x) if self.rng.gen_bool(0.5) => {
                if self.rng.gen_bool(0.5) {
                    Expr::binop(BinOp::Add, Expr::Name(x), lit)
                } else {
                    Expr::Name(x)
                }
            }
            _ => lit,
        }
    }

    fn bool(&mut self) -> Expr {
        match self.rng.gen_range(0..3) {
            0 => Expr::Bool(self.rng.gen_bool(0.5)),
            1 => match self.bools.choose(self.rng).cloned() {
                Some(b) => Expr::Name(b),
                None => Expr::Bool(true),
            },
            _ => {
                let (l, r) = (self.int(), self.int());
                Expr::binop(BinOp::Eq, l, r)
            }
        }
    }

    /// A process using `x` at `s`, followed by `then` once `s` ends.
    fn realize(&mut self, s: &SessionType, x: &Name, then: Process) -> Process {
        let saved = (self.ints.len(), self.bools.len());
        let then2 = then.clone();
        let p = match s.head() {
            SessionType::End | SessionType::Var(_) | SessionType::Rec(..) => then,
            SessionType::Send(t, k) => match *t {
                TypeExpr::Session(d) => {
                    let (a, b) = (self.supply.next_name(), self.supply.next_name());
                    let rest = self.realize(&k, x, then);
                    let peer = self.realize(&dual(&d), &b, Process::Nil);
                    let ty = self.annotate.then(|| d.clone());
                    Process::session_restrict(
                        a.clone(),
                        b,
                        ty,
                        Process::output(x.clone(), vec![Expr::Name(a)], Process::par(rest, peer)),
                    )
                }
                t => {
                    let v = match t {
                        TypeExpr::Base(b) if b == "Int" => self.int(),
                        TypeExpr::Base(_) => self.bool(),
                        _ => Expr::Unit,
                    };
                    Process::output(x.clone(), vec![v], self.realize(&k, x, then))
                }
            },
            SessionType::Recv(t, k) => {
                let z = self.supply.next_name();
                match &*t {
                    TypeExpr::Session(d) => {
                        let rest = self.realize(&k, x, then);
                        let used = self.realize(d, &z, Process::Nil);
                        Process::input(x.clone(), vec![z], Process::par(rest, used))
                    }
                    TypeExpr::Base(b) => {
                        let pool = if b == "Int" { &mut self.ints } else { &mut self.bools };
                        pool.push(z.clone());
                        let rest = self.realize(&k, x, then);
                        self.ints.truncate(saved.0);
                        self.bools.truncate(saved.1);
                        Process::input(x.clone(), vec![z], rest)
                    }
                    _ => Process::input(x.clone(), vec![z], self.realize(&k, x, then)),
                }
            }
            SessionType::Select(m) => {
                let (l, k) = m.iter().nth(self.rng.gen_range(0..m.len())).expect("nonempty");
                Process::select(x.clone(), l.clone(), self.realize(k, x, then))
            }
            SessionType::Branch(m) => Process::Branch {
                chan: x.clone(),
                branches: m
                    .iter()
                    .map(|(l, k)| (l.clone(), self.realize(k, x, then.clone())))
                    .collect(),
            },
        };
        if !matches!(p, Process::Nil) && self.rng.gen_bool(0.05) {
            let c = self.bool();
            let p2 = self.realize(s, x, then2);
            return Process::If {
                cond: c,
                then: Box::new(p),
                otherwise: Box::new(p2),
            };
        }
        p
    }
}

fn process_shape() -> TypeShape {
    TypeShape {
        depth: 3,
        width: 2,
        recursion: false,
        delegation: true,
    }
}

/// A closed, well-typed session process: one or two sessions, sometimes a
/// replicated server handing out sessions over a connection.
pub fn well_typed<R: Rng>(rng: &mut R) -> Sample {
    let annotate = rng.gen_bool(0.5);
    let mut r = Realizer {
        rng,
        supply: FreshSupply::new("v"),
        ints: Vec::new(),
        bools: Vec::new(),
        annotate,
    };
    let s1 = session_type(r.rng, process_shape());
    let (x1, y1) = (Name::from("x1"), Name::from("y1"));
    let process = match r.rng.gen_range(0..4) {
        0 => {
            let s2 = session_type(r.rng, process_shape());
            let (x2, y2) = (Name::from("x2"), Name::from("y2"));
            let tail = r.realize(&s2, &x2, Process::Nil);
            let a = r.realize(&s1, &x1, tail);
            let b = r.realize(&dual(&s1), &y1, Process::Nil);
            let c = r.realize(&dual(&s2), &y2, Process::Nil);
            let t1 = annotate.then(|| s1.clone());
            let t2 = annotate.then(|| s2.clone());
            Process::session_restrict(
                x1,
                y1,
                t1,
                Process::session_restrict(x2, y2, t2, Process::par_all(vec![a, b, c])),
            )
        }
        1 => {
            let srv = Name::from("srv");
            let z = Name::from("z");
            let body = r.realize(&s1, &z, Process::Nil);
            let server = Process::Replicated(Box::new(Process::input(srv.clone(), vec![z], body)));
            let client = r.realize(&dual(&s1), &y1, Process::Nil);
            let client = Process::session_restrict(
                x1.clone(),
                y1,
                annotate.then(|| s1.clone()),
                Process::output(srv.clone(), vec![Expr::Name(x1)], client),
            );
            let ty = TypeExpr::Shared(Box::new(TypeExpr::Session(s1)));
            Process::restrict(srv, annotate.then_some(Annot::Session(ty)), Process::par(server, client))
        }
        _ => {
            let a = r.realize(&s1, &x1, Process::Nil);
            let b = r.realize(&dual(&s1), &y1, Process::Nil);
            Process::session_restrict(x1, y1, annotate.then(|| s1.clone()), Process::par(a, b))
        }
    };
    Sample {
        env: TypeEnv::new(),
        process,
        renaming: Renaming::new(),
    }
}

/// Two free co-endpoints `x : S`, `y : dual S`, merged by the renaming.
pub fn open_pair<R: Rng>(rng: &mut R) -> Sample {
    let mut r = Realizer {
        rng,
        supply: FreshSupply::new("v"),
        ints: Vec::new(),
        bools: Vec::new(),
        annotate: true,
    };
    let mut s = session_type(r.rng, process_shape());
    while matches!(s, SessionType::End) {
        s = session_type(r.rng, process_shape());
    }
    let (x, y) = (Name::from("x"), Name::from("y"));
    let a = r.realize(&s, &x, Process::Nil);
    let b = r.realize(&dual(&s), &y, Process::Nil);
    let env = TypeEnv::from_entries([
        (x.clone(), TypeExpr::Session(s.clone())),
        (y.clone(), TypeExpr::Session(dual(&s))),
    ])
    .expect("distinct names");
    let s_name = Name::from("s");
    Sample {
        env,
        process: Process::par(a, b),
        renaming: [(x, s_name.clone()), (y, s_name)].into(),
    }
}

/// A well-typed process with one random mutation; usually ill-typed.
pub fn mutated<R: Rng>(rng: &mut R) -> Sample {
    let mut s = well_typed(rng);
    let n = s.process.size();
    let k = rng.gen_range(0..n.max(1));
    let mut i = 0;
    s.process = mutate(rng, &s.process, k, &mut i);
    s
}

fn mutate<R: Rng>(rng: &mut R, p: &Process, k: usize, i: &mut usize) -> Process {
    let here = *i == k;
    *i += 1;
    if here {
        return match p {
            Process::Output { chan, payload, cont } => match rng.gen_range(0..3) {
                0 => Process::output(chan.clone(), payload.clone(), p.clone()),
                1 => Process::output(
                    chan.clone(),
                    vec![match payload.first() {
                        Some(Expr::Int(_)) => Expr::Bool(true),
                        _ => Expr::Int(1),
                    }],
                    (**cont).clone(),
                ),
                _ => Process::Nil,
            },
            Process::Input { chan, .. } => match rng.gen_range(0..2) {
                0 => Process::Nil,
                _ => Process::input(chan.clone(), vec![Name::from("w")], p.clone()),
            },
            Process::Select { chan, cont, .. } => Process::select(chan.clone(), "zz", (**cont).clone()),
            Process::Branch { chan, branches } if branches.len() > 1 => {
                let mut b = branches.clone();
                let l = b.keys().next().expect("nonempty").clone();
                b.remove(&l);
                Process::Branch {
                    chan: chan.clone(),
                    branches: b,
                }
            }
            Process::SessionRestrict { ends, body, .. } => Process::session_restrict(
                ends.0.clone(),
                ends.1.clone(),
                Some(SessionType::send(TypeExpr::int(), SessionType::End)),
                (**body).clone(),
            ),
            Process::Par(l, _) => (**l).clone(),
            other => Process::par(other.clone(), Process::output("x1", vec![Expr::Int(0)], Process::Nil)),
        };
    }
    let mut go = |q: &Process| mutate(rng, q, k, i);
    match p {
        Process::Nil => Process::Nil,
        Process::Output { chan, payload, cont } => Process::output(chan.clone(), payload.clone(), go(cont)),
        Process::Input { chan, binders, cont } => Process::input(chan.clone(), binders.clone(), go(cont)),
        Process::Select { chan, label, cont } => Process::select(chan.clone(), label.clone(), go(cont)),
        Process::Branch { chan, branches } => Process::Branch {
            chan: chan.clone(),
            branches: branches.iter().map(|(l, q)| (l.clone(), go(q))).collect(),
        },
        Process::Case { scrutinee, branches } => Process::Case {
            scrutinee: scrutinee.clone(),
            branches: branches.iter().map(|(l, (x, q))| (l.clone(), (x.clone(), go(q)))).collect(),
        },
        Process::Par(l, r) => {
            let l = go(l);
            Process::par(l, go(r))
        }
        Process::Restrict { name, ty, body } => Process::restrict(name.clone(), ty.clone(), go(body)),
        Process::SessionRestrict { ends, ty, body } => {
            Process::session_restrict(ends.0.clone(), ends.1.clone(), ty.clone(), go(body))
        }
        Process::Replicated(q) => Process::Replicated(Box::new(go(q))),
        Process::If { cond, then, otherwise } => {
            let t = go(then);
            Process::If {
                cond: cond.clone(),
                then: Box::new(t),
                otherwise: Box::new(go(otherwise)),
            }
        }
    }
}

/// Linear pi processes over one to three unannotated channels, each with
/// one output and one input placed in different threads in random order.
/// Some of them deadlock.
pub fn pi_threads<R: Rng>(rng: &mut R) -> Process {
    let nchan = rng.gen_range(1..=3);
    let nthreads = rng.gen_range(2..=3);
    let mut threads: Vec<Vec<(usize, bool)>> = vec![Vec::new(); nthreads];
    for c in 0..nchan {
        let out = rng.gen_range(0..nthreads);
        let mut inp = rng.gen_range(0..nthreads - 1);
        if inp >= out {
            inp += 1;
        }
        threads[out].push((c, true));
        threads[inp].push((c, false));
    }
    let mut procs = Vec::new();
    for mut t in threads {
        t.shuffle(rng);
        let mut p = Process::Nil;
        for (c, is_out) in t.into_iter().rev() {
            let ch = format!("c{c}");
            p = if is_out {
                Process::output(ch, vec![Expr::Int(c as i64)], p)
            } else {
                Process::input(ch, vec![Name::new(format!("v{c}"))], p)
            };
        }
        procs.push(p);
    }
    let mut p = Process::par_all(procs);
    for c in (0..nchan).rev() {
        p = Process::restrict(format!("c{c}"), None, p);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check_session::check_session;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn types_are_closed_and_guarded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let s = session_type(&mut rng, TypeShape::default());
            assert!(s.is_closed(), "{s}");
            s.check_well_formed().unwrap();
        }
    }

    #[test]
    fn well_typed_samples_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let s = well_typed(&mut rng);
            if let Err(e) = check_session(&s.env, &s.process) {
                panic!("{}\n{e}", s.process);
            }
        }
        for _ in 0..50 {
            let s = open_pair(&mut rng);
            check_session(&s.env, &s.process).unwrap();
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let a = well_typed(&mut ChaCha8Rng::seed_from_u64(9)).process;
        let b = well_typed(&mut ChaCha8Rng::seed_from_u64(9)).process;
        assert_eq!(a, b);
    }
}
