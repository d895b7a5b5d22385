//! Session types, their payload types, and linear pi-calculus channel types.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

use thiserror::Error;

use crate::name::Label;

/// Type variable bound by a recursive type.
pub type TyVar = String;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionType {
    End,
    Send(Box<TypeExpr>, Box<SessionType>),
    Recv(Box<TypeExpr>, Box<SessionType>),
    /// Internal choice; the map is never empty.
    Select(BTreeMap<Label, SessionType>),
    /// External choice; the map is never empty.
    Branch(BTreeMap<Label, SessionType>),
    Rec(TyVar, Box<SessionType>),
    Var(TyVar),
}

/// Message types of the session calculus.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeExpr {
    Session(SessionType),
    /// `#T`, an unrestricted connection channel.
    Shared(Box<TypeExpr>),
    Unit,
    /// Ground data such as `Int` and `Bool`.
    Base(String),
}

/// Presence of one capability of a linear channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Absent,
    Present,
}

impl Capability {
    pub fn is_present(self) -> bool {
        self == Capability::Present
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Capability::Present
        } else {
            Capability::Absent
        }
    }
}

/// Priority decoration of a linear channel type; smaller is more urgent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityTerm {
    Const(i64),
    Var(String),
    Offset(String, i64),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PiType {
    /// Linear channel with separate input and output capabilities.
    /// `(Absent, Absent)` is the no-capability type `empty[]`.
    Chan {
        input: Capability,
        output: Capability,
        payload: Vec<PiType>,
        priority: Option<PriorityTerm>,
    },
    /// Unrestricted connection `#[t1, .., tn]`.
    Shared(Vec<PiType>),
    Variant(BTreeMap<Label, PiType>),
    /// Anonymous product; only produced by the multiparty local-type encoding.
    Tuple(Vec<PiType>),
    Unit,
    Base(String),
    Rec(TyVar, Box<PiType>),
    Var(TyVar),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unguarded recursion on type variable {0}")]
    Unguarded(TyVar),
    #[error("not a recursive type")]
    NotRecursive,
    #[error("free type variable {0}")]
    FreeVariable(TyVar),
    #[error("empty choice")]
    EmptyChoice,
}

impl PiType {
    pub fn chan(input: Capability, output: Capability, payload: Vec<PiType>) -> Self {
        PiType::Chan {
            input,
            output,
            payload,
            priority: None,
        }
    }

    /// `empty[]`
    pub fn empty() -> Self {
        PiType::chan(Capability::Absent, Capability::Absent, vec![])
    }

    pub fn lin_in(payload: Vec<PiType>) -> Self {
        PiType::chan(Capability::Present, Capability::Absent, payload)
    }

    pub fn lin_out(payload: Vec<PiType>) -> Self {
        PiType::chan(Capability::Absent, Capability::Present, payload)
    }

    pub fn lin_io(payload: Vec<PiType>) -> Self {
        PiType::chan(Capability::Present, Capability::Present, payload)
    }

    pub fn int() -> Self {
        PiType::Base("Int".into())
    }

    pub fn bool() -> Self {
        PiType::Base("Bool".into())
    }

    /// True for channel types that still carry an obligation.
    pub fn is_linear(&self) -> bool {
        matches!(self, PiType::Chan { input, output, .. } if input.is_present() || output.is_present())
    }

    /// Swaps the outermost input/output capabilities, unfolding a top-level
    /// `rec` first; identity on everything that is not a channel type.
    pub fn swap_capabilities(&self) -> PiType {
        match self {
            PiType::Chan {
                input,
                output,
                payload,
                priority,
            } => PiType::Chan {
                input: *output,
                output: *input,
                payload: payload.clone(),
                priority: priority.clone(),
            },
            PiType::Rec(..) => match self.head() {
                PiType::Rec(..) => self.clone(),
                h => h.swap_capabilities(),
            },
            other => other.clone(),
        }
    }

    pub fn strip_priorities(&self) -> PiType {
        self.map_children(&|t| t.strip_priorities(), true)
    }

    fn map_children(&self, f: &dyn Fn(&PiType) -> PiType, drop_priority: bool) -> PiType {
        match self {
            PiType::Chan {
                input,
                output,
                payload,
                priority,
            } => PiType::Chan {
                input: *input,
                output: *output,
                payload: payload.iter().map(f).collect(),
                priority: if drop_priority { None } else { priority.clone() },
            },
            PiType::Shared(ts) => PiType::Shared(ts.iter().map(f).collect()),
            PiType::Variant(m) => PiType::Variant(m.iter().map(|(l, t)| (l.clone(), f(t))).collect()),
            PiType::Tuple(ts) => PiType::Tuple(ts.iter().map(f).collect()),
            PiType::Rec(x, b) => PiType::Rec(x.clone(), Box::new(f(b))),
            other => other.clone(),
        }
    }

    pub fn subst(&self, var: &str, with: &PiType) -> PiType {
        match self {
            PiType::Var(x) if x == var => with.clone(),
            PiType::Rec(x, _) if x == var => self.clone(),
            _ => self.map_children(&|t| t.subst(var, with), false),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_vars(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        match self {
            PiType::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            PiType::Rec(x, b) => {
                bound.push(x.clone());
                b.collect_free_vars(bound, out);
                bound.pop();
            }
            PiType::Chan { payload: ts, .. } | PiType::Shared(ts) | PiType::Tuple(ts) => {
                ts.iter().for_each(|t| t.collect_free_vars(bound, out))
            }
            PiType::Variant(m) => m.values().for_each(|t| t.collect_free_vars(bound, out)),
            PiType::Unit | PiType::Base(_) => {}
        }
    }

    pub fn check_guarded(&self) -> Result<(), TypeError> {
        match self {
            PiType::Rec(x, b) => {
                if !pi_guarded(x, b, false) {
                    return Err(TypeError::Unguarded(x.clone()));
                }
                b.check_guarded()
            }
            PiType::Chan { payload: ts, .. } | PiType::Shared(ts) | PiType::Tuple(ts) => {
                ts.iter().try_for_each(|t| t.check_guarded())
            }
            PiType::Variant(m) => m.values().try_for_each(|t| t.check_guarded()),
            _ => Ok(()),
        }
    }

    /// One-step unfolding of a top-level `rec`.
    pub fn unfold(&self) -> Result<PiType, TypeError> {
        match self {
            PiType::Rec(x, b) => {
                if !pi_guarded(x, b, false) {
                    return Err(TypeError::Unguarded(x.clone()));
                }
                Ok(b.subst(x, self))
            }
            _ => Err(TypeError::NotRecursive),
        }
    }

    /// Unfolds top-level recursion until a proper constructor shows up.
    pub fn head(&self) -> PiType {
        let mut t = self.clone();
        let mut fuel = 64;
        while let PiType::Rec(..) = t {
            match t.unfold() {
                Ok(u) if fuel > 0 => t = u,
                _ => break,
            }
            fuel -= 1;
        }
        t
    }

    pub fn size(&self) -> usize {
        1 + match self {
            PiType::Chan { payload: ts, .. } | PiType::Shared(ts) | PiType::Tuple(ts) => {
                ts.iter().map(PiType::size).sum()
            }
            PiType::Variant(m) => m.values().map(PiType::size).sum(),
            PiType::Rec(_, b) => b.size(),
            _ => 0,
        }
    }
}

fn pi_guarded(var: &str, t: &PiType, under: bool) -> bool {
    match t {
        PiType::Var(x) => x != var || under,
        PiType::Rec(x, b) => x == var || pi_guarded(var, b, under),
        PiType::Chan { payload: ts, .. } | PiType::Shared(ts) => {
            ts.iter().all(|t| pi_guarded(var, t, true))
        }
        PiType::Tuple(ts) => ts.iter().all(|t| pi_guarded(var, t, under)),
        PiType::Variant(m) => m.values().all(|t| pi_guarded(var, t, under)),
        PiType::Unit | PiType::Base(_) => true,
    }
}

/// Equality of (possibly recursive) pi types as infinite trees, ignoring
/// priorities. Channel types without capabilities are identified
/// regardless of payload.
pub fn pi_equiv(a: &PiType, b: &PiType) -> bool {
    let mut g = PiGraph::default();
    let x = g.add(a, &mut Vec::new());
    let y = g.add(b, &mut Vec::new());
    g.bisimilar(x, y, &mut HashSet::new())
}

/// A pi type as a graph: recursion becomes a back edge, so the graph is
/// linear in the size of the term.
#[derive(Default)]
struct PiGraph {
    nodes: Vec<Node>,
}

enum Node {
    Chan(Capability, Capability, Vec<usize>),
    Shared(Vec<usize>),
    Tuple(Vec<usize>),
    Variant(Vec<(Label, usize)>),
    Unit,
    Base(String),
    Free(TyVar),
    Alias(usize),
}

impl PiGraph {
    fn push(&mut self, n: Node) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn add(&mut self, t: &PiType, env: &mut Vec<(TyVar, usize)>) -> usize {
        let all = |g: &mut Self, ts: &[PiType], env: &mut Vec<(TyVar, usize)>| -> Vec<usize> {
            ts.iter().map(|t| g.add(t, env)).collect()
        };
        let n = match t {
            PiType::Chan {
                input, output, payload, ..
            } => Node::Chan(*input, *output, all(self, payload, env)),
            PiType::Shared(ts) => Node::Shared(all(self, ts, env)),
            PiType::Tuple(ts) => Node::Tuple(all(self, ts, env)),
            PiType::Variant(m) => Node::Variant(m.iter().map(|(l, t)| (l.clone(), self.add(t, env))).collect()),
            PiType::Unit => Node::Unit,
            PiType::Base(b) => Node::Base(b.clone()),
            PiType::Var(x) => match env.iter().rev().find(|(y, _)| y == x) {
                Some(&(_, id)) => return id,
                None => Node::Free(x.clone()),
            },
            PiType::Rec(x, body) => {
                let id = self.push(Node::Alias(usize::MAX));
                env.push((x.clone(), id));
                let b = self.add(body, env);
                env.pop();
                self.nodes[id] = Node::Alias(b);
                return id;
            }
        };
        self.push(n)
    }

    fn resolve(&self, mut id: usize) -> usize {
        for _ in 0..=self.nodes.len() {
            match self.nodes[id] {
                Node::Alias(next) if next != usize::MAX => id = next,
                _ => return id,
            }
        }
        id
    }

    fn bisimilar(&self, a: usize, b: usize, seen: &mut HashSet<(usize, usize)>) -> bool {
        let (a, b) = (self.resolve(a), self.resolve(b));
        if a == b || !seen.insert((a, b)) {
            return true;
        }
        let pointwise = |xs: &[usize], ys: &[usize], seen: &mut HashSet<(usize, usize)>| {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.bisimilar(*x, *y, seen))
        };
        match (&self.nodes[a], &self.nodes[b]) {
            (Node::Chan(i1, o1, p1), Node::Chan(i2, o2, p2)) => {
                if i1 != i2 || o1 != o2 {
                    return false;
                }
                if !i1.is_present() && !o1.is_present() {
                    return true;
                }
                pointwise(p1, p2, seen)
            }
            (Node::Shared(p1), Node::Shared(p2)) | (Node::Tuple(p1), Node::Tuple(p2)) => pointwise(p1, p2, seen),
            (Node::Variant(m1), Node::Variant(m2)) => {
                m1.len() == m2.len()
                    && m1
                        .iter()
                        .zip(m2)
                        .all(|((l1, x), (l2, y))| l1 == l2 && self.bisimilar(*x, *y, seen))
            }
            (Node::Unit, Node::Unit) => true,
            (Node::Base(x), Node::Base(y)) | (Node::Free(x), Node::Free(y)) => x == y,
            _ => false,
        }
    }
}

impl TypeExpr {
    pub fn int() -> Self {
        TypeExpr::Base("Int".into())
    }

    pub fn bool() -> Self {
        TypeExpr::Base("Bool".into())
    }

    pub fn subst(&self, var: &str, with: &SessionType) -> TypeExpr {
        match self {
            TypeExpr::Session(s) => TypeExpr::Session(s.subst(var, with)),
            TypeExpr::Shared(t) => TypeExpr::Shared(Box::new(t.subst(var, with))),
            other => other.clone(),
        }
    }

    fn collect_free_vars(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        match self {
            TypeExpr::Session(s) => s.collect_free_vars(bound, out),
            TypeExpr::Shared(t) => t.collect_free_vars(bound, out),
            _ => {}
        }
    }

    pub fn size(&self) -> usize {
        match self {
            TypeExpr::Session(s) => s.size(),
            TypeExpr::Shared(t) => 1 + t.size(),
            _ => 1,
        }
    }

    pub fn check_guarded(&self) -> Result<(), TypeError> {
        match self {
            TypeExpr::Session(s) => s.check_well_formed(),
            TypeExpr::Shared(t) => t.check_guarded(),
            _ => Ok(()),
        }
    }
}

impl SessionType {
    pub fn send(t: TypeExpr, s: SessionType) -> Self {
        SessionType::Send(Box::new(t), Box::new(s))
    }

    pub fn recv(t: TypeExpr, s: SessionType) -> Self {
        SessionType::Recv(Box::new(t), Box::new(s))
    }

    pub fn rec(x: impl Into<TyVar>, body: SessionType) -> Self {
        SessionType::Rec(x.into(), Box::new(body))
    }

    pub fn subst(&self, var: &str, with: &SessionType) -> SessionType {
        match self {
            SessionType::End => SessionType::End,
            SessionType::Var(x) if x == var => with.clone(),
            SessionType::Var(_) => self.clone(),
            SessionType::Rec(x, _) if x == var => self.clone(),
            SessionType::Rec(x, b) => SessionType::Rec(x.clone(), Box::new(b.subst(var, with))),
            SessionType::Send(t, s) => SessionType::send(t.subst(var, with), s.subst(var, with)),
            SessionType::Recv(t, s) => SessionType::recv(t.subst(var, with), s.subst(var, with)),
            SessionType::Select(m) => SessionType::Select(
                m.iter().map(|(l, s)| (l.clone(), s.subst(var, with))).collect(),
            ),
            SessionType::Branch(m) => SessionType::Branch(
                m.iter().map(|(l, s)| (l.clone(), s.subst(var, with))).collect(),
            ),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_vars(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        match self {
            SessionType::End => {}
            SessionType::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            SessionType::Rec(x, b) => {
                bound.push(x.clone());
                b.collect_free_vars(bound, out);
                bound.pop();
            }
            SessionType::Send(t, s) | SessionType::Recv(t, s) => {
                t.collect_free_vars(bound, out);
                s.collect_free_vars(bound, out);
            }
            SessionType::Select(m) | SessionType::Branch(m) => {
                m.values().for_each(|s| s.collect_free_vars(bound, out))
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn has_recursion(&self) -> bool {
        match self {
            SessionType::Rec(..) | SessionType::Var(_) => true,
            SessionType::End => false,
            SessionType::Send(t, s) | SessionType::Recv(t, s) => {
                s.has_recursion() || matches!(&**t, TypeExpr::Session(p) if p.has_recursion())
            }
            SessionType::Select(m) | SessionType::Branch(m) => m.values().any(|s| s.has_recursion()),
        }
    }

    /// Guarded recursion and nonempty choices, recursively.
    pub fn check_well_formed(&self) -> Result<(), TypeError> {
        match self {
            SessionType::End | SessionType::Var(_) => Ok(()),
            SessionType::Rec(x, b) => {
                if !session_guarded(x, b, false) {
                    return Err(TypeError::Unguarded(x.clone()));
                }
                b.check_well_formed()
            }
            SessionType::Send(t, s) | SessionType::Recv(t, s) => {
                t.check_guarded()?;
                s.check_well_formed()
            }
            SessionType::Select(m) | SessionType::Branch(m) => {
                if m.is_empty() {
                    return Err(TypeError::EmptyChoice);
                }
                m.values().try_for_each(|s| s.check_well_formed())
            }
        }
    }

    pub fn unfold(&self) -> Result<SessionType, TypeError> {
        match self {
            SessionType::Rec(x, b) => {
                if !session_guarded(x, b, false) {
                    return Err(TypeError::Unguarded(x.clone()));
                }
                Ok(b.subst(x, self))
            }
            _ => Err(TypeError::NotRecursive),
        }
    }

    /// Unfolds until the top constructor is not `rec`. Unguarded types are
    /// returned as they are.
    pub fn head(&self) -> SessionType {
        let mut s = self.clone();
        while let SessionType::Rec(..) = s {
            match s.unfold() {
                Ok(u) => s = u,
                Err(_) => break,
            }
        }
        s
    }

    pub fn size(&self) -> usize {
        1 + match self {
            SessionType::End | SessionType::Var(_) => 0,
            SessionType::Send(t, s) | SessionType::Recv(t, s) => t.size() + s.size(),
            SessionType::Select(m) | SessionType::Branch(m) => m.values().map(|s| s.size()).sum(),
            SessionType::Rec(_, b) => b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            SessionType::End | SessionType::Var(_) => 1,
            SessionType::Send(_, s) | SessionType::Recv(_, s) => 1 + s.depth(),
            SessionType::Select(m) | SessionType::Branch(m) => {
                1 + m.values().map(|s| s.depth()).max().unwrap_or(0)
            }
            SessionType::Rec(_, b) => 1 + b.depth(),
        }
    }
}

fn session_guarded(var: &str, s: &SessionType, under: bool) -> bool {
    match s {
        SessionType::End => true,
        SessionType::Var(x) => x != var || under,
        SessionType::Rec(x, b) => x == var || session_guarded(var, b, under),
        SessionType::Send(_, s) | SessionType::Recv(_, s) => session_guarded(var, s, true),
        SessionType::Select(m) | SessionType::Branch(m) => {
            m.values().all(|s| session_guarded(var, s, true))
        }
    }
}

/// Equality of closed session types as infinite trees.
pub fn session_equiv(a: &SessionType, b: &SessionType) -> bool {
    let mut seen = HashSet::new();
    session_equiv_in(a, b, &mut seen)
}

fn session_equiv_in(
    a: &SessionType,
    b: &SessionType,
    seen: &mut HashSet<(SessionType, SessionType)>,
) -> bool {
    if matches!(a, SessionType::Rec(..)) || matches!(b, SessionType::Rec(..)) {
        if !seen.insert((a.clone(), b.clone())) {
            return true;
        }
        return session_equiv_in(&a.head(), &b.head(), seen);
    }
    match (a, b) {
        (SessionType::End, SessionType::End) => true,
        (SessionType::Send(t1, s1), SessionType::Send(t2, s2))
        | (SessionType::Recv(t1, s1), SessionType::Recv(t2, s2)) => {
            type_expr_equiv_in(t1, t2, seen) && session_equiv_in(s1, s2, seen)
        }
        (SessionType::Select(m1), SessionType::Select(m2))
        | (SessionType::Branch(m1), SessionType::Branch(m2)) => {
            m1.len() == m2.len()
                && m1
                    .iter()
                    .zip(m2)
                    .all(|((l1, s1), (l2, s2))| l1 == l2 && session_equiv_in(s1, s2, seen))
        }
        (SessionType::Var(x), SessionType::Var(y)) => x == y,
        _ => false,
    }
}

pub fn type_expr_equiv(a: &TypeExpr, b: &TypeExpr) -> bool {
    type_expr_equiv_in(a, b, &mut HashSet::new())
}

fn type_expr_equiv_in(
    a: &TypeExpr,
    b: &TypeExpr,
    seen: &mut HashSet<(SessionType, SessionType)>,
) -> bool {
    match (a, b) {
        (TypeExpr::Session(s1), TypeExpr::Session(s2)) => session_equiv_in(s1, s2, seen),
        (TypeExpr::Shared(t1), TypeExpr::Shared(t2)) => type_expr_equiv_in(t1, t2, seen),
        (TypeExpr::Unit, TypeExpr::Unit) => true,
        (TypeExpr::Base(x), TypeExpr::Base(y)) => x == y,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int() -> TypeExpr {
        TypeExpr::int()
    }

    #[test]
    fn unfold_send_loop() {
        let t = SessionType::rec("X", SessionType::send(int(), SessionType::Var("X".into())));
        assert_eq!(t.unfold().unwrap(), SessionType::send(int(), t.clone()));
    }

    #[test]
    fn unfold_rejects_unguarded() {
        let t = SessionType::rec("X", SessionType::Var("X".into()));
        assert_eq!(t.unfold(), Err(TypeError::Unguarded("X".into())));
        assert!(t.check_well_formed().is_err());
    }

    #[test]
    fn unfold_branch_loop() {
        let body = SessionType::Branch(
            [(Label::from("l"), SessionType::recv(int(), SessionType::Var("X".into())))].into(),
        );
        let t = SessionType::rec("X", body);
        let expected = SessionType::Branch(
            [(Label::from("l"), SessionType::recv(int(), t.clone()))].into(),
        );
        assert_eq!(t.unfold().unwrap(), expected);
    }

    #[test]
    fn shadowed_variable_is_not_substituted() {
        let inner = SessionType::rec("X", SessionType::send(int(), SessionType::Var("X".into())));
        assert_eq!(inner.subst("X", &SessionType::End), inner);
    }

    #[test]
    fn equivalence_sees_through_unfolding() {
        let t = SessionType::rec("X", SessionType::send(int(), SessionType::Var("X".into())));
        let u = SessionType::send(int(), t.clone());
        assert!(session_equiv(&t, &u));
        assert!(!session_equiv(&t, &SessionType::End));
    }

    #[test]
    fn capability_free_channels_are_identified() {
        let a = PiType::empty();
        let b = PiType::chan(Capability::Absent, Capability::Absent, vec![PiType::int()]);
        assert!(pi_equiv(&a, &b));
        assert!(!pi_equiv(&a, &PiType::lin_in(vec![])));
    }

    #[test]
    fn swap_is_an_involution() {
        let t = PiType::lin_in(vec![PiType::int(), PiType::empty()]);
        assert_eq!(t.swap_capabilities().swap_capabilities(), t);
        assert_eq!(t.swap_capabilities(), PiType::lin_out(vec![PiType::int(), PiType::empty()]));
    }
}
