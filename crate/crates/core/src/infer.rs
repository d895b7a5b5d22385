//! Inference of session types for unannotated restrictions.
//!
//! Types are nodes in a union-find graph. Cyclic graphs come from
//! recursive types in the context; `dual` nodes are pushed inwards lazily
//! once their argument is known.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::diag::Diagnostic;
use crate::duality::complement;
use crate::env::TypeEnv;
use crate::name::{Label, Name};
use crate::process::{Annot, BinOp, Expr, Process};
use crate::types::{SessionType, TyVar, TypeExpr};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Node {
    Var,
    Link(NodeId),
    Dual(NodeId),
    End,
    Send(NodeId, NodeId),
    Recv(NodeId, NodeId),
    Select(BTreeMap<Label, NodeId>, bool),
    Branch(BTreeMap<Label, NodeId>, bool),
    Shared(NodeId),
    Unit,
    Base(String),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct InferOptions {
    /// Allow cyclic solutions, read back as recursive types.
    pub rec_types: bool,
}

/// Constraint store and unifier.
#[derive(Debug, Default)]
pub struct Unifier {
    nodes: Vec<Node>,
    dual_memo: HashMap<NodeId, NodeId>,
    rec_types: bool,
}

fn fail(msg: String) -> Diagnostic {
    Diagnostic::error("unify", msg)
}

impl Unifier {
    pub fn new(opts: InferOptions) -> Self {
        Unifier {
            rec_types: opts.rec_types,
            ..Default::default()
        }
    }

    fn push(&mut self, n: Node) -> NodeId {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    pub fn fresh(&mut self) -> NodeId {
        self.push(Node::Var)
    }

    fn find(&mut self, mut n: NodeId) -> NodeId {
        let mut path = Vec::new();
        while let Node::Link(m) = self.nodes[n] {
            path.push(n);
            n = m;
        }
        for p in path {
            self.nodes[p] = Node::Link(n);
        }
        n
    }

    /// Finds the representative and pushes a known dual inwards.
    fn resolve(&mut self, n: NodeId) -> NodeId {
        let mut r = self.find(n);
        while let Node::Dual(inner) = self.nodes[r] {
            let i = self.resolve(inner);
            match self.nodes[i] {
                Node::Var => return r,
                Node::Dual(j) => {
                    self.nodes[r] = Node::Link(j);
                }
                _ => {
                    let d = self.dual_of(i);
                    self.nodes[r] = Node::Link(d);
                }
            }
            r = self.find(r);
        }
        r
    }

    /// Node for the dual of `n`; continuations are dualised, payloads kept.
    pub fn dual_constraint(&mut self, n: NodeId) -> NodeId {
        let r = self.resolve(n);
        match self.nodes[r] {
            Node::Var => self.push(Node::Dual(r)),
            _ => self.dual_of(r),
        }
    }

    fn dual_of(&mut self, r: NodeId) -> NodeId {
        if let Some(&d) = self.dual_memo.get(&r) {
            return d;
        }
        let d = self.fresh();
        self.dual_memo.insert(r, d);
        self.dual_memo.insert(d, r);
        let node = match self.nodes[r].clone() {
            Node::Send(p, c) => Node::Recv(p, self.dual_constraint(c)),
            Node::Recv(p, c) => Node::Send(p, self.dual_constraint(c)),
            Node::Select(m, o) => Node::Branch(self.dual_map(m), o),
            Node::Branch(m, o) => Node::Select(self.dual_map(m), o),
            Node::Var => Node::Dual(r),
            Node::Dual(i) => Node::Link(i),
            other => other,
        };
        self.nodes[d] = node;
        d
    }

    fn dual_map(&mut self, m: BTreeMap<Label, NodeId>) -> BTreeMap<Label, NodeId> {
        m.into_iter().map(|(l, c)| (l, self.dual_constraint(c))).collect()
    }

    fn occurs(&mut self, v: NodeId, n: NodeId) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![n];
        while let Some(m) = stack.pop() {
            let r = self.find(m);
            if r == v {
                return true;
            }
            if !seen.insert(r) {
                continue;
            }
            stack.extend(children(&self.nodes[r]));
        }
        false
    }

    fn bind(&mut self, v: NodeId, n: NodeId) -> Result<(), Diagnostic> {
        if !self.rec_types && self.occurs(v, n) {
            return Err(fail("infinite type; recursive solutions need --rec-types".into()));
        }
        self.nodes[v] = Node::Link(n);
        Ok(())
    }

    pub fn unify(&mut self, a: NodeId, b: NodeId) -> Result<(), Diagnostic> {
        let (fa, fb) = (self.find(a), self.find(b));
        let dual_involved =
            matches!(self.nodes[fa], Node::Dual(_)) || matches!(self.nodes[fb], Node::Dual(_));
        self.unify_inner(a, b).map_err(|mut d| {
            if dual_involved {
                d.code = "duality-mismatch";
            }
            d
        })
    }

    fn unify_inner(&mut self, a: NodeId, b: NodeId) -> Result<(), Diagnostic> {
        let ra = self.resolve(a);
        let rb = self.resolve(b);
        if ra == rb {
            return Ok(());
        }
        let (na, nb) = (self.nodes[ra].clone(), self.nodes[rb].clone());
        match (na, nb) {
            (Node::Var, _) => self.bind(ra, rb),
            (_, Node::Var) => self.bind(rb, ra),
            (Node::Dual(x), Node::Dual(y)) => self.unify_inner(x, y),
            (Node::Dual(x), _) => {
                let d = self.dual_of(rb);
                self.nodes[ra] = Node::Link(rb);
                self.unify_inner(x, d)
            }
            (_, Node::Dual(_)) => self.unify_inner(b, a),
            (na, nb) => {
                self.nodes[ra] = Node::Link(rb);
                self.unify_structure(na, nb, rb)?;
                if let Some(da) = self.dual_memo.get(&ra).copied() {
                    let db = self.dual_of(rb);
                    self.unify_inner(da, db)?;
                }
                Ok(())
            }
        }
    }

    fn unify_structure(&mut self, na: Node, nb: Node, into: NodeId) -> Result<(), Diagnostic> {
        match (na, nb) {
            (Node::End, Node::End) | (Node::Unit, Node::Unit) => Ok(()),
            (Node::Base(x), Node::Base(y)) if x == y => Ok(()),
            (Node::Send(p, c), Node::Send(q, d)) | (Node::Recv(p, c), Node::Recv(q, d)) => {
                self.unify_inner(p, q)?;
                self.unify_inner(c, d)
            }
            (Node::Shared(p), Node::Shared(q)) => self.unify_inner(p, q),
            (Node::Select(m1, o1), Node::Select(m2, o2)) => {
                let m = self.unify_rows(m1, o1, m2, o2)?;
                self.nodes[into] = Node::Select(m, o1 && o2);
                Ok(())
            }
            (Node::Branch(m1, o1), Node::Branch(m2, o2)) => {
                let m = self.unify_rows(m1, o1, m2, o2)?;
                self.nodes[into] = Node::Branch(m, o1 && o2);
                Ok(())
            }
            (na, nb) => Err(fail(format!("cannot unify {} with {}", shape(&na), shape(&nb)))),
        }
    }

    fn unify_rows(
        &mut self,
        m1: BTreeMap<Label, NodeId>,
        o1: bool,
        m2: BTreeMap<Label, NodeId>,
        o2: bool,
    ) -> Result<BTreeMap<Label, NodeId>, Diagnostic> {
        if !o1 {
            if let Some(l) = m2.keys().find(|l| !m1.contains_key(*l)) {
                return Err(fail(format!("label {l} is not among the offered choices")));
            }
        }
        let mut out = m2.clone();
        for (l, c) in m1 {
            match m2.get(&l) {
                Some(&d) => self.unify_inner(c, d)?,
                None if o2 => {
                    out.insert(l, c);
                }
                None => return Err(fail(format!("label {l} is not among the offered choices"))),
            }
        }
        Ok(out)
    }

    fn session(&mut self, s: &SessionType, vars: &BTreeMap<TyVar, NodeId>) -> NodeId {
        match s {
            SessionType::End => self.push(Node::End),
            SessionType::Send(t, k) => {
                let (p, c) = (self.type_expr(t), self.session(k, vars));
                self.push(Node::Send(p, c))
            }
            SessionType::Recv(t, k) => {
                let (p, c) = (self.type_expr(t), self.session(k, vars));
                self.push(Node::Recv(p, c))
            }
            SessionType::Select(m) => {
                let m = m.iter().map(|(l, k)| (l.clone(), self.session(k, vars))).collect();
                self.push(Node::Select(m, false))
            }
            SessionType::Branch(m) => {
                let m = m.iter().map(|(l, k)| (l.clone(), self.session(k, vars))).collect();
                self.push(Node::Branch(m, false))
            }
            SessionType::Rec(x, body) => {
                let n = self.fresh();
                let mut inner = vars.clone();
                inner.insert(x.clone(), n);
                let b = self.session(body, &inner);
                self.nodes[n] = Node::Link(b);
                n
            }
            SessionType::Var(x) => vars.get(x).copied().unwrap_or_else(|| self.push(Node::End)),
        }
    }

    /// Node for a closed type.
    pub fn type_expr(&mut self, t: &TypeExpr) -> NodeId {
        match t {
            TypeExpr::Session(s) => self.session(s, &BTreeMap::new()),
            TypeExpr::Shared(t) => {
                let p = self.type_expr(t);
                self.push(Node::Shared(p))
            }
            TypeExpr::Unit => self.push(Node::Unit),
            TypeExpr::Base(b) => self.push(Node::Base(b.clone())),
        }
    }

    /// Reads a node back; unresolved variables default to `end`.
    pub fn read_type_expr(&mut self, n: NodeId) -> TypeExpr {
        let r = self.resolve(n);
        match self.nodes[r].clone() {
            Node::Shared(p) => TypeExpr::Shared(Box::new(self.read_type_expr(p))),
            Node::Unit => TypeExpr::Unit,
            Node::Base(b) => TypeExpr::Base(b),
            _ => TypeExpr::Session(self.read_session(r)),
        }
    }

    pub fn read_session(&mut self, n: NodeId) -> SessionType {
        let mut path = Vec::new();
        self.read_s(n, &mut path)
    }

    fn read_s(&mut self, n: NodeId, path: &mut Vec<(NodeId, TyVar, bool)>) -> SessionType {
        let r = self.resolve(n);
        if let Some(entry) = path.iter_mut().find(|e| e.0 == r) {
            entry.2 = true;
            return SessionType::Var(entry.1.clone());
        }
        let var = TyVar::from(format!("X{}", path.len()));
        path.push((r, var.clone(), false));
        let body = match self.nodes[r].clone() {
            Node::Send(p, c) => SessionType::Send(Box::new(self.read_type_expr(p)), Box::new(self.read_s(c, path))),
            Node::Recv(p, c) => SessionType::Recv(Box::new(self.read_type_expr(p)), Box::new(self.read_s(c, path))),
            Node::Select(m, _) => SessionType::Select(m.into_iter().map(|(l, c)| (l, self.read_s(c, path))).collect()),
            Node::Branch(m, _) => SessionType::Branch(m.into_iter().map(|(l, c)| (l, self.read_s(c, path))).collect()),
            _ => SessionType::End,
        };
        let (_, _, used) = path.pop().unwrap();
        if used {
            SessionType::Rec(var, Box::new(body))
        } else {
            body
        }
    }
}

fn children(n: &Node) -> Vec<NodeId> {
    match n {
        Node::Link(m) | Node::Dual(m) | Node::Shared(m) => vec![*m],
        Node::Send(p, c) | Node::Recv(p, c) => vec![*p, *c],
        Node::Select(m, _) | Node::Branch(m, _) => m.values().copied().collect(),
        _ => vec![],
    }
}

fn shape(n: &Node) -> &'static str {
    match n {
        Node::End => "end",
        Node::Send(..) => "an output type",
        Node::Recv(..) => "an input type",
        Node::Select(..) => "a selection",
        Node::Branch(..) => "a branching",
        Node::Shared(_) => "a shared channel type",
        Node::Unit => "unit",
        Node::Base(_) => "a base type",
        _ => "an unknown type",
    }
}

/// Type variables introduced for the restrictions of a process, in
/// pre-order.
#[derive(Debug, Default)]
pub struct Constraints {
    pub restrictions: Vec<NodeId>,
}

/// Walks `p` and records the typing constraints in `u`.
pub fn gen_constraints(
    u: &mut Unifier,
    env: &TypeEnv<TypeExpr>,
    p: &Process,
) -> Result<Constraints, Diagnostic> {
    let mut ctx = BTreeMap::new();
    let mut shared = BTreeSet::new();
    for (x, t) in env.iter() {
        ctx.insert(x.clone(), u.type_expr(t));
        if matches!(t, TypeExpr::Shared(_)) {
            shared.insert(x.clone());
        }
    }
    let mut out = Constraints::default();
    walk(u, &ctx, &shared, p, &mut out)?;
    Ok(out)
}

fn lookup(ctx: &BTreeMap<Name, NodeId>, x: &Name) -> Result<NodeId, Diagnostic> {
    ctx.get(x)
        .copied()
        .ok_or_else(|| Diagnostic::error("unknown-name", format!("{x} is not in scope")))
}

fn expr_node(u: &mut Unifier, ctx: &BTreeMap<Name, NodeId>, e: &Expr) -> Result<NodeId, Diagnostic> {
    let int = |u: &mut Unifier| u.push(Node::Base("Int".into()));
    let boolean = |u: &mut Unifier| u.push(Node::Base("Bool".into()));
    Ok(match e {
        Expr::Name(x) => lookup(ctx, x)?,
        Expr::Unit => u.push(Node::Unit),
        Expr::Int(_) => int(u),
        Expr::Bool(_) => boolean(u),
        Expr::Variant(..) => {
            return Err(Diagnostic::error("wrong-calculus", "variant value in a session process"))
        }
        Expr::BinOp(op, l, r) => {
            let (a, b) = (expr_node(u, ctx, l)?, expr_node(u, ctx, r)?);
            match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Lt | BinOp::Le => {
                    let i = int(u);
                    u.unify(a, i)?;
                    u.unify(b, i)?;
                    if op.is_arithmetic() { i } else { boolean(u) }
                }
                BinOp::And | BinOp::Or => {
                    let t = boolean(u);
                    u.unify(a, t)?;
                    u.unify(b, t)?;
                    t
                }
                BinOp::Eq | BinOp::Ne => {
                    u.unify(a, b)?;
                    boolean(u)
                }
            }
        }
    })
}

fn walk(
    u: &mut Unifier,
    ctx: &BTreeMap<Name, NodeId>,
    shared: &BTreeSet<Name>,
    p: &Process,
    out: &mut Constraints,
) -> Result<(), Diagnostic> {
    let mut ctx = ctx.clone();
    match p {
        Process::Nil => Ok(()),
        Process::Output { chan, payload, cont } => {
            let t = lookup(&ctx, chan)?;
            let v = expr_node(u, &ctx, &payload[0])?;
            if shared.contains(chan) {
                let s = u.push(Node::Shared(v));
                u.unify(t, s)?;
            } else {
                let c = u.fresh();
                let s = u.push(Node::Send(v, c));
                u.unify(t, s)?;
                ctx.insert(chan.clone(), c);
            }
            walk(u, &ctx, shared, cont, out)
        }
        Process::Input { chan, binders, cont } => {
            let t = lookup(&ctx, chan)?;
            let y = &binders[0];
            let v = u.fresh();
            if shared.contains(chan) {
                let s = u.push(Node::Shared(v));
                u.unify(t, s)?;
            } else {
                let c = u.fresh();
                let s = u.push(Node::Recv(v, c));
                u.unify(t, s)?;
                ctx.insert(chan.clone(), c);
            }
            ctx.insert(y.clone(), v);
            let mut inner = shared.clone();
            inner.remove(y);
            walk(u, &ctx, &inner, cont, out)
        }
        Process::Select { chan, label, cont } => {
            let t = lookup(&ctx, chan)?;
            let c = u.fresh();
            let s = u.push(Node::Select([(label.clone(), c)].into(), true));
            u.unify(t, s)?;
            ctx.insert(chan.clone(), c);
            walk(u, &ctx, shared, cont, out)
        }
        Process::Branch { chan, branches } => {
            let t = lookup(&ctx, chan)?;
            let cs: BTreeMap<Label, NodeId> = branches.keys().map(|l| (l.clone(), u.fresh())).collect();
            let s = u.push(Node::Branch(cs.clone(), false));
            u.unify(t, s)?;
            for (l, q) in branches {
                ctx.insert(chan.clone(), cs[l]);
                walk(u, &ctx, shared, q, out)?;
            }
            Ok(())
        }
        Process::Case { .. } => Err(Diagnostic::error("wrong-calculus", "case in a session process")),
        Process::Par(l, r) => {
            walk(u, &ctx, shared, l, out)?;
            walk(u, &ctx, shared, r, out)
        }
        Process::SessionRestrict { ends, ty, body } => {
            let x = match ty {
                Some(t) => u.session(t, &BTreeMap::new()),
                None => u.fresh(),
            };
            let y = match ty {
                Some(t) => u.session(&complement(t), &BTreeMap::new()),
                None => u.dual_constraint(x),
            };
            out.restrictions.push(x);
            ctx.insert(ends.0.clone(), x);
            ctx.insert(ends.1.clone(), y);
            let mut inner = shared.clone();
            inner.remove(&ends.0);
            inner.remove(&ends.1);
            walk(u, &ctx, &inner, body, out)
        }
        Process::Restrict { name, ty, body } => {
            let n = match ty {
                Some(Annot::Session(t)) => u.type_expr(t),
                Some(Annot::Pi(_)) => {
                    return Err(Diagnostic::error("wrong-calculus", "pi annotation in a session process"))
                }
                None => {
                    let v = u.fresh();
                    u.push(Node::Shared(v))
                }
            };
            out.restrictions.push(n);
            ctx.insert(name.clone(), n);
            let mut inner = shared.clone();
            inner.insert(name.clone());
            walk(u, &ctx, &inner, body, out)
        }
        Process::Replicated(q) => walk(u, &ctx, shared, q, out),
        Process::If { cond, then, otherwise } => {
            let c = expr_node(u, &ctx, cond)?;
            let b = u.push(Node::Base("Bool".into()));
            u.unify(c, b)?;
            walk(u, &ctx, shared, then, out)?;
            walk(u, &ctx, shared, otherwise, out)
        }
    }
}

/// Infers types for unannotated restrictions and returns the annotated
/// process. Existing annotations are kept.
pub fn infer_session_types(
    env: &TypeEnv<TypeExpr>,
    p: &Process,
    opts: InferOptions,
) -> Result<Process, Diagnostic> {
    let mut u = Unifier::new(opts);
    let cs = gen_constraints(&mut u, env, p)?;
    let mut next = cs.restrictions.into_iter();
    Ok(fill(&mut u, p, &mut next))
}

/// `infer_session_types` with default options.
pub fn annotate(env: &TypeEnv<TypeExpr>, p: &Process) -> Result<Process, Diagnostic> {
    infer_session_types(env, p, InferOptions::default())
}

fn fill(u: &mut Unifier, p: &Process, next: &mut impl Iterator<Item = NodeId>) -> Process {
    match p {
        Process::Nil => Process::Nil,
        Process::Output { chan, payload, cont } => Process::Output {
            chan: chan.clone(),
            payload: payload.clone(),
            cont: Box::new(fill(u, cont, next)),
        },
        Process::Input { chan, binders, cont } => Process::Input {
            chan: chan.clone(),
            binders: binders.clone(),
            cont: Box::new(fill(u, cont, next)),
        },
        Process::Select { chan, label, cont } => Process::Select {
            chan: chan.clone(),
            label: label.clone(),
            cont: Box::new(fill(u, cont, next)),
        },
        Process::Branch { chan, branches } => Process::Branch {
            chan: chan.clone(),
            branches: branches.iter().map(|(l, q)| (l.clone(), fill(u, q, next))).collect(),
        },
        Process::Case { scrutinee, branches } => Process::Case {
            scrutinee: scrutinee.clone(),
            branches: branches
                .iter()
                .map(|(l, (x, q))| (l.clone(), (x.clone(), fill(u, q, next))))
                .collect(),
        },
        Process::Par(l, r) => Process::par(fill(u, l, next), fill(u, r, next)),
        Process::SessionRestrict { ends, ty, body } => {
            let n = next.next().expect("restriction node");
            let ty = Some(ty.clone().unwrap_or_else(|| u.read_session(n)));
            Process::SessionRestrict {
                ends: ends.clone(),
                ty,
                body: Box::new(fill(u, body, next)),
            }
        }
        Process::Restrict { name, ty, body } => {
            let n = next.next().expect("restriction node");
            let ty = Some(ty.clone().unwrap_or_else(|| Annot::Session(u.read_type_expr(n))));
            Process::Restrict {
                name: name.clone(),
                ty,
                body: Box::new(fill(u, body, next)),
            }
        }
        Process::Replicated(q) => Process::Replicated(Box::new(fill(u, q, next))),
        Process::If { cond, then, otherwise } => Process::If {
            cond: cond.clone(),
            then: Box::new(fill(u, then, next)),
            otherwise: Box::new(fill(u, otherwise, next)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_process, parse_session_type};
    use crate::process::Calculus;

    fn infer(src: &str) -> Result<Process, Diagnostic> {
        annotate(&TypeEnv::new(), &parse_process(src, Calculus::Session).unwrap())
    }

    fn first_type(p: &Process) -> SessionType {
        match p {
            Process::SessionRestrict { ty: Some(t), .. } => t.clone(),
            _ => panic!("expected an annotated restriction"),
        }
    }

    #[test]
    fn infers_the_example_type() {
        let p = infer("new x y in x?(z1).x?(z2).x!<z1==z2>.0 | y!<3>.y!<5>.y?(eq).0").unwrap();
        assert_eq!(first_type(&p), parse_session_type("?Int.?Int.!Bool.end").unwrap());
    }

    #[test]
    fn selection_gets_the_offered_labels() {
        let p = infer("new x y in x <| a.x!<1>.0 | y |> {a: y?(n).0, b: 0}").unwrap();
        assert_eq!(first_type(&p), parse_session_type("+{a: !Int.end, b: end}").unwrap());
    }

    #[test]
    fn clash_is_reported() {
        let d = infer("new x y in x!<1>.0 | y!<2>.0").unwrap_err();
        assert_eq!(d.code, "duality-mismatch");
        let d = infer("new x y in x!<1>.x!<true && 1>.0 | y?(a).0").unwrap_err();
        assert_eq!(d.code, "unify");
    }

    #[test]
    fn infers_shared_channels() {
        let p = infer("new a in *a?(n).0 | a!<4>.0").unwrap();
        match p {
            Process::Restrict { ty: Some(Annot::Session(t)), .. } => {
                assert_eq!(t, TypeExpr::Shared(Box::new(TypeExpr::int())))
            }
            _ => panic!(),
        }
    }

    #[test]
    fn recursive_context_types_unify() {
        let t = parse_session_type("rec X.!Int.X").unwrap();
        let mut u = Unifier::new(InferOptions::default());
        let a = u.session(&t, &BTreeMap::new());
        let b = u.session(&parse_session_type("!Int.rec Y.!Int.Y").unwrap(), &BTreeMap::new());
        u.unify(a, b).unwrap();
        let back = u.read_session(a);
        assert!(crate::types::session_equiv(&back, &t));
    }

    #[test]
    fn cyclic_solutions_need_the_option() {
        let mut u = Unifier::new(InferOptions::default());
        let v = u.fresh();
        let i = u.push(Node::Base("Int".into()));
        let s = u.push(Node::Send(i, v));
        assert!(u.unify(v, s).is_err());
        let mut u = Unifier::new(InferOptions { rec_types: true });
        let v = u.fresh();
        let i = u.push(Node::Base("Int".into()));
        let s = u.push(Node::Send(i, v));
        u.unify(v, s).unwrap();
        assert_eq!(u.read_session(v), parse_session_type("rec X0.!Int.X0").unwrap());
    }
}
