//! Priority-based deadlock analysis for linear pi processes.
//!
//! Every linear channel type carries a priority; both capabilities of one
//! channel share it. An action blocks the actions in its continuation, so
//! the priority of its subject must be smaller than theirs. A channel type
//! carrying a linear channel must have a smaller priority than the carried
//! one. Payload types of connections used only by replicated inputs are
//! polymorphic: every use instantiates fresh priorities, together with the
//! relations the server body imposes between them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::binding::uniquify_primed;
use crate::check_pi::PiEnv;
use crate::check_session::{check_session, SessionEnv};
use crate::diag::Diagnostic;
use crate::encode::{encode_env, encode_process, shared_names, Renaming};
use crate::name::{Label, Name};
use crate::process::{Annot, Expr, Process};
use crate::types::{PiType, PriorityTerm};

pub type PVar = usize;

/// `rhs - lhs >= weight`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub lhs: PVar,
    pub rhs: PVar,
    pub weight: i64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PriorityConstraintSet {
    /// Display names of the variables.
    pub vars: Vec<String>,
    pub equalities: Vec<(PVar, PVar)>,
    pub constraints: Vec<Constraint>,
    zero: Option<PVar>,
}

impl PriorityConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: impl Into<String>) -> PVar {
        self.vars.push(name.into());
        self.vars.len() - 1
    }

    fn zero(&mut self) -> PVar {
        match self.zero {
            Some(z) => z,
            None => {
                let z = self.var("0");
                self.zero = Some(z);
                z
            }
        }
    }

    /// `a < b`
    pub fn less(&mut self, a: PVar, b: PVar, reason: impl Into<String>) {
        self.constraints.push(Constraint {
            lhs: a,
            rhs: b,
            weight: 1,
            reason: reason.into(),
        });
    }

    pub fn equal(&mut self, a: PVar, b: PVar) {
        if a != b {
            self.equalities.push((a, b));
        }
    }

    /// `b = a + k`
    pub fn offset(&mut self, a: PVar, b: PVar, k: i64, reason: impl Into<String>) {
        let reason = reason.into();
        self.constraints.push(Constraint {
            lhs: a,
            rhs: b,
            weight: k,
            reason: reason.clone(),
        });
        self.constraints.push(Constraint {
            lhs: b,
            rhs: a,
            weight: -k,
            reason,
        });
    }

    /// `a = k`
    pub fn constant(&mut self, a: PVar, k: i64) {
        let z = self.zero();
        self.offset(z, a, k, format!("{} = {k}", self.vars[a]));
    }

    pub fn is_zero(&self, v: PVar) -> bool {
        self.zero == Some(v)
    }
}

/// An unsatisfiable cycle of constraints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Unsat {
    pub cycle: Vec<Constraint>,
}

fn find(parent: &mut [PVar], mut v: PVar) -> PVar {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Integer solution of the constraint set: equalities are merged with
/// union-find, the remaining difference constraints are solved as a
/// longest-path problem with Bellman-Ford. Solutions are shifted so that
/// the smallest value is 0, or so that constants hold.
pub fn solve(cs: &PriorityConstraintSet) -> Result<Vec<i64>, Unsat> {
    let n = cs.vars.len();
    let mut parent: Vec<PVar> = (0..n).collect();
    for &(a, b) in &cs.equalities {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let edges: Vec<(PVar, PVar, i64, usize)> = cs
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| (find(&mut parent, c.lhs), find(&mut parent, c.rhs), c.weight, i))
        .collect();
    let mut dist = vec![0i64; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for _ in 0..=n {
        last = None;
        for &(a, b, w, i) in &edges {
            if dist[a] + w > dist[b] {
                dist[b] = dist[a] + w;
                pred[b] = Some(i);
                last = Some(b);
            }
        }
        if last.is_none() {
            break;
        }
    }
    if let Some(mut v) = last {
        for _ in 0..n {
            v = edges[pred[v].expect("relaxed")].0;
        }
        let start = v;
        let mut cycle = Vec::new();
        loop {
            let i = pred[v].expect("on cycle");
            cycle.push(cs.constraints[i].clone());
            v = edges[i].0;
            if v == start {
                break;
            }
        }
        cycle.reverse();
        return Err(Unsat { cycle });
    }
    let shift = match cs.zero {
        Some(z) => dist[find(&mut parent, z)],
        None => (0..n).map(|v| dist[find(&mut parent, v)]).min().unwrap_or(0),
    };
    Ok((0..n).map(|v| dist[find(&mut parent, v)] - shift).collect())
}

/// Checks an assignment against the constraints.
pub fn satisfies(cs: &PriorityConstraintSet, values: &[i64]) -> bool {
    cs.equalities.iter().all(|&(a, b)| values[a] == values[b])
        && cs.constraints.iter().all(|c| values[c.rhs] - values[c.lhs] >= c.weight)
}

/// Channel types with a priority variable on every linear channel.
#[derive(Clone, Debug)]
enum PT {
    Chan { prio: PVar, payload: Vec<PT> },
    Shared(usize),
    Variant(BTreeMap<Label, PT>),
    /// Not yet known; bound by the first use.
    Hole(usize),
    Other,
}

/// Payload template of a connection.
#[derive(Clone, Debug)]
struct Scheme {
    owner: Name,
    template: Vec<PT>,
    polymorphic: bool,
}

/// Relations between the priorities of a server's parameters, by position.
type Relations = BTreeMap<Name, Vec<(usize, usize, i64)>>;

const MAX_DEPTH: usize = 6;

struct Analysis<'a> {
    cs: PriorityConstraintSet,
    owner_of: Vec<Name>,
    holes: Vec<Option<PT>>,
    chans: Vec<(PVar, Vec<PT>, Name)>,
    schemes: Vec<Scheme>,
    ctx: BTreeMap<Name, PT>,
    named: BTreeMap<String, PVar>,
    /// Connections with an input outside replication.
    mono: &'a BTreeSet<Name>,
    relations: &'a Relations,
    blocks: Vec<(Name, Process)>,
    replicated: Vec<BTreeSet<Name>>,
}

impl Analysis<'_> {
    fn prio(&mut self, owner: &Name) -> PVar {
        self.owner_of.push(owner.clone());
        self.cs.var(format!("prio({owner})"))
    }

    fn named_var(&mut self, v: &str, owner: &Name) -> PVar {
        if let Some(&m) = self.named.get(v) {
            return m;
        }
        self.owner_of.push(owner.clone());
        let m = self.cs.var(v.to_string());
        self.named.insert(v.to_string(), m);
        m
    }

    fn hole(&mut self) -> PT {
        self.holes.push(None);
        PT::Hole(self.holes.len() - 1)
    }

    fn resolve(&self, t: &PT) -> PT {
        let mut t = t.clone();
        while let PT::Hole(h) = t {
            match &self.holes[h] {
                Some(u) => t = u.clone(),
                None => break,
            }
        }
        t
    }

    fn build(&mut self, t: &PiType, owner: &Name, top: bool, depth: usize) -> PT {
        if depth > MAX_DEPTH {
            return PT::Other;
        }
        match t.head() {
            PiType::Chan {
                input,
                output,
                payload,
                priority,
            } => {
                if !input.is_present() && !output.is_present() {
                    return PT::Other;
                }
                let prio = self.prio(owner);
                match priority {
                    Some(PriorityTerm::Const(k)) => self.cs.constant(prio, k),
                    Some(PriorityTerm::Var(v)) => {
                        let m = self.named_var(&v, owner);
                        self.cs.equal(prio, m);
                    }
                    Some(PriorityTerm::Offset(v, k)) => {
                        let m = self.named_var(&v, owner);
                        self.cs.offset(m, prio, k, format!("prio({owner}) = {v}{k:+}"));
                    }
                    None => {}
                }
                let ps: Vec<PT> = payload.iter().map(|p| self.build(p, owner, false, depth + 1)).collect();
                self.chans.push((prio, ps.clone(), owner.clone()));
                PT::Chan { prio, payload: ps }
            }
            PiType::Shared(payload) => {
                let template: Vec<PT> = payload.iter().map(|p| self.build(p, owner, false, depth + 1)).collect();
                self.schemes.push(Scheme {
                    owner: owner.clone(),
                    template,
                    polymorphic: top && !self.mono.contains(owner),
                });
                PT::Shared(self.schemes.len() - 1)
            }
            PiType::Variant(m) => PT::Variant(
                m.iter()
                    .map(|(l, t)| (l.clone(), self.build(t, owner, false, depth + 1)))
                    .collect(),
            ),
            _ => PT::Other,
        }
    }

    fn vars_of(&self, ts: &[PT], out: &mut Vec<PVar>, depth: usize) {
        if depth > MAX_DEPTH {
            return;
        }
        for t in ts {
            match self.resolve(t) {
                PT::Chan { prio, payload } => {
                    out.push(prio);
                    self.vars_of(&payload, out, depth + 1);
                }
                PT::Variant(m) => self.vars_of(&m.into_values().collect::<Vec<_>>(), out, depth + 1),
                _ => {}
            }
        }
    }

    fn copy(&mut self, t: &PT, map: &mut BTreeMap<PVar, PVar>, depth: usize) -> PT {
        if depth > MAX_DEPTH {
            return PT::Other;
        }
        match self.resolve(t) {
            PT::Chan { prio, payload } => {
                let p = match map.get(&prio) {
                    Some(&p) => p,
                    None => {
                        let owner = self.owner_of[prio].clone();
                        let p = self.prio(&owner);
                        map.insert(prio, p);
                        p
                    }
                };
                let payload: Vec<PT> = payload.iter().map(|x| self.copy(x, map, depth + 1)).collect();
                let owner = self.owner_of[p].clone();
                self.chans.push((p, payload.clone(), owner));
                PT::Chan { prio: p, payload }
            }
            PT::Variant(m) => PT::Variant(
                m.iter()
                    .map(|(l, x)| (l.clone(), self.copy(x, map, depth + 1)))
                    .collect(),
            ),
            other => other,
        }
    }

    /// Payload types for one use of a connection.
    fn instantiate(&mut self, scheme: usize) -> Vec<PT> {
        let s = self.schemes[scheme].clone();
        if !s.polymorphic {
            return s.template;
        }
        let mut params = Vec::new();
        self.vars_of(&s.template, &mut params, 0);
        let mut map = BTreeMap::new();
        let inst: Vec<PT> = s.template.iter().map(|t| self.copy(t, &mut map, 0)).collect();
        for c in self.cs.constraints.clone() {
            if let (Some(&a), Some(&b)) = (map.get(&c.lhs), map.get(&c.rhs)) {
                self.cs.constraints.push(Constraint { lhs: a, rhs: b, ..c });
            }
        }
        for (a, b) in self.cs.equalities.clone() {
            if let (Some(&a), Some(&b)) = (map.get(&a), map.get(&b)) {
                self.cs.equal(a, b);
            }
        }
        for &(i, j, w) in self.relations.get(&s.owner).into_iter().flatten() {
            let (Some(a), Some(b)) = (params.get(i), params.get(j)) else {
                continue;
            };
            if let (Some(&a), Some(&b)) = (map.get(a), map.get(b)) {
                self.cs.constraints.push(Constraint {
                    lhs: a,
                    rhs: b,
                    weight: w,
                    reason: format!("server {}", s.owner),
                });
            }
        }
        inst
    }

    fn unify(&mut self, a: &PT, b: &PT, depth: usize) {
        if depth > MAX_DEPTH {
            return;
        }
        match (self.resolve(a), self.resolve(b)) {
            (PT::Hole(h), PT::Hole(k)) if h == k => {}
            (PT::Hole(h), t) | (t, PT::Hole(h)) => self.holes[h] = Some(t),
            (PT::Chan { prio: p, payload: xs }, PT::Chan { prio: q, payload: ys }) => {
                self.cs.equal(p, q);
                for (x, y) in xs.iter().zip(&ys) {
                    self.unify(x, y, depth + 1);
                }
            }
            (PT::Variant(m), PT::Variant(n)) => {
                for (l, x) in &m {
                    if let Some(y) = n.get(l) {
                        self.unify(x, y, depth + 1);
                    }
                }
            }
            (PT::Shared(s), PT::Shared(t)) if s != t => {
                let (xs, ys) = (self.schemes[s].template.clone(), self.schemes[t].template.clone());
                for (x, y) in xs.iter().zip(&ys) {
                    self.unify(x, y, depth + 1);
                }
            }
            _ => {}
        }
    }

    fn value(&mut self, v: &Expr, t: &PT) {
        match v {
            Expr::Name(y) => {
                if let Some(u) = self.ctx.get(y).cloned() {
                    self.unify(&u, t, 0);
                }
            }
            Expr::Variant(l, w) => {
                let u = match self.resolve(t) {
                    PT::Variant(m) => m.get(l).cloned(),
                    PT::Hole(h) => {
                        let u = self.hole();
                        self.holes[h] = Some(PT::Variant([(l.clone(), u.clone())].into()));
                        Some(u)
                    }
                    _ => None,
                };
                if let Some(u) = u {
                    self.value(w, &u);
                }
            }
            _ => {}
        }
    }

    /// Payload types of a prefix on `x` with `arity` arguments.
    /// A replicated input on a connection sees the template itself.
    fn subject(&mut self, x: &Name, arity: usize, server: bool) -> Option<Vec<PT>> {
        match self.resolve(self.ctx.get(x)?) {
            PT::Chan { payload, .. } => Some(payload),
            PT::Shared(s) if server => Some(self.schemes[s].template.clone()),
            PT::Shared(s) => Some(self.instantiate(s)),
            PT::Hole(h) => {
                let prio = self.prio(x);
                let payload: Vec<PT> = (0..arity).map(|_| self.hole()).collect();
                self.chans.push((prio, payload.clone(), x.clone()));
                self.holes[h] = Some(PT::Chan {
                    prio,
                    payload: payload.clone(),
                });
                Some(payload)
            }
            _ => None,
        }
    }

    fn walk(&mut self, p: &Process) {
        self.walk_in(p, false)
    }

    fn walk_in(&mut self, p: &Process, server: bool) {
        match p {
            Process::Nil => {}
            Process::Output { chan, payload, cont } => {
                if let Some(ts) = self.subject(chan, payload.len(), false) {
                    for (v, t) in payload.iter().zip(&ts) {
                        self.value(v, t);
                    }
                }
                self.blocks.push((chan.clone(), (**cont).clone()));
                self.walk(cont);
            }
            Process::Input { chan, binders, cont } => {
                let ts = self.subject(chan, binders.len(), server);
                for (i, y) in binders.iter().enumerate() {
                    let t = match ts.as_ref().and_then(|ts| ts.get(i)) {
                        Some(t) => t.clone(),
                        None => self.hole(),
                    };
                    self.ctx.insert(y.clone(), t);
                }
                self.blocks.push((chan.clone(), (**cont).clone()));
                self.walk(cont);
            }
            Process::Case { scrutinee, branches } => {
                for (l, (x, q)) in branches {
                    let t = match scrutinee {
                        Expr::Name(y) => {
                            let t = self.ctx.get(y).cloned().unwrap_or(PT::Other);
                            match self.resolve(&t) {
                                PT::Variant(m) => m.get(l).cloned(),
                                _ => None,
                            }
                        }
                        Expr::Variant(k, w) if k == l => match &**w {
                            Expr::Name(y) => self.ctx.get(y).cloned(),
                            _ => None,
                        },
                        _ => None,
                    };
                    let t = t.unwrap_or_else(|| self.hole());
                    self.ctx.insert(x.clone(), t);
                    self.walk(q);
                }
            }
            Process::Par(l, r) => {
                self.walk(l);
                self.walk(r);
            }
            Process::Restrict { name, ty, body } => {
                let t = match ty {
                    Some(Annot::Pi(t)) => self.build(t, name, true, 0),
                    _ => self.hole(),
                };
                self.ctx.insert(name.clone(), t);
                self.walk(body);
            }
            Process::Replicated(q) => {
                self.replicated.push(crate::binding::free_names(q));
                self.walk_in(q, true);
            }
            Process::If { then, otherwise, .. } => {
                self.walk(then);
                self.walk(otherwise);
            }
            Process::Select { .. } | Process::Branch { .. } | Process::SessionRestrict { .. } => {}
        }
    }

    fn linear_prio(&self, x: &Name) -> Option<PVar> {
        match self.resolve(self.ctx.get(x)?) {
            PT::Chan { prio, .. } => Some(prio),
            _ => None,
        }
    }

    /// Subjects of the first linear actions of `p`, looking through prefixes
    /// on connections.
    fn first_actions(&self, p: &Process, out: &mut Vec<Name>) {
        match p {
            Process::Output { chan, cont, .. } | Process::Input { chan, cont, .. } => {
                if self.linear_prio(chan).is_some() {
                    out.push(chan.clone());
                } else {
                    self.first_actions(cont, out);
                }
            }
            Process::Case { branches, .. } => {
                for (_, q) in branches.values() {
                    self.first_actions(q, out);
                }
            }
            Process::Par(l, r) => {
                self.first_actions(l, out);
                self.first_actions(r, out);
            }
            Process::Restrict { body, .. } => self.first_actions(body, out),
            Process::If { then, otherwise, .. } => {
                self.first_actions(then, out);
                self.first_actions(otherwise, out);
            }
            _ => {}
        }
    }

    /// Ordering constraints generated after the walk, once holes are bound.
    fn finish(&mut self) {
        for (x, cont) in std::mem::take(&mut self.blocks) {
            let Some(px) = self.linear_prio(&x) else {
                continue;
            };
            let mut firsts = Vec::new();
            self.first_actions(&cont, &mut firsts);
            for z in firsts {
                if z == x {
                    continue;
                }
                if let Some(pz) = self.linear_prio(&z) {
                    self.cs.less(px, pz, format!("{x} blocks {z}"));
                }
            }
        }
        for (prio, payload, owner) in self.chans.clone() {
            for t in &payload {
                if let PT::Chan { prio: q, .. } = self.resolve(t) {
                    self.cs.less(prio, q, format!("{owner} carries a channel"));
                }
            }
        }
    }

    /// Longest-path relations between the parameters of every polymorphic
    /// server.
    fn server_relations(&self) -> Relations {
        let n = self.cs.vars.len();
        let mut out = Relations::new();
        let mut edges: Vec<(PVar, PVar, i64)> = self.cs.constraints.iter().map(|c| (c.lhs, c.rhs, c.weight)).collect();
        for &(a, b) in &self.cs.equalities {
            edges.push((a, b, 0));
            edges.push((b, a, 0));
        }
        for s in self.schemes.iter().filter(|s| s.polymorphic) {
            let mut params = Vec::new();
            self.vars_of(&s.template, &mut params, 0);
            let mut rel = Vec::new();
            for (i, &a) in params.iter().enumerate() {
                let mut dist: Vec<Option<i64>> = vec![None; n];
                dist[a] = Some(0);
                for _ in 0..n {
                    let mut changed = false;
                    for &(u, v, w) in &edges {
                        if let Some(d) = dist[u] {
                            if dist[v].is_none_or(|e| d + w > e) {
                                dist[v] = Some(d + w);
                                changed = true;
                            }
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                for (j, &b) in params.iter().enumerate() {
                    if i != j {
                        if let Some(d) = dist[b] {
                            rel.push((i, j, d));
                        }
                    }
                }
            }
            out.insert(s.owner.clone(), rel);
        }
        out
    }
}

/// Names with an input outside every replication.
fn plain_inputs(p: &Process, under_rep: bool, out: &mut BTreeSet<Name>) {
    match p {
        Process::Input { chan, cont, .. } => {
            if !under_rep {
                out.insert(chan.clone());
            }
            plain_inputs(cont, false, out);
        }
        Process::Replicated(q) => plain_inputs(q, true, out),
        Process::Output { cont, .. } | Process::Select { cont, .. } => plain_inputs(cont, false, out),
        Process::Par(l, r) => {
            plain_inputs(l, under_rep, out);
            plain_inputs(r, under_rep, out);
        }
        Process::Restrict { body, .. } | Process::SessionRestrict { body, .. } => plain_inputs(body, under_rep, out),
        Process::If { then, otherwise, .. } => {
            plain_inputs(then, under_rep, out);
            plain_inputs(otherwise, under_rep, out);
        }
        Process::Case { branches, .. } => {
            for (_, q) in branches.values() {
                plain_inputs(q, under_rep, out);
            }
        }
        Process::Branch { branches, .. } => {
            for q in branches.values() {
                plain_inputs(q, false, out);
            }
        }
        Process::Nil => {}
    }
}

/// An unsatisfiable priority cycle, with the channels on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeadlockDiagnostic {
    pub cycle: Vec<String>,
    /// `(m, n)` for each constraint `m < n` of the cycle, by channel.
    pub edges: Vec<(String, String)>,
    pub locations: Vec<Name>,
}

impl fmt::Display for DeadlockDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let locs: Vec<&str> = self.locations.iter().map(Name::as_str).collect();
        write!(f, "priority cycle through {}: {}", locs.join(", "), self.cycle.join("; "))
    }
}

impl From<DeadlockDiagnostic> for Diagnostic {
    fn from(d: DeadlockDiagnostic) -> Self {
        Diagnostic::error("deadlock", d.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeadlockError {
    Deadlock(DeadlockDiagnostic),
    Other(Diagnostic),
}

impl From<DeadlockError> for Diagnostic {
    fn from(e: DeadlockError) -> Self {
        match e {
            DeadlockError::Deadlock(d) => d.into(),
            DeadlockError::Other(d) => d,
        }
    }
}

/// Solved priorities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Priorities {
    pub channels: BTreeMap<Name, i64>,
    /// Connections whose payload priorities are instantiated per use.
    pub polymorphic: Vec<Name>,
}

/// Generated constraints with the priority variable of every channel name.
pub struct Generated {
    pub constraints: PriorityConstraintSet,
    pub channels: BTreeMap<Name, PVar>,
    pub polymorphic: Vec<Name>,
    owner_of: Vec<Name>,
}

/// Priority constraints of a pi process.
pub fn priority_constraints(env: &PiEnv, p: &Process) -> Result<Generated, Diagnostic> {
    let p = uniquify_primed(p);
    let mut mono = BTreeSet::new();
    plain_inputs(&p, false, &mut mono);
    let mut relations = Relations::new();
    for _ in 0..8 {
        let mut a = Analysis {
            cs: PriorityConstraintSet::new(),
            owner_of: Vec::new(),
            holes: Vec::new(),
            chans: Vec::new(),
            schemes: Vec::new(),
            ctx: BTreeMap::new(),
            named: BTreeMap::new(),
            mono: &mono,
            relations: &relations,
            blocks: Vec::new(),
            replicated: Vec::new(),
        };
        for (x, t) in env.iter() {
            let pt = a.build(t, x, true, 0);
            a.ctx.insert(x.clone(), pt);
        }
        a.walk(&p);
        a.finish();
        for names in &a.replicated {
            if let Some(x) = names.iter().find(|x| a.linear_prio(x).is_some()) {
                return Err(Diagnostic::error(
                    "replicated-linear",
                    format!("replicated process uses linear channel {x}"),
                ));
            }
        }
        let next = a.server_relations();
        if next == relations {
            let channels = a
                .ctx
                .keys()
                .filter_map(|x| a.linear_prio(x).map(|v| (x.clone(), v)))
                .collect();
            let mut polymorphic: Vec<Name> = a.schemes.iter().filter(|s| s.polymorphic).map(|s| s.owner.clone()).collect();
            polymorphic.dedup();
            // the zero variable has no owner
            let mut owner_of = a.owner_of;
            owner_of.resize(a.cs.vars.len(), Name::from("0"));
            return Ok(Generated {
                constraints: a.cs,
                channels,
                polymorphic,
                owner_of,
            });
        }
        relations = next;
    }
    Err(Diagnostic::error("deadlock", "server relations do not stabilise"))
}

/// Infers a priority for every linear channel of `p`, or reports a cycle.
pub fn infer_priorities(env: &PiEnv, p: &Process) -> Result<Priorities, DeadlockError> {
    let g = priority_constraints(env, p).map_err(DeadlockError::Other)?;
    match solve(&g.constraints) {
        Ok(values) => Ok(Priorities {
            channels: g.channels.iter().map(|(x, &v)| (x.clone(), values[v])).collect(),
            polymorphic: g.polymorphic,
        }),
        Err(Unsat { cycle }) => {
            let mut locations = Vec::new();
            for c in &cycle {
                for v in [c.lhs, c.rhs] {
                    let x = &g.owner_of[v];
                    if !g.constraints.is_zero(v) && !locations.contains(x) {
                        locations.push(x.clone());
                    }
                }
            }
            let edges = cycle
                .iter()
                .map(|c| (g.owner_of[c.lhs].to_string(), g.owner_of[c.rhs].to_string()))
                .collect();
            Err(DeadlockError::Deadlock(DeadlockDiagnostic {
                cycle: cycle.into_iter().map(|c| c.reason).collect(),
                edges,
                locations,
            }))
        }
    }
}

/// Deadlock check of a session process through its encoding. Channel names
/// in the result are mapped back to session endpoints.
pub fn check_deadlock_session(env: &SessionEnv, p: &Process) -> Result<Priorities, DeadlockError> {
    let p = crate::infer::annotate(env, p).map_err(DeadlockError::Other)?;
    check_session(env, &p).map_err(DeadlockError::Other)?;
    let shared = shared_names(env);
    let enc = encode_process(&p, &Renaming::new(), &shared, &env.names())
        .map_err(|e| DeadlockError::Other(e.into()))?;
    let penv = encode_env(env, &Renaming::new()).map_err(|e| DeadlockError::Other(e.into()))?;
    let back = |x: &Name| -> Vec<Name> { enc.origin.get(x).cloned().unwrap_or_else(|| vec![x.clone()]) };
    let joined = |x: &str| -> String {
        back(&Name::from(x)).iter().map(Name::as_str).collect::<Vec<_>>().join("/")
    };
    match infer_priorities(&penv, &enc.process) {
        Ok(pr) => {
            let mut channels = BTreeMap::new();
            for (x, v) in pr.channels {
                for y in back(&x) {
                    let e = channels.entry(y).or_insert(v);
                    *e = (*e).min(v);
                }
            }
            Ok(Priorities {
                channels,
                polymorphic: pr.polymorphic.iter().flat_map(back).collect(),
            })
        }
        Err(DeadlockError::Deadlock(d)) => {
            let mut locations: Vec<Name> = Vec::new();
            for x in &d.locations {
                for y in back(x) {
                    if !locations.contains(&y) {
                        locations.push(y);
                    }
                }
            }
            Err(DeadlockError::Deadlock(DeadlockDiagnostic {
                cycle: d
                    .cycle
                    .iter()
                    .map(|r| r.split(' ').map(joined).collect::<Vec<_>>().join(" "))
                    .collect(),
                edges: d.edges.iter().map(|(a, b)| (joined(a), joined(b))).collect(),
                locations,
            }))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TypeEnv;
    use crate::parse::{parse_pi_file, parse_session_file};

    fn pi(src: &str) -> Result<BTreeMap<Name, i64>, DeadlockError> {
        let f = parse_pi_file(src).unwrap();
        let env = TypeEnv::from_entries(f.assumptions).unwrap();
        infer_priorities(&env, &f.process).map(|p| p.channels)
    }

    fn session(src: &str) -> Result<BTreeMap<Name, i64>, DeadlockError> {
        let f = parse_session_file(src).unwrap();
        let env = TypeEnv::from_entries(f.assumptions).unwrap();
        check_deadlock_session(&env, &f.process).map(|p| p.channels)
    }

    /// Exhaustive search over small integer assignments.
    fn brute_force(cs: &PriorityConstraintSet, bound: i64) -> bool {
        let n = cs.vars.len();
        let mut vals = vec![0i64; n];
        loop {
            if satisfies(cs, &vals) {
                return true;
            }
            let mut i = 0;
            loop {
                if i == n {
                    return false;
                }
                vals[i] += 1;
                if vals[i] <= bound {
                    break;
                }
                vals[i] = 0;
                i += 1;
            }
        }
    }

    fn set(n: usize, less: &[(usize, usize)], eq: &[(usize, usize)]) -> PriorityConstraintSet {
        let mut cs = PriorityConstraintSet::new();
        for i in 0..n {
            cs.var(format!("v{i}"));
        }
        for &(a, b) in less {
            cs.less(a, b, format!("v{a} < v{b}"));
        }
        for &(a, b) in eq {
            cs.equal(a, b);
        }
        cs
    }

    #[test]
    fn solver_agrees_with_search() {
        let cases = [
            (set(2, &[(0, 1)], &[]), true),
            (set(2, &[(0, 1), (1, 0)], &[]), false),
            (set(3, &[(1, 2), (2, 0)], &[(0, 1)]), false),
            (set(3, &[(0, 1), (1, 2)], &[]), true),
        ];
        for (cs, sat) in cases {
            assert_eq!(brute_force(&cs, cs.vars.len() as i64), sat);
            match solve(&cs) {
                Ok(v) => {
                    assert!(sat);
                    assert!(satisfies(&cs, &v));
                }
                Err(u) => {
                    assert!(!sat);
                    assert!(!u.cycle.is_empty());
                }
            }
        }
    }

    #[test]
    fn constants_are_respected() {
        let mut cs = set(2, &[(0, 1)], &[]);
        cs.constant(1, 3);
        let v = solve(&cs).unwrap();
        assert_eq!(v[1], 3);
        assert!(v[0] < 3);
        cs.constant(0, 5);
        assert!(solve(&cs).is_err());
    }

    #[test]
    fn crossed_inputs_deadlock() {
        let e = pi("new x in new y in x?().y!<>.0 | y?().x!<>.0").unwrap_err();
        let DeadlockError::Deadlock(d) = e else {
            panic!("{e:?}")
        };
        assert!(d.locations.contains(&Name::from("x")));
        assert!(d.locations.contains(&Name::from("y")));
    }

    #[test]
    fn ordered_inputs_are_fine() {
        let m = pi("new x in new y in x?().y!<>.0 | x!<>.y?().0").unwrap();
        assert!(m[&Name::from("x")] < m[&Name::from("y")]);
        pi("new x in x!<1>.0 | x?(v).0").unwrap();
    }

    #[test]
    fn delegated_channel_has_higher_priority() {
        let m = pi("new x in new c in x!<c>.c!<1>.0 | x?(d).d?(v).0").unwrap();
        assert!(m[&Name::from("x")] < m[&Name::from("c")]);
    }

    #[test]
    fn recursive_server_is_polymorphic() {
        let src = "assume fact : #[Int, lin_o[Int]];
            *fact?(x, y).if x == 0 then y!<1>.0
              else (new z in (fact!<x - 1, z>.0 | z?(k).y!<x * k>.0))
            | new r in fact!<3, r>.r?(n).0";
        pi(src).unwrap();
    }

    #[test]
    fn server_relations_carry_to_clients() {
        let ok = "assume s : #[lin_i[Int], lin_o[Int]];
            *s?(a, b).a?(v).b!<v>.0
            | new p in new q in s!<p, q>.(p!<1>.0 | q?(w).0)";
        pi(ok).unwrap();
        let bad = "assume s : #[lin_i[Int], lin_o[Int]];
            *s?(a, b).a?(v).b!<v>.0
            | new p in new q in s!<p, q>.q?(w).p!<1>.0";
        assert!(matches!(pi(bad), Err(DeadlockError::Deadlock(_))));
    }

    #[test]
    fn replicated_linear_is_reported() {
        let e = pi("assume s : #[Int]; new x in (*s?(v).x!<v>.0 | x?(w).0)").unwrap_err();
        assert_eq!(Diagnostic::from(e).code, "replicated-linear");
    }

    #[test]
    fn session_example_is_deadlock_free() {
        session("new x y : ?Int.?Int.!Bool.end in x?(z1).x?(z2).x!<z1==z2>.0 | y!<3>.y!<5>.y?(eq).0").unwrap();
    }

    #[test]
    fn crossed_sessions_report_endpoints() {
        let e = session(
            "new x1 x2 in new y1 y2 in x1?(a).y1!<a>.0 | y2?(b).x2!<b>.0",
        )
        .unwrap_err();
        let DeadlockError::Deadlock(d) = e else {
            panic!("{e:?}")
        };
        for n in ["x1", "x2", "y1", "y2"] {
            assert!(d.locations.contains(&Name::from(n)), "{d:?}");
        }
    }
}
