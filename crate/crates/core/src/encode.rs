//! The continuation-passing encoding of session types and processes into
//! linear pi types and processes, and its inverse on types.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::binding::{all_names, bound_names, free_names};
use crate::diag::Diagnostic;
use crate::env::{Linearity, TypeEnv};
use crate::name::{FreshSupply, Label, Name};
use crate::process::{Annot, Expr, Process};
use crate::types::{pi_equiv, Capability, PiType, SessionType, TypeExpr};

/// The renaming function threaded through the process encoding. Names
/// outside its domain are mapped to themselves.
pub type Renaming = BTreeMap<Name, Name>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("name {0} is outside the renaming function's domain")]
    UnmappedName(Name),
    #[error("invalid renaming: {0}")]
    InvalidRenaming(String),
    #[error("renaming merges linear names onto {0} that are not co-endpoints")]
    CollisionOnLinear(Name),
    #[error("malformed session process: {0}")]
    Malformed(String),
}

impl From<EncodeError> for Diagnostic {
    fn from(e: EncodeError) -> Self {
        let code = match e {
            EncodeError::UnmappedName(_) => "unmapped-name",
            EncodeError::Malformed(_) => "wrong-calculus",
            _ => "invalid-renaming",
        };
        Diagnostic::error(code, e.to_string())
    }
}

// ---------------------------------------------------------------- types

struct TypeEncoder {
    /// Recursive states on the current path: (state, variable, referenced).
    path: Vec<((SessionType, bool), String, bool)>,
    counter: usize,
}

/// `[[S]]`. Recursive types are encoded as the regular tree they denote:
/// a `rec` is introduced wherever a recursive state recurs on a path.
pub fn encode_type(s: &SessionType) -> PiType {
    TypeEncoder {
        path: Vec::new(),
        counter: 0,
    }
    .enc(s, false)
}

/// `[[T]]` for message types: homomorphic on `#T`, `Unit` and base types.
pub fn encode_type_expr(t: &TypeExpr) -> PiType {
    TypeEncoder {
        path: Vec::new(),
        counter: 0,
    }
    .enc_expr(t)
}

/// Type of the single pi channel replacing both endpoints of a session
/// whose first endpoint has type `s`.
pub fn restriction_type(s: &SessionType) -> PiType {
    match encode_type(s).head() {
        PiType::Chan {
            input: Capability::Absent,
            output: Capability::Absent,
            ..
        } => PiType::empty(),
        PiType::Chan { payload, .. } => PiType::lin_io(payload),
        other => other,
    }
}

impl TypeEncoder {
    fn enc_expr(&mut self, t: &TypeExpr) -> PiType {
        match t {
            TypeExpr::Session(s) => self.enc(s, false),
            TypeExpr::Shared(u) => PiType::Shared(vec![self.enc_expr(u)]),
            TypeExpr::Unit => PiType::Unit,
            TypeExpr::Base(b) => PiType::Base(b.clone()),
        }
    }

    /// Encodes `s`, or its dual when `dual` is set.
    fn enc(&mut self, s: &SessionType, dual: bool) -> PiType {
        if !matches!(s, SessionType::Rec(..)) {
            return self.enc_head(s, dual);
        }
        let key = (s.clone(), dual);
        if let Some(entry) = self.path.iter_mut().find(|(k, _, _)| *k == key) {
            entry.2 = true;
            return PiType::Var(entry.1.clone());
        }
        let var = format!("X{}", self.counter);
        self.counter += 1;
        self.path.push((key, var.clone(), false));
        let body = self.enc_head(&s.head(), dual);
        let (_, _, used) = self.path.pop().expect("pushed above");
        if used {
            PiType::Rec(var, Box::new(body))
        } else {
            body
        }
    }

    fn enc_head(&mut self, s: &SessionType, dual: bool) -> PiType {
        let cap = |input: bool| {
            let i = input != dual;
            (Capability::from_bool(i), Capability::from_bool(!i))
        };
        match s {
            SessionType::End => PiType::empty(),
            SessionType::Send(t, k) | SessionType::Recv(t, k) => {
                let send = matches!(s, SessionType::Send(..));
                let (input, output) = cap(!send);
                let payload = vec![self.enc_expr(t), self.enc(k, send)];
                PiType::chan(input, output, payload)
            }
            SessionType::Select(m) | SessionType::Branch(m) => {
                let select = matches!(s, SessionType::Select(..));
                let (input, output) = cap(!select);
                let variant = m.iter().map(|(l, k)| (l.clone(), self.enc(k, select))).collect();
                PiType::chan(input, output, vec![PiType::Variant(variant)])
            }
            // unguarded or open types have no encoding; keep the variable
            SessionType::Rec(x, _) | SessionType::Var(x) => PiType::Var(x.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("not the encoding of a session type: {0}")]
pub struct NotDecodable(pub String);

/// Left inverse of [`encode_type`].
pub fn decode_type(t: &PiType) -> Result<SessionType, NotDecodable> {
    TypeDecoder::default().dec(t, false)
}

/// Left inverse of [`encode_type_expr`].
pub fn decode_type_expr(t: &PiType) -> Result<TypeExpr, NotDecodable> {
    TypeDecoder::default().dec_expr(t)
}

#[derive(Default)]
struct TypeDecoder {
    path: Vec<((PiType, bool), String, bool)>,
    counter: usize,
}

impl TypeDecoder {
    fn dec_expr(&mut self, t: &PiType) -> Result<TypeExpr, NotDecodable> {
        match t.head() {
            PiType::Chan { .. } => Ok(TypeExpr::Session(self.dec(t, false)?)),
            PiType::Shared(ts) if ts.len() == 1 => Ok(TypeExpr::Shared(Box::new(self.dec_expr(&ts[0])?))),
            PiType::Unit => Ok(TypeExpr::Unit),
            PiType::Base(b) => Ok(TypeExpr::Base(b)),
            other => Err(NotDecodable(format!("{other} is not a message type"))),
        }
    }

    fn dec(&mut self, t: &PiType, dual: bool) -> Result<SessionType, NotDecodable> {
        if !matches!(t, PiType::Rec(..)) {
            return self.dec_head(t, dual);
        }
        let key = (t.clone(), dual);
        if let Some(entry) = self.path.iter_mut().find(|(k, _, _)| *k == key) {
            entry.2 = true;
            return Ok(SessionType::Var(entry.1.clone()));
        }
        let h = t.head();
        if matches!(h, PiType::Rec(..)) {
            return Err(NotDecodable(format!("unguarded {t}")));
        }
        let var = format!("X{}", self.counter);
        self.counter += 1;
        self.path.push((key, var.clone(), false));
        let body = self.dec_head(&h, dual);
        let (_, _, used) = self.path.pop().expect("pushed above");
        let body = body?;
        Ok(if used { SessionType::Rec(var, Box::new(body)) } else { body })
    }

    fn dec_head(&mut self, t: &PiType, dual: bool) -> Result<SessionType, NotDecodable> {
        let PiType::Chan {
            input, output, payload, ..
        } = t
        else {
            return Err(NotDecodable(format!("{t} is not a linear channel type")));
        };
        let recv_like = match (input, output) {
            (Capability::Absent, Capability::Absent) => return Ok(SessionType::End),
            (Capability::Present, Capability::Present) => {
                return Err(NotDecodable(format!("{t} has both capabilities")))
            }
            (i, _) => i.is_present() != dual,
        };
        match payload.as_slice() {
            [u, c] => {
                let u = self.dec_expr(u)?;
                Ok(if recv_like {
                    SessionType::recv(u, self.dec(c, false)?)
                } else {
                    SessionType::send(u, self.dec(c, true)?)
                })
            }
            [v] => {
                let PiType::Variant(m) = v.head() else {
                    return Err(NotDecodable(format!("{t} carries a single non-variant payload")));
                };
                let mut out = BTreeMap::new();
                for (l, c) in &m {
                    let k = match c {
                        // local multiparty types: label carries a message too
                        PiType::Tuple(pair) if pair.len() == 2 => {
                            let u = self.dec_expr(&pair[0])?;
                            if recv_like {
                                SessionType::recv(u, self.dec(&pair[1], false)?)
                            } else {
                                SessionType::send(u, self.dec(&pair[1], true)?)
                            }
                        }
                        _ => self.dec(c, !recv_like)?,
                    };
                    out.insert(l.clone(), k);
                }
                Ok(if recv_like {
                    SessionType::Branch(out)
                } else {
                    SessionType::Select(out)
                })
            }
            _ => Err(NotDecodable(format!("{t} has payload arity {}", payload.len()))),
        }
    }
}

// ------------------------------------------------------------ processes

/// `[[v]]f`; every name of `v` must be in the domain of `f`.
pub fn encode_value(v: &Expr, f: &Renaming) -> Result<Expr, EncodeError> {
    Ok(match v {
        Expr::Name(x) => Expr::Name(f.get(x).cloned().ok_or_else(|| EncodeError::UnmappedName(x.clone()))?),
        Expr::Variant(l, w) => Expr::Variant(l.clone(), Box::new(encode_value(w, f)?)),
        Expr::BinOp(op, l, r) => Expr::binop(*op, encode_value(l, f)?, encode_value(r, f)?),
        other => other.clone(),
    })
}

/// Checks that `f` is a renaming function for `p` typed under a context
/// with names `env_names`: free names are mapped to themselves or to names
/// fresh for `p` and the context, and bound names are mapped to themselves.
pub fn validate_renaming(f: &Renaming, p: &Process, env_names: &BTreeSet<Name>) -> Result<(), EncodeError> {
    let all = all_names(p);
    let free = free_names(p);
    for b in bound_names(p) {
        if let Some(t) = f.get(&b) {
            if *t != b {
                return Err(EncodeError::InvalidRenaming(format!(
                    "bound name {b} is mapped to {t} instead of itself"
                )));
            }
        }
    }
    for x in &free {
        if let Some(t) = f.get(x) {
            if t != x && all.contains(t) {
                return Err(EncodeError::InvalidRenaming(format!(
                    "{x} is mapped to {t}, which occurs in the process"
                )));
            }
            if t != x && env_names.contains(t) && !f.contains_key(t) {
                return Err(EncodeError::InvalidRenaming(format!(
                    "{x} is mapped to {t}, which occurs in the typing context"
                )));
            }
        }
    }
    Ok(())
}

/// Result of encoding a process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoded {
    pub process: Process,
    /// The renaming function the encoding started from, total on the free
    /// names of the source.
    pub renaming: Renaming,
    /// For each pi name standing for session endpoints, the source names.
    pub origin: BTreeMap<Name, Vec<Name>>,
}

pub struct Encoder {
    supply: FreshSupply,
    origin: BTreeMap<Name, Vec<Name>>,
}

/// `[[P]]f`. `shared` lists the free names of connection (`#`) type; their
/// prefixes are encoded homomorphically. `env_names` are the names of the
/// typing context, avoided by fresh names.
pub fn encode_process(
    p: &Process,
    f: &Renaming,
    shared: &BTreeSet<Name>,
    env_names: &BTreeSet<Name>,
) -> Result<Encoded, EncodeError> {
    encode_process_from(p, f, shared, env_names, 0)
}

/// As [`encode_process`] with the fresh-name counter starting at `start`.
pub fn encode_process_from(
    p: &Process,
    f: &Renaming,
    shared: &BTreeSet<Name>,
    env_names: &BTreeSet<Name>,
    start: usize,
) -> Result<Encoded, EncodeError> {
    p.validate(crate::process::Calculus::Session).map_err(EncodeError::Malformed)?;
    validate_renaming(f, p, env_names)?;
    let mut supply = FreshSupply::starting_at("c", start);
    supply.avoid(all_names(p));
    supply.avoid(env_names.iter().cloned());
    supply.avoid(f.keys().cloned());
    supply.avoid(f.values().cloned());
    let mut full = f.clone();
    for x in free_names(p) {
        full.entry(x.clone()).or_insert(x);
    }
    let mut origin: BTreeMap<Name, Vec<Name>> = BTreeMap::new();
    for (x, t) in &full {
        origin.entry(t.clone()).or_default().push(x.clone());
    }
    let mut enc = Encoder { supply, origin };
    let process = enc.proc(p, &full, shared)?;
    Ok(Encoded {
        process,
        renaming: full,
        origin: enc.origin,
    })
}

impl Encoder {
    fn target(f: &Renaming, x: &Name) -> Name {
        f.get(x).cloned().unwrap_or_else(|| x.clone())
    }

    fn value(f: &Renaming, v: &Expr) -> Expr {
        match v {
            Expr::Name(x) => Expr::Name(Self::target(f, x)),
            Expr::Variant(l, w) => Expr::Variant(l.clone(), Box::new(Self::value(f, w))),
            Expr::BinOp(op, l, r) => Expr::binop(*op, Self::value(f, l), Self::value(f, r)),
            other => other.clone(),
        }
    }

    fn fresh_continuation(&mut self, fx: &Name, x: &Name) -> Name {
        let c = self.supply.next_name();
        let src = self.origin.get(fx).cloned().unwrap_or_else(|| vec![x.clone()]);
        self.origin.insert(c.clone(), src);
        c
    }

    fn without(f: &Renaming, binders: &[Name]) -> Renaming {
        let mut g = f.clone();
        for b in binders {
            g.remove(b);
        }
        g
    }

    fn unshare(shared: &BTreeSet<Name>, binders: &[Name]) -> BTreeSet<Name> {
        shared.iter().filter(|s| !binders.contains(s)).cloned().collect()
    }

    fn proc(&mut self, p: &Process, f: &Renaming, shared: &BTreeSet<Name>) -> Result<Process, EncodeError> {
        Ok(match p {
            Process::Nil => Process::Nil,
            Process::Output { chan, payload, cont } => {
                let fx = Self::target(f, chan);
                let vs: Vec<Expr> = payload.iter().map(|v| Self::value(f, v)).collect();
                if shared.contains(chan) {
                    Process::output(fx, vs, self.proc(cont, f, shared)?)
                } else {
                    let c = self.fresh_continuation(&fx, chan);
                    let mut g = f.clone();
                    g.insert(chan.clone(), c.clone());
                    let mut vs = vs;
                    vs.push(Expr::Name(c.clone()));
                    let k = self.proc(cont, &g, shared)?;
                    Process::restrict(c, None, Process::output(fx, vs, k))
                }
            }
            Process::Input { chan, binders, cont } => {
                let fx = Self::target(f, chan);
                let g = Self::without(f, binders);
                let sh = Self::unshare(shared, binders);
                if shared.contains(chan) {
                    Process::input(fx, binders.clone(), self.proc(cont, &g, &sh)?)
                } else {
                    let c = self.fresh_continuation(&fx, chan);
                    let mut g = g;
                    g.insert(chan.clone(), c.clone());
                    let mut bs = binders.clone();
                    bs.push(c);
                    Process::input(fx, bs, self.proc(cont, &g, &sh)?)
                }
            }
            Process::Select { chan, label, cont } => {
                let fx = Self::target(f, chan);
                let c = self.fresh_continuation(&fx, chan);
                let mut g = f.clone();
                g.insert(chan.clone(), c.clone());
                let k = self.proc(cont, &g, shared)?;
                Process::restrict(
                    c.clone(),
                    None,
                    Process::output(fx, vec![Expr::Variant(label.clone(), Box::new(Expr::Name(c)))], k),
                )
            }
            Process::Branch { chan, branches } => {
                let fx = Self::target(f, chan);
                let y = self.supply.next_name();
                let c = self.fresh_continuation(&fx, chan);
                let mut g = f.clone();
                g.insert(chan.clone(), c.clone());
                let mut arms: BTreeMap<Label, (Name, Process)> = BTreeMap::new();
                for (l, q) in branches {
                    arms.insert(l.clone(), (c.clone(), self.proc(q, &g, shared)?));
                }
                Process::input(
                    fx,
                    vec![y.clone()],
                    Process::Case {
                        scrutinee: Expr::Name(y),
                        branches: arms,
                    },
                )
            }
            Process::Case { .. } => return Err(EncodeError::Malformed("case in a session process".into())),
            Process::Par(l, r) => Process::par(self.proc(l, f, shared)?, self.proc(r, f, shared)?),
            Process::SessionRestrict { ends, ty, body } => {
                let c = self.supply.next_name();
                self.origin.insert(c.clone(), vec![ends.0.clone(), ends.1.clone()]);
                let mut g = f.clone();
                g.insert(ends.0.clone(), c.clone());
                g.insert(ends.1.clone(), c.clone());
                let sh = Self::unshare(shared, &[ends.0.clone(), ends.1.clone()]);
                let annot = ty.as_ref().map(|t| Annot::Pi(restriction_type(t)));
                Process::restrict(c, annot, self.proc(body, &g, &sh)?)
            }
            Process::Restrict { name, ty, body } => {
                let g = Self::without(f, std::slice::from_ref(name));
                let mut sh = shared.clone();
                sh.insert(name.clone());
                let annot = match ty {
                    Some(Annot::Session(t)) => Some(Annot::Pi(encode_type_expr(t))),
                    Some(Annot::Pi(_)) => return Err(EncodeError::Malformed("pi annotation in a session process".into())),
                    None => None,
                };
                Process::restrict(name.clone(), annot, self.proc(body, &g, &sh)?)
            }
            Process::Replicated(q) => Process::Replicated(Box::new(self.proc(q, f, shared)?)),
            Process::If { cond, then, otherwise } => Process::If {
                cond: Self::value(f, cond),
                then: Box::new(self.proc(then, f, shared)?),
                otherwise: Box::new(self.proc(otherwise, f, shared)?),
            },
        })
    }
}

/// `[[Gamma]]f`: each `x : T` becomes `f(x) : [[T]]`. Two linear entries may
/// share a target only if they are co-endpoints of one session, in which
/// case the target gets both capabilities.
pub fn encode_env(env: &TypeEnv<TypeExpr>, f: &Renaming) -> Result<TypeEnv<PiType>, EncodeError> {
    let mut out: TypeEnv<PiType> = TypeEnv::new();
    for (x, t) in env.iter() {
        let target = f.get(x).cloned().unwrap_or_else(|| x.clone());
        let et = encode_type_expr(t);
        match out.get(&target).cloned() {
            None => {
                out.insert(target, et);
            }
            Some(prev) => {
                let (pl, nl) = (Linearity::is_linear(&prev), Linearity::is_linear(&et));
                if !pl && !nl && pi_equiv(&prev, &et) {
                    continue;
                }
                if pl && nl && pi_equiv(&prev.swap_capabilities(), &et.head()) {
                    let joined = match prev.head() {
                        PiType::Chan { payload, .. } => PiType::lin_io(payload),
                        other => other,
                    };
                    out.insert(target, joined);
                    continue;
                }
                return Err(EncodeError::CollisionOnLinear(target));
            }
        }
    }
    Ok(out)
}

/// Names declared with a connection type; their prefixes are encoded
/// homomorphically.
pub fn shared_names(env: &TypeEnv<TypeExpr>) -> BTreeSet<Name> {
    env.iter()
        .filter(|(_, t)| matches!(t, TypeExpr::Shared(_)))
        .map(|(x, _)| x.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binding::alpha_equiv;
    use crate::duality::dual;
    use crate::parse::{parse_pi_type, parse_process, parse_session_type};
    use crate::process::Calculus;

    fn s(t: &str) -> SessionType {
        parse_session_type(t).unwrap()
    }

    #[test]
    fn end_is_empty() {
        assert_eq!(encode_type(&SessionType::End), PiType::empty());
    }

    #[test]
    fn example_types() {
        let t = s("?Int.?Int.!Bool.end");
        assert_eq!(
            encode_type(&t),
            parse_pi_type("lin_i[Int, lin_i[Int, lin_o[Bool, empty[]]]]").unwrap()
        );
        assert_eq!(
            encode_type(&dual(&t)),
            parse_pi_type("lin_o[Int, lin_i[Int, lin_o[Bool, empty[]]]]").unwrap()
        );
    }

    #[test]
    fn select_uses_dual_continuation() {
        assert_eq!(
            encode_type(&s("+{a: !Int.end}")),
            parse_pi_type("lin_o[<a: lin_i[Int, empty[]]>]").unwrap()
        );
    }

    #[test]
    fn recursive_types_round_trip() {
        for t in ["rec X.!Int.X", "rec X.&{a: ?Int.X, b: end}", "rec X.!X.end", "!(rec X.?Int.X).end"] {
            let t = s(t);
            let d = decode_type(&encode_type(&t)).unwrap();
            assert!(crate::types::session_equiv(&d, &t), "{t} decoded to {d}");
        }
    }

    #[test]
    fn decode_rejects_non_images() {
        let t = parse_pi_type("lin_i[Int, Int, Int]").unwrap();
        assert!(decode_type(&t).is_err());
        assert_eq!(decode_type(&PiType::empty()).unwrap(), SessionType::End);
    }

    #[test]
    fn server_encoding() {
        let p = parse_process("x?(z1).x?(z2).x!<z1==z2>.0", Calculus::Session).unwrap();
        let f: Renaming = [("x".into(), "s".into())].into();
        let e = encode_process(&p, &f, &BTreeSet::new(), &BTreeSet::new()).unwrap();
        let expected =
            parse_process("s?(z1,c).c?(z2,c').new c'' in c'!<z1==z2,c''>.0", Calculus::Pi).unwrap();
        assert!(alpha_equiv(&e.process, &expected), "{}", e.process);
    }

    #[test]
    fn renaming_must_be_fresh() {
        let p = parse_process("x!<*>.y?(z).0", Calculus::Session).unwrap();
        let bad: Renaming = [("x".into(), "y".into())].into();
        assert!(validate_renaming(&bad, &p, &BTreeSet::new()).is_err());
        let bound: Renaming = [("z".into(), "w".into())].into();
        assert!(validate_renaming(&bound, &p, &BTreeSet::new()).is_err());
        let id: Renaming = [("x".into(), "x".into())].into();
        assert!(validate_renaming(&id, &p, &BTreeSet::new()).is_ok());
    }

    #[test]
    fn env_encoding() {
        let env = TypeEnv::from_entries([("x".into(), TypeExpr::Session(SessionType::End)), ("n".into(), TypeExpr::int())]).unwrap();
        let e = encode_env(&env, &Renaming::new()).unwrap();
        assert_eq!(e.get(&"x".into()), Some(&PiType::empty()));
        assert_eq!(e.get(&"n".into()), Some(&PiType::int()));
    }
}
