//! Multiparty session types: global types, plain projection onto roles,
//! local types and their encoding into linear pi types.
//!
//! A global type `p -> q : { l(U).G, .. }` is a message from role `p` to
//! role `q`. Projecting onto `p` gives a selection, onto `q` a branching;
//! every other role must have the same projection in all branches.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::encode::encode_type_expr;
use crate::lexer::Tok;
use crate::name::Label;
use crate::parse::{is_base, Parser};
use crate::types::{PiType, TyVar, TypeExpr};

pub type Role = String;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Payload {
    Base(TypeExpr),
    Local(LocalType),
}

/// Local types `H`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LocalType {
    End,
    Var(TyVar),
    Rec(TyVar, Box<LocalType>),
    Select(BTreeMap<Label, (Payload, LocalType)>),
    Branch(BTreeMap<Label, (Payload, LocalType)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GlobalType {
    End,
    Var(TyVar),
    Rec(TyVar, Box<GlobalType>),
    Message {
        from: Role,
        to: Role,
        branches: BTreeMap<Label, (Payload, GlobalType)>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MpstFile {
    /// Declared roles, if the file has a `roles` line.
    pub roles: Option<Vec<Role>>,
    pub global: GlobalType,
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[error("cannot project onto {role}: branches {left} and {right} differ")]
pub struct NotProjectable {
    pub role: Role,
    pub left: Label,
    pub right: Label,
}

impl From<NotProjectable> for Diagnostic {
    fn from(e: NotProjectable) -> Self {
        Diagnostic::error("not-projectable", e.to_string())
    }
}

/// `[p : [[G|p]]]` for every role of `G`.
pub type RoleRecord = BTreeMap<Role, PiType>;

// ------------------------------------------------------------ printing

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Base(t) => write!(f, "{t}"),
            Payload::Local(h) => write!(f, "{h}"),
        }
    }
}

impl fmt::Display for LocalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalType::End => f.write_str("end"),
            LocalType::Var(x) => f.write_str(x),
            LocalType::Rec(x, h) => write!(f, "rec {x}.{h}"),
            LocalType::Select(m) | LocalType::Branch(m) => {
                let (sym, dir) = if matches!(self, LocalType::Select(_)) { ('+', '!') } else { ('&', '?') };
                write!(f, "{sym}{{")?;
                for (i, (l, (u, h))) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{dir}{l}({u}).{h}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl fmt::Display for GlobalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobalType::End => f.write_str("end"),
            GlobalType::Var(x) => f.write_str(x),
            GlobalType::Rec(x, g) => write!(f, "rec {x}.{g}"),
            GlobalType::Message { from, to, branches } => {
                write!(f, "{from} -> {to} : {{")?;
                for (i, (l, (u, g))) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}({u}).{g}")?;
                }
                f.write_str("}")
            }
        }
    }
}

// ------------------------------------------------------------ parsing

fn branches<T>(
    p: &mut Parser,
    mark: Option<Tok>,
    mut cont: impl FnMut(&mut Parser) -> Result<T, Diagnostic>,
) -> Result<BTreeMap<Label, (Payload, T)>, Diagnostic> {
    let braced = *p.peek() == Tok::LBrace;
    if braced {
        p.bump();
    }
    let mut out = BTreeMap::new();
    loop {
        if let Some(m) = &mark {
            p.expect(m.clone())?;
        }
        let l = p.label()?;
        p.expect(Tok::LParen)?;
        let u = payload(p)?;
        p.expect(Tok::RParen)?;
        p.expect(Tok::Dot)?;
        let k = cont(p)?;
        if out.insert(l.clone(), (u, k)).is_some() {
            return Err(p.error(format!("duplicate label {l}")));
        }
        if !braced {
            return Ok(out);
        }
        if *p.peek() == Tok::Comma {
            p.bump();
        } else {
            p.expect(Tok::RBrace)?;
            return Ok(out);
        }
    }
}

fn payload(p: &mut Parser) -> Result<Payload, Diagnostic> {
    match p.peek() {
        Tok::Hash => Ok(Payload::Base(p.type_expr()?)),
        Tok::Ident(s) if s == "Unit" || is_base(s) => Ok(Payload::Base(p.type_expr()?)),
        _ => Ok(Payload::Local(local(p)?)),
    }
}

fn local(p: &mut Parser) -> Result<LocalType, Diagnostic> {
    match p.peek().clone() {
        Tok::Plus => {
            p.bump();
            Ok(LocalType::Select(branches(p, Some(Tok::Bang), local)?))
        }
        Tok::Amp => {
            p.bump();
            Ok(LocalType::Branch(branches(p, Some(Tok::Quest), local)?))
        }
        Tok::LParen => {
            p.bump();
            let h = local(p)?;
            p.expect(Tok::RParen)?;
            Ok(h)
        }
        Tok::Ident(s) if s == "end" => {
            p.bump();
            Ok(LocalType::End)
        }
        Tok::Ident(s) if s == "rec" => {
            p.bump();
            let x = p.ident("a type variable")?;
            p.expect(Tok::Dot)?;
            Ok(LocalType::Rec(x, Box::new(local(p)?)))
        }
        Tok::Ident(_) => Ok(LocalType::Var(p.ident("a type variable")?)),
        _ => Err(p.unexpected("a local type")),
    }
}

fn global(p: &mut Parser) -> Result<GlobalType, Diagnostic> {
    match p.peek().clone() {
        Tok::LParen => {
            p.bump();
            let g = global(p)?;
            p.expect(Tok::RParen)?;
            Ok(g)
        }
        Tok::Ident(s) if s == "end" => {
            p.bump();
            Ok(GlobalType::End)
        }
        Tok::Ident(s) if s == "rec" => {
            p.bump();
            let x = p.ident("a type variable")?;
            p.expect(Tok::Dot)?;
            Ok(GlobalType::Rec(x, Box::new(global(p)?)))
        }
        Tok::Ident(_) if *p.peek_at(1) == Tok::Minus => {
            let from = p.ident("a role")?;
            p.expect(Tok::Minus)?;
            p.expect(Tok::Gt)?;
            let to = p.ident("a role")?;
            if from == to {
                return Err(p.error(format!("role {from} sends to itself")));
            }
            p.expect(Tok::Colon)?;
            let branches = branches(p, None, global)?;
            Ok(GlobalType::Message { from, to, branches })
        }
        Tok::Ident(_) => Ok(GlobalType::Var(p.ident("a type variable")?)),
        _ => Err(p.unexpected("a global type")),
    }
}

fn check_global(g: &GlobalType, bound: &mut Vec<TyVar>, guarded: bool) -> Result<(), String> {
    match g {
        GlobalType::End => Ok(()),
        GlobalType::Var(x) if !bound.contains(x) => Err(format!("unbound type variable {x}")),
        GlobalType::Var(x) if !guarded && bound.last() == Some(x) => Err(format!("unguarded recursion on {x}")),
        GlobalType::Var(_) => Ok(()),
        GlobalType::Rec(x, body) => {
            bound.push(x.clone());
            let r = check_global(body, bound, false);
            bound.pop();
            r
        }
        GlobalType::Message { branches, .. } => {
            for (u, k) in branches.values() {
                if let Payload::Local(h) = u {
                    check_local(h, &mut Vec::new(), true)?;
                }
                check_global(k, bound, true)?;
            }
            Ok(())
        }
    }
}

fn check_local(h: &LocalType, bound: &mut Vec<TyVar>, guarded: bool) -> Result<(), String> {
    match h {
        LocalType::End => Ok(()),
        LocalType::Var(x) if !bound.contains(x) => Err(format!("unbound type variable {x}")),
        LocalType::Var(x) if !guarded && bound.last() == Some(x) => Err(format!("unguarded recursion on {x}")),
        LocalType::Var(_) => Ok(()),
        LocalType::Rec(x, body) => {
            bound.push(x.clone());
            let r = check_local(body, bound, false);
            bound.pop();
            r
        }
        LocalType::Select(m) | LocalType::Branch(m) => {
            for (u, k) in m.values() {
                if let Payload::Local(h) = u {
                    check_local(h, &mut Vec::new(), true)?;
                }
                check_local(k, bound, true)?;
            }
            Ok(())
        }
    }
}

/// Parses a global type, optionally preceded by `roles p, q, ..;`.
pub fn parse_mpst(text: &str) -> Result<MpstFile, Diagnostic> {
    let mut p = Parser::new(text)?;
    let mut roles = None;
    if p.at_keyword("roles") && matches!(p.peek_at(1), Tok::Ident(_)) {
        p.bump();
        let mut rs = vec![p.ident("a role")?];
        while *p.peek() == Tok::Comma {
            p.bump();
            rs.push(p.ident("a role")?);
        }
        p.expect(Tok::Semi)?;
        roles = Some(rs);
    }
    let start = p.here();
    let g = global(&mut p)?;
    p.expect_eof()?;
    let span = p.span_from(start);
    check_global(&g, &mut Vec::new(), false).map_err(|e| {
        let code = if e.starts_with("unguarded") { "unguarded" } else { "syntax" };
        Diagnostic::error(code, e).with_span(span.clone())
    })?;
    if let Some(rs) = &roles {
        if let Some(r) = g.roles().into_iter().find(|r| !rs.contains(r)) {
            return Err(Diagnostic::error("syntax", format!("undeclared role {r}")).with_span(span));
        }
    }
    Ok(MpstFile { roles, global: g })
}

/// Parses a closed local type.
pub fn parse_local_type(text: &str) -> Result<LocalType, Diagnostic> {
    let mut p = Parser::new(text)?;
    let h = local(&mut p)?;
    p.expect_eof()?;
    check_local(&h, &mut Vec::new(), false).map_err(|e| Diagnostic::error("syntax", e))?;
    Ok(h)
}

// ------------------------------------------------------------ projection

impl GlobalType {
    /// Roles occurring in the type.
    pub fn roles(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        self.collect_roles(&mut out);
        out
    }

    fn collect_roles(&self, out: &mut BTreeSet<Role>) {
        match self {
            GlobalType::End | GlobalType::Var(_) => {}
            GlobalType::Rec(_, g) => g.collect_roles(out),
            GlobalType::Message { from, to, branches } => {
                out.insert(from.clone());
                out.insert(to.clone());
                for (_, g) in branches.values() {
                    g.collect_roles(out);
                }
            }
        }
    }
}

/// Plain projection `G|r`.
pub fn project(g: &GlobalType, r: &str) -> Result<LocalType, NotProjectable> {
    Ok(match g {
        GlobalType::End => LocalType::End,
        GlobalType::Var(x) => LocalType::Var(x.clone()),
        GlobalType::Rec(x, body) => {
            if !body.roles().contains(r) {
                return Ok(LocalType::End);
            }
            match project(body, r)? {
                LocalType::Var(y) if y == *x => LocalType::End,
                h => LocalType::Rec(x.clone(), Box::new(h)),
            }
        }
        GlobalType::Message { from, to, branches } => {
            let mut m = BTreeMap::new();
            for (l, (u, k)) in branches {
                m.insert(l.clone(), (u.clone(), project(k, r)?));
            }
            if from == r {
                LocalType::Select(m)
            } else if to == r {
                LocalType::Branch(m)
            } else {
                let mut it = m.into_iter();
                let (l0, (_, h0)) = it.next().expect("nonempty branches");
                for (l, (_, h)) in it {
                    if h != h0 {
                        return Err(NotProjectable {
                            role: r.to_string(),
                            left: l0,
                            right: l,
                        });
                    }
                }
                h0
            }
        }
    })
}

impl LocalType {
    /// Swaps selection and branching; payloads are kept.
    pub fn dual(&self) -> LocalType {
        let flip = |m: &BTreeMap<Label, (Payload, LocalType)>| {
            m.iter()
                .map(|(l, (u, h))| (l.clone(), (u.clone(), h.dual())))
                .collect()
        };
        match self {
            LocalType::End => LocalType::End,
            LocalType::Var(x) => LocalType::Var(x.clone()),
            LocalType::Rec(x, h) => LocalType::Rec(x.clone(), Box::new(h.dual())),
            LocalType::Select(m) => LocalType::Branch(flip(m)),
            LocalType::Branch(m) => LocalType::Select(flip(m)),
        }
    }

    pub fn subst(&self, x: &str, with: &LocalType) -> LocalType {
        let go = |m: &BTreeMap<Label, (Payload, LocalType)>| {
            m.iter()
                .map(|(l, (u, h))| (l.clone(), (u.clone(), h.subst(x, with))))
                .collect()
        };
        match self {
            LocalType::Var(y) if y == x => with.clone(),
            LocalType::Rec(y, h) if y != x => LocalType::Rec(y.clone(), Box::new(h.subst(x, with))),
            LocalType::Select(m) => LocalType::Select(go(m)),
            LocalType::Branch(m) => LocalType::Branch(go(m)),
            other => other.clone(),
        }
    }

    /// Unfolds outermost recursion.
    pub fn head(&self) -> LocalType {
        let mut h = self.clone();
        let mut fuel = 64;
        while let LocalType::Rec(x, body) = &h {
            if fuel == 0 {
                return LocalType::End;
            }
            fuel -= 1;
            h = body.subst(x, &h);
        }
        h
    }
}

// ------------------------------------------------------------ encoding

fn encode_payload(u: &Payload) -> PiType {
    match u {
        Payload::Base(t) => encode_type_expr(t),
        Payload::Local(h) => encode_local(h),
    }
}

/// `[[H]]`. Selection sends the dual of the continuation, as in the binary
/// encoding, so that the image is decodable and two-role projections are
/// dual. Recursion is encoded as a regular tree.
pub fn encode_local(h: &LocalType) -> PiType {
    let mut path: Vec<(LocalType, TyVar, bool)> = Vec::new();
    let mut counter = 0;
    enc(h, &mut path, &mut counter)
}

fn enc(h: &LocalType, path: &mut Vec<(LocalType, TyVar, bool)>, counter: &mut usize) -> PiType {
    if let LocalType::Rec(..) = h {
        if let Some(entry) = path.iter_mut().find(|(k, _, _)| k == h) {
            entry.2 = true;
            return PiType::Var(entry.1.clone());
        }
        let var = format!("X{counter}");
        *counter += 1;
        path.push((h.clone(), var.clone(), false));
        let body = enc(&h.head(), path, counter);
        let (_, _, used) = path.pop().expect("pushed above");
        return if used { PiType::Rec(var, Box::new(body)) } else { body };
    }
    let arms = |m: &BTreeMap<Label, (Payload, LocalType)>, select: bool, path: &mut Vec<_>, counter: &mut usize| {
        let v: BTreeMap<Label, PiType> = m
            .iter()
            .map(|(l, (u, k))| {
                let k = if select { k.dual() } else { k.clone() };
                (l.clone(), PiType::Tuple(vec![encode_payload(u), enc(&k, path, counter)]))
            })
            .collect();
        vec![PiType::Variant(v)]
    };
    match h {
        LocalType::End | LocalType::Var(_) | LocalType::Rec(..) => PiType::empty(),
        LocalType::Select(m) => PiType::lin_out(arms(m, true, path, counter)),
        LocalType::Branch(m) => PiType::lin_in(arms(m, false, path, counter)),
    }
}

/// Encodes the projection onto every role of `g`.
pub fn encode_mpst(g: &GlobalType) -> Result<RoleRecord, NotProjectable> {
    g.roles()
        .into_iter()
        .map(|r| {
            let h = project(g, &r)?;
            Ok((r, encode_local(&h)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::dual_constraint_holds;
    use crate::encode::decode_type;
    use crate::parse::parse_pi_type;

    fn g(src: &str) -> GlobalType {
        parse_mpst(src).unwrap().global
    }

    fn h(src: &str) -> LocalType {
        parse_local_type(src).unwrap()
    }

    #[test]
    fn displayed_cases() {
        assert_eq!(encode_local(&LocalType::End), PiType::empty());
        assert_eq!(encode_local(&h("+{!l(Int).end}")), parse_pi_type("lin_o[<l: (Int, empty[])>]").unwrap());
        assert_eq!(encode_local(&h("&{?l(Unit).end}")), parse_pi_type("lin_i[<l: (Unit, empty[])>]").unwrap());
    }

    #[test]
    fn ping_pong() {
        let t = g("p -> q : l(Int).end");
        assert_eq!(project(&t, "p").unwrap(), h("+{!l(Int).end}"));
        assert_eq!(project(&t, "q").unwrap(), h("&{?l(Int).end}"));
        assert_eq!(project(&t, "r").unwrap(), LocalType::End);
        let rec = encode_mpst(&t).unwrap();
        assert_eq!(rec.len(), 2);
        assert!(dual_constraint_holds(&rec["p"], &rec["q"]));
    }

    #[test]
    fn recursive_two_roles_stay_dual() {
        let t = g("rec X.p -> q : { more(Int).q -> p : ack(Bool).X, stop(Unit).end }");
        let rec = encode_mpst(&t).unwrap();
        assert!(dual_constraint_holds(&rec["p"], &rec["q"]));
        for t in rec.values() {
            decode_type(t).unwrap();
        }
    }

    #[test]
    fn pipeline_entries_decode() {
        let t = g("roles a, b, c; a -> b : m(Int).b -> c : m(Int).c -> a : done(Unit).end");
        let rec = encode_mpst(&t).unwrap();
        assert_eq!(rec.keys().cloned().collect::<Vec<_>>(), ["a", "b", "c"]);
        for t in rec.values() {
            decode_type(t).unwrap();
        }
    }

    #[test]
    fn divergent_bystander_is_not_projectable() {
        let t = g("p -> q : { a(Int).q -> r : x(Int).end, b(Int).q -> r : y(Int).end }");
        project(&t, "p").unwrap();
        project(&t, "q").unwrap();
        let e = project(&t, "r").unwrap_err();
        assert_eq!(e.role, "r");
        assert!(encode_mpst(&t).is_err());
    }

    #[test]
    fn undeclared_roles_are_rejected() {
        assert!(parse_mpst("roles p; p -> q : l(Int).end").is_err());
        assert!(parse_mpst("p -> p : l(Int).end").is_err());
        assert_eq!(parse_mpst("rec X.X").unwrap_err().code, "unguarded");
    }

    #[test]
    fn local_payloads_are_encoded() {
        let t = g("p -> q : deleg(+{!go(Int).end}).end");
        let rec = encode_mpst(&t).unwrap();
        assert!(dual_constraint_holds(&rec["p"], &rec["q"]));
        decode_type(&rec["p"]).unwrap();
    }

    #[test]
    fn printing_round_trips() {
        for src in ["+{!l(Int).end}", "rec X.&{?a(Bool).X, ?b(Unit).end}"] {
            assert_eq!(h(&h(src).to_string()), h(src));
        }
        let t = g("p -> q : { a(Int).end, b(Bool).end }");
        assert_eq!(g(&t.to_string()), t);
    }
}
