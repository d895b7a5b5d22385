//! Process terms of the session pi-calculus and the linear pi-calculus.
//!
//! Both calculi share one tree type; [`Calculus`] says which constructors
//! are admissible. Session terms never contain `Case` or variant values, and
//! pi terms never contain selection, branching or session restriction.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::name::{Label, Name};
use crate::types::{PiType, SessionType, TypeExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Calculus {
    Session,
    Pi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul => 5,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul)
    }
}

/// Values and ground expressions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Name(Name),
    Unit,
    Int(i64),
    Bool(bool),
    /// Variant value `l(v)`; pi calculus only.
    Variant(Label, Box<Expr>),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn name(s: &str) -> Self {
        Expr::Name(Name::from(s))
    }

    pub fn binop(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::BinOp(op, Box::new(l), Box::new(r))
    }

    pub fn variant(l: &str, v: Expr) -> Self {
        Expr::Variant(Label::from(l), Box::new(v))
    }

    pub fn as_name(&self) -> Option<&Name> {
        match self {
            Expr::Name(n) => Some(n),
            _ => None,
        }
    }

    /// A value is an expression with nothing left to evaluate.
    pub fn is_value(&self) -> bool {
        match self {
            Expr::BinOp(..) => false,
            Expr::Variant(_, v) => v.is_value(),
            _ => true,
        }
    }

    pub fn names(&self, out: &mut Vec<Name>) {
        match self {
            Expr::Name(n) => out.push(n.clone()),
            Expr::Variant(_, v) => v.names(out),
            Expr::BinOp(_, l, r) => {
                l.names(out);
                r.names(out);
            }
            _ => {}
        }
    }
}

/// Type annotation on a single-name restriction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Annot {
    /// Session calculus `new x : #T`.
    Session(TypeExpr),
    Pi(PiType),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Nil,
    /// `x!<e1,..,en>.P`; session outputs carry exactly one expression.
    Output {
        chan: Name,
        payload: Vec<Expr>,
        cont: Box<Process>,
    },
    /// `x?(y1,..,yn).P`; session inputs bind exactly one name.
    Input {
        chan: Name,
        binders: Vec<Name>,
        cont: Box<Process>,
    },
    Select {
        chan: Name,
        label: Label,
        cont: Box<Process>,
    },
    Branch {
        chan: Name,
        branches: BTreeMap<Label, Process>,
    },
    Case {
        scrutinee: Expr,
        branches: BTreeMap<Label, (Name, Process)>,
    },
    Par(Box<Process>, Box<Process>),
    /// `new x [: t] in P`
    Restrict {
        name: Name,
        ty: Option<Annot>,
        body: Box<Process>,
    },
    /// `new x y [: S] in P`; the annotation is the type of the first endpoint.
    SessionRestrict {
        ends: (Name, Name),
        ty: Option<SessionType>,
        body: Box<Process>,
    },
    Replicated(Box<Process>),
    If {
        cond: Expr,
        then: Box<Process>,
        otherwise: Box<Process>,
    },
}

impl Process {
    pub fn output(chan: impl Into<Name>, payload: Vec<Expr>, cont: Process) -> Self {
        Process::Output {
            chan: chan.into(),
            payload,
            cont: Box::new(cont),
        }
    }

    pub fn input(chan: impl Into<Name>, binders: Vec<Name>, cont: Process) -> Self {
        Process::Input {
            chan: chan.into(),
            binders,
            cont: Box::new(cont),
        }
    }

    pub fn select(chan: impl Into<Name>, label: impl Into<Label>, cont: Process) -> Self {
        Process::Select {
            chan: chan.into(),
            label: label.into(),
            cont: Box::new(cont),
        }
    }

    pub fn par(l: Process, r: Process) -> Self {
        Process::Par(Box::new(l), Box::new(r))
    }

    /// Right-nested parallel composition of `ps`; `0` when empty.
    pub fn par_all(ps: Vec<Process>) -> Self {
        let mut it = ps.into_iter().rev();
        match it.next() {
            None => Process::Nil,
            Some(last) => it.fold(last, |acc, p| Process::par(p, acc)),
        }
    }

    pub fn restrict(name: impl Into<Name>, ty: Option<Annot>, body: Process) -> Self {
        Process::Restrict {
            name: name.into(),
            ty,
            body: Box::new(body),
        }
    }

    pub fn session_restrict(
        x: impl Into<Name>,
        y: impl Into<Name>,
        ty: Option<SessionType>,
        body: Process,
    ) -> Self {
        Process::SessionRestrict {
            ends: (x.into(), y.into()),
            ty,
            body: Box::new(body),
        }
    }

    pub fn size(&self) -> usize {
        1 + match self {
            Process::Nil => 0,
            Process::Output { cont, .. }
            | Process::Input { cont, .. }
            | Process::Select { cont, .. } => cont.size(),
            Process::Branch { branches, .. } => branches.values().map(Process::size).sum(),
            Process::Case { branches, .. } => branches.values().map(|(_, p)| p.size()).sum(),
            Process::Par(l, r) => l.size() + r.size(),
            Process::Restrict { body, .. } | Process::SessionRestrict { body, .. } => body.size(),
            Process::Replicated(p) => p.size(),
            Process::If { then, otherwise, .. } => then.size() + otherwise.size(),
        }
    }

    /// Checks that every constructor belongs to `calculus` and that arities
    /// and binder lists are sensible. Returns a description of the first
    /// offending construct.
    pub fn validate(&self, calculus: Calculus) -> Result<(), String> {
        match self {
            Process::Nil => Ok(()),
            Process::Output { chan, payload, cont } => {
                if calculus == Calculus::Session && payload.len() != 1 {
                    return Err(format!("session output on {chan} must carry exactly one value"));
                }
                for e in payload {
                    validate_expr(e, calculus)?;
                }
                cont.validate(calculus)
            }
            Process::Input { chan, binders, cont } => {
                if calculus == Calculus::Session && binders.len() != 1 {
                    return Err(format!("session input on {chan} must bind exactly one name"));
                }
                for (i, b) in binders.iter().enumerate() {
                    if binders[..i].contains(b) {
                        return Err(format!("input on {chan} binds {b} twice"));
                    }
                }
                cont.validate(calculus)
            }
            Process::Select { chan, cont, .. } => {
                if calculus == Calculus::Pi {
                    return Err(format!("selection on {chan} is not a pi-calculus construct"));
                }
                cont.validate(calculus)
            }
            Process::Branch { chan, branches } => {
                if calculus == Calculus::Pi {
                    return Err(format!("branching on {chan} is not a pi-calculus construct"));
                }
                if branches.is_empty() {
                    return Err(format!("branching on {chan} offers no labels"));
                }
                branches.values().try_for_each(|p| p.validate(calculus))
            }
            Process::Case { scrutinee, branches } => {
                if calculus == Calculus::Session {
                    return Err("case is not a session-calculus construct".into());
                }
                if branches.is_empty() {
                    return Err("case without branches".into());
                }
                validate_expr(scrutinee, calculus)?;
                branches.values().try_for_each(|(_, p)| p.validate(calculus))
            }
            Process::Par(l, r) => {
                l.validate(calculus)?;
                r.validate(calculus)
            }
            Process::Restrict { name, ty, body } => {
                match (ty, calculus) {
                    (Some(Annot::Pi(_)), Calculus::Session) | (Some(Annot::Session(_)), Calculus::Pi) => {
                        return Err(format!("restriction of {name} carries a type of the wrong calculus"));
                    }
                    (Some(Annot::Session(t)), _) if !matches!(t, TypeExpr::Shared(_)) => {
                        return Err(format!("channel restriction of {name} needs a # type"));
                    }
                    _ => {}
                }
                body.validate(calculus)
            }
            Process::SessionRestrict { ends, body, .. } => {
                if calculus == Calculus::Pi {
                    return Err("session restriction is not a pi-calculus construct".into());
                }
                if ends.0 == ends.1 {
                    return Err(format!("session restriction binds {} twice", ends.0));
                }
                body.validate(calculus)
            }
            Process::Replicated(p) => p.validate(calculus),
            Process::If { cond, then, otherwise } => {
                validate_expr(cond, calculus)?;
                then.validate(calculus)?;
                otherwise.validate(calculus)
            }
        }
    }
}

fn validate_expr(e: &Expr, calculus: Calculus) -> Result<(), String> {
    match e {
        Expr::Variant(l, _) if calculus == Calculus::Session => {
            Err(format!("variant value {l}(..) is not a session-calculus value"))
        }
        Expr::Variant(_, v) => validate_expr(v, calculus),
        Expr::BinOp(_, l, r) => {
            validate_expr(l, calculus)?;
            validate_expr(r, calculus)
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_all_nests_to_the_right() {
        let p = Process::par_all(vec![Process::Nil, Process::Nil, Process::Nil]);
        assert_eq!(p, Process::par(Process::Nil, Process::par(Process::Nil, Process::Nil)));
        assert_eq!(Process::par_all(vec![]), Process::Nil);
    }

    #[test]
    fn calculus_validation() {
        let sel = Process::select("x", "l", Process::Nil);
        assert!(sel.validate(Calculus::Session).is_ok());
        assert!(sel.validate(Calculus::Pi).is_err());
        let pair = Process::output("x", vec![Expr::Unit, Expr::Unit], Process::Nil);
        assert!(pair.validate(Calculus::Pi).is_ok());
        assert!(pair.validate(Calculus::Session).is_err());
    }
}
