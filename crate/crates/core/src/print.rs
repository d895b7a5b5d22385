//! Concrete ASCII syntax. `parse(print(x))` is alpha-equivalent to `x`.

use std::fmt::{self, Display, Formatter, Write};

use crate::name::Label;
use crate::process::{Annot, Expr, Process};
use crate::types::{Capability, PiType, PriorityTerm, SessionType, TypeExpr};

fn choice(f: &mut Formatter<'_>, sigil: char, m: &std::collections::BTreeMap<Label, SessionType>) -> fmt::Result {
    write!(f, "{sigil}{{")?;
    for (i, (l, s)) in m.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{l}: {s}")?;
    }
    f.write_char('}')
}

impl Display for SessionType {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            SessionType::End => f.write_str("end"),
            SessionType::Send(t, s) => write!(f, "!{}.{s}", Payload(t)),
            SessionType::Recv(t, s) => write!(f, "?{}.{s}", Payload(t)),
            SessionType::Select(m) => choice(f, '+', m),
            SessionType::Branch(m) => choice(f, '&', m),
            SessionType::Rec(x, b) => write!(f, "rec {x}.{b}"),
            SessionType::Var(x) => f.write_str(x),
        }
    }
}

/// Payload position: compound session types are parenthesised.
struct Payload<'a>(&'a TypeExpr);

impl Display for Payload<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.0 {
            TypeExpr::Session(s @ (SessionType::End | SessionType::Var(_))) => write!(f, "{s}"),
            TypeExpr::Session(s) => write!(f, "({s})"),
            other => write!(f, "{other}"),
        }
    }
}

impl Display for TypeExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Session(s) => write!(f, "{s}"),
            TypeExpr::Shared(t) => write!(f, "#{}", Payload(t)),
            TypeExpr::Unit => f.write_str("Unit"),
            TypeExpr::Base(b) => f.write_str(b),
        }
    }
}

impl Display for PriorityTerm {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            PriorityTerm::Const(n) if *n < 0 => write!(f, "({n})"),
            PriorityTerm::Const(n) => write!(f, "{n}"),
            PriorityTerm::Var(v) => f.write_str(v),
            PriorityTerm::Offset(v, k) if *k < 0 => write!(f, "({v}-{})", -k),
            PriorityTerm::Offset(v, k) => write!(f, "({v}+{k})"),
        }
    }
}

fn list<T: Display>(f: &mut Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl Display for PiType {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            PiType::Chan {
                input,
                output,
                payload,
                priority,
            } => {
                let head = match (input, output) {
                    (Capability::Present, Capability::Absent) => "lin_i",
                    (Capability::Absent, Capability::Present) => "lin_o",
                    (Capability::Present, Capability::Present) => "lin_io",
                    (Capability::Absent, Capability::Absent) => "empty",
                };
                write!(f, "{head}[")?;
                list(f, payload)?;
                f.write_char(']')?;
                if let Some(p) = priority {
                    write!(f, "^{p}")?;
                }
                Ok(())
            }
            PiType::Shared(ts) => {
                f.write_str("#[")?;
                list(f, ts)?;
                f.write_char(']')
            }
            PiType::Variant(m) => {
                f.write_char('<')?;
                for (i, (l, t)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {t}")?;
                }
                f.write_char('>')
            }
            PiType::Tuple(ts) => {
                f.write_char('(')?;
                list(f, ts)?;
                f.write_char(')')
            }
            PiType::Unit => f.write_str("Unit"),
            PiType::Base(b) => f.write_str(b),
            PiType::Rec(x, b) => write!(f, "rec {x}.{b}"),
            PiType::Var(x) => f.write_str(x),
        }
    }
}

impl Expr {
    fn fmt_prec(&self, f: &mut Formatter<'_>, ctx: u8) -> fmt::Result {
        match self {
            Expr::Name(n) => write!(f, "{n}"),
            Expr::Unit => f.write_char('*'),
            Expr::Int(n) if *n < 0 => write!(f, "({n})"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Variant(l, v) => {
                write!(f, "{l}(")?;
                v.fmt_prec(f, 0)?;
                f.write_char(')')
            }
            Expr::BinOp(op, l, r) => {
                let p = op.precedence();
                if p < ctx {
                    f.write_char('(')?;
                }
                // left-associative: the right operand needs strictly higher precedence
                l.fmt_prec(f, p)?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_prec(f, p + 1)?;
                if p < ctx {
                    f.write_char(')')?;
                }
                Ok(())
            }
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Display for Annot {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Annot::Session(t) => write!(f, "{t}"),
            Annot::Pi(t) => write!(f, "{t}"),
        }
    }
}

/// True if the printed form ends in a construct whose scope would swallow a
/// following `| Q`.
fn tail_open(p: &Process) -> bool {
    match p {
        Process::Restrict { .. } | Process::SessionRestrict { .. } => true,
        Process::Output { cont, .. } | Process::Input { cont, .. } | Process::Select { cont, .. } => {
            tail_open(cont)
        }
        Process::Replicated(q) => tail_open(q),
        _ => false,
    }
}

/// Continuation of a prefix or body of a replication.
struct Unary<'a>(&'a Process);

impl Display for Unary<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.0 {
            Process::Par(..) => write!(f, "({})", self.0),
            p => write!(f, "{p}"),
        }
    }
}

impl Display for Process {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Process::Nil => f.write_char('0'),
            Process::Output { chan, payload, cont } => {
                write!(f, "{chan}!<")?;
                list(f, payload)?;
                write!(f, ">.{}", Unary(cont))
            }
            Process::Input { chan, binders, cont } => {
                write!(f, "{chan}?(")?;
                list(f, binders)?;
                write!(f, ").{}", Unary(cont))
            }
            Process::Select { chan, label, cont } => write!(f, "{chan} <| {label}.{}", Unary(cont)),
            Process::Branch { chan, branches } => {
                write!(f, "{chan} |> {{")?;
                for (i, (l, p)) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {p}")?;
                }
                f.write_char('}')
            }
            Process::Case { scrutinee, branches } => {
                write!(f, "case {scrutinee} of {{ ")?;
                for (i, (l, (x, p))) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}({x}) > {p}")?;
                }
                f.write_str(" }")
            }
            Process::Par(l, r) => {
                if tail_open(l) {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                f.write_str(" | ")?;
                if matches!(**r, Process::Par(..)) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            Process::Restrict { name, ty, body } => {
                write!(f, "new {name}")?;
                if let Some(t) = ty {
                    write!(f, " : {t}")?;
                }
                write!(f, " in {body}")
            }
            Process::SessionRestrict { ends, ty, body } => {
                write!(f, "new {} {}", ends.0, ends.1)?;
                if let Some(t) = ty {
                    write!(f, " : {t}")?;
                }
                write!(f, " in {body}")
            }
            Process::Replicated(p) => write!(f, "*{}", Unary(p)),
            Process::If { cond, then, otherwise } => {
                write!(f, "if {cond} then ({then}) else ({otherwise})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_example_session_type() {
        let s = SessionType::recv(
            TypeExpr::int(),
            SessionType::recv(TypeExpr::int(), SessionType::send(TypeExpr::bool(), SessionType::End)),
        );
        assert_eq!(s.to_string(), "?Int.?Int.!Bool.end");
    }

    #[test]
    fn prints_pi_types() {
        let t = PiType::lin_in(vec![PiType::int(), PiType::lin_out(vec![PiType::bool(), PiType::empty()])]);
        assert_eq!(t.to_string(), "lin_i[Int, lin_o[Bool, empty[]]]");
    }

    #[test]
    fn variant_value() {
        assert_eq!(Expr::variant("l_3", Expr::Unit).to_string(), "l_3(*)");
    }

    #[test]
    fn inaction() {
        assert_eq!(Process::Nil.to_string(), "0");
    }

    #[test]
    fn restriction_on_left_of_par_is_parenthesised() {
        let p = Process::par(Process::restrict("x", None, Process::Nil), Process::Nil);
        assert_eq!(p.to_string(), "(new x in 0) | 0");
    }
}
