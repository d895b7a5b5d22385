//! Recursive-descent parser for types, processes and source files.
//! The grammar is documented in `docs/grammar.md`.

use std::collections::BTreeMap;

use crate::diag::{Diagnostic, Pos, SourceSpan};
use crate::lexer::{tokenize, Tok, Token};
use crate::name::{Label, Name};
use crate::process::{Annot, BinOp, Calculus, Expr, Process};
use crate::types::{Capability, PiType, PriorityTerm, SessionType, TypeExpr};

const KEYWORDS: &[&str] = &[
    "new", "in", "case", "of", "if", "then", "else", "rec", "end", "true", "false", "assume",
];

/// A process together with the declared types of its free names.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SourceFile<T> {
    pub assumptions: Vec<(Name, T)>,
    pub process: Process,
}

pub type SessionFile = SourceFile<TypeExpr>;
pub type PiFile = SourceFile<PiType>;

pub fn parse_session_type(text: &str) -> Result<SessionType, Diagnostic> {
    let mut p = Parser::new(text)?;
    let t = p.top_session_type()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_type_expr(text: &str) -> Result<TypeExpr, Diagnostic> {
    let mut p = Parser::new(text)?;
    let t = p.top_type_expr()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_pi_type(text: &str) -> Result<PiType, Diagnostic> {
    let mut p = Parser::new(text)?;
    let t = p.top_pi_type()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_process(text: &str, calculus: Calculus) -> Result<Process, Diagnostic> {
    let mut p = Parser::new(text)?;
    p.calculus = calculus;
    let proc_ = p.process()?;
    p.expect_eof()?;
    Ok(proc_)
}

pub fn parse_session_file(text: &str) -> Result<SessionFile, Diagnostic> {
    let mut p = Parser::new(text)?;
    p.calculus = Calculus::Session;
    let mut assumptions = Vec::new();
    while p.at_keyword("assume") {
        p.bump();
        let x = p.name()?;
        p.expect(Tok::Colon)?;
        let t = p.top_type_expr()?;
        p.expect(Tok::Semi)?;
        assumptions.push((x, t));
    }
    let process = p.process()?;
    p.expect_eof()?;
    Ok(SourceFile { assumptions, process })
}

pub fn parse_pi_file(text: &str) -> Result<PiFile, Diagnostic> {
    let mut p = Parser::new(text)?;
    p.calculus = Calculus::Pi;
    let mut assumptions = Vec::new();
    while p.at_keyword("assume") {
        p.bump();
        let x = p.name()?;
        p.expect(Tok::Colon)?;
        let t = p.top_pi_type()?;
        p.expect(Tok::Semi)?;
        assumptions.push((x, t));
    }
    let process = p.process()?;
    p.expect_eof()?;
    Ok(SourceFile { assumptions, process })
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub(crate) calculus: Calculus,
}

impl Parser {
    pub(crate) fn new(text: &str) -> Result<Self, Diagnostic> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
            calculus: Calculus::Session,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn here(&self) -> Pos {
        self.toks[self.pos].start
    }

    pub(crate) fn span_from(&self, start: Pos) -> SourceSpan {
        let end = if self.pos > 0 { self.toks[self.pos - 1].end } else { start };
        SourceSpan {
            file: None,
            start,
            end: end.max(start),
        }
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error("syntax", msg).with_span(self.toks[self.pos].span())
    }

    pub(crate) fn unexpected(&self, wanted: &str) -> Diagnostic {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    pub(crate) fn expect(&mut self, t: Tok) -> Result<Token, Diagnostic> {
        if *self.peek() == t {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    pub(crate) fn expect_eof(&self) -> Result<(), Diagnostic> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    pub(crate) fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<(), Diagnostic> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> Result<String, Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub(crate) fn name(&mut self) -> Result<Name, Diagnostic> {
        self.ident("a name").map(Name::from)
    }

    pub(crate) fn label(&mut self) -> Result<Label, Diagnostic> {
        self.ident("a label").map(Label::new)
    }

    pub(crate) fn comma_list<T>(
        &mut self,
        close: Tok,
        mut item: impl FnMut(&mut Self) -> Result<T, Diagnostic>,
    ) -> Result<Vec<T>, Diagnostic> {
        let mut out = Vec::new();
        if *self.peek() == close {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                self.expect(close)?;
                return Ok(out);
            }
        }
    }

    fn labelled<T>(
        &mut self,
        close: Tok,
        mut item: impl FnMut(&mut Self) -> Result<T, Diagnostic>,
    ) -> Result<BTreeMap<Label, T>, Diagnostic> {
        let mut out = BTreeMap::new();
        let start = self.here();
        let entries = self.comma_list(close, |p| {
            let at = p.here();
            let l = p.label()?;
            p.expect(Tok::Colon)?;
            Ok((l, item(p)?, at))
        })?;
        for (l, t, at) in entries {
            if out.contains_key(&l) {
                return Err(Diagnostic::error("syntax", format!("duplicate label {l}"))
                    .with_span(SourceSpan { file: None, start: at, end: at }));
            }
            out.insert(l, t);
        }
        if out.is_empty() {
            return Err(Diagnostic::error("syntax", "empty label set").with_span(self.span_from(start)));
        }
        Ok(out)
    }

    // ---- session types ----

    fn top_session_type(&mut self) -> Result<SessionType, Diagnostic> {
        let start = self.here();
        let t = self.session_type()?;
        let span = self.span_from(start);
        if let Some(x) = t.free_vars().into_iter().next() {
            return Err(Diagnostic::error("syntax", format!("unbound type variable {x}")).with_span(span));
        }
        t.check_well_formed()
            .map_err(|e| Diagnostic::error("unguarded", e.to_string()).with_span(span))?;
        Ok(t)
    }

    fn top_type_expr(&mut self) -> Result<TypeExpr, Diagnostic> {
        let start = self.here();
        let t = self.type_expr()?;
        let span = self.span_from(start);
        let mut probe = &t;
        while let TypeExpr::Shared(inner) = probe {
            probe = inner;
        }
        if let TypeExpr::Session(s) = probe {
            if let Some(x) = s.free_vars().into_iter().next() {
                return Err(Diagnostic::error("syntax", format!("unbound type variable {x}")).with_span(span));
            }
        }
        t.check_guarded()
            .map_err(|e| Diagnostic::error("unguarded", e.to_string()).with_span(span))?;
        Ok(t)
    }

    fn session_type(&mut self) -> Result<SessionType, Diagnostic> {
        match self.peek().clone() {
            Tok::Bang | Tok::Quest => {
                let send = *self.peek() == Tok::Bang;
                self.bump();
                let payload = self.type_expr()?;
                self.expect(Tok::Dot)?;
                let cont = self.session_type()?;
                Ok(if send {
                    SessionType::send(payload, cont)
                } else {
                    SessionType::recv(payload, cont)
                })
            }
            Tok::Plus | Tok::Amp => {
                let select = *self.peek() == Tok::Plus;
                self.bump();
                self.expect(Tok::LBrace)?;
                let m = self.labelled(Tok::RBrace, |p| p.session_type())?;
                Ok(if select {
                    SessionType::Select(m)
                } else {
                    SessionType::Branch(m)
                })
            }
            Tok::LParen => {
                self.bump();
                let t = self.session_type()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) if s == "end" => {
                self.bump();
                Ok(SessionType::End)
            }
            Tok::Ident(s) if s == "rec" => {
                self.bump();
                let x = self.ident("a type variable")?;
                self.expect(Tok::Dot)?;
                let body = self.session_type()?;
                Ok(SessionType::rec(x, body))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && !is_base(&s) => {
                self.bump();
                Ok(SessionType::Var(s))
            }
            _ => Err(self.unexpected("a session type")),
        }
    }

    pub(crate) fn type_expr(&mut self) -> Result<TypeExpr, Diagnostic> {
        match self.peek().clone() {
            Tok::Hash => {
                self.bump();
                Ok(TypeExpr::Shared(Box::new(self.type_expr()?)))
            }
            Tok::Ident(s) if s == "Unit" => {
                self.bump();
                Ok(TypeExpr::Unit)
            }
            Tok::Ident(s) if is_base(&s) => {
                self.bump();
                Ok(TypeExpr::Base(s))
            }
            _ => Ok(TypeExpr::Session(self.session_type()?)),
        }
    }

    // ---- pi types ----

    fn top_pi_type(&mut self) -> Result<PiType, Diagnostic> {
        let start = self.here();
        let t = self.pi_type()?;
        let span = self.span_from(start);
        if let Some(x) = t.free_vars().into_iter().next() {
            return Err(Diagnostic::error("syntax", format!("unbound type variable {x}")).with_span(span));
        }
        t.check_guarded()
            .map_err(|e| Diagnostic::error("unguarded", e.to_string()).with_span(span))?;
        Ok(t)
    }

    fn pi_type(&mut self) -> Result<PiType, Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) if ["lin_i", "lin_o", "lin_io", "empty"].contains(&s.as_str()) => {
                self.bump();
                let (input, output) = match s.as_str() {
                    "lin_i" => (Capability::Present, Capability::Absent),
                    "lin_o" => (Capability::Absent, Capability::Present),
                    "lin_io" => (Capability::Present, Capability::Present),
                    _ => (Capability::Absent, Capability::Absent),
                };
                self.expect(Tok::LBrack)?;
                let payload = self.comma_list(Tok::RBrack, |p| p.pi_type())?;
                let priority = if *self.peek() == Tok::Caret {
                    self.bump();
                    Some(self.priority()?)
                } else {
                    None
                };
                Ok(PiType::Chan {
                    input,
                    output,
                    payload,
                    priority,
                })
            }
            Tok::Hash => {
                self.bump();
                self.expect(Tok::LBrack)?;
                Ok(PiType::Shared(self.comma_list(Tok::RBrack, |p| p.pi_type())?))
            }
            Tok::Lt => {
                self.bump();
                Ok(PiType::Variant(self.labelled(Tok::Gt, |p| p.pi_type())?))
            }
            Tok::LParen => {
                self.bump();
                let mut ts = self.comma_list(Tok::RParen, |p| p.pi_type())?;
                if ts.len() == 1 {
                    Ok(ts.pop().unwrap())
                } else {
                    Ok(PiType::Tuple(ts))
                }
            }
            Tok::Ident(s) if s == "Unit" => {
                self.bump();
                Ok(PiType::Unit)
            }
            Tok::Ident(s) if is_base(&s) => {
                self.bump();
                Ok(PiType::Base(s))
            }
            Tok::Ident(s) if s == "rec" => {
                self.bump();
                let x = self.ident("a type variable")?;
                self.expect(Tok::Dot)?;
                Ok(PiType::Rec(x, Box::new(self.pi_type()?)))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(PiType::Var(s))
            }
            _ => Err(self.unexpected("a pi type")),
        }
    }

    fn priority(&mut self) -> Result<PriorityTerm, Diagnostic> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(PriorityTerm::Const(n))
            }
            Tok::Ident(v) => {
                self.bump();
                Ok(PriorityTerm::Var(v))
            }
            Tok::LParen => {
                self.bump();
                let t = if *self.peek() == Tok::Minus {
                    self.bump();
                    match self.bump().tok {
                        Tok::Int(n) => PriorityTerm::Const(-n),
                        _ => return Err(self.error("expected an integer priority")),
                    }
                } else {
                    let v = self.ident("a priority variable")?;
                    let neg = match self.bump().tok {
                        Tok::Plus => false,
                        Tok::Minus => true,
                        _ => return Err(self.error("expected `+` or `-` in priority offset")),
                    };
                    match self.bump().tok {
                        Tok::Int(k) => PriorityTerm::Offset(v, if neg { -k } else { k }),
                        _ => return Err(self.error("expected an integer offset")),
                    }
                };
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected("a priority")),
        }
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> Result<Expr, Diagnostic> {
        self.expr_prec(1)
    }

    fn binop_here(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::AndAnd => BinOp::And,
            Tok::OrOr => BinOp::Or,
            _ => return None,
        })
    }

    fn expr_prec(&mut self, min: u8) -> Result<Expr, Diagnostic> {
        let mut lhs = self.expr_atom()?;
        while let Some(op) = self.binop_here() {
            let p = op.precedence();
            if p < min {
                break;
            }
            self.bump();
            let rhs = self.expr_prec(p + 1)?;
            lhs = Expr::binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn expr_atom(&mut self) -> Result<Expr, Diagnostic> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                match self.bump().tok {
                    Tok::Int(n) => Ok(Expr::Int(-n)),
                    _ => unreachable!(),
                }
            }
            Tok::Star => {
                self.bump();
                Ok(Expr::Unit)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(_) => {
                let at = self.here();
                let s = self.ident("a value")?;
                if *self.peek() == Tok::LParen {
                    if self.calculus == Calculus::Session {
                        return Err(Diagnostic::error("syntax", "variant values are not session-calculus values")
                            .with_span(SourceSpan { file: None, start: at, end: at }));
                    }
                    self.bump();
                    let v = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(Expr::Variant(Label::new(s), Box::new(v)))
                } else {
                    Ok(Expr::Name(Name::from(s)))
                }
            }
            _ => Err(self.unexpected("a value")),
        }
    }

    // ---- processes ----

    pub(crate) fn process(&mut self) -> Result<Process, Diagnostic> {
        let mut p = self.unary()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let q = self.unary()?;
            p = Process::par(p, q);
        }
        Ok(p)
    }

    fn continuation(&mut self) -> Result<Process, Diagnostic> {
        if *self.peek() == Tok::Dot {
            self.bump();
            self.unary()
        } else {
            Ok(Process::Nil)
        }
    }

    fn session_only(&self, what: &str) -> Result<(), Diagnostic> {
        if self.calculus == Calculus::Pi {
            Err(self.error(format!("{what} is not available in the pi calculus")))
        } else {
            Ok(())
        }
    }

    fn unary(&mut self) -> Result<Process, Diagnostic> {
        match self.peek().clone() {
            Tok::Int(0) => {
                self.bump();
                Ok(Process::Nil)
            }
            Tok::LParen => {
                self.bump();
                let p = self.process()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Star => {
                self.bump();
                Ok(Process::Replicated(Box::new(self.unary()?)))
            }
            Tok::Ident(s) if s == "new" => self.restriction(),
            Tok::Ident(s) if s == "if" => {
                self.bump();
                let cond = self.expr()?;
                self.expect_keyword("then")?;
                let then = self.unary()?;
                self.expect_keyword("else")?;
                let otherwise = self.unary()?;
                Ok(Process::If {
                    cond,
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                })
            }
            Tok::Ident(s) if s == "case" => {
                if self.calculus == Calculus::Session {
                    return Err(self.error("case is not available in the session calculus"));
                }
                self.bump();
                let scrutinee = self.expr()?;
                self.expect_keyword("of")?;
                self.expect(Tok::LBrace)?;
                let start = self.here();
                let entries = self.comma_list(Tok::RBrace, |p| {
                    let l = p.label()?;
                    p.expect(Tok::LParen)?;
                    let x = p.name()?;
                    p.expect(Tok::RParen)?;
                    p.expect(Tok::Gt)?;
                    Ok((l, x, p.process()?))
                })?;
                let mut branches = BTreeMap::new();
                for (l, x, q) in entries {
                    if branches.insert(l.clone(), (x, q)).is_some() {
                        return Err(Diagnostic::error("syntax", format!("duplicate case label {l}"))
                            .with_span(self.span_from(start)));
                    }
                }
                if branches.is_empty() {
                    return Err(Diagnostic::error("syntax", "case without branches").with_span(self.span_from(start)));
                }
                Ok(Process::Case { scrutinee, branches })
            }
            Tok::Ident(_) => {
                let chan = self.name()?;
                match self.peek().clone() {
                    Tok::Bang => {
                        self.bump();
                        self.expect(Tok::Lt)?;
                        let payload = self.comma_list(Tok::Gt, |p| p.expr_prec(1))?;
                        if self.calculus == Calculus::Session && payload.len() != 1 {
                            return Err(self.error("session outputs carry exactly one value"));
                        }
                        let cont = self.continuation()?;
                        Ok(Process::output(chan, payload, cont))
                    }
                    Tok::Quest => {
                        self.bump();
                        self.expect(Tok::LParen)?;
                        let start = self.here();
                        let binders = self.comma_list(Tok::RParen, |p| p.name())?;
                        if self.calculus == Calculus::Session && binders.len() != 1 {
                            return Err(self.error("session inputs bind exactly one name"));
                        }
                        for (i, b) in binders.iter().enumerate() {
                            if binders[..i].contains(b) {
                                return Err(Diagnostic::error("syntax", format!("{b} bound twice"))
                                    .with_span(self.span_from(start)));
                            }
                        }
                        let cont = self.continuation()?;
                        Ok(Process::input(chan, binders, cont))
                    }
                    Tok::SelectOp => {
                        self.session_only("selection")?;
                        self.bump();
                        let label = self.label()?;
                        let cont = self.continuation()?;
                        Ok(Process::select(chan, label, cont))
                    }
                    Tok::BranchOp => {
                        self.session_only("branching")?;
                        self.bump();
                        self.expect(Tok::LBrace)?;
                        let branches = self.labelled(Tok::RBrace, |p| p.process())?;
                        Ok(Process::Branch { chan, branches })
                    }
                    _ => Err(self.unexpected("`!`, `?`, `<|` or `|>`")),
                }
            }
            _ => Err(self.unexpected("a process")),
        }
    }

    fn restriction(&mut self) -> Result<Process, Diagnostic> {
        self.bump();
        let x = self.name()?;
        if matches!(self.peek(), Tok::Ident(s) if s != "in") {
            self.session_only("session restriction")?;
            let y = self.name()?;
            if x == y {
                return Err(self.error(format!("session restriction binds {x} twice")));
            }
            let ty = if *self.peek() == Tok::Colon {
                self.bump();
                Some(self.top_session_type()?)
            } else {
                None
            };
            self.expect_keyword("in")?;
            let body = self.process()?;
            return Ok(Process::session_restrict(x, y, ty, body));
        }
        let ty = if *self.peek() == Tok::Colon {
            self.bump();
            Some(match self.calculus {
                Calculus::Session => {
                    let start = self.here();
                    let t = self.top_type_expr()?;
                    if !matches!(t, TypeExpr::Shared(_)) {
                        return Err(Diagnostic::error("syntax", "channel restriction needs a # type")
                            .with_span(self.span_from(start)));
                    }
                    Annot::Session(t)
                }
                Calculus::Pi => Annot::Pi(self.top_pi_type()?),
            })
        } else {
            None
        };
        self.expect_keyword("in")?;
        let body = self.process()?;
        Ok(Process::restrict(x, ty, body))
    }
}

pub(crate) fn is_base(s: &str) -> bool {
    s == "Int" || s == "Bool"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binding::alpha_equiv;

    #[test]
    fn example_session_type() {
        let t = parse_session_type("?Int.?Int.!Bool.end").unwrap();
        let expected = SessionType::recv(
            TypeExpr::int(),
            SessionType::recv(TypeExpr::int(), SessionType::send(TypeExpr::bool(), SessionType::End)),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn select_type_round_trip() {
        let t = parse_session_type("+{l1: end, l2: !Int.end}").unwrap();
        assert!(matches!(&t, SessionType::Select(m) if m.len() == 2));
        assert_eq!(parse_session_type(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn unguarded_rejected_with_span() {
        let d = parse_session_type("rec X.X").unwrap_err();
        assert_eq!(d.code, "unguarded");
        assert!(d.span.is_some());
    }

    #[test]
    fn server_process() {
        let p = parse_process("x?(z1).x?(z2).x!<z1==z2>.0", Calculus::Session).unwrap();
        let expected = Process::input(
            "x",
            vec!["z1".into()],
            Process::input(
                "x",
                vec!["z2".into()],
                Process::output(
                    "x",
                    vec![Expr::binop(BinOp::Eq, Expr::name("z1"), Expr::name("z2"))],
                    Process::Nil,
                ),
            ),
        );
        assert_eq!(p, expected);
    }

    #[test]
    fn case_round_trip() {
        let p = parse_process("case y of { l1(c) > 0, l2(c) > c!<*>.0 }", Calculus::Pi).unwrap();
        assert!(matches!(&p, Process::Case { branches, .. } if branches.len() == 2));
        let q = parse_process(&p.to_string(), Calculus::Pi).unwrap();
        assert!(alpha_equiv(&p, &q));
    }

    #[test]
    fn session_restriction_rejected_in_pi_mode() {
        let d = parse_process("new x y in 0", Calculus::Pi).unwrap_err();
        assert_eq!(d.code, "syntax");
    }

    #[test]
    fn restriction_scopes_to_closing_paren() {
        let p = parse_process("(new x in x!<*>.0 | x?(y).0) | 0", Calculus::Pi).unwrap();
        match p {
            Process::Par(l, _) => assert!(matches!(*l, Process::Restrict { .. })),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pi_types_with_priorities() {
        let t = parse_pi_type("lin_i[Int, <a: Unit, b: empty[]>]^(m+1)").unwrap();
        assert_eq!(parse_pi_type(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn file_with_assumptions() {
        let f = parse_pi_file("assume s : lin_o[Int]; s!<1>").unwrap();
        assert_eq!(f.assumptions.len(), 1);
    }

    #[test]
    fn arithmetic_precedence() {
        let p = parse_process("y!<x * k - 1>", Calculus::Pi).unwrap();
        let e = match p {
            Process::Output { payload, .. } => payload[0].clone(),
            _ => unreachable!(),
        };
        assert_eq!(
            e,
            Expr::binop(
                BinOp::Sub,
                Expr::binop(BinOp::Mul, Expr::name("x"), Expr::name("k")),
                Expr::Int(1)
            )
        );
    }
}
