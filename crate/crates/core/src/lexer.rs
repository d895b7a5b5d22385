//! Tokeniser for the surface syntax.

use crate::diag::{Diagnostic, Pos, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Bang,
    Quest,
    Dot,
    Comma,
    Colon,
    Semi,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Lt,
    Gt,
    Le,
    EqEq,
    Ne,
    SelectOp,
    BranchOp,
    Bar,
    OrOr,
    Amp,
    AndAnd,
    Plus,
    Minus,
    Star,
    Hash,
    Caret,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Eof => "end of input".into(),
            t => format!("`{}`", t.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Bang => "!",
            Tok::Quest => "?",
            Tok::Dot => ".",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Le => "<=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::SelectOp => "<|",
            Tok::BranchOp => "|>",
            Tok::Bar => "|",
            Tok::OrOr => "||",
            Tok::Amp => "&",
            Tok::AndAnd => "&&",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Hash => "#",
            Tok::Caret => "^",
            _ => "",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub start: Pos,
    pub end: Pos,
}

impl Token {
    pub fn span(&self) -> SourceSpan {
        SourceSpan {
            file: None,
            start: self.start,
            end: self.end,
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = Pos { line, col };
        let mut len = 1;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                j += 1;
            }
            len = j - i;
            Tok::Ident(chars[i..j].iter().collect())
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            len = j - i;
            let text: String = chars[i..j].iter().collect();
            let n = text.parse::<i64>().map_err(|_| {
                Diagnostic::error("syntax", format!("integer literal {text} out of range")).with_span(SourceSpan {
                    file: None,
                    start,
                    end: Pos { line, col: col + len },
                })
            })?;
            Tok::Int(n)
        } else {
            let next = chars.get(i + 1).copied();
            let two = |t: Tok, len_: &mut usize| {
                *len_ = 2;
                t
            };
            match (c, next) {
                ('<', Some('|')) => two(Tok::SelectOp, &mut len),
                ('<', Some('=')) => two(Tok::Le, &mut len),
                ('|', Some('>')) => two(Tok::BranchOp, &mut len),
                ('|', Some('|')) => two(Tok::OrOr, &mut len),
                ('&', Some('&')) => two(Tok::AndAnd, &mut len),
                ('=', Some('=')) => two(Tok::EqEq, &mut len),
                ('!', Some('=')) => two(Tok::Ne, &mut len),
                ('!', _) => Tok::Bang,
                ('?', _) => Tok::Quest,
                ('.', _) => Tok::Dot,
                (',', _) => Tok::Comma,
                (':', _) => Tok::Colon,
                (';', _) => Tok::Semi,
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                ('[', _) => Tok::LBrack,
                (']', _) => Tok::RBrack,
                ('{', _) => Tok::LBrace,
                ('}', _) => Tok::RBrace,
                ('<', _) => Tok::Lt,
                ('>', _) => Tok::Gt,
                ('|', _) => Tok::Bar,
                ('&', _) => Tok::Amp,
                ('+', _) => Tok::Plus,
                ('-', _) => Tok::Minus,
                ('*', _) => Tok::Star,
                ('#', _) => Tok::Hash,
                ('^', _) => Tok::Caret,
                _ => {
                    return Err(Diagnostic::error("syntax", format!("unexpected character {c:?}")).with_span(
                        SourceSpan {
                            file: None,
                            start,
                            end: Pos { line, col: col + 1 },
                        },
                    ))
                }
            }
        };
        i += len;
        col += len;
        out.push(Token {
            tok,
            start,
            end: Pos { line, col },
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        start: Pos { line, col },
        end: Pos { line, col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_are_maximal_munch() {
        assert_eq!(
            toks("x <| l | y |> {}"),
            vec![
                Tok::Ident("x".into()),
                Tok::SelectOp,
                Tok::Ident("l".into()),
                Tok::Bar,
                Tok::Ident("y".into()),
                Tok::BranchOp,
                Tok::LBrace,
                Tok::RBrace,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_primes() {
        assert_eq!(toks("c' -- rest\n0"), vec![Tok::Ident("c'".into()), Tok::Int(0), Tok::Eof]);
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("0\n  x").unwrap();
        assert_eq!(t[1].start, Pos { line: 2, col: 3 });
    }
}
