//! Diagnostics shared by the parser and the analyses.

use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// 1-based line/column position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub start: Pos,
    pub end: Pos,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
        }
        write!(f, "{}:{}", self.start.line, self.start.col)
    }
}

/// Codes a [`Diagnostic`] may carry, with a one-line description each.
pub const CODES: &[(&str, &str)] = &[
    ("syntax", "malformed input text"),
    ("unguarded", "recursive type whose variable is not under a type constructor"),
    ("wrong-calculus", "construct not available in the selected calculus"),
    ("unknown-name", "name used without a binding or declaration"),
    ("linearity", "linear name left unused or used more than once"),
    ("type-mismatch", "value or channel used at an incompatible type"),
    ("duality-mismatch", "session restriction endpoints with non-dual types"),
    ("capability-missing", "linear channel used without the needed capability"),
    ("variant-label-mismatch", "case branches differ from the variant's labels"),
    ("linear-overlap", "linear name needed on both sides of a parallel composition"),
    ("annotation-required", "restriction whose type cannot be determined"),
    ("unify", "session type inference failed"),
    ("deadlock", "unsatisfiable priority constraints"),
    ("replicated-linear", "replicated process with free linear channels"),
    ("not-projectable", "multiparty type without a plain projection"),
    ("invalid-renaming", "renaming function violating freshness or identity on binders"),
    ("unmapped-name", "name outside the renaming function's domain"),
    ("io", "file could not be read"),
    ("correspondence", "source and encoded reductions do not correspond"),
    ("corpus", "corpus entries differ from their expectations"),
    ("encoding-disagrees", "session and encoded verdicts differ"),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>) -> Self {
        debug_assert!(CODES.iter().any(|(c, _)| *c == code), "unregistered code {code}");
        Diagnostic {
            severity: Severity::Error,
            span: None,
            code,
            message: message.into(),
        }
    }

    pub fn with_span(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }

    pub fn in_file(mut self, file: &str) -> Self {
        if let Some(s) = &mut self.span {
            s.file = Some(file.to_string());
        }
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        if let Some(span) = &self.span {
            write!(f, "{span}: ")?;
        }
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}

impl std::error::Error for Diagnostic {}
