//! Runs a directory of example files against their `.expect` sidecars.
//!
//! A sidecar is a JSON object. Recognised fields:
//! `typed`, `code` (diagnostic code when ill-typed), `deadlock_free`,
//! `polymorphic` (names expected to get a priority scheme), `encoding`
//! (expected encoding of a session file, up to alpha-equivalence),
//! `projectable` and `roles` (multiparty files).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::binding::alpha_equiv;
use crate::check_pi::check_pi;
use crate::check_session::{check_session, orient};
use crate::deadlock::{check_deadlock_session, infer_priorities, DeadlockError};
use crate::diag::Diagnostic;
use crate::encode::{decode_type, encode_env, encode_process, shared_names, Renaming};
use crate::env::TypeEnv;
use crate::mpst::{encode_mpst, parse_mpst};
use crate::parse::{parse_pi_file, parse_process, parse_session_file};
use crate::process::{Calculus, Process};
use crate::types::TypeExpr;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub typed: Option<bool>,
    pub code: Option<String>,
    pub deadlock_free: Option<bool>,
    pub polymorphic: Option<Vec<String>>,
    pub encoding: Option<String>,
    pub projectable: Option<bool>,
    pub roles: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub file: String,
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CorpusReport {
    pub entries: Vec<Entry>,
}

impl CorpusReport {
    pub fn passed(&self) -> usize {
        self.entries.iter().filter(|e| e.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.entries.len() - self.passed()
    }
}

const EXTENSIONS: [&str; 3] = ["spi", "lpi", "mpst"];

fn io(path: &Path, e: std::io::Error) -> Diagnostic {
    Diagnostic::error("io", format!("{}: {e}", path.display()))
}

/// Every example file in `dir` with a recognised extension, sorted.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, Diagnostic> {
    let mut files = Vec::new();
    for e in std::fs::read_dir(dir).map_err(|e| io(dir, e))? {
        let path = e.map_err(|e| io(dir, e))?.path();
        if path
            .extension()
            .and_then(|x| x.to_str())
            .is_some_and(|x| EXTENSIONS.contains(&x))
        {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn run_corpus(dir: &Path) -> Result<CorpusReport, Diagnostic> {
    let mut report = CorpusReport::default();
    for path in corpus_files(dir)? {
        let mut sidecar = path.clone().into_os_string();
        sidecar.push(".expect");
        let sidecar = PathBuf::from(sidecar);
        let expect: Expectation = match std::fs::read_to_string(&sidecar) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| Diagnostic::error("syntax", format!("{}: {e}", sidecar.display())))?,
            Err(_) => Expectation::default(),
        };
        let text = std::fs::read_to_string(&path).map_err(|e| io(&path, e))?;
        let failures = match path.extension().and_then(|x| x.to_str()) {
            Some("spi") => run_session(&text, &expect),
            Some("lpi") => run_pi(&text, &expect),
            _ => run_mpst(&text, &expect),
        };
        report.entries.push(Entry {
            file: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            passed: failures.is_empty(),
            failures,
        });
    }
    Ok(report)
}

/// Typing result of `p` and of its encoding, after inference of missing
/// restriction types. Session restriction annotations count up to
/// orientation, as the encoding cannot tell the endpoints apart.
pub fn check_both(env: &TypeEnv<TypeExpr>, p: &Process) -> (Result<(), Diagnostic>, Result<(), Diagnostic>) {
    let (source, p) = match orient(env, p) {
        Ok(q) => (Ok(()), q),
        Err(d) => (Err(d), crate::infer::annotate(env, p).unwrap_or_else(|_| p.clone())),
    };
    let target = encode_process(&p, &Renaming::new(), &shared_names(env), &env.names())
        .and_then(|e| Ok((encode_env(env, &Renaming::new())?, e.process)))
        .map_err(Diagnostic::from)
        .and_then(|(penv, q)| check_pi(&penv, &q));
    (source, target)
}

fn typing(result: &Result<(), Diagnostic>, expect: &Expectation, failures: &mut Vec<String>) {
    if let Some(typed) = expect.typed {
        if result.is_ok() != typed {
            failures.push(match result {
                Ok(()) => "typed, expected an error".into(),
                Err(d) => format!("expected typed: {d}"),
            });
        }
    }
    if let (Some(code), Err(d)) = (&expect.code, result) {
        if d.code != code {
            failures.push(format!("error code {}, expected {code}", d.code));
        }
    }
}

fn deadlock(
    result: Result<crate::deadlock::Priorities, DeadlockError>,
    expect: &Expectation,
    failures: &mut Vec<String>,
) {
    let free = match &result {
        Ok(_) => Some(true),
        Err(DeadlockError::Deadlock(_)) => Some(false),
        Err(DeadlockError::Other(d)) => {
            if expect.deadlock_free.is_some() {
                failures.push(format!("deadlock analysis failed: {d}"));
            }
            None
        }
    };
    if let (Some(want), Some(got)) = (expect.deadlock_free, free) {
        if want != got {
            failures.push(format!("deadlock free: {got}, expected {want}"));
        }
    }
    if let (Some(names), Ok(p)) = (&expect.polymorphic, &result) {
        let got: BTreeSet<String> = p.polymorphic.iter().map(|n| n.to_string()).collect();
        for n in names {
            if !got.contains(n) {
                failures.push(format!("{n} is not polymorphic"));
            }
        }
    }
}

fn run_session(text: &str, expect: &Expectation) -> Vec<String> {
    let mut failures = Vec::new();
    let file = match parse_session_file(text) {
        Ok(f) => f,
        Err(d) => return vec![format!("parse: {d}")],
    };
    let env = match TypeEnv::from_entries(file.assumptions) {
        Ok(e) => e,
        Err(d) => return vec![format!("environment: {d}")],
    };
    let (source, target) = check_both(&env, &file.process);
    if source.is_ok() != target.is_ok() {
        failures.push(format!("session and encoded typing disagree: {source:?} / {target:?}"));
    }
    typing(&check_session(&env, &file.process), expect, &mut failures);
    if expect.deadlock_free.is_some() {
        deadlock(check_deadlock_session(&env, &file.process), expect, &mut failures);
    }
    if let Some(want) = &expect.encoding {
        let got = crate::infer::annotate(&env, &file.process).and_then(|p| {
            encode_process(&p, &Renaming::new(), &shared_names(&env), &env.names())
                .map(|e| e.process)
                .map_err(Diagnostic::from)
        });
        match (got, parse_process(want, Calculus::Pi)) {
            (Ok(got), Ok(want)) if alpha_equiv(&got, &want) => {}
            (Ok(got), Ok(_)) => failures.push(format!("encodes to {got}")),
            (Err(d), _) | (_, Err(d)) => failures.push(format!("encoding: {d}")),
        }
    }
    failures
}

fn run_pi(text: &str, expect: &Expectation) -> Vec<String> {
    let mut failures = Vec::new();
    let file = match parse_pi_file(text) {
        Ok(f) => f,
        Err(d) => return vec![format!("parse: {d}")],
    };
    let env = match TypeEnv::from_entries(file.assumptions) {
        Ok(e) => e,
        Err(d) => return vec![format!("environment: {d}")],
    };
    typing(&check_pi(&env, &file.process), expect, &mut failures);
    if expect.deadlock_free.is_some() || expect.polymorphic.is_some() {
        deadlock(infer_priorities(&env, &file.process), expect, &mut failures);
    }
    failures
}

fn run_mpst(text: &str, expect: &Expectation) -> Vec<String> {
    let mut failures = Vec::new();
    let g = match parse_mpst(text) {
        Ok(f) => f.global,
        Err(d) => return vec![format!("parse: {d}")],
    };
    if let Some(want) = &expect.roles {
        let got: Vec<String> = g.roles().into_iter().collect();
        let want: Vec<String> = want.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        if got != want {
            failures.push(format!("roles {got:?}, expected {want:?}"));
        }
    }
    match (encode_mpst(&g), expect.projectable) {
        (Ok(rec), want) => {
            if want == Some(false) {
                failures.push("projected, expected NotProjectable".into());
            }
            for (r, t) in &rec {
                if let Err(e) = decode_type(t) {
                    failures.push(format!("entry for {r} does not decode: {e}"));
                }
            }
            if rec.len() == 2 {
                let ts: Vec<_> = rec.values().collect();
                if !crate::duality::dual_constraint_holds(ts[0], ts[1]) {
                    failures.push("entries are not dual".into());
                }
            }
        }
        (Err(e), Some(true)) => failures.push(e.to_string()),
        (Err(_), _) => {}
    }
    failures
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecars_must_use_known_fields() {
        assert!(serde_json::from_str::<Expectation>(r#"{"typed": true}"#).is_ok());
        assert!(serde_json::from_str::<Expectation>(r#"{"tpyed": true}"#).is_err());
    }

    #[test]
    fn mismatched_expectation_is_reported() {
        let e = Expectation {
            typed: Some(false),
            ..Default::default()
        };
        assert_eq!(run_session("new x y in x!<1>.0 | y?(n).0", &e).len(), 1);
        assert!(run_session("new x y in x!<1>.0 | y?(n).0", &Expectation::default()).is_empty());
    }

    #[test]
    fn multiparty_roles_compare_as_sets() {
        let e = Expectation {
            projectable: Some(true),
            roles: Some(vec!["q".into(), "p".into()]),
            ..Default::default()
        };
        assert!(run_mpst("p -> q : l(Int).end", &e).is_empty());
    }
}
