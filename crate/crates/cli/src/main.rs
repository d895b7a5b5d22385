use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pik_core::check_pi::check_pi;
use pik_core::check_session::check_session;
use pik_core::correspond::correspondence_check;
use pik_core::corpus::{check_both, run_corpus};
use pik_core::deadlock::{check_deadlock_session, infer_priorities, DeadlockError};
use pik_core::diag::Diagnostic;
use pik_core::duality::{dual, pi_subtype, session_subtype};
use pik_core::encode::{encode_env, encode_process, encode_type, shared_names, Renaming};
use pik_core::env::TypeEnv;
use pik_core::infer::{infer_session_types, InferOptions};
use pik_core::mpst::{encode_mpst, parse_mpst, project};
use pik_core::parse::{parse_pi_file, parse_session_file, parse_session_type, PiFile, SessionFile};
use pik_core::reduce::run;
use pik_core::{Calculus, Name};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "pik", version, about = "Session types, linear pi types and the encoding between them")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every random choice. PIK_SEED overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Calc {
    Session,
    Pi,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Parse a process file and print it back.
    Parse {
        file: PathBuf,
        #[arg(long, value_enum)]
        calculus: Option<Calc>,
    },
    /// Type check a process file.
    Check {
        file: PathBuf,
        #[arg(long, value_enum)]
        calculus: Option<Calc>,
        /// Also check the encoding of a session process.
        #[arg(long)]
        encoded: bool,
    },
    /// Dual of a session type.
    Dual { ty: String },
    /// Decide a <: b on session types.
    Subtype {
        a: String,
        b: String,
        /// Also decide the encodings with pi subtyping.
        #[arg(long)]
        encoded: bool,
    },
    /// Encode a session process (or, with --type, a session type).
    Encode {
        file: Option<PathBuf>,
        #[arg(long = "type", conflicts_with = "file")]
        ty: Option<String>,
    },
    /// Print one seeded reduction trace.
    Run {
        file: PathBuf,
        #[arg(long, value_enum)]
        calculus: Option<Calc>,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Reduce the encoding instead of the session process.
        #[arg(long)]
        encoded: bool,
    },
    /// Check operational correspondence on every reachable state.
    Correspond {
        file: PathBuf,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        /// Free endpoints sharing one encoded channel, as `x=s`. Repeatable.
        #[arg(long, value_parser = parse_merge)]
        merge: Vec<(String, String)>,
    },
    /// Priority-based deadlock analysis.
    Deadlock {
        file: PathBuf,
        #[arg(long, value_enum)]
        calculus: Option<Calc>,
    },
    /// Infer missing restriction types of a session process.
    Infer {
        file: PathBuf,
        /// Read cyclic solutions back as recursive types.
        #[arg(long)]
        rec_types: bool,
    },
    /// Multiparty global types.
    Mpst {
        #[command(subcommand)]
        action: MpstAction,
    },
    /// Run a directory of examples against their .expect sidecars.
    Corpus { dir: PathBuf },
}

#[derive(Subcommand, Debug)]
enum MpstAction {
    /// Project onto every role and encode the local types.
    Encode { file: PathBuf },
    /// Projection onto one role.
    Project { file: PathBuf, role: String },
}

fn parse_merge(s: &str) -> Result<(String, String), String> {
    let (x, t) = s.split_once('=').ok_or_else(|| format!("expected x=s, got {s}"))?;
    if x.is_empty() || t.is_empty() {
        return Err(format!("expected x=s, got {s}"));
    }
    Ok((x.to_string(), t.to_string()))
}

/// Result of a verb: text and JSON renderings, plus the diagnostic of a
/// negative verdict (ill-typed, deadlock, counterexample).
struct Report {
    text: String,
    json: Value,
    verdict: Option<Diagnostic>,
}

impl Report {
    fn ok(text: impl Into<String>, json: Value) -> Self {
        Report {
            text: text.into(),
            json,
            verdict: None,
        }
    }

    fn failed(text: impl Into<String>, json: Value, d: Diagnostic) -> Self {
        Report {
            text: text.into(),
            json,
            verdict: Some(d),
        }
    }
}

/// Unreadable input or syntax error.
struct Failure(Diagnostic);

fn usage(d: Diagnostic) -> Failure {
    Failure(d)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| usage(Diagnostic::error("io", format!("{}: {e}", path.display()))))
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn calculus_of(path: &Path, flag: Option<Calc>) -> Calculus {
    match flag {
        Some(Calc::Session) => Calculus::Session,
        Some(Calc::Pi) => Calculus::Pi,
        None if path.extension().is_some_and(|e| e == "lpi") => Calculus::Pi,
        None => Calculus::Session,
    }
}

fn session_file(path: &Path) -> Result<(SessionFile, TypeEnv<pik_core::TypeExpr>), Failure> {
    let f = parse_session_file(&read(path)?).map_err(|d| usage(d.in_file(&file_name(path))))?;
    let env = TypeEnv::from_entries(f.assumptions.clone()).map_err(usage)?;
    Ok((f, env))
}

fn pi_file(path: &Path) -> Result<(PiFile, TypeEnv<pik_core::PiType>), Failure> {
    let f = parse_pi_file(&read(path)?).map_err(|d| usage(d.in_file(&file_name(path))))?;
    let env = TypeEnv::from_entries(f.assumptions.clone()).map_err(usage)?;
    Ok((f, env))
}

fn session_ty(text: &str) -> Result<pik_core::SessionType, Failure> {
    parse_session_type(text).map_err(usage)
}

/// Assumptions and process in the surface syntax.
fn source_text<T: std::fmt::Display>(assumptions: &[(Name, T)], p: &pik_core::Process) -> String {
    let mut out = String::new();
    for (x, t) in assumptions {
        out.push_str(&format!("assume {x} : {t};\n"));
    }
    out.push_str(&p.to_string());
    out
}

fn typing_report(result: Result<(), Diagnostic>, extra: Value) -> Report {
    let mut json = json!({ "ok": result.is_ok() });
    if let (Value::Object(m), Value::Object(e)) = (&mut json, extra) {
        m.extend(e);
    }
    match result {
        Ok(()) => Report::ok("ok", json),
        Err(d) => {
            json["diagnostic"] = json!(d);
            Report::failed("ill-typed", json, d)
        }
    }
}

fn cmd_parse(path: &Path, calc: Option<Calc>) -> Result<Report, Failure> {
    Ok(match calculus_of(path, calc) {
        Calculus::Session => {
            let (f, _) = session_file(path)?;
            Report::ok(source_text(&f.assumptions, &f.process), json!(f))
        }
        Calculus::Pi => {
            let (f, _) = pi_file(path)?;
            Report::ok(source_text(&f.assumptions, &f.process), json!(f))
        }
    })
}

fn cmd_check(path: &Path, calc: Option<Calc>, encoded: bool) -> Result<Report, Failure> {
    Ok(match calculus_of(path, calc) {
        Calculus::Session => {
            let (f, env) = session_file(path)?;
            if encoded {
                let (source, target) = check_both(&env, &f.process);
                let agree = source.is_ok() == target.is_ok();
                let extra = json!({ "encoded_ok": target.is_ok(), "agree": agree });
                let mut r = typing_report(source, extra);
                if !agree {
                    let d = Diagnostic::error("encoding-disagrees", "the encoding disagrees with the session verdict");
                    r.verdict = Some(d);
                }
                r.text = format!("{} (encoding {})", r.text, if target.is_ok() { "ok" } else { "ill-typed" });
                r
            } else {
                let p = pik_core::infer::annotate(&env, &f.process).unwrap_or(f.process);
                typing_report(check_session(&env, &p), json!({}))
            }
        }
        Calculus::Pi => {
            let (f, env) = pi_file(path)?;
            typing_report(check_pi(&env, &f.process), json!({}))
        }
    })
}

fn cmd_dual(ty: &str) -> Result<Report, Failure> {
    let d = dual(&session_ty(ty)?);
    Ok(Report::ok(d.to_string(), json!({ "dual": d.to_string() })))
}

fn cmd_subtype(a: &str, b: &str, encoded: bool) -> Result<Report, Failure> {
    let (a, b) = (session_ty(a)?, session_ty(b)?);
    let j = session_subtype(&a, &b);
    let mut json = json!({ "holds": j.holds, "derivation": j.derivation });
    let mut text = j.holds.to_string();
    let mut verdict = (!j.holds).then(|| Diagnostic::error("type-mismatch", format!("{a} is not a subtype of {b}")));
    if encoded {
        let pj = pi_subtype(&encode_type(&a), &encode_type(&b));
        json["encoded_holds"] = json!(pj.holds);
        json["encoded_derivation"] = json!(pj.derivation);
        text = format!("{text} (encoding {})", pj.holds);
        if pj.holds != j.holds {
            verdict = Some(Diagnostic::error("encoding-disagrees", "encoded subtyping disagrees"));
        }
    }
    Ok(Report { text, json, verdict })
}

fn cmd_encode(file: Option<&Path>, ty: Option<&str>) -> Result<Report, Failure> {
    if let Some(ty) = ty {
        let t = encode_type(&session_ty(ty)?);
        return Ok(Report::ok(t.to_string(), json!({ "type": t.to_string(), "ast": t })));
    }
    let Some(path) = file else {
        return Err(usage(Diagnostic::error("syntax", "encode needs a file or --type")));
    };
    let (f, env) = session_file(path)?;
    let p = pik_core::infer::annotate(&env, &f.process).map_err(Failure)?;
    let q = encode_process(&p, &Renaming::new(), &shared_names(&env), &env.names())
        .map_err(|e| Failure(e.into()))?
        .process;
    let penv = encode_env(&env, &Renaming::new()).map_err(|e| Failure(e.into()))?;
    let assumptions: Vec<(Name, pik_core::PiType)> = penv.iter().map(|(x, t)| (x.clone(), t.clone())).collect();
    let text = source_text(&assumptions, &q);
    Ok(Report::ok(text.clone(), json!({ "source": text, "process": q })))
}

fn cmd_run(path: &Path, calc: Option<Calc>, steps: usize, encoded: bool, seed: u64) -> Result<Report, Failure> {
    let (p, calculus, shared) = match calculus_of(path, calc) {
        Calculus::Session => {
            let (f, env) = session_file(path)?;
            if encoded {
                let p = pik_core::infer::annotate(&env, &f.process).map_err(Failure)?;
                let q = encode_process(&p, &Renaming::new(), &shared_names(&env), &env.names())
                    .map_err(|e| Failure(e.into()))?
                    .process;
                (q, Calculus::Pi, BTreeSet::new())
            } else {
                (f.process, Calculus::Session, shared_names(&env))
            }
        }
        Calculus::Pi => (pi_file(path)?.0.process, Calculus::Pi, BTreeSet::new()),
    };
    let trace = run(&p, calculus, &shared, seed, steps);
    let last = trace.last().map(|s| s.result.clone()).unwrap_or(p);
    let mut text = String::new();
    for s in &trace {
        text.push_str(&format!("{:>3} [{}] {}\n", s.step, s.rule, s.after));
    }
    text.push_str(&format!("final: {last}"));
    Ok(Report::ok(text, json!({ "trace": trace, "final": last.to_string() })))
}

fn cmd_correspond(path: &Path, depth: usize, merge: &[(String, String)]) -> Result<Report, Failure> {
    let (f, env) = session_file(path)?;
    let renaming: Renaming = merge.iter().map(|(x, s)| (Name::from(x.as_str()), Name::from(s.as_str()))).collect();
    let r = correspondence_check(&env, &f.process, &renaming, depth).map_err(Failure)?;
    let text = format!(
        "{} source states, {} pairs checked, {} counterexamples, {} through merged endpoints",
        r.source_states,
        r.checked.len(),
        r.counterexamples.len(),
        r.merge_branch_hits
    );
    let json = json!({
        "passed": r.passed(),
        "source_states": r.source_states,
        "checked": r.checked.len(),
        "merge_branch_hits": r.merge_branch_hits,
        "counterexamples": r.counterexamples,
    });
    Ok(if r.passed() {
        Report::ok(text, json)
    } else {
        let c = &r.counterexamples[0];
        let d = Diagnostic::error(
            "correspondence",
            format!("clause {} fails at {} (target {})", c.clause, c.source, c.target),
        );
        Report::failed(text, json, d)
    })
}

fn cmd_deadlock(path: &Path, calc: Option<Calc>) -> Result<Report, Failure> {
    let result = match calculus_of(path, calc) {
        Calculus::Session => {
            let (f, env) = session_file(path)?;
            check_deadlock_session(&env, &f.process)
        }
        Calculus::Pi => {
            let (f, env) = pi_file(path)?;
            infer_priorities(&env, &f.process)
        }
    };
    Ok(match result {
        Ok(p) => {
            let mut text = String::from("deadlock free");
            for (x, n) in &p.channels {
                text.push_str(&format!("\n  {x}: {n}"));
            }
            if !p.polymorphic.is_empty() {
                let names: Vec<String> = p.polymorphic.iter().map(|n| n.to_string()).collect();
                text.push_str(&format!("\n  polymorphic: {}", names.join(", ")));
            }
            Report::ok(text, json!({ "deadlock_free": true, "priorities": p }))
        }
        Err(DeadlockError::Deadlock(d)) => {
            let json = json!({ "deadlock_free": false, "cycle": d });
            Report::failed(format!("possible deadlock: {d}"), json, d.into())
        }
        Err(DeadlockError::Other(d)) => typing_report(Err(d), json!({ "deadlock_free": null })),
    })
}

fn cmd_infer(path: &Path, rec_types: bool) -> Result<Report, Failure> {
    let (f, env) = session_file(path)?;
    Ok(match infer_session_types(&env, &f.process, InferOptions { rec_types }) {
        Ok(p) => {
            let text = source_text(&f.assumptions, &p);
            Report::ok(text.clone(), json!({ "ok": true, "source": text, "process": p }))
        }
        Err(d) => typing_report(Err(d), json!({})),
    })
}

fn cmd_mpst(action: &MpstAction) -> Result<Report, Failure> {
    let (path, role) = match action {
        MpstAction::Encode { file } => (file, None),
        MpstAction::Project { file, role } => (file, Some(role)),
    };
    let g = parse_mpst(&read(path)?)
        .map_err(|d| usage(d.in_file(&file_name(path))))?
        .global;
    if let Some(role) = role {
        if !g.roles().contains(role) {
            return Err(usage(Diagnostic::error("unknown-name", format!("{role} is not a role"))));
        }
        return Ok(match project(&g, role) {
            Ok(h) => Report::ok(h.to_string(), json!({ "role": role, "local": h.to_string() })),
            Err(e) => {
                let json = json!({ "projectable": false, "error": e });
                Report::failed(e.to_string(), json, e.into())
            }
        });
    }
    Ok(match encode_mpst(&g) {
        Ok(rec) => {
            let mut text = Vec::new();
            let mut json = serde_json::Map::new();
            for (r, t) in &rec {
                text.push(format!("{r} : {t}"));
                json.insert(r.clone(), json!(t.to_string()));
            }
            Report::ok(text.join("\n"), json!({ "projectable": true, "roles": json }))
        }
        Err(e) => {
            let json = json!({ "projectable": false, "error": e });
            Report::failed(e.to_string(), json, e.into())
        }
    })
}

fn cmd_corpus(dir: &Path) -> Result<Report, Failure> {
    let r = run_corpus(dir).map_err(usage)?;
    let mut text = String::new();
    for e in &r.entries {
        let status = if e.passed { "pass" } else { "FAIL" };
        text.push_str(&format!("{status} {}", e.file));
        for f in &e.failures {
            text.push_str(&format!("\n     {f}"));
        }
        text.push('\n');
    }
    text.push_str(&format!("{} passed, {} failed", r.passed(), r.failed()));
    let json = json!({ "passed": r.passed(), "failed": r.failed(), "entries": r.entries });
    Ok(if r.failed() == 0 {
        Report::ok(text, json)
    } else {
        let d = Diagnostic::error("corpus", format!("{} corpus entries failed", r.failed()));
        Report::failed(text, json, d)
    })
}

fn dispatch(cli: &Cli, seed: u64) -> Result<Report, Failure> {
    match &cli.verb {
        Verb::Parse { file, calculus } => cmd_parse(file, *calculus),
        Verb::Check {
            file,
            calculus,
            encoded,
        } => cmd_check(file, *calculus, *encoded),
        Verb::Dual { ty } => cmd_dual(ty),
        Verb::Subtype { a, b, encoded } => cmd_subtype(a, b, *encoded),
        Verb::Encode { file, ty } => cmd_encode(file.as_deref(), ty.as_deref()),
        Verb::Run {
            file,
            calculus,
            steps,
            encoded,
        } => cmd_run(file, *calculus, *steps, *encoded, seed),
        Verb::Correspond { file, depth, merge } => cmd_correspond(file, *depth, merge),
        Verb::Deadlock { file, calculus } => cmd_deadlock(file, *calculus),
        Verb::Infer { file, rec_types } => cmd_infer(file, *rec_types),
        Verb::Mpst { action } => cmd_mpst(action),
        Verb::Corpus { dir } => cmd_corpus(dir),
    }
}

fn report_diagnostic(d: &Diagnostic, json: bool) {
    if json {
        eprintln!("{}", json!(d));
    } else {
        eprintln!("{d}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = match std::env::var("PIK_SEED") {
        Ok(s) => match s.trim().parse() {
            Ok(n) => n,
            Err(_) => {
                eprintln!("error: PIK_SEED must be an unsigned integer, got {s:?}");
                return ExitCode::from(2);
            }
        },
        Err(_) => cli.seed,
    };
    match dispatch(&cli, seed) {
        Ok(r) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&r.json).expect("serializable report"));
            } else {
                println!("{}", r.text);
            }
            match r.verdict {
                None => ExitCode::SUCCESS,
                Some(d) => {
                    report_diagnostic(&d, cli.json);
                    ExitCode::from(1)
                }
            }
        }
        Err(Failure(d)) => {
            report_diagnostic(&d, cli.json);
            ExitCode::from(2)
        }
    }
}
