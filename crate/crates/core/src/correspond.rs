//! Differential check of the operational correspondence between session
//! processes and their encodings.
//!
//! Clause 1: every source step `P -> P'` is matched by a target step
//! `[[P]]f -> Q` with `Q ~> [[P']]f`.
//! Clause 2: every target step `[[P]]f -> Q` is matched by a source step
//! `P -> P'` with `Q ~> [[P']]f`, or, when `f` merges two free endpoints
//! `x`, `y` into `s`, by a step `(new x y)P -> P'` with
//! `(new s)Q ~> [[P']]f`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::diag::Diagnostic;
use crate::encode::{encode_process, shared_names, Renaming};
use crate::env::TypeEnv;
use crate::name::Name;
use crate::process::{Calculus, Process};
use crate::reduce::{explore, hook_equiv, successors};
use crate::types::TypeExpr;

#[derive(Clone, Debug, Serialize)]
pub struct CheckedPair {
    pub clause: u8,
    pub source: String,
    pub target: String,
    pub rule: &'static str,
    pub ok: bool,
    /// Set when clause 2 was discharged through a merged pair of endpoints.
    pub merged: Option<(Name, Name)>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub checked: Vec<CheckedPair>,
    pub counterexamples: Vec<CheckedPair>,
    pub merge_branch_hits: usize,
    pub source_states: usize,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

fn encode(
    p: &Process,
    f: &Renaming,
    shared: &BTreeSet<Name>,
    env_names: &BTreeSet<Name>,
) -> Result<Process, Diagnostic> {
    let live: Renaming = f
        .iter()
        .filter(|(x, _)| crate::binding::free_names(p).contains(*x))
        .map(|(x, t)| (x.clone(), t.clone()))
        .collect();
    encode_process(p, &live, shared, env_names)
        .map(|e| e.process)
        .map_err(Diagnostic::from)
}

/// Pairs of distinct free names sent to the same target by `f`.
pub fn merged_pairs(f: &Renaming) -> Vec<(Name, Name, Name)> {
    let mut by_target: BTreeMap<&Name, Vec<&Name>> = BTreeMap::new();
    for (x, t) in f {
        by_target.entry(t).or_default().push(x);
    }
    let mut out = Vec::new();
    for (t, xs) in by_target {
        for (i, x) in xs.iter().enumerate() {
            for y in &xs[i + 1..] {
                out.push(((*x).clone(), (*y).clone(), t.clone()));
            }
        }
    }
    out
}

/// Runs both clauses on every source state reachable from `p` within
/// `depth` steps. Restrictions without annotation are annotated first.
pub fn correspondence_check(
    env: &TypeEnv<TypeExpr>,
    p: &Process,
    f: &Renaming,
    depth: usize,
) -> Result<Report, Diagnostic> {
    let p = crate::infer::annotate(env, p)?;
    let shared = shared_names(env);
    let env_names = env.names();
    let ex = explore(&p, Calculus::Session, &shared, depth);
    let mut report = Report {
        source_states: ex.states.len(),
        ..Default::default()
    };
    let encoded: Vec<Process> = ex
        .states
        .iter()
        .map(|q| encode(q, f, &shared, &env_names))
        .collect::<Result<_, _>>()?;

    // clause 1
    for (i, r, j) in &ex.edges {
        let target_succ = successors(&encoded[*i], Calculus::Pi, &BTreeSet::new());
        let ok = target_succ.iter().any(|(_, q)| hook_equiv(q, &encoded[*j]));
        report.push(CheckedPair {
            clause: 1,
            source: format!("{}  ->  {}", ex.states[*i], ex.states[*j]),
            target: encoded[*j].to_string(),
            rule: r.rule,
            ok,
            merged: None,
        });
    }

    // clause 2
    let pairs = merged_pairs(f);
    for (i, src) in ex.states.iter().enumerate() {
        if ex.depth_of[i] >= depth {
            continue;
        }
        let source_succ: Vec<Process> = ex.edges.iter().filter(|e| e.0 == i).map(|e| ex.states[e.2].clone()).collect();
        for (r, q) in successors(&encoded[i], Calculus::Pi, &BTreeSet::new()) {
            let mut ok = false;
            for p2 in &source_succ {
                if hook_equiv(&q, &encode(p2, f, &shared, &env_names)?) {
                    ok = true;
                    break;
                }
            }
            let mut merged = None;
            if !ok {
                'pairs: for (x, y, s) in &pairs {
                    let free = crate::binding::free_names(src);
                    if !free.contains(x) || !free.contains(y) {
                        continue;
                    }
                    let wrapped = Process::session_restrict(x.clone(), y.clone(), None, src.clone());
                    let mut g = f.clone();
                    g.remove(x);
                    g.remove(y);
                    let closed_q = Process::restrict(s.clone(), None, q.clone());
                    for (_, p2) in successors(&wrapped, Calculus::Session, &shared) {
                        if hook_equiv(&closed_q, &encode(&p2, &g, &shared, &env_names)?) {
                            ok = true;
                            merged = Some((x.clone(), y.clone()));
                            report.merge_branch_hits += 1;
                            break 'pairs;
                        }
                    }
                }
            }
            report.push(CheckedPair {
                clause: 2,
                source: src.to_string(),
                target: q.to_string(),
                rule: r.rule,
                ok,
                merged,
            });
        }
    }
    Ok(report)
}

impl Report {
    fn push(&mut self, c: CheckedPair) {
        if !c.ok {
            self.counterexamples.push(c.clone());
        }
        self.checked.push(c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_session_file;

    fn report(src: &str, f: &[(&str, &str)], depth: usize) -> Report {
        let file = parse_session_file(src).unwrap();
        let env = TypeEnv::from_entries(file.assumptions).unwrap();
        let f: Renaming = f.iter().map(|(a, b)| (Name::from(*a), Name::from(*b))).collect();
        correspondence_check(&env, &file.process, &f, depth).unwrap()
    }

    #[test]
    fn example_system() {
        let r = report(
            "new x y : ?Int.?Int.!Bool.end in x?(z1).x?(z2).x!<z1==z2>.0 | y!<3>.y!<5>.y?(eq).0",
            &[],
            3,
        );
        assert!(r.passed(), "{:#?}", r.counterexamples);
        assert_eq!(r.checked.iter().filter(|c| c.clause == 1).count(), 3);
        assert_eq!(r.checked.iter().filter(|c| c.clause == 2).count(), 3);
    }

    #[test]
    fn inaction_is_vacuous() {
        let r = report("0", &[], 3);
        assert!(r.passed());
        assert!(r.checked.is_empty());
    }

    #[test]
    fn branching_needs_case_normalisation() {
        let r = report("new x y in x <| b.x!<1>.0 | y |> {a: 0, b: y?(n).0}", &[], 3);
        assert!(r.passed(), "{:#?}", r.counterexamples);
    }

    #[test]
    fn merged_free_endpoints_use_the_restriction_branch() {
        let r = report(
            "assume x : !Int.end; assume y : ?Int.end; x!<1>.0 | y?(n).0",
            &[("x", "s"), ("y", "s")],
            2,
        );
        assert!(r.passed(), "{:#?}", r.counterexamples);
        assert_eq!(r.merge_branch_hits, 1);
    }
}
