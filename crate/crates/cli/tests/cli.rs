use std::path::PathBuf;
use std::process::{Command, Output};

use pik_core::binding::alpha_equiv;
use pik_core::parse::parse_pi_file;
use serde_json::Value;

fn corpus(file: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(file)
        .display()
        .to_string()
}

fn pik(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pik"))
        .args(args)
        .env_remove("PIK_SEED")
        .output()
        .expect("run pik")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn check_example_exits_zero() {
    let o = pik(&["check", "--calculus", "session", &corpus("eqtest.spi")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "ok");
}

#[test]
fn ill_typed_exits_one_with_diagnostic_on_stderr() {
    let o = pik(&["check", &corpus("wrong_payload.spi")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("type-mismatch"));
}

#[test]
fn check_encoded_reports_agreement() {
    let o = pik(&["--json", "check", "--encoded", &corpus("linear_reuse.spi")]);
    assert_eq!(o.status.code(), Some(1));
    let v = stdout_json(&o);
    assert_eq!(v["ok"], false);
    assert_eq!(v["encoded_ok"], false);
    assert_eq!(v["agree"], true);
}

#[test]
fn crossed_sessions_report_a_cycle() {
    let o = pik(&["--json", "deadlock", &corpus("crossed.spi")]);
    assert_eq!(o.status.code(), Some(1));
    let v = stdout_json(&o);
    assert_eq!(v["deadlock_free"], false);
    let edges = v["cycle"]["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 2);
    assert_eq!(edges[0][0], edges[1][1]);
    assert_eq!(edges[0][1], edges[1][0]);
}

#[test]
fn factorial_is_polymorphic() {
    let o = pik(&["--json", "deadlock", &corpus("factorial.lpi")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["priorities"]["polymorphic"][0], "fact");
}

#[test]
fn encoding_matches_golden_up_to_alpha() {
    let o = pik(&["encode", &corpus("eqtest.spi")]);
    assert_eq!(o.status.code(), Some(0));
    let got = parse_pi_file(&stdout(&o)).unwrap();
    let sidecar: Value = serde_json::from_str(&std::fs::read_to_string(corpus("eqtest.spi.expect")).unwrap()).unwrap();
    let want = parse_pi_file(sidecar["encoding"].as_str().unwrap()).unwrap();
    assert!(alpha_equiv(&got.process, &want.process));
}

#[test]
fn encoded_type() {
    let o = pik(&["encode", "--type", "?Int.?Int.!Bool.end"]);
    assert_eq!(stdout(&o).trim(), "lin_i[Int, lin_i[Int, lin_o[Bool, empty[]]]]");
}

#[test]
fn dual_and_subtype() {
    assert_eq!(stdout(&pik(&["dual", "?Int.+{a: end, b: !Bool.end}"])).trim(), "!Int.&{a: end, b: ?Bool.end}");
    let o = pik(&["--json", "subtype", "--encoded", "&{a: end}", "&{a: end, b: end}"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["holds"], true);
    assert_eq!(v["encoded_holds"], true);
    assert_eq!(pik(&["subtype", "!Int.end", "?Int.end"]).status.code(), Some(1));
}

#[test]
fn parse_prints_and_dumps_ast() {
    let o = pik(&["parse", &corpus("sequence.spi")]);
    assert_eq!(o.status.code(), Some(0));
    let again = pik_core::parse::parse_session_file(&stdout(&o)).unwrap();
    let first = pik_core::parse::parse_session_file(&std::fs::read_to_string(corpus("sequence.spi")).unwrap()).unwrap();
    assert_eq!(again, first);
    let v = stdout_json(&pik(&["--json", "parse", &corpus("ordered.lpi")]));
    assert!(v["process"].is_object());
}

#[test]
fn syntax_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.spi");
    std::fs::write(&bad, "new x y in x!<1>.").unwrap();
    let o = pik(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert_eq!(pik(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pik(&["check", "/no/such/file.spi"]).status.code(), Some(2));
}

#[test]
fn run_is_reproducible_for_a_seed() {
    let a = pik(&["--seed", "7", "run", &corpus("choice.spi")]);
    let b = pik(&["--seed", "7", "run", &corpus("choice.spi")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).trim_end().ends_with("end in 0"));
    let e = pik(&["--json", "run", "--encoded", &corpus("eqtest.spi")]);
    assert_eq!(stdout_json(&e)["trace"].as_array().unwrap().len(), 3);
}

#[test]
fn seed_variable_overrides_flag() {
    let with_env = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_pik"))
            .args(["--seed", "1", "--json", "run", &corpus("sequence.spi")])
            .env("PIK_SEED", seed)
            .output()
            .unwrap()
    };
    assert_eq!(with_env("5").stdout, pik(&["--seed", "5", "--json", "run", &corpus("sequence.spi")]).stdout);
    assert_eq!(with_env("x").status.code(), Some(2));
}

#[test]
fn correspond_with_merged_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("open.spi");
    std::fs::write(&f, "assume x : !Int.end; assume y : ?Int.end; x!<1>.0 | y?(n).0").unwrap();
    let o = pik(&["--json", "correspond", "--merge", "x=s", "--merge", "y=s", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["merge_branch_hits"], 1);
    let o = pik(&["correspond", "--depth", "5", &corpus("eqtest.spi")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(pik(&["correspond", "--merge", "x", &corpus("eqtest.spi")]).status.code(), Some(2));
}

#[test]
fn infer_fills_in_the_restriction() {
    let o = pik(&["infer", &corpus("eqtest_inferred.spi")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("new x y : ?Int.?Int.!Bool.end in"));
    let o = pik(&["infer", "--rec-types", &corpus("not_dual.spi")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn mpst_encode_and_project() {
    let o = pik(&["--json", "mpst", "encode", &corpus("pingpong.mpst")]);
    assert_eq!(o.status.code(), Some(0));
    let roles = stdout_json(&o)["roles"].as_object().unwrap().clone();
    assert_eq!(roles.len(), 2);
    let o = pik(&["mpst", "encode", &corpus("unaware_third.mpst")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not-projectable"));
    let o = pik(&["mpst", "project", &corpus("oneshot.mpst"), "q"]);
    assert_eq!(stdout(&o).trim(), "&{?l(Int).end}");
    assert_eq!(pik(&["mpst", "project", &corpus("oneshot.mpst"), "z"]).status.code(), Some(2));
}

#[test]
fn corpus_runner() {
    let o = pik(&["corpus", &corpus("")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).trim_end().ends_with("0 failed"));

    let empty = tempfile::tempdir().unwrap();
    let o = pik(&["--json", "corpus", empty.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["passed"], 0);

    let tampered = tempfile::tempdir().unwrap();
    for f in ["eqtest.spi", "not_dual.spi"] {
        std::fs::copy(corpus(f), tampered.path().join(f)).unwrap();
    }
    std::fs::write(tampered.path().join("eqtest.spi.expect"), r#"{"typed": false}"#).unwrap();
    std::fs::write(tampered.path().join("not_dual.spi.expect"), r#"{"typed": false}"#).unwrap();
    let o = pik(&["--json", "corpus", tampered.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["failed"], 1);
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        vec!["--json", "deadlock", "crossed.spi"],
        vec!["--json", "correspond", "choice.spi"],
        vec!["encode", "delegation.spi"],
    ] {
        let mut args: Vec<String> = args.into_iter().map(String::from).collect();
        let last = args.pop().unwrap();
        args.push(corpus(&last));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(pik(&args).stdout, pik(&args).stdout);
    }
}
