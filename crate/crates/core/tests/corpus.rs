use std::path::PathBuf;

use pik_core::corpus::run_corpus;

#[test]
fn shipped_corpus_meets_its_sidecars() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let report = run_corpus(&dir).unwrap();
    let failures: Vec<String> = report
        .entries
        .iter()
        .filter(|e| !e.passed)
        .map(|e| format!("{}: {}", e.file, e.failures.join("; ")))
        .collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
    assert!(report.entries.len() >= 30);
}
