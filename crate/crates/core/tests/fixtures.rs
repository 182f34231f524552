use std::path::Path;

use edqd::fixtures::run_all;

#[test]
fn bundled_fixtures_pass() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let outcomes = run_all(&dir, false).unwrap();
    assert!(outcomes.len() >= 10);
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.to_string())
        .collect();
    assert!(failed.is_empty(), "{}", failed.join("\n"));
    for kind in ["merge", "insert", "stats", "smoke"] {
        assert!(outcomes.iter().any(|o| o.kind == kind), "no {kind} fixture");
    }
}

#[test]
fn bless_rewrites_only_golden_runs() {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let tmp = tempfile::tempdir().unwrap();
    for name in ["smoke_medea", "merge_disjoint"] {
        let dst = tmp.path().join(name);
        std::fs::create_dir_all(&dst).unwrap();
        for e in std::fs::read_dir(src.join(name)).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                std::fs::copy(&p, dst.join(p.file_name().unwrap())).unwrap();
            }
        }
    }
    // No expected/ copied for the smoke run, so verification fails.
    let before = run_all(tmp.path(), false).unwrap();
    assert!(before
        .iter()
        .any(|o| o.name == "smoke_medea" && !o.passed()));
    let blessed = run_all(tmp.path(), true).unwrap();
    assert!(blessed.iter().all(|o| o.passed()));
    assert!(blessed
        .iter()
        .find(|o| o.name == "merge_disjoint")
        .is_some_and(|o| !o.blessed));
    let after = run_all(tmp.path(), false).unwrap();
    assert!(after.iter().all(|o| o.passed() && !o.blessed));
    // The regenerated golden run matches the checked-in one.
    let a = std::fs::read(tmp.path().join("smoke_medea/expected/summary.csv")).unwrap();
    let b = std::fs::read(src.join("smoke_medea/expected/summary.csv")).unwrap();
    assert_eq!(a, b);
}
