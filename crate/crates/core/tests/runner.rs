use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use citkit::model::parse_model;
use citkit::plan::{load_scripts, multiplex, scan_scripts, VariantScript};
use citkit::runner::{run, RunOptions, Verdict};
use citkit::TestSuite;
use proptest::prelude::*;

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn three_rows() -> (citkit::Model, TestSuite) {
    let model = parse_model("a: x, y, z").unwrap();
    let suite = TestSuite::exhaustive(&model);
    (model, suite)
}

#[test]
fn passing_script_on_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (model, suite) = three_rows();
    let s = VariantScript::new("001", script(dir.path(), "ok.sh", "exit 0"));
    let plan = multiplex(&model, &suite, &[s]).unwrap();
    let report = run(&plan, &RunOptions::new(dir.path().join("work")));
    assert_eq!(report.verdicts(), vec![Verdict::Pass; 3]);
    assert_eq!(report.totals.pass, 3);
    assert_eq!(report.exit_code(), 0);
    // Scratch directories of passing entries are removed.
    assert_eq!(fs::read_dir(dir.path().join("work")).unwrap().count(), 0);
}

#[test]
fn nonzero_exit_is_fail_and_evidence_is_kept() {
    let dir = tempfile::tempdir().unwrap();
    let (model, suite) = three_rows();
    let s = VariantScript::new("001", script(dir.path(), "bad.sh", "echo broken >&2; exit 1"));
    let plan = multiplex(&model, &suite, &[s]).unwrap();
    let report = run(&plan, &RunOptions::new(dir.path().join("work")));
    let r = &report.records[0];
    assert_eq!((r.verdict, r.exit_code), (Verdict::Fail, Some(1)));
    assert_eq!(r.stderr_bytes, 7);
    assert_eq!(report.exit_code(), 1);
    let kept: Vec<_> = fs::read_dir(dir.path().join("work")).unwrap().collect();
    assert_eq!(kept.len(), 3);
}

#[test]
fn environment_and_working_directory() {
    let dir = tempfile::tempdir().unwrap();
    let model = parse_model("img_format: qcow2\nmisalign: true").unwrap();
    let suite = TestSuite::exhaustive(&model);
    let body = "echo \"$CIT_IMG_FORMAT $CIT_MISALIGN $CIT_TEST_INDEX $CIT_VARIANT_ID\" > env.txt; pwd > pwd.txt; exit 3";
    let s = VariantScript::new("017", script(dir.path(), "env.sh", body));
    let plan = multiplex(&model, &suite, &[s]).unwrap();
    let report = run(&plan, &RunOptions::new(dir.path().join("work")));
    assert_eq!(report.records[0].exit_code, Some(3));
    let scratch = fs::read_dir(dir.path().join("work")).unwrap().next().unwrap().unwrap().path();
    assert_eq!(fs::read_to_string(scratch.join("env.txt")).unwrap(), "qcow2 true 0 017\n");
    let pwd = fs::read_to_string(scratch.join("pwd.txt")).unwrap();
    assert_eq!(
        fs::canonicalize(pwd.trim()).unwrap(),
        fs::canonicalize(&scratch).unwrap()
    );
}

#[test]
fn missing_script_is_error_and_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let (model, suite) = three_rows();
    let scripts = [
        VariantScript::new("gone", dir.path().join("does-not-exist.sh")),
        VariantScript::new("ok", script(dir.path(), "ok.sh", "exit 0")),
    ];
    let plan = multiplex(&model, &suite, &scripts).unwrap();
    let report = run(&plan, &RunOptions::new(dir.path().join("work")).parallelism(2));
    assert_eq!(report.records.len(), 6);
    assert_eq!(report.totals.error, 3);
    assert_eq!(report.totals.pass, 3);
    assert!(report.records[0].message.as_deref().unwrap().contains("script not found"));
    assert_eq!(report.exit_code(), 2);
}

#[test]
fn slow_script_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let model = parse_model("a: x").unwrap();
    let suite = TestSuite::exhaustive(&model);
    let mut slow = VariantScript::new("slow", script(dir.path(), "slow.sh", "exec sleep 10"));
    slow.timeout = Some(0.3);
    let plan = multiplex(&model, &suite, &[slow]).unwrap();
    let report = run(&plan, &RunOptions::new(dir.path().join("work")));
    let r = &report.records[0];
    assert_eq!(r.verdict, Verdict::Timeout);
    assert_eq!(r.exit_code, None);
    assert!(r.duration < 5.0);

    // Global default applies when the script has none.
    let quick = VariantScript::new("slow", dir.path().join("slow.sh"));
    let plan = multiplex(&model, &suite, &[quick]).unwrap();
    let options = RunOptions::new(dir.path().join("work2")).default_timeout(Duration::from_millis(200));
    assert_eq!(run(&plan, &options).records[0].verdict, Verdict::Timeout);
}

#[test]
fn signal_is_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = parse_model("a: x").unwrap();
    let suite = TestSuite::exhaustive(&model);
    let s = VariantScript::new("kill", script(dir.path(), "kill.sh", "kill -9 $$"));
    let plan = multiplex(&model, &suite, &[s]).unwrap();
    let r = &run(&plan, &RunOptions::new(dir.path().join("work"))).records[0];
    assert_eq!(r.verdict, Verdict::Error);
    assert!(r.message.as_deref().unwrap().contains("signal 9"));
}

#[test]
fn directory_scan_finds_executables_sorted() {
    let dir = tempfile::tempdir().unwrap();
    script(dir.path(), "b.sh", "exit 0");
    script(dir.path(), "a.sh", "exit 0");
    fs::write(dir.path().join("notes.txt"), "not a script").unwrap();
    let ids: Vec<_> = scan_scripts(dir.path()).unwrap().into_iter().map(|s| s.id).collect();
    assert_eq!(ids, vec!["a.sh", "b.sh"]);
}

#[test]
fn directory_manifest_takes_precedence_over_scan() {
    let dir = tempfile::tempdir().unwrap();
    script(dir.path(), "001.sh", "exit 0");
    fs::write(dir.path().join("manifest.json"), r#"[{"id": "001", "path": "001.sh", "timeout": 5}]"#).unwrap();
    let scripts = load_scripts(dir.path()).unwrap();
    assert_eq!(scripts.len(), 1);
    assert_eq!(scripts[0].id, "001");
    assert_eq!(scripts[0].path, dir.path().join("001.sh"));
    assert_eq!(scripts[0].timeout, Some(5.0));
}

#[test]
fn parallelism_does_not_change_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let model = parse_model("a: 0, 1, 2, 3\nb: 0, 1, 2").unwrap();
    let suite = TestSuite::exhaustive(&model);
    let scripts: Vec<_> = (0..3)
        .map(|c| {
            let body = format!("[ \"$CIT_A\" = {c} ] && exit {c}; exit $(( ($CIT_B + {c}) % 3 ))");
            VariantScript::new(format!("s{c}"), script(dir.path(), &format!("s{c}.sh"), &body))
        })
        .collect();
    let plan = multiplex(&model, &suite, &scripts).unwrap();
    let serial = run(&plan, &RunOptions::new(dir.path().join("w1")).parallelism(1));
    let parallel = run(&plan, &RunOptions::new(dir.path().join("w8")).parallelism(8));
    assert_eq!(serial.records.len(), plan.len());
    let key = |r: &citkit::RunRecord| (r.test_index, r.variant_id.clone(), r.verdict, r.exit_code);
    assert_eq!(
        serial.records.iter().map(key).collect::<Vec<_>>(),
        parallel.records.iter().map(key).collect::<Vec<_>>()
    );
    assert_eq!(parallel.parallelism, 8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pass_iff_exit_code_zero(codes in prop::collection::vec(0i32..=5, 1..=6)) {
        let dir = tempfile::tempdir().unwrap();
        let levels: Vec<String> = codes.iter().map(|c| format!("c{c}")).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let model = parse_model(&format!("code: {}", levels.join(", "))).unwrap();
        let rows = codes
            .iter()
            .map(|c| vec![model.factor(0).level_index(&format!("c{c}")).unwrap()].into())
            .collect();
        let suite = TestSuite::new(&model, rows, None).unwrap();
        let s = VariantScript::new("x", script(dir.path(), "x.sh", "exit ${CIT_CODE#c}"));
        let plan = multiplex(&model, &suite, &[s]).unwrap();
        let report = run(&plan, &RunOptions::new(dir.path().join("w")).parallelism(4));
        for (r, &code) in report.records.iter().zip(&codes) {
            prop_assert_eq!(r.exit_code, Some(code));
            prop_assert_eq!(r.verdict == Verdict::Pass, code == 0);
        }
        prop_assert_eq!(report.totals.sum(), codes.len());
    }
}
