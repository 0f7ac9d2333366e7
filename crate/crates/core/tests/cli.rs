mod common;

use std::process::Command;

fn testbench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_testbench"))
}

fn on_path(tool: &str) -> bool {
    std::env::var_os("PATH").is_some_and(|paths| std::env::split_paths(&paths).any(|d| d.join(tool).is_file()))
}

#[test]
fn smells_analyze_prints_profile() {
    let dir = common::fixtures().join("smells");
    let out = testbench()
        .args(["smells", "analyze"])
        .arg(dir.join("single/LazyTestTest.java"))
        .arg("--focal")
        .arg(dir.join("Calculator.java"))
        .args(["--framework", "junit5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let profile: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(profile["LT"], 2);
    assert_eq!(profile["AR"], 0);
}

#[test]
fn corpus_build_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = tmp.path().join("shop");
    common::git_fixture(&common::fixtures().join("corpus_repo"), &repo);
    std::fs::write(tmp.path().join("repos.txt"), format!("# fixture\n{}\n", repo.display())).unwrap();
    let out = tmp.path().join("corpus.jsonl");
    let status = testbench()
        .args(["corpus", "build", "--repos"])
        .arg(tmp.path().join("repos.txt"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let manifests = testbench::corpus::read_corpus(&out).unwrap();
    assert_eq!(manifests.len(), 1);
    assert_eq!(manifests[0].pairs.len(), 3);
}

#[test]
fn bad_config_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.yaml"), "llms: [ {model: m, colour: red} ]\nprompts: []\n").unwrap();
    std::fs::write(tmp.path().join("m.jsonl"), "").unwrap();
    let status = testbench()
        .args(["campaign", "run", "--config"])
        .arg(tmp.path().join("c.yaml"))
        .arg("--manifest")
        .arg(tmp.path().join("m.jsonl"))
        .arg("--out")
        .arg(tmp.path().join("run"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn missing_toolchain_exits_two() {
    if on_path("mvn") {
        eprintln!("mvn is installed; nothing to check");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let project = tmp.path().join("project");
    common::git_fixture(&common::fixtures().join("campaign/project"), &project);
    let (manifest, _) = testbench::corpus::build_manifest(testbench::corpus::ingest_local(&project).unwrap());
    testbench::corpus::write_corpus(&[manifest], &tmp.path().join("m.jsonl")).unwrap();
    let status = testbench()
        .args(["campaign", "run", "--config"])
        .arg(common::fixtures().join("campaign/config.yaml"))
        .arg("--manifest")
        .arg(tmp.path().join("m.jsonl"))
        .arg("--out")
        .arg(tmp.path().join("run"))
        .args(["--endpoint", "http://127.0.0.1:9/v1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn report_summarize_reads_rundir() {
    let run = common::run_mock_campaign();
    run.outcome.as_ref().unwrap();
    let out = testbench().args(["report", "summarize", "--out"]).arg(run.rundir()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("mock-model")).unwrap();
    assert!(line.contains("2 (66.66%)") && line.contains("1 (33.33%)"), "{line}");
}
