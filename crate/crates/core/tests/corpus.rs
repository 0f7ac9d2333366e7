mod common;

use testbench::corpus::{
    build_manifest, ingest_local, parse_manifest, render_manifest, scan_repository, snapshot_repository, CorpusError,
};

#[test]
fn snapshot_pins_the_same_commit_twice() {
    let tmp = tempfile::tempdir().unwrap();
    let origin = tmp.path().join("origin");
    let head = common::git_fixture(&common::fixtures().join("corpus_repo"), &origin);
    let url = origin.to_str().unwrap();
    let work = tmp.path().join("work");
    let first = snapshot_repository(url, "main", &work).unwrap();
    let second = snapshot_repository(url, "main", &work).unwrap();
    assert_eq!(first.commit_hash.as_str(), head);
    assert_eq!(first, second);
    assert!(first.local_path.join(".git").is_dir());
}

#[test]
fn missing_branch_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let origin = tmp.path().join("origin");
    common::git_fixture(&common::fixtures().join("corpus_repo"), &origin);
    let err = snapshot_repository(origin.to_str().unwrap(), "no-such-branch", &tmp.path().join("w")).unwrap_err();
    assert!(matches!(err, CorpusError::BranchNotFound { .. }), "{err}");
}

#[test]
fn unreachable_url_is_a_clone_error() {
    let tmp = tempfile::tempdir().unwrap();
    let err = snapshot_repository(tmp.path().join("nowhere").to_str().unwrap(), "main", tmp.path()).unwrap_err();
    assert!(matches!(err, CorpusError::Clone { .. }), "{err}");
}

#[test]
fn local_ingest_matches_clone() {
    let tmp = tempfile::tempdir().unwrap();
    let origin = tmp.path().join("shop");
    let head = common::git_fixture(&common::fixtures().join("corpus_repo"), &origin);
    let snapshot = ingest_local(&origin).unwrap();
    assert_eq!(snapshot.commit_hash.as_str(), head);
    assert_eq!(snapshot.branch, "main");
    assert_eq!(scan_repository(&origin), scan_repository(&origin));

    let (manifest, _) = build_manifest(snapshot);
    let text = render_manifest(&manifest);
    assert_eq!(text.lines().filter(|l| l.contains("\"record\":\"pair\"")).count(), 3);
    for pair in &manifest.pairs {
        assert!(origin.join(&pair.focal_path).is_file());
        if let Some(t) = &pair.test_path {
            assert!(origin.join(t).is_file());
        }
    }
}

#[test]
fn truncated_manifest_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let origin = tmp.path().join("shop");
    common::git_fixture(&common::fixtures().join("corpus_repo"), &origin);
    let (manifest, _) = build_manifest(ingest_local(&origin).unwrap());
    let text = render_manifest(&manifest);
    let cut = &text[..text.len() - 30];
    assert!(parse_manifest(cut).is_err());
    let without_stats: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
    assert!(parse_manifest(&without_stats).is_err());
}
