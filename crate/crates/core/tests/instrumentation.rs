use std::path::{Path, PathBuf};

use testbench::context::{BuildSystem, Framework};
use testbench::instrumentation::{inject_coverage, inject_mutation, instrumentation_of, ToolVersions};

struct Case {
    file: &'static str,
    system: BuildSystem,
    kotlin: bool,
    framework: Framework,
}

const CASES: &[Case] = &[
    Case { file: "maven-junit4.pom.xml", system: BuildSystem::Maven, kotlin: false, framework: Framework::JUnit4 },
    Case { file: "maven-junit5.pom.xml", system: BuildSystem::Maven, kotlin: false, framework: Framework::JUnit5 },
    Case { file: "gradle-junit4.build.gradle", system: BuildSystem::Gradle, kotlin: false, framework: Framework::JUnit4 },
    Case { file: "gradle-junit5.build.gradle.kts", system: BuildSystem::Gradle, kotlin: true, framework: Framework::JUnit5 },
];

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/instrumentation")
}

fn instrument(case: &Case, text: &str) -> String {
    let v = ToolVersions::default();
    let once = inject_coverage(case.system, case.kotlin, text, &v)
        .unwrap()
        .unwrap_or_else(|| text.to_string());
    let (twice, _) = inject_mutation(case.system, case.kotlin, &once, case.framework, &v).unwrap();
    twice.unwrap_or(once)
}

#[test]
fn matches_goldens_and_is_idempotent() {
    let update = std::env::var_os("UPDATE_GOLDENS").is_some();
    for case in CASES {
        let original = std::fs::read_to_string(dir().join(case.file)).unwrap();
        let out = instrument(case, &original);
        let golden = dir().join("expected").join(case.file);
        if update {
            std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
            std::fs::write(&golden, &out).unwrap();
        }
        assert_eq!(out, std::fs::read_to_string(&golden).unwrap(), "{}", case.file);
        assert_eq!(instrument(case, &out), out, "{} not idempotent", case.file);

        let state = instrumentation_of(case.system, &out).unwrap();
        assert!(state.coverage && state.mutation, "{}", case.file);
        let has_junit5_plugin = out.contains("pitest-junit5-plugin");
        assert_eq!(has_junit5_plugin, case.framework == Framework::JUnit5, "{}", case.file);
    }
}

#[test]
fn untouched_files_report_nothing() {
    for case in CASES {
        let original = std::fs::read_to_string(dir().join(case.file)).unwrap();
        let state = instrumentation_of(case.system, &original).unwrap();
        assert!(!state.coverage && !state.mutation, "{}", case.file);
    }
}
