#![no_main]

use libfuzzer_sys::fuzz_target;
use testbench::context::{BuildSystem, Framework};
use testbench::instrumentation::{inject_coverage, inject_mutation, ToolVersions};

fuzz_target!(|text: &str| {
    let v = ToolVersions::default();
    for system in [BuildSystem::Maven, BuildSystem::Gradle] {
        let Ok(cov) = inject_coverage(system, false, text, &v) else { continue };
        let once = cov.unwrap_or_else(|| text.to_string());
        let Ok((mutation, _)) = inject_mutation(system, false, &once, Framework::JUnit5, &v) else { continue };
        let once = mutation.unwrap_or(once);
        assert_eq!(inject_coverage(system, false, &once, &v), Ok(None));
    }
});
