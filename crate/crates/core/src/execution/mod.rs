//! Builds, the green-suite filter, and JaCoCo/PITest report parsing.

mod log;
mod reports;
mod runner;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::context::BuildSystem;
use crate::generation::{GeneratedTest, TestStatus};
use crate::journal::{RunJournal, Workspace};

pub use log::{parse_build_log, CompileError};
pub use reports::{
    parse_coverage_report, parse_mutation_report, Counter, CoverageMetrics, MutationMetrics,
    ReportError,
};
pub use runner::{
    build_args, BuildRunner, CommandRunner, DEFAULT_GOAL_TIMEOUT, DEFAULT_MUTATION_TIMEOUT,
};

#[derive(Debug, thiserror::Error)]
pub enum ExecutionError {
    #[error("build tool `{0}` is not available")]
    ToolchainMissing(String),
    #[error("{goal} build timed out after {seconds} s (log: {log})")]
    BuildTimeout {
        goal: Goal,
        seconds: u64,
        log: PathBuf,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Goal {
    Compile,
    Test,
    Coverage,
    Mutation,
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Goal::Compile => "compile",
            Goal::Test => "test",
            Goal::Coverage => "coverage",
            Goal::Mutation => "mutation",
        })
    }
}

/// Restricts a build to some test classes and, for mutation runs, to
/// some production classes. Empty lists mean no restriction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scope {
    pub tests: Vec<String>,
    pub target_classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOutcome {
    pub success: bool,
    pub compile_errors: Vec<CompileError>,
    pub failing_test_classes: Vec<String>,
    pub raw_log_path: PathBuf,
}

/// Where the tools write their XML reports, relative to a module root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportLocations {
    pub coverage: PathBuf,
    pub mutation: PathBuf,
}

impl ReportLocations {
    pub fn defaults(system: BuildSystem) -> Self {
        match system {
            BuildSystem::Maven => Self {
                coverage: "target/site/jacoco/jacoco.xml".into(),
                mutation: "target/pit-reports/mutations.xml".into(),
            },
            BuildSystem::Gradle => Self {
                coverage: "build/reports/jacoco/test/jacocoTestReport.xml".into(),
                mutation: "build/reports/pitest/mutations.xml".into(),
            },
        }
    }
}

pub fn run_build(
    runner: &dyn BuildRunner,
    root: &Path,
    system: BuildSystem,
    goal: Goal,
    scope: &Scope,
) -> Result<BuildOutcome, ExecutionError> {
    runner.run_build(root, system, goal, scope)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterReport {
    /// Compile-then-test rounds performed.
    pub iterations: u32,
    /// Indices into the input slice that ended up green.
    pub survivors: Vec<usize>,
}

fn same_source(reported: &Path, placed: &Path, root: &Path) -> bool {
    reported == placed
        || placed
            .strip_prefix(root)
            .is_ok_and(|rel| !rel.as_os_str().is_empty() && reported.ends_with(rel))
}

fn outer_class(name: &str) -> &str {
    name.split('$').next().unwrap_or(name)
}

/// Remove non-compiling, then failing, test classes until the rest
/// passes. Only entries with status `Placed` and a placed path take part.
/// Rejected files are deleted through `workspace`; statuses are updated in
/// place. A failed build that names none of the remaining classes rejects
/// all of them, so the loop always ends within `n + 1` rounds.
pub fn green_suite_filter(
    runner: &dyn BuildRunner,
    workspace: &mut Workspace,
    system: BuildSystem,
    generated: &mut [GeneratedTest],
    journal: Option<&RunJournal>,
) -> Result<FilterReport, ExecutionError> {
    let root = workspace.root().to_path_buf();
    let mut active: Vec<usize> = generated
        .iter()
        .enumerate()
        .filter(|(_, g)| g.status == TestStatus::Placed && g.placed_path.is_some())
        .map(|(i, _)| i)
        .collect();
    let mut iterations = 0;

    let reject = |workspace: &mut Workspace,
                      generated: &mut [GeneratedTest],
                      idx: usize,
                      status: TestStatus,
                      reason: &str|
     -> Result<(), ExecutionError> {
        let g = &mut generated[idx];
        g.status = status;
        if let Some(path) = &g.placed_path {
            if path.exists() {
                workspace.remove(path)?;
            }
        }
        if let Some(j) = journal {
            j.record(
                "filter_reject",
                json!({
                    "model": g.model, "prompt": g.prompt_name, "focal": g.focal_fqn,
                    "status": status, "reason": reason,
                }),
            );
        }
        Ok(())
    };

    while !active.is_empty() {
        iterations += 1;
        let compile = runner.run_build(&root, system, Goal::Compile, &Scope::default())?;
        if !compile.success {
            let culprits: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| {
                    let placed = generated[i].placed_path.as_deref().unwrap();
                    compile
                        .compile_errors
                        .iter()
                        .any(|e| same_source(&e.file, placed, &root))
                })
                .collect();
            let (doomed, reason) = if culprits.is_empty() {
                (active.clone(), "build failed without naming a generated class")
            } else {
                (culprits, "compile error")
            };
            for &i in &doomed {
                reject(workspace, generated, i, TestStatus::RejectedCompile, reason)?;
            }
            active.retain(|i| !doomed.contains(i));
            continue;
        }

        let scope = Scope {
            tests: active.iter().filter_map(|&i| generated[i].test_fqn()).collect(),
            target_classes: Vec::new(),
        };
        let test = runner.run_build(&root, system, Goal::Test, &scope)?;
        if test.success {
            for &i in &active {
                generated[i].status = TestStatus::Green;
            }
            break;
        }
        let failing: Vec<&str> = test
            .failing_test_classes
            .iter()
            .map(|c| outer_class(c))
            .collect();
        let culprits: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&i| {
                generated[i]
                    .test_fqn()
                    .is_some_and(|fqn| failing.contains(&fqn.as_str()))
            })
            .collect();
        let (doomed, reason) = if culprits.is_empty() {
            (active.clone(), "tests failed without naming a generated class")
        } else {
            (culprits, "failing test")
        };
        for &i in &doomed {
            reject(workspace, generated, i, TestStatus::RejectedFailing, reason)?;
        }
        active.retain(|i| !doomed.contains(i));
    }

    Ok(FilterReport {
        iterations,
        survivors: active,
    })
}
