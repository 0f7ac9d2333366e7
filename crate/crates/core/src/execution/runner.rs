use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use wait_timeout::ChildExt;

use super::{parse_build_log, BuildOutcome, ExecutionError, Goal, Scope};
use crate::context::BuildSystem;

pub const DEFAULT_GOAL_TIMEOUT: Duration = Duration::from_secs(600);
pub const DEFAULT_MUTATION_TIMEOUT: Duration = Duration::from_secs(1800);

/// Something that can build a project checkout. The production
/// implementation shells out to Maven or Gradle; tests substitute a double.
pub trait BuildRunner: Send + Sync {
    fn run_build(
        &self,
        root: &Path,
        system: BuildSystem,
        goal: Goal,
        scope: &Scope,
    ) -> Result<BuildOutcome, ExecutionError>;

    /// Fail early when the build tool cannot run at all.
    fn check_toolchain(&self, _root: &Path, _system: BuildSystem) -> Result<(), ExecutionError> {
        Ok(())
    }
}

/// Runs `mvn`/`gradle` (or the project's wrapper script) as a subprocess.
#[derive(Debug)]
pub struct CommandRunner {
    log_dir: PathBuf,
    goal_timeout: Duration,
    mutation_timeout: Duration,
    tool: Option<PathBuf>,
    seq: AtomicUsize,
}

impl CommandRunner {
    pub fn new(log_dir: &Path) -> Self {
        Self {
            log_dir: log_dir.to_path_buf(),
            goal_timeout: DEFAULT_GOAL_TIMEOUT,
            mutation_timeout: DEFAULT_MUTATION_TIMEOUT,
            tool: None,
            seq: AtomicUsize::new(0),
        }
    }

    pub fn with_timeouts(mut self, goal: Duration, mutation: Duration) -> Self {
        self.goal_timeout = goal;
        self.mutation_timeout = mutation;
        self
    }

    /// Use this executable instead of looking up the wrapper or PATH.
    pub fn with_tool(mut self, tool: &Path) -> Self {
        self.tool = Some(tool.to_path_buf());
        self
    }

    fn timeout(&self, goal: Goal) -> Duration {
        match goal {
            Goal::Mutation => self.mutation_timeout,
            _ => self.goal_timeout,
        }
    }

    fn program(&self, root: &Path, system: BuildSystem) -> String {
        match &self.tool {
            Some(tool) => tool.to_string_lossy().into_owned(),
            None => program(root, system),
        }
    }

    /// Is the build tool for `system` runnable from `root`?
    pub fn probe(&self, root: &Path, system: BuildSystem) -> Result<(), ExecutionError> {
        let program = self.program(root, system);
        let status = Command::new(&program)
            .arg(if system == BuildSystem::Maven { "-v" } else { "--version" })
            .current_dir(root)
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status();
        match status {
            Ok(s) if s.success() => Ok(()),
            _ => Err(ExecutionError::ToolchainMissing(program)),
        }
    }
}

fn program(root: &Path, system: BuildSystem) -> String {
    let (wrapper, tool) = match system {
        BuildSystem::Maven => ("mvnw", "mvn"),
        BuildSystem::Gradle => ("gradlew", "gradle"),
    };
    let local = root.join(wrapper);
    if is_executable(&local) {
        local.to_string_lossy().into_owned()
    } else {
        tool.to_string()
    }
}

#[cfg(unix)]
fn is_executable(path: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    fs::metadata(path).is_ok_and(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
}

#[cfg(not(unix))]
fn is_executable(path: &Path) -> bool {
    path.is_file()
}

/// Command-line arguments for one goal.
pub fn build_args(system: BuildSystem, goal: Goal, scope: &Scope) -> Vec<String> {
    let tests = scope.tests.join(",");
    let targets = scope.target_classes.join(",");
    let mut args: Vec<String> = Vec::new();
    match system {
        BuildSystem::Maven => {
            args.extend(["-B", "-ntp"].map(String::from));
            match goal {
                Goal::Compile => args.push("test-compile".into()),
                Goal::Test | Goal::Coverage => args.push("test".into()),
                Goal::Mutation => {
                    args.push("test-compile".into());
                    args.push("org.pitest:pitest-maven:mutationCoverage".into());
                    if !targets.is_empty() {
                        args.push(format!("-DtargetClasses={targets}"));
                    }
                    if !tests.is_empty() {
                        args.push(format!("-DtargetTests={tests}"));
                    }
                }
            }
            if matches!(goal, Goal::Test | Goal::Coverage) && !tests.is_empty() {
                args.push(format!("-Dtest={tests}"));
                args.push("-Dsurefire.failIfNoSpecifiedTests=false".into());
            }
        }
        BuildSystem::Gradle => {
            args.push("--console=plain".into());
            match goal {
                Goal::Compile => args.push("testClasses".into()),
                Goal::Test => args.push("test".into()),
                Goal::Coverage => {
                    args.push("test".into());
                    args.push("jacocoTestReport".into());
                }
                Goal::Mutation => {
                    args.push("pitest".into());
                    if !targets.is_empty() {
                        args.push(format!("-PpitestTargetClasses={targets}"));
                    }
                    if !tests.is_empty() {
                        args.push(format!("-PpitestTargetTests={tests}"));
                    }
                }
            }
            if matches!(goal, Goal::Test | Goal::Coverage) {
                for t in &scope.tests {
                    args.push("--tests".into());
                    args.push(t.clone());
                }
            }
        }
    }
    args
}

impl BuildRunner for CommandRunner {
    fn run_build(
        &self,
        root: &Path,
        system: BuildSystem,
        goal: Goal,
        scope: &Scope,
    ) -> Result<BuildOutcome, ExecutionError> {
        fs::create_dir_all(&self.log_dir)?;
        let n = self.seq.fetch_add(1, Ordering::SeqCst);
        let log_path = self.log_dir.join(format!("{n:04}-{goal}.log"));
        let log = File::create(&log_path)?;
        let program = self.program(root, system);
        let args = build_args(system, goal, scope);
        tracing::info!("{} $ {program} {}", root.display(), args.join(" "));

        let mut child = match Command::new(&program)
            .args(&args)
            .current_dir(root)
            .stdin(Stdio::null())
            .stdout(log.try_clone()?)
            .stderr(log)
            .spawn()
        {
            Ok(child) => child,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ExecutionError::ToolchainMissing(program))
            }
            Err(e) => return Err(e.into()),
        };

        let timeout = self.timeout(goal);
        let status = match child.wait_timeout(timeout)? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ExecutionError::BuildTimeout {
                    goal,
                    seconds: timeout.as_secs(),
                    log: log_path,
                });
            }
        };

        let text = String::from_utf8_lossy(&fs::read(&log_path)?).into_owned();
        Ok(BuildOutcome::from_log(status.success(), &text, log_path))
    }

    fn check_toolchain(&self, root: &Path, system: BuildSystem) -> Result<(), ExecutionError> {
        self.probe(root, system)
    }
}

impl BuildOutcome {
    /// Outcome of a finished build. A failed build that names no culprit
    /// keeps both lists empty; callers decide how to attribute it.
    pub fn from_log(exit_ok: bool, log: &str, raw_log_path: PathBuf) -> Self {
        if exit_ok {
            return Self {
                success: true,
                compile_errors: Vec::new(),
                failing_test_classes: Vec::new(),
                raw_log_path,
            };
        }
        let (compile_errors, failing_test_classes) = parse_build_log(log);
        Self {
            success: false,
            compile_errors,
            failing_test_classes,
            raw_log_path,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scope() -> Scope {
        Scope {
            tests: vec!["a.FooTest".into(), "a.BarTest".into()],
            target_classes: vec!["a.Foo".into()],
        }
    }

    #[test]
    fn maven_arguments() {
        assert_eq!(
            build_args(BuildSystem::Maven, Goal::Test, &scope()),
            [
                "-B",
                "-ntp",
                "test",
                "-Dtest=a.FooTest,a.BarTest",
                "-Dsurefire.failIfNoSpecifiedTests=false"
            ]
        );
        let m = build_args(BuildSystem::Maven, Goal::Mutation, &scope());
        assert!(m.contains(&"-DtargetClasses=a.Foo".to_string()));
        assert!(m.contains(&"-DtargetTests=a.FooTest,a.BarTest".to_string()));
    }

    #[test]
    fn gradle_arguments() {
        assert_eq!(
            build_args(BuildSystem::Gradle, Goal::Coverage, &scope()),
            [
                "--console=plain",
                "test",
                "jacocoTestReport",
                "--tests",
                "a.FooTest",
                "--tests",
                "a.BarTest"
            ]
        );
    }

    #[test]
    fn missing_tool() {
        let dir = tempfile::tempdir().unwrap();
        let runner = CommandRunner::new(dir.path()).with_tool(&dir.path().join("no-such-mvn"));
        let err = runner.run_build(dir.path(), BuildSystem::Maven, Goal::Compile, &Scope::default());
        assert!(matches!(err, Err(ExecutionError::ToolchainMissing(_))), "{err:?}");
    }
}
