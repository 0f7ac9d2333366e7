#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use walkdir::WalkDir;

use testbench::context::BuildSystem;
use testbench::execution::{BuildOutcome, BuildRunner, CompileError, ExecutionError, Goal, Scope};
use testbench::java::JavaSource;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn copy_tree(from: &Path, to: &Path) {
    for entry in WalkDir::new(from).into_iter().map(Result::unwrap) {
        let dest = to.join(entry.path().strip_prefix(from).unwrap());
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&dest).unwrap();
        } else {
            std::fs::copy(entry.path(), &dest).unwrap();
        }
    }
}

pub fn git(dir: &Path, args: &[&str]) -> String {
    let out = Command::new("git")
        .args(args)
        .current_dir(dir)
        .env("GIT_AUTHOR_NAME", "Fixture")
        .env("GIT_AUTHOR_EMAIL", "fixture@example.org")
        .env("GIT_COMMITTER_NAME", "Fixture")
        .env("GIT_COMMITTER_EMAIL", "fixture@example.org")
        .env("GIT_AUTHOR_DATE", "2024-01-01T00:00:00Z")
        .env("GIT_COMMITTER_DATE", "2024-01-01T00:00:00Z")
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .output()
        .expect("git runs");
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

/// Copy a fixture tree into `dest` and commit it on `main`.
pub fn git_fixture(tree: &Path, dest: &Path) -> String {
    copy_tree(tree, dest);
    git(dest, &["init", "--quiet", "--initial-branch=main"]);
    git(dest, &["add", "--all"]);
    git(dest, &["commit", "--quiet", "--message", "fixture"]);
    git(dest, &["rev-parse", "HEAD"])
}

pub type Handler = dyn Fn(usize, &Value) -> (StatusCode, Value) + Send + Sync;

#[derive(Clone)]
struct ServerState {
    handler: Arc<Handler>,
    requests: Arc<Mutex<Vec<Value>>>,
}

async fn completions(State(state): State<ServerState>, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let n = {
        let mut requests = state.requests.lock().unwrap();
        requests.push(body.clone());
        requests.len() - 1
    };
    let (status, reply) = (state.handler)(n, &body);
    (status, Json(reply))
}

/// An OpenAI-style chat endpoint on its own runtime thread. The handler
/// sees the zero-based request number and the request body.
pub struct MockServer {
    pub addr: SocketAddr,
    pub requests: Arc<Mutex<Vec<Value>>>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    pub fn start(handler: impl Fn(usize, &Value) -> (StatusCode, Value) + Send + Sync + 'static) -> Self {
        let requests = Arc::new(Mutex::new(Vec::new()));
        let state = ServerState {
            handler: Arc::new(handler),
            requests: requests.clone(),
        };
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                let app = Router::new()
                    .route("/v1/chat/completions", post(completions))
                    .with_state(state);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = shutdown_rx.await;
                    })
                    .await
                    .unwrap();
            });
        });
        Self {
            addr: addr_rx.recv().unwrap(),
            requests,
            shutdown: Some(shutdown_tx),
            thread: Some(thread),
        }
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn chat_reply(content: &str) -> Value {
    json!({
        "id": "chatcmpl-1",
        "object": "chat.completion",
        "choices": [{ "index": 0, "message": { "role": "assistant", "content": content }, "finish_reason": "stop" }],
    })
}

/// Build double: a test source "compiles" when it parses strictly, tests
/// in `failing` fail, and coverage/mutation goals drop the checked-in
/// reports where the real tools would write them.
pub struct ScriptedRunner {
    pub failing: Vec<String>,
    pub goals: Mutex<Vec<(Goal, Scope)>>,
}

impl ScriptedRunner {
    pub fn new(failing: &[&str]) -> Self {
        Self {
            failing: failing.iter().map(|s| s.to_string()).collect(),
            goals: Mutex::new(Vec::new()),
        }
    }

    pub fn goals(&self) -> Vec<Goal> {
        self.goals.lock().unwrap().iter().map(|(g, _)| *g).collect()
    }
}

impl BuildRunner for ScriptedRunner {
    fn run_build(
        &self,
        root: &Path,
        system: BuildSystem,
        goal: Goal,
        scope: &Scope,
    ) -> Result<BuildOutcome, ExecutionError> {
        assert_eq!(system, BuildSystem::Maven);
        self.goals.lock().unwrap().push((goal, scope.clone()));
        let log = root.join("target/scripted.log");
        std::fs::create_dir_all(root.join("target")).unwrap();
        std::fs::write(&log, format!("{goal}\n")).unwrap();

        let mut compile_errors = Vec::new();
        let test_root = root.join("src/test/java");
        if test_root.exists() {
            for entry in WalkDir::new(&test_root).into_iter().map(Result::unwrap) {
                if entry.path().extension().is_some_and(|x| x == "java") {
                    let text = std::fs::read_to_string(entry.path()).unwrap();
                    if let Err(e) = JavaSource::parse_strict(text) {
                        compile_errors.push(CompileError {
                            file: entry.path().to_path_buf(),
                            message: e.to_string(),
                        });
                    }
                }
            }
        }
        if !compile_errors.is_empty() {
            return Ok(BuildOutcome {
                success: false,
                compile_errors,
                failing_test_classes: vec![],
                raw_log_path: log,
            });
        }
        if goal == Goal::Compile {
            return Ok(BuildOutcome {
                success: true,
                compile_errors,
                failing_test_classes: vec![],
                raw_log_path: log,
            });
        }

        let failing: Vec<String> = self
            .failing
            .iter()
            .filter(|f| scope.tests.is_empty() || scope.tests.contains(f))
            .cloned()
            .collect();
        if !failing.is_empty() {
            return Ok(BuildOutcome {
                success: false,
                compile_errors,
                failing_test_classes: failing,
                raw_log_path: log,
            });
        }
        let report = match goal {
            Goal::Coverage => Some(("jacoco.xml", "target/site/jacoco/jacoco.xml")),
            Goal::Mutation => Some(("mutations.xml", "target/pit-reports/mutations.xml")),
            _ => None,
        };
        if let Some((fixture, dest)) = report {
            let dest = root.join(dest);
            std::fs::create_dir_all(dest.parent().unwrap()).unwrap();
            std::fs::copy(fixtures().join("reports").join(fixture), dest).unwrap();
        }
        Ok(BuildOutcome {
            success: true,
            compile_errors,
            failing_test_classes: vec![],
            raw_log_path: log,
        })
    }
}

pub struct MockCampaign {
    pub dir: tempfile::TempDir,
    pub outcome: Result<testbench::campaign::CampaignOutcome, testbench::campaign::CampaignError>,
    pub runner: ScriptedRunner,
    pub server: MockServer,
}

impl MockCampaign {
    pub fn rundir(&self) -> PathBuf {
        self.dir.path().join("run")
    }

    pub fn project(&self) -> PathBuf {
        self.dir.path().join("project")
    }
}

fn canned_reply(body: &Value) -> (StatusCode, Value) {
    let prompt = body["messages"]
        .as_array()
        .and_then(|m| m.last())
        .and_then(|m| m["content"].as_str())
        .unwrap_or_default();
    for name in ["Adder", "Divider", "Greeter"] {
        if prompt.contains(&format!("public class {name} ")) {
            let reply = std::fs::read_to_string(fixtures().join(format!("campaign/replies/{name}.md"))).unwrap();
            return (StatusCode::OK, chat_reply(&reply));
        }
    }
    (StatusCode::BAD_REQUEST, json!({ "error": { "message": "unknown focal class" } }))
}

/// The bundled three-class project against the canned-reply endpoint:
/// one green test, one that does not compile, one that fails.
pub fn run_mock_campaign() -> MockCampaign {
    run_mock_campaign_in(tempfile::tempdir().unwrap())
}

pub fn run_mock_campaign_in(dir: tempfile::TempDir) -> MockCampaign {
    let project = dir.path().join("project");
    if !project.exists() {
        git_fixture(&fixtures().join("campaign/project"), &project);
    }
    let snapshot = testbench::corpus::ingest_local(&project).unwrap();
    let (manifest, _) = testbench::corpus::build_manifest(snapshot);
    let config = testbench::prompting::parse_campaign(
        &std::fs::read_to_string(fixtures().join("campaign/config.yaml")).unwrap(),
    )
    .unwrap();

    let server = MockServer::start(|_, body| canned_reply(body));
    let mut opts = testbench::campaign::CampaignOptions::new(&dir.path().join("run"));
    opts.default_endpoint = server.endpoint();
    opts.parallelism = 2;
    let runner = ScriptedRunner::new(&["com.example.GreeterTest"]);
    let outcome = testbench::campaign::run_campaign(&config, &[manifest], &opts, &runner);
    MockCampaign {
        dir,
        outcome,
        runner,
        server,
    }
}
